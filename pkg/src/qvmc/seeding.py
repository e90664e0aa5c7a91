"""Counter-based stream splitting from one master seed.

A stream is identified by ``(master, purpose tag, index...)``; the tag is
hashed with CRC-32 (stable across processes, unlike ``hash``) and the tuple
becomes the spawn key of a :class:`numpy.random.SeedSequence`.  Streams are
therefore independent of scheduling and worker count.
"""

import zlib

import numpy as np


def stream_key(tag: str, *index: int) -> tuple[int, ...]:
    return (zlib.crc32(tag.encode()),) + tuple(int(i) for i in index)


def derive_rng(master: int, tag: str, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=stream_key(tag, *index))
    return np.random.default_rng(ss)
