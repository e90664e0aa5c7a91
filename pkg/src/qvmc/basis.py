"""Computational-basis conventions.

A single convention is used everywhere in the package:

* qubit state ``|0>`` carries sigma_z eigenvalue ``+1`` (spin up),
* a spin configuration maps to a basis index big-endian, i.e. spin 0 is the
  most significant bit.

So for ``n = 2`` the ordering of basis states is ``(+1,+1), (+1,-1), (-1,+1),
(-1,-1)``.
"""

import numpy as np

#: Largest number of qubits for which dense 2^n objects are built.
DEFAULT_QUBIT_CAP = 14


def spins_to_index(spins) -> np.ndarray | int:
    """Basis index of one configuration or of each row of a batch."""
    s = np.asarray(spins)
    n = s.shape[-1]
    bits = (s < 0).astype(np.int64)
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    idx = bits @ weights
    return int(idx) if s.ndim == 1 else idx


def index_to_spins(index, n: int) -> np.ndarray:
    """Inverse of :func:`spins_to_index`; accepts a scalar or an index array."""
    idx = np.asarray(index, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[..., None] >> shifts) & 1
    return (1 - 2 * bits).astype(np.int8)


def all_configurations(n: int) -> np.ndarray:
    """All 2^n configurations as a ``(2^n, n)`` int8 array in index order."""
    return index_to_spins(np.arange(2**n), n)


def check_cap(n: int, cap: int = DEFAULT_QUBIT_CAP, what: str = "dense object"):
    from .errors import ResourceError

    if n > cap:
        raise ResourceError(f"{what} on {n} qubits exceeds the cap of {cap}")
