"""Pauli-sum Hamiltonians: construction, text I/O, matrix elements and exact
diagonalization.

Operators act on spin configurations through the convention of
:mod:`qvmc.basis`.  For a single qubit with spin ``s``::

    X|s> = |-s>,   Y|s> = i*s |-s>,   Z|s> = s |s>
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .basis import DEFAULT_QUBIT_CAP, check_cap, spins_to_index, index_to_spins
from .errors import (
    DimensionError,
    InvalidOperatorError,
    InvalidSizeError,
    PauliParseError,
)

AXES = ("X", "Y", "Z")
_HERMITIAN_ATOL = 1e-14


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; identity on unlisted qubits.

    ``factors`` is kept sorted by qubit index so equal strings compare and
    hash equal.
    """

    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        seen = set()
        for q, axis in self.factors:
            if axis not in AXES:
                raise ValueError(f"unknown Pauli axis {axis!r}")
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if q in seen:
                raise ValueError(f"duplicate qubit index {q}")
            seen.add(q)
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, str]) -> "PauliString":
        return cls(tuple(mapping.items()))

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """``"X0 Z3"`` -> PauliString; empty text is the identity."""
        factors = []
        for tok in text.split():
            m = re.fullmatch(r"([XYZ])(\d+)", tok)
            if m is None:
                raise ValueError(f"bad Pauli factor {tok!r}")
            factors.append((int(m.group(2)), m.group(1)))
        return cls(tuple(factors))

    @property
    def max_index(self) -> int:
        return max((q for q, _ in self.factors), default=-1)

    def flip_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, a in self.factors if a in "XY")

    def phase_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, a in self.factors if a in "YZ")

    def y_count(self) -> int:
        return sum(1 for _, a in self.factors if a == "Y")

    def __str__(self) -> str:
        return " ".join(f"{a}{q}" for q, a in self.factors)


@dataclass(frozen=True)
class PauliSum:
    """Weighted sum of Pauli strings on ``size`` qubits.

    Construction normalizes: equal strings are merged (first-appearance order)
    and terms whose merged coefficient is exactly zero are dropped.
    """

    terms: tuple[tuple[complex, PauliString], ...]
    size: int
    _groups: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.size < 0:
            raise InvalidSizeError("size must be non-negative")
        merged: dict[PauliString, complex] = {}
        for coef, string in self.terms:
            if not isinstance(string, PauliString):
                string = PauliString.parse(string)
            if string.max_index >= self.size:
                raise InvalidSizeError(
                    f"term {string} acts outside {self.size} qubits"
                )
            merged[string] = merged.get(string, 0j) + complex(coef)
        terms = tuple((c, s) for s, c in merged.items() if c != 0)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(cls, terms: Iterable, size: int) -> "PauliSum":
        return cls(tuple(terms), size)

    @classmethod
    def zero(cls, size: int) -> "PauliSum":
        return cls((), size)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.size != self.size:
            raise DimensionError("cannot add Pauli sums of different sizes")
        return PauliSum(self.terms + other.terms, self.size)

    def __mul__(self, scalar) -> "PauliSum":
        return PauliSum(tuple((scalar * c, s) for c, s in self.terms), self.size)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.terms)

    def is_hermitian(self) -> bool:
        return all(abs(c.imag) <= _HERMITIAN_ATOL for c, _ in self.terms)

    def is_diagonal(self) -> bool:
        return all(not s.flip_qubits() for _, s in self.terms)

    def flip_groups(self):
        """Terms grouped by the set of qubits they flip.

        Returns a list of ``(flip_qubits, [(coef * i^nY, phase_qubits), ...])``;
        the matrix element <v'|H|v> for v' = v with ``flip_qubits`` negated is
        ``sum(c * prod(v[q] for q in phase_qubits))``.
        """
        if self._groups is None:
            groups: dict[tuple[int, ...], list] = {}
            for c, s in self.terms:
                groups.setdefault(s.flip_qubits(), []).append(
                    (c * 1j ** s.y_count(), s.phase_qubits())
                )
            object.__setattr__(self, "_groups", list(groups.items()))
        return self._groups


# ---------------------------------------------------------------- builders


def build_tfim(n: int, B: float, J0: float, periodic: bool = False) -> PauliSum:
    """-B sum_i X_i - J0 sum_<ij> Z_i Z_j over nearest-neighbour bonds."""
    if n < 1:
        raise InvalidSizeError("TFIM needs at least one spin")
    if periodic and n < 3:
        raise InvalidSizeError("periodic TFIM needs n >= 3")
    terms = [(-B, PauliString(((i, "X"),))) for i in range(n)]
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    terms += [(-J0, PauliString(((i, "Z"), (j, "Z")))) for i, j in bonds]
    return PauliSum(tuple(terms), n)


def build_ctfim(n: int, B: float, J0: float) -> PauliSum:
    """Concentric TFIM: spin k couples to its mirror partner n-1-k."""
    if n < 2 or n % 2:
        raise InvalidSizeError("c-TFIM needs an even n >= 2")
    terms = [(-B, PauliString(((i, "X"),))) for i in range(n)]
    terms += [
        (-J0, PauliString(((k, "Z"), (n - 1 - k, "Z")))) for k in range(n // 2)
    ]
    return PauliSum(tuple(terms), n)


# ---------------------------------------------------------------- text I/O


def parse_pauli_sum(text: str) -> PauliSum:
    """Parse the ``qubits <n>`` / ``<re> <im> <factors...>`` text format."""
    size = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if size is None:
            if len(tokens) != 2 or tokens[0] != "qubits":
                raise PauliParseError("expected header 'qubits <n>'", lineno)
            try:
                size = int(tokens[1])
            except ValueError:
                raise PauliParseError(f"bad qubit count {tokens[1]!r}", lineno)
            if size < 0:
                raise PauliParseError("qubit count must be non-negative", lineno)
            continue
        if len(tokens) < 2:
            raise PauliParseError("expected '<re> <im> [factors]'", lineno)
        try:
            coef = complex(float(tokens[0]), float(tokens[1]))
        except ValueError:
            raise PauliParseError("coefficient is not a number", lineno)
        factors = []
        seen = set()
        for tok in tokens[2:]:
            m = re.fullmatch(r"([XYZ])(\d+)", tok)
            if m is None:
                raise PauliParseError(f"bad factor {tok!r}", lineno)
            q = int(m.group(2))
            if q in seen:
                raise PauliParseError(f"duplicate index {q} in term", lineno)
            if q >= size:
                raise PauliParseError(
                    f"index {q} out of range for {size} qubits", lineno
                )
            seen.add(q)
            factors.append((q, m.group(1)))
        terms.append((coef, PauliString(tuple(factors))))
    if size is None:
        raise PauliParseError("missing 'qubits <n>' header")
    return PauliSum(tuple(terms), size)


def serialize_pauli_sum(H: PauliSum) -> str:
    lines = [f"qubits {H.size}"]
    for c, s in H.terms:
        body = f"{c.real:.17g} {c.imag:.17g}"
        if s.factors:
            body += " " + str(s)
        lines.append(body)
    return "\n".join(lines) + "\n"


def load_pauli_sum(path) -> PauliSum:
    with open(path) as fh:
        return parse_pauli_sum(fh.read())


# ---------------------------------------------------------- matrix elements


def apply_to_batch(H: PauliSum, spins: np.ndarray):
    """Matrix elements of H from a batch of configurations.

    Yields ``(flipped_spins, amplitudes)`` per flip group, with
    ``amplitudes[b] = <flipped[b]|H|spins[b]>``.
    """
    spins = np.asarray(spins)
    for flips, parts in H.flip_groups():
        amp = np.zeros(spins.shape[0], dtype=complex)
        for c, zq in parts:
            if zq:
                amp += c * np.prod(spins[:, list(zq)], axis=1)
            else:
                amp += c
        flipped = spins.copy()
        if flips:
            flipped[:, list(flips)] *= -1
        yield flipped, amp


def connected_elements(H: PauliSum, v) -> list[tuple[np.ndarray, complex]]:
    """All ``(v', <v'|H|v>)`` with a non-zero matrix element, sorted by the
    basis index of ``v'``."""
    v = np.asarray(v, dtype=np.int8)
    if v.ndim != 1 or v.shape[0] != H.size:
        raise DimensionError(
            f"configuration of length {v.shape[-1]} for {H.size}-qubit operator"
        )
    scale = sum(abs(c) for c, _ in H.terms) or 1.0
    out: dict[int, tuple[np.ndarray, complex]] = {}
    for flipped, amp in apply_to_batch(H, v[None, :]):
        key = spins_to_index(flipped[0]) if H.size else 0
        prev = out.get(key)
        out[key] = (flipped[0], amp[0] + (prev[1] if prev else 0))
    return [
        (vp, complex(a))
        for _, (vp, a) in sorted(out.items())
        if abs(a) > 1e-14 * scale
    ]


def dense_matrix(H: PauliSum, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    check_cap(H.size, cap, "dense matrix")
    dim = 2**H.size
    M = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    spins = index_to_spins(cols, H.size)
    for flipped, amp in apply_to_batch(H, spins):
        rows = spins_to_index(flipped) if H.size else cols
        np.add.at(M, (rows, cols), amp)
    return M


def diagonal(H: PauliSum, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Diagonal of a diagonal operator without building the dense matrix."""
    if not H.is_diagonal():
        raise InvalidOperatorError("operator has off-diagonal terms")
    check_cap(H.size, cap, "diagonal")
    spins = index_to_spins(np.arange(2**H.size), H.size)
    total = np.zeros(2**H.size, dtype=complex)
    for _, amp in apply_to_batch(H, spins):
        total += amp
    return total


def exact_ground_state(H: PauliSum, cap: int = DEFAULT_QUBIT_CAP):
    """Lowest eigenpair of a Hermitian Pauli sum by dense diagonalization.

    Returns ``(energy, Statevector)``.
    """
    from .statevector import Statevector

    if not H.is_hermitian():
        raise InvalidOperatorError("ground state requires a Hermitian operator")
    M = dense_matrix(H, cap)
    w, V = np.linalg.eigh(M)
    return float(w[0]), Statevector(V[:, 0].copy(), H.size)
