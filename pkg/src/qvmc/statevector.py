"""Dense statevector simulation of the proposal circuit.

The proposal unitary is ``U(tau, gamma) = exp(-i tau [gamma h1 + (1-gamma) h2])``
with ``h1`` a diagonal Ising surrogate and ``h2 = sum_i X_i``.  Operators are
plain ``(2^n, 2^n)`` complex arrays; column ``v`` of ``U`` is ``U|v>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_QUBIT_CAP, all_configurations, check_cap, spins_to_index
from .errors import DomainError, InvalidOperatorError

UNITARY_ATOL = 1e-10


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (2**self.n,):
            raise DomainError(f"expected {2**self.n} amplitudes, got {amp.shape}")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis_state(cls, spins) -> "Statevector":
        spins = np.asarray(spins)
        amp = np.zeros(2 ** len(spins), dtype=complex)
        amp[spins_to_index(spins)] = 1.0
        return cls(amp, len(spins))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class SurrogateIsing:
    """Diagonal Ising operator ``sum_i fields_i Z_i + sum_{i<j} J_ij Z_i Z_j``."""

    fields: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.fields, dtype=float)
        J = np.asarray(self.couplings, dtype=float)
        n = f.shape[0]
        if f.ndim != 1 or J.shape != (n, n):
            raise DomainError("fields must be (n,) and couplings (n, n)")
        if not np.array_equal(J, J.T):
            raise DomainError("couplings must be exactly symmetric")
        if np.any(np.diag(J) != 0):
            raise DomainError("couplings must have a zero diagonal")
        object.__setattr__(self, "fields", f)
        object.__setattr__(self, "couplings", J)

    @property
    def n(self) -> int:
        return self.fields.shape[0]

    @classmethod
    def zero(cls, n: int) -> "SurrogateIsing":
        return cls(np.zeros(n), np.zeros((n, n)))

    def energy(self, spins) -> np.ndarray | float:
        """Classical energy of one configuration or a batch."""
        s = np.asarray(spins, dtype=float)
        e = s @ self.fields + 0.5 * np.einsum("...i,ij,...j->...", s, self.couplings, s)
        return float(e) if s.ndim == 1 else e

    def energies(self) -> np.ndarray:
        """Energies of all 2^n configurations in basis order."""
        return self.energy(all_configurations(self.n))


# ------------------------------------------------------------------- gates


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    theta: float = 0.0

    def matrix(self) -> np.ndarray:
        t = self.theta
        if self.name == "Rx":
            c, s = np.cos(t / 2), np.sin(t / 2)
            return np.array([[c, -1j * s], [-1j * s, c]])
        if self.name == "Rz":
            return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
        if self.name == "ZZ":
            p, m = np.exp(-0.5j * t), np.exp(0.5j * t)
            return np.diag([p, m, m, p])
        if self.name == "H":
            return np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        if self.name == "X":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        raise DomainError(f"unknown gate {self.name!r}")


def Rx(theta, q):
    return Gate("Rx", (q,), float(theta))


def Rz(theta, q):
    return Gate("Rz", (q,), float(theta))


def ZZphase(theta, q1, q2):
    """``exp(-i theta/2 Z_q1 Z_q2)``."""
    return Gate("ZZ", (q1, q2), float(theta))


def Hadamard(q):
    return Gate("H", (q,))


def PauliX(q):
    return Gate("X", (q,))


def _apply(arr: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply ``gate`` to the leading 2^n axis of ``arr`` (shape (2^n,) or (2^n, k))."""
    for q in gate.qubits:
        if not 0 <= q < n:
            raise DomainError(f"qubit {q} out of range for {n} qubits")
    if len(set(gate.qubits)) != len(gate.qubits):
        raise DomainError("gate qubits must be distinct")
    tail = arr.shape[1:]
    t = arr.reshape((2,) * n + tail)
    k = len(gate.qubits)
    g = gate.matrix().reshape((2,) * (2 * k))
    t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(gate.qubits)))
    t = np.moveaxis(t, list(range(k)), list(gate.qubits))
    return t.reshape(arr.shape)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    return Statevector(_apply(state.amplitudes, gate, state.n), state.n)


def circuit_unitary(gates, n: int) -> np.ndarray:
    """Dense unitary of a gate sequence (first gate applied first)."""
    U = np.eye(2**n, dtype=complex)
    for g in gates:
        U = _apply(U, g, n)
    return U


# ------------------------------------------------------------- propagators


def _check_gamma(gamma):
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma={gamma} outside [0, 1]")


def mixer_matrix(n: int) -> np.ndarray:
    """Dense ``h2 = sum_i X_i`` (real symmetric)."""
    dim = 2**n
    M = np.zeros((dim, dim))
    idx = np.arange(dim)
    for q in range(n):
        M[idx ^ (1 << (n - 1 - q)), idx] += 1.0
    return M


def exact_propagator(
    h: SurrogateIsing, tau: float, gamma: float, cap: int = DEFAULT_QUBIT_CAP
) -> np.ndarray:
    """``exp(-i tau [gamma h1 + (1-gamma) h2])`` by eigendecomposition.

    The generator is real symmetric, so the eigenvectors are real and the
    propagator is a complex-symmetric matrix.
    """
    _check_gamma(gamma)
    check_cap(h.n, cap, "propagator")
    G = (1.0 - gamma) * mixer_matrix(h.n)
    G[np.diag_indices_from(G)] += gamma * h.energies()
    w, V = np.linalg.eigh(G)
    U = (V * np.exp(-1j * tau * w)) @ V.T
    return 0.5 * (U + U.T)


def _ising_layer(h: SurrogateIsing, dt: float) -> list[Gate]:
    """Gates realizing exp(-i h1 dt): Rz layer then ZZ-phase layer."""
    gates = [Rz(2 * h.fields[i] * dt, i) for i in range(h.n) if h.fields[i] != 0]
    for i in range(h.n):
        for j in range(i + 1, h.n):
            if h.couplings[i, j] != 0:
                gates.append(ZZphase(2 * h.couplings[i, j] * dt, i, j))
    return gates


def _mixer_layer(n: int, dt: float) -> list[Gate]:
    return [Rx(2 * dt, i) for i in range(n)] if dt != 0 else []


def trotter_gates(
    h: SurrogateIsing, tau: float, gamma: float, steps: int, scheme: str = "first_order"
) -> list[Gate]:
    """Gate list (in application order) of the Trotterized proposal circuit."""
    _check_gamma(gamma)
    if steps < 1:
        raise DomainError("Trotter step count must be >= 1")
    dt = tau / steps
    if scheme == "first_order":
        # matrix product A B: the mixer layer B acts first
        step = _mixer_layer(h.n, (1 - gamma) * dt) + _ising_layer(h, gamma * dt)
    elif scheme == "strang":
        half = _ising_layer(h, gamma * dt / 2)
        step = half + _mixer_layer(h.n, (1 - gamma) * dt) + half
    else:
        raise DomainError(f"unknown Trotter scheme {scheme!r}")
    return step * steps


def trotter_circuit(
    h: SurrogateIsing,
    tau: float,
    gamma: float,
    steps: int,
    scheme: str = "first_order",
    cap: int = DEFAULT_QUBIT_CAP,
) -> np.ndarray:
    check_cap(h.n, cap, "Trotter circuit")
    gates = trotter_gates(h, tau, gamma, steps, scheme)
    return circuit_unitary(gates, h.n)


# ---------------------------------------------------------------- proposals


def unitarity_error(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def check_unitary(U: np.ndarray, atol: float = UNITARY_ATOL):
    err = unitarity_error(U)
    if err > atol:
        raise InvalidOperatorError(f"operator is not unitary (error {err:.3g})")


def proposal_matrix(U: np.ndarray, check: bool = True) -> np.ndarray:
    """``Q[v, v'] = |<v'|U|v>|^2`` for all pairs; rows are distributions."""
    if check:
        check_unitary(U)
    return np.abs(U.T) ** 2


def proposal_distribution(U: np.ndarray, v) -> np.ndarray:
    check_unitary(U)
    col = U[:, spins_to_index(np.asarray(v))]
    p = np.abs(col) ** 2
    return p


def sample_proposal(U: np.ndarray, v, rng: np.random.Generator) -> np.ndarray:
    """One measurement outcome of ``U|v>`` by inverse CDF."""
    from .basis import index_to_spins

    p = proposal_distribution(U, v)
    cdf = np.cumsum(p)
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    j = min(j, p.shape[0] - 1)
    return index_to_spins(j, len(v))
