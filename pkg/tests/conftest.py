"""Independent oracles shared by the test modules.

Nothing here calls into the library's matrix builders: operators are
assembled from explicit Kronecker products with qubit 0 as the most
significant factor and |0> <-> spin +1.
"""

import itertools
from functools import reduce

import numpy as np
import pytest

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_string(factors: dict, n: int) -> np.ndarray:
    return reduce(np.kron, [PAULI[factors.get(q, "I")] for q in range(n)])


def kron_sum(terms, n: int) -> np.ndarray:
    """``terms``: iterable of ``(coefficient, {qubit: 'X'|'Y'|'Z'})``."""
    M = np.zeros((2**n, 2**n), dtype=complex)
    for c, f in terms:
        M += c * kron_string(f, n)
    return M


def embed(gate: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full-space matrix of a k-qubit gate by explicit index bookkeeping."""
    dim = 2**n
    M = np.zeros((dim, dim), dtype=complex)
    k = len(qubits)
    for i in range(dim):
        bits_i = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        for j in range(dim):
            bits_j = [(j >> (n - 1 - q)) & 1 for q in range(n)]
            if any(bits_i[q] != bits_j[q] for q in range(n) if q not in qubits):
                continue
            si = sum(bits_i[q] << (k - 1 - t) for t, q in enumerate(qubits))
            sj = sum(bits_j[q] << (k - 1 - t) for t, q in enumerate(qubits))
            M[i, j] = gate[si, sj]
    return M


def spin_configs(n: int) -> np.ndarray:
    """All configurations in basis order (index 0 = all +1)."""
    return np.array(list(itertools.product([1, -1], repeat=n)), dtype=np.int8)


def multinomial_ok(counts, probs, sigmas=3.0) -> bool:
    counts = np.asarray(counts, dtype=float)
    N = counts.sum()
    probs = np.asarray(probs, dtype=float)
    sd = np.sqrt(N * probs * (1 - probs))
    return bool(np.all(np.abs(counts - N * probs) <= sigmas * sd + 1e-9))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ------------------------------------------------------------ acceptance log

ACCEPTANCE_LINES: list[str] = []


def report(criterion: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def info(label: str, detail: str):
    """Diagnostic line that is reported but not asserted."""
    line = f"[INFO] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
