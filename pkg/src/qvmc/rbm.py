"""Restricted Boltzmann machine learner.

The wavefunction marginalizes the hidden layer::

    log psi(v) = sum_i a_i v_i + sum_j log(2 cosh(theta_j)),
    theta_j    = b_j + sum_i W_ij v_i

The same parameters define a diagonal Ising Hamiltonian on ``n + p`` qubits
(visible qubits first, hidden after) and its thermal state ``e^{-H} / Z``.
Note the sign: summing ``e^{-H(X)}`` over the hidden spins gives
``psi(v; -X)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .basis import DEFAULT_QUBIT_CAP, all_configurations, check_cap
from .errors import DimensionError, RequiresRealParametersError
from .hamiltonians import PauliString, PauliSum


@dataclass(frozen=True, eq=False)
class RbmParameters:
    a: np.ndarray
    b: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex).reshape(-1)
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        W = np.asarray(self.W, dtype=complex)
        if W.shape != (a.shape[0], b.shape[0]):
            raise DimensionError(
                f"W has shape {W.shape}, expected {(a.shape[0], b.shape[0])}"
            )
        for name, arr in (("a", a), ("b", b), ("W", W)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def p(self) -> int:
        return self.b.shape[0]

    @property
    def n_params(self) -> int:
        return self.n + self.p + self.n * self.p

    @property
    def real_valued(self) -> bool:
        return not (np.any(self.a.imag) or np.any(self.b.imag) or np.any(self.W.imag))

    @classmethod
    def zeros(cls, n: int, p: int) -> "RbmParameters":
        return cls(np.zeros(n), np.zeros(p), np.zeros((n, p)))

    @classmethod
    def random(
        cls,
        n: int,
        p: int,
        rng: np.random.Generator,
        bias_scale: float = 0.5,
        weight_scale: float | None = None,
    ) -> "RbmParameters":
        """Real instance with a, b ~ U(-bias_scale, bias_scale) and
        W ~ U(-w, w), ``w = 1/sqrt(n p)`` unless given."""
        w = 1.0 / np.sqrt(n * p) if weight_scale is None else weight_scale
        return cls(
            rng.uniform(-bias_scale, bias_scale, n),
            rng.uniform(-bias_scale, bias_scale, p),
            rng.uniform(-w, w, (n, p)),
        )

    @classmethod
    def initial(cls, n: int, p: int, rng: np.random.Generator, std: float = 0.01):
        return cls(np.zeros(n), np.zeros(p), rng.normal(0.0, std, (n, p)))

    def flatten(self) -> np.ndarray:
        """Canonical flattening ``(a, b, W row-major)``."""
        return np.concatenate([self.a, self.b, self.W.reshape(-1)])

    @classmethod
    def from_flat(cls, vec, n: int, p: int) -> "RbmParameters":
        vec = np.asarray(vec)
        if vec.shape != (n + p + n * p,):
            raise DimensionError(f"flat vector of length {vec.shape}, need {n + p + n * p}")
        return cls(vec[:n], vec[n : n + p], vec[n + p :].reshape(n, p))

    def real_part(self) -> "RbmParameters":
        return RbmParameters(self.a.real, self.b.real, self.W.real)

    def __neg__(self) -> "RbmParameters":
        return RbmParameters(-self.a, -self.b, -self.W)

    def __eq__(self, other):
        if not isinstance(other, RbmParameters):
            return NotImplemented
        return (
            np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.W, other.W)
        )

    def norm(self) -> float:
        return float(np.linalg.norm(self.flatten()))


def _require_real(X: RbmParameters):
    if not X.real_valued:
        raise RequiresRealParametersError("operation needs real RBM parameters")


# ------------------------------------------------------------ wavefunction


def log_2cosh(z):
    """``log(2 cosh z)`` without overflow.

    Uses ``s z + log1p(exp(-2 s z))`` with ``s = sign(Re z)``; on the real
    axis this is ``|z| + log1p(exp(-2|z|))``.  For complex ``z``
    it is a continuous branch whose derivative is ``tanh z``.
    """
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        az = np.abs(z)
        return az + np.log1p(np.exp(-2.0 * az))
    s = np.where(z.real >= 0, 1.0, -1.0)
    sz = s * z
    return sz + np.log1p(np.exp(-2.0 * sz))


def _theta(X: RbmParameters, v: np.ndarray, real: bool) -> np.ndarray:
    if real:
        return X.b.real + v @ X.W.real
    return X.b + v @ X.W


def _check_v(X: RbmParameters, v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != X.n:
        raise DimensionError(f"configuration length {v.shape[-1]} != n={X.n}")
    return v.astype(float)


def log_psi(X: RbmParameters, v):
    """Log amplitude for one configuration (complex scalar) or a batch."""
    vf = _check_v(X, v)
    real = X.real_valued
    theta = _theta(X, vf, real)
    a = X.a.real if real else X.a
    out = vf @ a + log_2cosh(theta).sum(axis=-1)
    out = np.asarray(out, dtype=complex)
    return complex(out) if vf.ndim == 1 else out


def log_derivatives(X: RbmParameters, v) -> np.ndarray:
    """``d log psi / dX`` in the canonical ``(a, b, W)`` ordering.

    Shape ``(n + p + n p,)`` for one configuration, ``(batch, ...)`` for many.
    """
    vf = _check_v(X, v)
    single = vf.ndim == 1
    vf = np.atleast_2d(vf)
    real = X.real_valued
    t = np.tanh(_theta(X, vf, real))
    dW = (vf[:, :, None] * t[:, None, :]).reshape(vf.shape[0], -1)
    out = np.concatenate([vf, t, dW], axis=1).astype(complex)
    return out[0] if single else out


# ------------------------------------------------------- learner as Ising H


def learner_hamiltonian(X: RbmParameters) -> PauliSum:
    """``sum a_i Z(v_i) + sum b_j Z(h_j) + sum W_ij Z(v_i) Z(h_j)``."""
    _require_real(X)
    n, p = X.n, X.p
    terms = [(X.a[i].real, PauliString(((i, "Z"),))) for i in range(n)]
    terms += [(X.b[j].real, PauliString(((n + j, "Z"),))) for j in range(p)]
    terms += [
        (X.W[i, j].real, PauliString(((i, "Z"), (n + j, "Z"))))
        for i in range(n)
        for j in range(p)
    ]
    return PauliSum(tuple(terms), n + p)


def classical_energy(X: RbmParameters, v, h) -> np.ndarray | float:
    """Energy of the learner Hamiltonian on product configurations ``(v, h)``."""
    _require_real(X)
    v = np.asarray(v, dtype=float)
    h = np.asarray(h, dtype=float)
    a, b, W = X.a.real, X.b.real, X.W.real
    e = v @ a + h @ b + np.einsum("...i,ij,...j->...", v, W, h)
    return float(e) if v.ndim == 1 else e


@dataclass(frozen=True)
class ThermalState:
    """Diagonal thermal state ``e^{-H}/Z`` of the learner Hamiltonian.

    Only the diagonal is stored; :attr:`rho` materializes the dense matrix.
    """

    probs: np.ndarray
    partition_log: float
    n: int
    p: int

    @property
    def n_qubits(self) -> int:
        return self.n + self.p

    @property
    def rho(self) -> np.ndarray:
        return np.diag(self.probs.astype(complex))

    def tensor(self) -> np.ndarray:
        """Probabilities reshaped to ``(2,) * (n + p)``; axis value 0 is spin +1."""
        return self.probs.reshape((2,) * self.n_qubits)

    def expect_z(self, qubit: int) -> float:
        t = np.moveaxis(self.tensor(), qubit, 0).reshape(2, -1).sum(axis=1)
        return float(t[0] - t[1])


def thermal_state(X: RbmParameters, cap: int = DEFAULT_QUBIT_CAP) -> ThermalState:
    _require_real(X)
    n, p = X.n, X.p
    check_cap(n + p, cap, "thermal state")
    configs = all_configurations(n + p)
    E = classical_energy(X, configs[:, :n], configs[:, n:])
    logZ = float(logsumexp(-E))
    probs = np.exp(-E - logZ)
    return ThermalState(probs, logZ, n, p)


def gibbs_sample_joint(
    X: RbmParameters,
    count: int,
    rng: np.random.Generator,
    burn_in: int | None = None,
    thin: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Block-Gibbs samples ``(v, h)`` from ``e^{-H}``.

    Returns int8 arrays of shapes ``(count, n)`` and ``(count, p)``.  Each
    sweep draws ``h | v`` then ``v | h``, both factorized: with
    ``theta_j = b_j + sum_i W_ij v_i``, ``P(h_j = +1 | v) = sigmoid(-2 theta_j)``.
    """
    _require_real(X)
    n, p = X.n, X.p
    if count <= 0:
        return np.zeros((0, n), np.int8), np.zeros((0, p), np.int8)
    if burn_in is None:
        burn_in = 10 * (n + p)
    a, b, W = X.a.real, X.b.real, X.W.real
    v = rng.choice(np.array([-1.0, 1.0]), n)
    h = np.empty(p)
    vs = np.empty((count, n), np.int8)
    hs = np.empty((count, p), np.int8)
    total = burn_in + count * thin
    uh = rng.random((total, p))
    uv = rng.random((total, n))
    k = 0
    for sweep in range(total):
        ph = expit(-2.0 * (b + v @ W))
        h = np.where(uh[sweep] < ph, 1.0, -1.0)
        pv = expit(-2.0 * (a + W @ h))
        v = np.where(uv[sweep] < pv, 1.0, -1.0)
        if sweep >= burn_in and (sweep - burn_in + 1) % thin == 0:
            vs[k] = v
            hs[k] = h
            k += 1
    return vs, hs


# ----------------------------------------------------------- serialization


def _fmt(z: complex) -> str:
    return f"{z.real:.17g},{z.imag:.17g}"


def serialize_rbm(X: RbmParameters) -> str:
    lines = [f"rbm {X.n} {X.p}", " ".join(_fmt(z) for z in X.a), " ".join(_fmt(z) for z in X.b)]
    lines += [" ".join(_fmt(z) for z in row) for row in X.W]
    return "\n".join(lines) + "\n"


def parse_rbm(text: str) -> RbmParameters:
    lines = text.splitlines()
    header = lines[0].split() if lines else []
    if len(header) != 3 or header[0] != "rbm":
        raise ValueError("expected header 'rbm <n> <p>'")
    n, p = int(header[1]), int(header[2])

    def row(i, width):
        toks = lines[i].split() if i < len(lines) else []
        if len(toks) != width:
            raise ValueError(f"line {i + 1}: expected {width} entries, got {len(toks)}")
        vals = []
        for t in toks:
            re_, im_ = t.split(",")
            vals.append(complex(float(re_), float(im_)))
        return vals

    a = row(1, n)
    b = row(2, p)
    W = [row(3 + i, p) for i in range(n)] if p else [[] for _ in range(n)]
    return RbmParameters(np.array(a, complex), np.array(b, complex), np.array(W, complex).reshape(n, p))


def load_rbm(path) -> RbmParameters:
    with open(path) as fh:
        return parse_rbm(fh.read())


def save_rbm(X: RbmParameters, path):
    with open(path, "w") as fh:
        fh.write(serialize_rbm(X))
