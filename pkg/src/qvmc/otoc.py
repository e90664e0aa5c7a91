"""OTOC and mutual-information diagnostics of the RBM learner.

The learner Hamiltonian ``H(X)`` is diagonal, so for a visible spin ``k`` and
hidden spin ``m`` with coupling ``W = W_km`` the unshifted OTOC is exactly

    C(t) = <e^{-4 i W t Z(v_k) Z(h_m)}> = cos(tau) - i r sin(tau),  tau = 4 W t,

with ``r = <Z(v_k) Z(h_m)>`` in the thermal state and Heisenberg evolution
``O(t) = e^{iHt} O e^{-iHt}``.  Entropies, mutual information and the
``I``-``eta`` bounds are all in bits.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_QUBIT_CAP
from .errors import DomainError, InvalidStateError, UndefinedSpecialTimeError
from .hamiltonians import PauliString, PauliSum, dense_matrix
from .rbm import (
    RbmParameters,
    ThermalState,
    _require_real,
    gibbs_sample_joint,
    learner_hamiltonian,
    thermal_state,
)

IMAG_TOL = 1e-8


@dataclass(frozen=True)
class OtocValue:
    value: complex
    t: float
    tau: float
    k: int
    m: int


@dataclass(frozen=True)
class IEtaPoint:
    k: int
    m: int
    eta: float
    mi: float
    lb: float
    ub: float
    eta_stderr: float = 0.0
    mi_stderr: float = 0.0


def _check_pair(X: RbmParameters, k: int, m: int):
    if not (0 <= k < X.n and 0 <= m < X.p):
        raise DomainError(f"pair (k={k}, m={m}) outside layers n={X.n}, p={X.p}")


def _pauli(axis: str, qubit: int, size: int) -> np.ndarray:
    return dense_matrix(PauliSum(((1.0, PauliString(((qubit, axis.upper()),))),), size))


class OtocEvaluator:
    """Dense OTOC evaluation for one parameter set.

    Builds the learner Hamiltonian as a dense matrix, diagonalizes it once and
    reuses the eigenbasis for every time and shift.
    """

    def __init__(self, X: RbmParameters, cap: int = DEFAULT_QUBIT_CAP):
        _require_real(X)
        self.X = X
        self.size = X.n + X.p
        self.state = thermal_state(X, cap)
        Hm = dense_matrix(learner_hamiltonian(X), cap)
        self.w, self.V = np.linalg.eigh(Hm)
        self.rho_diag = self.state.probs

    def heisenberg(self, op: np.ndarray, t: float) -> np.ndarray:
        """``e^{iHt} op e^{-iHt}``."""
        U = (self.V * np.exp(1j * self.w * t)) @ self.V.conj().T
        return U @ op @ U.conj().T

    def value(self, k, m, alpha, beta, kappa1, kappa2, t) -> complex:
        _check_pair(self.X, k, m)
        eye = np.eye(2**self.size)
        a = _pauli(alpha, k, self.size) - kappa1 * eye
        b = self.heisenberg(_pauli(beta, self.X.n + m, self.size), t) - kappa2 * eye
        string = a @ b @ a @ b
        return complex(np.sum(self.rho_diag * np.diag(string)))


def otoc_direct(
    X: RbmParameters,
    k: int,
    m: int,
    alpha: str = "x",
    beta: str = "x",
    kappa1: complex = 0.0,
    kappa2: complex = 0.0,
    t: float = 0.0,
    evaluator: OtocEvaluator | None = None,
) -> OtocValue:
    """Shifted four-point string traced against the thermal state."""
    if alpha.lower() not in "xy" or beta.lower() not in "xy":
        raise DomainError("alpha and beta must be 'x' or 'y'")
    ev = evaluator or OtocEvaluator(X)
    val = ev.value(k, m, alpha, beta, kappa1, kappa2, t)
    return OtocValue(val, t, 4.0 * float(X.W[k, m].real) * t, k, m)


def zz_correlator(X: RbmParameters, k: int, m: int, state: ThermalState | None = None) -> float:
    joint = pair_distribution(X, k, m, state)
    z = np.array([1.0, -1.0])
    return float(z @ joint @ z)


def otoc_closed_form(
    X: RbmParameters,
    k: int,
    m: int,
    t: float,
    state: ThermalState | None = None,
    samples: int | None = None,
    rng=None,
) -> tuple[OtocValue, float]:
    """``cos(tau) - i r sin(tau)``; returns ``(value, stderr of r)``.

    ``r`` comes from the exact thermal diagonal, or from ``samples`` joint
    Gibbs draws when ``samples`` is given (needed beyond the qubit cap).
    """
    _require_real(X)
    _check_pair(X, k, m)
    tau = 4.0 * float(X.W[k, m].real) * t
    if samples is None:
        r, se = zz_correlator(X, k, m, state), 0.0
    else:
        vs, hs = gibbs_sample_joint(X, samples, rng)
        prod = vs[:, k].astype(float) * hs[:, m]
        r, se = float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(samples))
    return OtocValue(complex(np.cos(tau), -r * np.sin(tau)), t, tau, k, m), se


# ------------------------------------------------------------- covariance


def pair_distribution(
    X: RbmParameters, k: int, m: int, state: ThermalState | None = None
) -> np.ndarray:
    """2x2 joint distribution of ``(Z(v_k), Z(h_m))``; index 0 is spin +1."""
    _check_pair(X, k, m)
    state = state or thermal_state(X)
    t = state.tensor()
    kept = (k, X.n + m)
    other = tuple(i for i in range(t.ndim) if i not in kept)
    return t.sum(axis=other)


def eta_covariance(X: RbmParameters, k: int, m: int, state: ThermalState | None = None) -> float:
    """``<Z(v_k) Z(h_m)> - <Z(v_k)><Z(h_m)>`` in the thermal state."""
    joint = pair_distribution(X, k, m, state)
    z = np.array([1.0, -1.0])
    return float(z @ joint @ z - (z @ joint.sum(1)) * (z @ joint.sum(0)))


def otoc_combination(X: RbmParameters, k: int, m: int, alpha="x", beta="x", evaluator=None):
    """The three shifted OTOCs at ``t1 = pi / (8 |W_km|)``.

    Returns ``(R, C0)`` with ``R = C(k1, 0) + C(0, k2) - C(k1, k2)`` and
    ``C0 = C(0, 0)``, where ``k1 = sqrt(i <Z(v_k)>)``, ``k2 = sqrt(i <Z(h_m)>)``
    (principal branch).
    """
    _require_real(X)
    _check_pair(X, k, m)
    w = float(X.W[k, m].real)
    if w == 0:
        raise UndefinedSpecialTimeError("W_km = 0: the special time is undefined")
    t1 = np.pi / (8.0 * abs(w))
    ev = evaluator or OtocEvaluator(X)
    k1 = np.sqrt(1j * ev.state.expect_z(k))
    k2 = np.sqrt(1j * ev.state.expect_z(X.n + m))

    def C(c1, c2):
        return ev.value(k, m, alpha, beta, c1, c2, t1)

    R = C(k1, 0) + C(0, k2) - C(k1, k2)
    return R, C(0, 0)


def eta_from_otocs(X: RbmParameters, k: int, m: int, alpha="x", beta="x", evaluator=None) -> float:
    """Covariance ``eta`` decoded from shifted OTOCs at the special time.

    Expanding the shifted string gives ``R = C0 - k1^2 k2^2`` with
    ``k1^2 k2^2 = -<Z(v_k)><Z(h_m)>`` real, and ``C0 = -i sign(W_km) r`` at
    ``t1``.  Hence ``eta = -sign(W_km) Im R - Re R``.  The shift contribution
    ``R - C0`` must be real; a residual imaginary part above ``1e-8`` raises.
    """
    R, C0 = otoc_combination(X, k, m, alpha, beta, evaluator)
    shift = R - C0
    if abs(shift.imag) > IMAG_TOL:
        raise InvalidStateError(
            f"shift contribution has imaginary part {shift.imag:.3g}"
        )
    sign = 1.0 if X.W[k, m].real > 0 else -1.0
    return float(-sign * R.imag - R.real)


# ----------------------------------------------------- information measures


def reduced_density_matrices(X: RbmParameters, k: int, m: int, state: ThermalState | None = None):
    """``(rho_v, rho_h, rho_vh)``; rho_vh is ordered ``(v_k, h_m)`` big-endian."""
    joint = pair_distribution(X, k, m, state)
    rho_vh = np.diag(joint.reshape(-1)).astype(complex)
    rho_v = np.diag(joint.sum(axis=1)).astype(complex)
    rho_h = np.diag(joint.sum(axis=0)).astype(complex)
    return rho_v, rho_h, rho_vh


def von_neumann_entropy(rho: np.ndarray, atol: float = 1e-10) -> float:
    """``-Tr rho log2 rho``; eigenvalues below 1e-15 contribute zero."""
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise InvalidStateError("density matrix is not Hermitian")
    ev = np.linalg.eigvalsh(rho)
    if ev.min() < -atol or abs(ev.sum() - 1.0) > atol:
        raise InvalidStateError("density matrix is not positive with unit trace")
    ev = ev[ev > 1e-15]
    return float(-np.sum(ev * np.log2(ev)))


def mutual_information(rho_v, rho_h, rho_vh) -> float:
    """``S(rho_v) + S(rho_h) - S(rho_vh)`` in bits, clipped at zero."""
    mi = von_neumann_entropy(rho_v) + von_neumann_entropy(rho_h) - von_neumann_entropy(rho_vh)
    if mi < -1e-12:
        raise InvalidStateError(f"negative mutual information {mi:.3g}")
    return max(mi, 0.0)


def _ell(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, -x * np.log2(np.where(x > 0, x, 1.0)), 0.0)


def binary_entropy(x):
    return _ell(x) + _ell(1.0 - np.asarray(x, dtype=float))


def lb_eta(eta):
    """``2 - 2 l((1 + eta/2)/2) - 2 l((1 - eta/2)/2)``, ``l(x) = -x log2 x``."""
    e = np.asarray(eta, dtype=float)
    if np.any(np.abs(e) > 2):
        raise DomainError("lb_eta needs |eta| <= 2")
    out = 2.0 - 2.0 * _ell((1 + e / 2) / 2) - 2.0 * _ell((1 - e / 2) / 2)
    return float(out) if out.ndim == 0 else out


def ub_eta(eta):
    """``H2(1/2 + sqrt(1 - |eta|)/2)`` in bits."""
    e = np.asarray(eta, dtype=float)
    if np.any(np.abs(e) > 1):
        raise DomainError("ub_eta needs |eta| <= 1")
    out = binary_entropy(0.5 + 0.5 * np.sqrt(1.0 - np.abs(e)))
    return float(out) if out.ndim == 0 else out


def generic_lower_bound(eta):
    """Generic ``eta^2 / 2`` nats bound for bounded observables, in bits."""
    return np.asarray(eta, dtype=float) ** 2 / (2.0 * np.log(2.0))


def _point(k, m, joint, eta_se=0.0, mi_se=0.0) -> IEtaPoint:
    z = np.array([1.0, -1.0])
    eta = float(z @ joint @ z - (z @ joint.sum(1)) * (z @ joint.sum(0)))
    pv, ph = joint.sum(1), joint.sum(0)
    mi = max(
        float(binary_entropy(pv[0]) + binary_entropy(ph[0]) - np.sum(_ell(joint.reshape(-1)))),
        0.0,
    )
    lb = lb_eta(eta)
    ub = ub_eta(eta) if abs(eta) <= 1 else float("nan")
    return IEtaPoint(k, m, eta, mi, lb, ub, eta_se, mi_se)


def i_eta_scan(
    X: RbmParameters,
    cap: int = DEFAULT_QUBIT_CAP,
    samples: int = 100_000,
    rng=None,
    batches: int = 10,
) -> list[IEtaPoint]:
    """One ``(I, eta)`` point per visible-hidden pair, ordered by ``(k, m)``.

    Exact from the thermal diagonal when ``n + p <= cap``; otherwise the pair
    distributions are estimated from joint Gibbs samples and standard errors
    come from ``batches`` equal batch means.
    """
    _require_real(X)
    n, p = X.n, X.p
    if n + p <= cap:
        state = thermal_state(X, cap)
        return [
            _point(k, m, pair_distribution(X, k, m, state))
            for k in range(n)
            for m in range(p)
        ]
    if rng is None:
        raise DomainError("sampling fallback needs an rng")
    vs, hs = gibbs_sample_joint(X, samples, rng)
    vb = (vs < 0).astype(int)
    hb = (hs < 0).astype(int)
    points = []
    splits = np.array_split(np.arange(samples), batches)
    for k in range(n):
        for m in range(p):
            code = 2 * vb[:, k] + hb[:, m]

            def joint_of(sel):
                return np.bincount(code[sel], minlength=4).reshape(2, 2) / len(sel)

            full = _point(k, m, np.bincount(code, minlength=4).reshape(2, 2) / samples)
            parts = [_point(k, m, joint_of(s)) for s in splits]
            eta_se = float(np.std([q.eta for q in parts], ddof=1) / np.sqrt(batches))
            mi_se = float(np.std([q.mi for q in parts], ddof=1) / np.sqrt(batches))
            points.append(IEtaPoint(k, m, full.eta, full.mi, full.lb, full.ub, eta_se, mi_se))
    return points


def ieta_csv(points: list[IEtaPoint]) -> str:
    buf = io.StringIO()
    buf.write("k,m,eta,mi,lb,ub,eta_stderr,mi_stderr\n")
    for q in points:
        buf.write(
            f"{q.k},{q.m},"
            + ",".join(f"{x:.12g}" for x in (q.eta, q.mi, q.lb, q.ub, q.eta_stderr, q.mi_stderr))
            + "\n"
        )
    return buf.getvalue()


def otoc_trace(X: RbmParameters, k: int, m: int, ts, alpha="x", beta="x"):
    """Direct and closed-form OTOCs along a time grid.

    Returns rows ``(t, tau, direct, closed)``.
    """
    ev = OtocEvaluator(X)
    rows = []
    for t in ts:
        d = otoc_direct(X, k, m, alpha, beta, 0.0, 0.0, float(t), evaluator=ev)
        c, _ = otoc_closed_form(X, k, m, float(t), state=ev.state)
        rows.append((float(t), d.tau, d.value, c.value))
    return rows


def otoc_trace_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("t,tau,re_direct,im_direct,re_closed,im_closed\n")
    for t, tau, d, c in rows:
        buf.write(",".join(f"{x:.12g}" for x in (t, tau, d.real, d.imag, c.real, c.imag)) + "\n")
    return buf.getvalue()
