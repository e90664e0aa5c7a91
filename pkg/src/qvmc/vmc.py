"""Variational Monte Carlo with stochastic reconfiguration."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import all_configurations
from .errors import (
    DegenerateFitError,
    DimensionError,
    DomainError,
    InvalidOperatorError,
    LinearSolveError,
    TrainingDivergedError,
)
from .hamiltonians import PauliSum, dense_matrix
from .rbm import RbmParameters, log_derivatives, log_psi
from .samplers import (
    QUANTUM_KINDS,
    BatchChains,
    BornWeight,
    HaarRandom,
    LocalFlip,
    ProposalKind,
    TimeHomogeneous,
    prepare_proposal,
    surrogate_from_rbm,
)
from .seeding import derive_rng

log = logging.getLogger(__name__)


def local_energies(H: PauliSum, X: RbmParameters, V) -> np.ndarray:
    """``E_loc(v) = sum_v' <v|H|v'> psi(v')/psi(v)`` for a batch of configurations."""
    V = np.atleast_2d(np.asarray(V, dtype=np.int8))
    if V.shape[1] != H.size or H.size != X.n:
        raise DimensionError("Hamiltonian, RBM and configurations disagree on n")
    lp = log_psi(X, V)
    out = np.zeros(V.shape[0], dtype=complex)
    for flips, parts in H.flip_groups():
        vp = V.copy()
        if flips:
            vp[:, list(flips)] *= -1
        # <v|c P|v'> = c i^nY prod_{q in Y,Z} v'_q with v' = flip(v)
        amp = np.zeros(V.shape[0], dtype=complex)
        for c, zq in parts:
            amp += c * (np.prod(vp[:, list(zq)], axis=1) if zq else 1.0)
        ratio = np.exp(log_psi(X, vp) - lp) if flips else 1.0
        out += amp * ratio
    return out


def local_energy(H: PauliSum, X: RbmParameters, v) -> complex:
    v = np.asarray(v)
    if v.ndim != 1:
        raise DimensionError("expected a single configuration")
    return complex(local_energies(H, X, v[None, :])[0])


@dataclass
class SrStatistics:
    energy_mean: float
    energy_var: float
    F: np.ndarray
    S: np.ndarray


def sr_statistics(H: PauliSum, X: RbmParameters, samples) -> SrStatistics:
    """Sample estimates of the metric ``F`` and force ``S``.

    ``F_ij = <D_i* D_j> - <D_i*><D_j>``, ``S_i = <E D_i*> - <E><D_i*>``.
    """
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise DomainError("need a non-empty (samples, n) array")
    E = local_energies(H, X, samples)
    D = log_derivatives(X, samples)
    Dc = D - D.mean(axis=0)
    Ec = E - E.mean()
    m = samples.shape[0]
    F = Dc.conj().T @ Dc / m
    S = Dc.conj().T @ Ec / m
    return SrStatistics(float(E.mean().real), float(np.mean(np.abs(Ec) ** 2)), F, S)


def sr_direction(F: np.ndarray, S: np.ndarray, reg: float) -> np.ndarray:
    A = F + reg * np.eye(F.shape[0])
    if np.linalg.cond(A) > 1e13:
        raise LinearSolveError("regularized metric is singular")
    try:
        return np.linalg.solve(A, S)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError(str(exc)) from exc


def sr_update(
    X: RbmParameters, samples, H: PauliSum, lr: float, reg: float, force_real: bool = False
) -> RbmParameters:
    """One natural-gradient step ``X - lr (F + reg I)^{-1} S``."""
    stats = sr_statistics(H, X, samples)
    dx = sr_direction(stats.F, stats.S, reg)
    if force_real:
        dx = dx.real
    return RbmParameters.from_flat(X.flatten() - lr * dx, X.n, X.p)


# ------------------------------------------------------------------ training


@dataclass(frozen=True)
class VmcConfig:
    sampler: ProposalKind = TimeHomogeneous(tau=1.0, gamma=0.5)
    n_samples: int = 1024
    iterations: int = 500
    lr: float = 0.02
    reg: float = 1e-2
    reg_decay: float = 0.9
    reg_decay_every: int = 50
    reg_min: float = 1e-4
    seed: int = 0
    refresh: int = 10
    chains: int = 64
    thin: int | None = None
    burn_in: int = 100
    force_real: bool = False

    def __post_init__(self):
        for name in ("n_samples", "iterations", "refresh", "chains", "reg_decay_every"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if not (np.isfinite(self.lr) and self.lr > 0):
            raise DomainError("lr must be finite and positive")
        if self.reg < 0 or self.reg_min < 0:
            raise DomainError("regularizer must be non-negative")
        if self.thin is not None and self.thin < 1:
            raise DomainError("thin must be >= 1")

    def reg_at(self, iteration: int) -> float:
        return max(self.reg * self.reg_decay ** (iteration // self.reg_decay_every), self.reg_min)


@dataclass
class TrainingTrace:
    energy_mean: list[float] = field(default_factory=list)
    energy_var: list[float] = field(default_factory=list)
    accept_rate: list[float] = field(default_factory=list)
    param_norm: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.energy_mean)

    def append(self, mean, var, acc, norm):
        self.energy_mean.append(float(mean))
        self.energy_var.append(float(var))
        self.accept_rate.append(float(acc))
        self.param_norm.append(float(norm))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iter,energy_mean,energy_var,accept_rate,param_norm\n")
        for i, row in enumerate(
            zip(self.energy_mean, self.energy_var, self.accept_rate, self.param_norm)
        ):
            buf.write(f"{i}," + ",".join(f"{x:.12g}" for x in row) + "\n")
        return buf.getvalue()


def _proposal_for(kind: ProposalKind, X: RbmParameters):
    needs_surrogate = isinstance(kind, QUANTUM_KINDS)
    h = surrogate_from_rbm(X.real_part()) if needs_surrogate else None
    return prepare_proposal(kind, X.n, h)


def train(
    H: PauliSum,
    X0: RbmParameters,
    cfg: VmcConfig,
    callback: Callable[[int, RbmParameters], None] | None = None,
):
    """Run ``cfg.iterations`` SR steps; returns ``(X, TrainingTrace)``.

    Each iteration draws ``n_samples`` configurations from chains targeting
    ``|psi|^2``, records the sample energy statistics and applies
    :func:`sr_update`.  Quantum proposals are rebuilt from the current
    surrogate every ``cfg.refresh`` iterations.
    """
    if not H.is_hermitian():
        raise InvalidOperatorError("training requires a Hermitian Hamiltonian")
    if H.size != X0.n:
        raise DimensionError("Hamiltonian size differs from the visible layer")
    rng = derive_rng(cfg.seed, "vmc-chains")
    X = X0.real_part() if cfg.force_real else X0
    thin = cfg.thin or (X.n if isinstance(cfg.sampler, LocalFlip) else 1)
    chains = BatchChains(_proposal_for(cfg.sampler, X), BornWeight(X), cfg.chains, rng)
    chains.run(cfg.burn_in)
    per_chain = -(-cfg.n_samples // cfg.chains)
    trace = TrainingTrace()
    static = isinstance(cfg.sampler, HaarRandom) or not isinstance(cfg.sampler, QUANTUM_KINDS)
    for it in range(cfg.iterations):
        if it > 0 and it % cfg.refresh == 0 and not static:
            chains.set_proposal(_proposal_for(cfg.sampler, X))
        chains.set_target(BornWeight(X))
        chains.reset_counters()
        samples = chains.sample(per_chain, thin)[: cfg.n_samples]
        stats = sr_statistics(H, X, samples)
        trace.append(stats.energy_mean, stats.energy_var, chains.acceptance_rate, X.norm())
        if not (np.isfinite(stats.energy_mean) and np.isfinite(stats.energy_var)):
            raise TrainingDivergedError(f"non-finite energy at iteration {it}", trace)
        dx = sr_direction(stats.F, stats.S, cfg.reg_at(it))
        if cfg.force_real:
            dx = dx.real
        X = RbmParameters.from_flat(X.flatten() - cfg.lr * dx, X.n, X.p)
        if callback is not None:
            callback(it, X)
    return X, trace


# --------------------------------------------------------------- estimators


def zero_variance_extrapolate(trace: TrainingTrace, tail: int) -> tuple[float, float]:
    """OLS fit ``E = intercept + slope * Var`` over the last ``tail`` iterations."""
    if tail < 2 or tail > len(trace):
        raise DomainError(f"tail={tail} must lie in [2, {len(trace)}]")
    var = np.asarray(trace.energy_var[-tail:])
    e = np.asarray(trace.energy_mean[-tail:])
    if np.ptp(var) == 0:
        raise DegenerateFitError("all tail variances are equal")
    slope, intercept = np.polyfit(var, e, 1)
    return float(intercept), float(slope)


def min_of_tail(trace: TrainingTrace, tail: int) -> float:
    return float(np.min(trace.energy_mean[-tail:]))


def default_tail(trace_len: int) -> int:
    return max(2, int(round(0.2 * trace_len)))


def energy_estimate(trace: TrainingTrace, tail: int | None = None, zve: bool = True) -> float:
    """ZVE intercept, falling back to the minimum tail energy when the fit is
    degenerate (or when ``zve`` is off)."""
    tail = tail or default_tail(len(trace))
    if zve:
        try:
            return zero_variance_extrapolate(trace, tail)[0]
        except DegenerateFitError:
            pass
    return min_of_tail(trace, tail)


def exact_energy(H: PauliSum, X: RbmParameters) -> tuple[float, float]:
    """Energy and variance of the RBM state by full enumeration."""
    lp = log_psi(X, all_configurations(X.n))
    psi = np.exp(lp - lp.real.max())
    psi /= np.linalg.norm(psi)
    M = dense_matrix(H)
    Hpsi = M @ psi
    e = np.vdot(psi, Hpsi).real
    var = np.vdot(Hpsi, Hpsi).real - e**2
    return float(e), float(var)
