"""Exact Metropolis-Hastings transition matrices and their spectral gaps."""

from __future__ import annotations

import csv
import io
from concurrent.futures import Executor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidMatrixError, ResourceError
from .rbm import RbmParameters
from .samplers import (
    BornWeight,
    ProposalContext,
    ProposalKind,
    SurrogateGibbs,
    TargetDistribution,
    exact_distribution,
    prepare_proposal,
    surrogate_from_rbm,
    uniform_target,
)
from .seeding import derive_rng
from .statevector import SurrogateIsing

TRANSITION_CAP = 10
ROW_SUM_ATOL = 1e-12


def build_transition_matrix(ctx: ProposalContext, target: TargetDistribution) -> np.ndarray:
    """Row-stochastic ``T[v, v'] = T(v'|v)``.

    Off-diagonal entries are written as the symmetric flux
    ``min(pi(v) q(v'|v), pi(v') q(v|v'))`` divided by ``pi(v)``, which is the
    Metropolis-Hastings rule and makes detailed balance hold to rounding.
    The diagonal absorbs the rejected mass.
    """
    n = ctx.n
    if n > TRANSITION_CAP:
        raise ResourceError(f"transition matrix on n={n} exceeds cap {TRANSITION_CAP}")
    if target.n != n:
        raise DomainError("target and proposal sizes differ")
    pi = exact_distribution(target)
    Q = ctx.matrix()
    flux = pi[:, None] * Q
    flux = np.minimum(flux, flux.T)
    T = flux / pi[:, None]
    np.fill_diagonal(T, 0.0)
    T[T < 0] = 0.0
    np.fill_diagonal(T, np.maximum(1.0 - T.sum(axis=1), 0.0))
    return T


def stationarity_error(T: np.ndarray, pi: np.ndarray) -> float:
    """``|| pi T - pi ||_1``."""
    return float(np.abs(pi @ T - pi).sum())


def detailed_balance_error(T: np.ndarray, pi: np.ndarray) -> float:
    """``max |pi(v) T(v'|v) - pi(v') T(v|v')|``."""
    F = pi[:, None] * T
    return float(np.max(np.abs(F - F.T)))


@dataclass(frozen=True)
class GapRecord:
    n: int
    kind: str
    delta: float
    lambda_moduli: tuple[float, ...]
    beta: float | None = None
    instance: int | None = None

    @property
    def lambda1_mod(self) -> float:
        return self.lambda_moduli[1] if len(self.lambda_moduli) > 1 else 0.0


def spectral_gap(
    T: np.ndarray, kind: str = "", beta: float | None = None, instance: int | None = None, top: int = 4
) -> GapRecord:
    """Absolute gap ``lambda_0 - lambda_1`` over eigenvalue moduli."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InvalidMatrixError("transition matrix must be square")
    if np.any(T < -1e-14) or np.max(np.abs(T.sum(axis=1) - 1.0)) > 1e-10:
        raise InvalidMatrixError("matrix is not row-stochastic")
    mods = np.sort(np.abs(np.linalg.eigvals(T)))[::-1]
    lam0 = mods[0]
    lam1 = mods[1] if mods.size > 1 else 0.0
    delta = float(np.clip(lam0 - lam1, 0.0, 1.0))
    n = int(round(np.log2(T.shape[0])))
    return GapRecord(n, kind, delta, tuple(float(m) for m in mods[:top]), beta, instance)


# ------------------------------------------------------------------ sweeps


def kind_name(kind: ProposalKind) -> str:
    """Stable text tag for a proposal kind, used in CSV output."""
    from .samplers import HaarRandom, QuantumAveraged, TimeHomogeneous, Trotterized

    if isinstance(kind, TimeHomogeneous):
        return f"TH(tau={kind.tau:g},gamma={kind.gamma:g})"
    if isinstance(kind, Trotterized):
        return f"Trotter(tau={kind.tau:g},gamma={kind.gamma:g},NT={kind.steps},{kind.scheme})"
    if isinstance(kind, QuantumAveraged):
        return f"QAvg(gamma={kind.gamma:g},taus={len(kind.tau_grid)})"
    if isinstance(kind, HaarRandom):
        return f"Haar(seed={kind.seed})"
    return kind.label


def _instance_gaps(args):
    kinds, n, p, target_family, master_seed, instance, ranges = args
    rng = derive_rng(master_seed, "gap-instance", n, instance)
    X = RbmParameters.random(n, p, rng, bias_scale=ranges[0], weight_scale=ranges[1])
    h = surrogate_from_rbm(X)
    target = BornWeight(X) if target_family == "born" else uniform_target(n)
    out = []
    for kind in kinds:
        ctx = prepare_proposal(kind, n, h)
        T = build_transition_matrix(ctx, target)
        out.append(spectral_gap(T, kind_name(kind), instance=instance))
    return out


def _map(fn, items, executor: Executor | None):
    if executor is None:
        return [fn(x) for x in items]
    return list(executor.map(fn, items))


def fit_log_slope(ns, deltas) -> float:
    """Least-squares slope of ``log delta`` against ``n``; nan if any delta is 0."""
    d = np.asarray(deltas, dtype=float)
    ns = np.asarray(ns, dtype=float)
    if ns.size < 2:
        return 0.0
    if np.any(d <= 0):
        return float("nan")
    return float(np.polyfit(ns, np.log(d), 1)[0])


@dataclass(frozen=True)
class SweepSummary:
    kind: str
    n: int
    mean_delta: float
    stderr: float
    beta: float | None = None


def summarize(records: list[GapRecord]) -> list[SweepSummary]:
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault((r.kind, r.n, r.beta), []).append(r.delta)
    out = []
    for (kind, n, beta), ds in groups.items():
        ds = np.asarray(ds)
        se = float(ds.std(ddof=1) / np.sqrt(ds.size)) if ds.size > 1 else 0.0
        out.append(SweepSummary(kind, n, float(ds.mean()), se, beta))
    return out


def gap_scaling_sweep(
    kinds,
    n_range,
    instances: int,
    target_family: str = "born",
    seed: int = 0,
    hidden_ratio: float = 1.0,
    bias_scale: float = 0.5,
    weight_scale: float | None = None,
    executor: Executor | None = None,
):
    """Average gap per ``(kind, n)`` over random RBM instances.

    Returns ``(records, summaries, slopes)`` where ``slopes[kind]`` is the
    fitted slope of ``log mean(delta)`` against ``n``.
    """
    n_range = list(n_range)
    if not n_range:
        raise DomainError("empty n_range")
    if instances < 1:
        raise DomainError("instances must be >= 1")
    if target_family not in ("born", "uniform"):
        raise DomainError(f"unknown target family {target_family!r}")
    kinds = list(kinds)
    jobs = []
    for n in n_range:
        if n > TRANSITION_CAP:
            raise ResourceError(f"n={n} exceeds transition cap {TRANSITION_CAP}")
        p = max(1, int(round(hidden_ratio * n)))
        for i in range(instances):
            jobs.append((kinds, n, p, target_family, seed, i, (bias_scale, weight_scale)))
    records = [r for batch in _map(_instance_gaps, jobs, executor) for r in batch]
    records.sort(key=lambda r: (r.n, [kind_name(k) for k in kinds].index(r.kind), r.instance))
    summaries = summarize(records)
    slopes = {}
    for kind in kinds:
        name = kind_name(kind)
        rows = sorted((s for s in summaries if s.kind == name), key=lambda s: s.n)
        slopes[name] = fit_log_slope([s.n for s in rows], [s.mean_delta for s in rows])
    return records, summaries, slopes


def _beta_gaps(args):
    kind, h, beta = args
    ctx = prepare_proposal(kind, h.n, h)
    T = build_transition_matrix(ctx, SurrogateGibbs(h, beta))
    return spectral_gap(T, kind_name(kind), beta=beta)


def gap_beta_sweep(kinds, h: SurrogateIsing, beta_range, executor: Executor | None = None):
    """Gap of each kind for the surrogate Gibbs target at each inverse temperature."""
    betas = [float(b) for b in beta_range]
    if any(b < 0 for b in betas):
        raise DomainError("beta must be non-negative")
    jobs = [(kind, h, b) for b in betas for kind in kinds]
    return _map(_beta_gaps, jobs, executor)


def random_ferromagnet(n: int, rng: np.random.Generator, field_scale: float = 0.1) -> SurrogateIsing:
    """Frustration-free surrogate: all-to-all ferromagnetic couplings and a
    small uniform-sign field, so the all-down configuration is the unique
    ground state."""
    J = -rng.uniform(0.5, 1.0, (n, n))
    J = np.triu(J, 1)
    J = J + J.T
    fields = rng.uniform(0.5, 1.0, n) * field_scale
    return SurrogateIsing(fields, J)


# --------------------------------------------------------------------- CSV


def _g(x) -> str:
    return "" if x is None else f"{x:.12g}"


def gap_records_csv(records: list[GapRecord], summaries: list[SweepSummary] = ()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "n", "beta", "instance", "delta", "lambda1_mod", "stderr"])
    for r in records:
        w.writerow([r.kind, r.n, _g(r.beta), "" if r.instance is None else r.instance,
                    _g(r.delta), _g(r.lambda1_mod), ""])
    for s in summaries:
        w.writerow([s.kind, s.n, _g(s.beta), "mean", _g(s.mean_delta), "", _g(s.stderr)])
    return buf.getvalue()
