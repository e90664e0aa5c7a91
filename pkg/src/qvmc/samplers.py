"""Proposal families and Metropolis-Hastings chains over visible configurations.

Proposal kinds (labels as in the gap study):

* ``LocalFlip``         (A) flip one uniformly chosen spin
* ``UniformRandom``     (B) uniform over all 2^n configurations
* ``HaarRandom``        (C) ``|<v'|U|v>|^2`` for one Haar unitary fixed per seed
* ``QuantumAveraged``   (D) uniform mixture of time-homogeneous proposals over a tau grid
* ``TimeHomogeneous``   (E-G) exact ``U(tau, gamma)`` built from the surrogate
* ``Trotterized``       (H) the same, via the gate-level Trotter circuit

Quantum kinds are prepared once into a dense proposal matrix
``Q[v, v'] = q(v' | v)`` (see :func:`prepare_proposal`) so forward and reverse
proposal probabilities are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.stats import unitary_group

from .basis import DEFAULT_QUBIT_CAP, all_configurations, check_cap, index_to_spins, spins_to_index
from .errors import DegenerateSeriesError, DomainError
from .rbm import RbmParameters, _require_real, log_psi
from .statevector import (
    SurrogateIsing,
    exact_propagator,
    proposal_matrix,
    trotter_circuit,
)

# ------------------------------------------------------------ proposal kinds


@dataclass(frozen=True)
class LocalFlip:
    label = "local_flip"


@dataclass(frozen=True)
class UniformRandom:
    label = "uniform"


@dataclass(frozen=True)
class HaarRandom:
    seed: int = 0
    label = "haar"


@dataclass(frozen=True)
class QuantumAveraged:
    tau_grid: tuple[float, ...]
    gamma: float
    label = "quantum_averaged"

    def __post_init__(self):
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in self.tau_grid))
        if not self.tau_grid:
            raise DomainError("tau_grid must be non-empty")
        _check_gamma(self.gamma)


@dataclass(frozen=True)
class TimeHomogeneous:
    tau: float
    gamma: float
    label = "time_homogeneous"

    def __post_init__(self):
        _check_gamma(self.gamma)


@dataclass(frozen=True)
class Trotterized:
    tau: float
    gamma: float
    steps: int = 1
    scheme: str = "first_order"
    label = "trotterized"

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.steps < 1:
            raise DomainError("Trotter step count must be >= 1")
        if self.scheme not in ("first_order", "strang"):
            raise DomainError(f"unknown Trotter scheme {self.scheme!r}")


ProposalKind = Union[LocalFlip, UniformRandom, HaarRandom, QuantumAveraged, TimeHomogeneous, Trotterized]

QUANTUM_KINDS = (QuantumAveraged, TimeHomogeneous, Trotterized)


def _check_gamma(gamma):
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma={gamma} outside [0, 1]")


def is_symmetric_kind(kind: ProposalKind) -> bool:
    """Whether ``q(v'|v) = q(v|v')`` holds by construction."""
    if isinstance(kind, Trotterized):
        return kind.scheme == "strang" or kind.gamma in (0.0, 1.0)
    return not isinstance(kind, HaarRandom)


# ----------------------------------------------------------------- targets


@dataclass(frozen=True)
class BornWeight:
    """``log pi(v) = 2 Re log psi(v; X)`` (unnormalized)."""

    X: RbmParameters

    @property
    def n(self) -> int:
        return self.X.n

    def log_weight(self, v):
        return 2.0 * np.real(log_psi(self.X, v))


@dataclass(frozen=True)
class SurrogateGibbs:
    """``log pi(v) = -beta E_h(v)`` (unnormalized)."""

    h: SurrogateIsing
    beta: float

    @property
    def n(self) -> int:
        return self.h.n

    def log_weight(self, v):
        return -self.beta * np.asarray(self.h.energy(v))


TargetDistribution = Union[BornWeight, SurrogateGibbs]


def uniform_target(n: int) -> SurrogateGibbs:
    return SurrogateGibbs(SurrogateIsing.zero(n), 0.0)


def exact_distribution(target: TargetDistribution, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Normalized target probabilities over all 2^n configurations."""
    check_cap(target.n, cap, "target enumeration")
    lw = target.log_weight(all_configurations(target.n))
    w = np.exp(lw - lw.max())
    return w / w.sum()


# --------------------------------------------------------- surrogate mapping


def surrogate_from_rbm(X: RbmParameters) -> SurrogateIsing:
    """Second-order expansion of ``-log |psi|^2`` in the hidden pre-activations.

    ``l_i = -2 a_i - 2 sum_j W_ij tanh(b_j)`` and
    ``J_ik = -2 sum_j sech^2(b_j) W_ij W_kj`` (i != k), so that
    ``exp(-h1(v))`` is proportional to ``|psi(v)|^2`` up to O(W^3).
    """
    _require_real(X)
    a, b, W = X.a.real, X.b.real, X.W.real
    fields = -2.0 * a - 2.0 * W @ np.tanh(b)
    sech2 = 1.0 / np.cosh(b) ** 2
    J = -2.0 * (W * sech2) @ W.T
    np.fill_diagonal(J, 0.0)
    J = 0.5 * (J + J.T)
    return SurrogateIsing(fields, J)


# --------------------------------------------------------- prepared proposal


@dataclass(frozen=True, eq=False)
class ProposalContext:
    """A proposal kind bound to a system size and, for quantum and Haar kinds,
    to its dense proposal matrix ``Q`` (rows are distributions)."""

    kind: ProposalKind
    n: int
    Q: np.ndarray | None = None
    cdf: np.ndarray | None = field(default=None, repr=False)
    U: np.ndarray | None = field(default=None, repr=False)

    def matrix(self) -> np.ndarray:
        """Dense ``Q[v, v'] = q(v'|v)`` for every kind."""
        if self.Q is not None:
            return self.Q
        dim = 2**self.n
        if isinstance(self.kind, UniformRandom):
            return np.full((dim, dim), 1.0 / dim)
        if isinstance(self.kind, LocalFlip):
            Q = np.zeros((dim, dim))
            idx = np.arange(dim)
            for q in range(self.n):
                Q[idx, idx ^ (1 << (self.n - 1 - q))] = 1.0 / self.n
            return Q
        raise AssertionError(self.kind)


def proposal_unitary(
    kind: ProposalKind, h: SurrogateIsing | None, n: int, cap: int = DEFAULT_QUBIT_CAP
) -> np.ndarray:
    """The unitary behind a single-operator quantum (or Haar) kind."""
    check_cap(n, cap, "quantum proposal")
    if isinstance(kind, HaarRandom):
        return unitary_group.rvs(2**n, random_state=np.random.default_rng(kind.seed))
    if h is None:
        raise DomainError(f"{kind.label} proposals need a surrogate Hamiltonian")
    if isinstance(kind, TimeHomogeneous):
        return exact_propagator(h, kind.tau, kind.gamma, cap)
    if isinstance(kind, Trotterized):
        return trotter_circuit(h, kind.tau, kind.gamma, kind.steps, kind.scheme, cap)
    raise DomainError(f"{kind} has no single proposal unitary")


def prepare_proposal(
    kind: ProposalKind,
    n: int,
    surrogate: SurrogateIsing | None = None,
    cap: int = DEFAULT_QUBIT_CAP,
) -> ProposalContext:
    if n < 1:
        raise DomainError("need at least one spin")
    if isinstance(kind, (LocalFlip, UniformRandom)):
        return ProposalContext(kind, n)
    if surrogate is not None and surrogate.n != n:
        raise DomainError("surrogate size does not match n")
    U = None
    if isinstance(kind, QuantumAveraged):
        check_cap(n, cap, "quantum proposal")
        Q = np.zeros((2**n, 2**n))
        for tau in kind.tau_grid:
            Q += proposal_matrix(exact_propagator(surrogate, tau, kind.gamma, cap))
        Q /= len(kind.tau_grid)
    else:
        U = proposal_unitary(kind, surrogate, n, cap)
        Q = proposal_matrix(U)
    cdf = np.cumsum(Q, axis=1)
    return ProposalContext(kind, n, Q, cdf, U)


def _draw_batch(ctx: ProposalContext, idx: np.ndarray, spins: np.ndarray, rng):
    """Vectorized proposal for a batch of chains.

    Returns new spins and the forward / reverse log proposal probabilities.
    """
    n = ctx.n
    m = spins.shape[0]
    if isinstance(ctx.kind, LocalFlip):
        site = rng.integers(0, n, m)
        new = spins.copy()
        new[np.arange(m), site] *= -1
        lq = np.full(m, -np.log(n))
        return new, lq, lq
    if isinstance(ctx.kind, UniformRandom):
        new = rng.choice(np.array([-1, 1], dtype=np.int8), (m, n))
        lq = np.full(m, -n * np.log(2.0))
        return new, lq, lq
    u = rng.random(m)
    rows = ctx.cdf[idx]
    j = (rows < (u * rows[:, -1])[:, None]).sum(axis=1)
    j = np.minimum(j, rows.shape[1] - 1)
    # the inverse-CDF draw never lands on a zero-probability entry except by
    # rounding at the tail; step back to the last positive entry if so
    bad = ctx.Q[idx, j] <= 0
    for b in np.flatnonzero(bad):
        j[b] = np.flatnonzero(ctx.Q[idx[b]] > 0)[-1]
    with np.errstate(divide="ignore"):
        lf = np.log(ctx.Q[idx, j])
        lr = np.log(ctx.Q[j, idx])
    return index_to_spins(j, n), lf, lr


def propose(ctx: ProposalContext, v, rng: np.random.Generator):
    """One proposal from configuration ``v``.

    Returns ``(v_new, log_q_forward, log_q_reverse)`` with
    ``q_forward = q(v_new | v)`` and ``q_reverse = q(v | v_new)``.
    """
    v = np.asarray(v, dtype=np.int8)
    idx = np.array([spins_to_index(v)]) if ctx.Q is not None else None
    new, lf, lr = _draw_batch(ctx, idx, v[None, :], rng)
    return new[0], float(lf[0]), float(lr[0])


# -------------------------------------------------------------------- chain


@dataclass(frozen=True)
class ChainState:
    current: np.ndarray
    log_weight: float
    step_count: int = 0
    accept_count: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.step_count if self.step_count else 0.0


def initial_chain_state(target: TargetDistribution, rng) -> ChainState:
    v = rng.choice(np.array([-1, 1], dtype=np.int8), target.n)
    return ChainState(v, float(target.log_weight(v)))


def metropolis_step(
    state: ChainState, ctx: ProposalContext, target: TargetDistribution, rng
) -> ChainState:
    v_new, lf, lr = propose(ctx, state.current, rng)
    lw_new = float(target.log_weight(v_new))
    log_ratio = lw_new - state.log_weight + lr - lf
    accept = log_ratio >= 0 or rng.random() < np.exp(log_ratio)
    if accept:
        return ChainState(v_new, lw_new, state.step_count + 1, state.accept_count + 1)
    return replace(state, step_count=state.step_count + 1)


class BatchChains:
    """Many independent Metropolis-Hastings chains advanced in lock step.

    Each chain follows exactly the single-chain transition rule of
    :func:`metropolis_step`; batching only vectorizes the arithmetic.
    """

    def __init__(self, ctx: ProposalContext, target: TargetDistribution, n_chains: int, rng):
        self.ctx = ctx
        self.rng = rng
        self.spins = rng.choice(np.array([-1, 1], dtype=np.int8), (n_chains, ctx.n))
        self.set_target(target)
        self.steps = 0
        self.accepted = 0

    def set_target(self, target: TargetDistribution):
        self.target = target
        self.log_w = np.asarray(target.log_weight(self.spins), dtype=float)

    def set_proposal(self, ctx: ProposalContext):
        self.ctx = ctx

    def step(self):
        idx = spins_to_index(self.spins) if self.ctx.Q is not None else None
        new, lf, lr = _draw_batch(self.ctx, idx, self.spins, self.rng)
        lw_new = np.asarray(self.target.log_weight(new), dtype=float)
        log_ratio = lw_new - self.log_w + lr - lf
        u = self.rng.random(new.shape[0])
        with np.errstate(over="ignore"):
            acc = (log_ratio >= 0) | (u < np.exp(np.minimum(log_ratio, 0.0)))
        self.spins[acc] = new[acc]
        self.log_w[acc] = lw_new[acc]
        self.steps += acc.size
        self.accepted += int(acc.sum())

    def run(self, n_steps: int):
        for _ in range(n_steps):
            self.step()

    def sample(self, per_chain: int, thin: int = 1) -> np.ndarray:
        """``(per_chain * n_chains, n)`` samples, chain-major per draw."""
        out = []
        for _ in range(per_chain):
            self.run(thin)
            out.append(self.spins.copy())
        return np.concatenate(out, axis=0)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else 0.0

    def reset_counters(self):
        self.steps = 0
        self.accepted = 0


def run_chain(
    ctx: ProposalContext,
    target: TargetDistribution,
    length: int,
    burn_in: int,
    thin: int,
    rng: np.random.Generator,
    initial=None,
) -> np.ndarray:
    """Thinned post-burn-in states of one chain, shape ``(length, n)``.

    The initial configuration is uniform random unless given.
    """
    if length < 1:
        raise DomainError("chain length must be >= 1")
    if thin < 1:
        raise DomainError("thin must be >= 1")
    if initial is None:
        state = initial_chain_state(target, rng)
    else:
        v = np.asarray(initial, dtype=np.int8)
        state = ChainState(v, float(target.log_weight(v)))
    for _ in range(burn_in):
        state = metropolis_step(state, ctx, target, rng)
    out = np.empty((length, ctx.n), dtype=np.int8)
    for i in range(length):
        for _ in range(thin):
            state = metropolis_step(state, ctx, target, rng)
        out[i] = state.current
    return out


# ------------------------------------------------------ autocorrelation time


def autocorrelation_function(series) -> np.ndarray:
    """Normalized autocorrelation ``rho(k)`` via FFT."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    m = x.size
    size = 1 << (2 * m - 1).bit_length()
    f = np.fft.rfft(x, n=size)
    acf = np.fft.irfft(f * np.conj(f), n=size)[:m]
    return acf / acf[0]


def integrated_autocorrelation(series, c: float = 6.0) -> float:
    """``tau_int = 1/2 + sum_{k>=1} rho(k)`` with self-consistent window.

    The window ``M`` is the smallest lag with ``M >= c * tau_int(M)``.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 10:
        raise DegenerateSeriesError("need at least 10 points")
    if np.all(x == x[0]) or np.var(x) == 0:
        raise DegenerateSeriesError("series has zero variance")
    rho = autocorrelation_function(x)
    taus = 0.5 + np.cumsum(rho[1:])
    lags = np.arange(1, x.size)
    ok = lags >= c * taus
    M = int(np.argmax(ok)) if ok.any() else x.size - 2
    return float(taus[M])
