import numpy as np
import pytest

from qvmc.errors import DomainError, InvalidMatrixError, ResourceError
from qvmc.rbm import RbmParameters
from qvmc.samplers import (
    BornWeight,
    HaarRandom,
    LocalFlip,
    QuantumAveraged,
    SurrogateGibbs,
    TimeHomogeneous,
    Trotterized,
    UniformRandom,
    exact_distribution,
    is_symmetric_kind,
    prepare_proposal,
    surrogate_from_rbm,
    uniform_target,
)
from qvmc.seeding import derive_rng
from qvmc.transition import (
    build_transition_matrix,
    detailed_balance_error,
    fit_log_slope,
    gap_beta_sweep,
    gap_records_csv,
    gap_scaling_sweep,
    random_ferromagnet,
    spectral_gap,
    stationarity_error,
)

ALL_KINDS = [
    LocalFlip(),
    UniformRandom(),
    HaarRandom(seed=3),
    QuantumAveraged((0.5, 1.0, 2.0), 0.5),
    TimeHomogeneous(1.0, 0.5),
    Trotterized(1.0, 0.5, 2, "first_order"),
    Trotterized(1.0, 0.5, 2, "strang"),
]


def _instance(seed, n):
    X = RbmParameters.random(n, n, derive_rng(seed, "test-instance", n), weight_scale=1.0)
    return X, surrogate_from_rbm(X)


def test_two_state_flip_chain():
    T = build_transition_matrix(prepare_proposal(LocalFlip(), 1), uniform_target(1))
    np.testing.assert_array_equal(T, [[0, 1], [1, 0]])


@pytest.mark.parametrize("n", [1, 3, 5])
def test_uniform_proposal_on_uniform_target(n):
    T = build_transition_matrix(prepare_proposal(UniformRandom(), n), uniform_target(n))
    np.testing.assert_allclose(T, 2.0**-n, atol=1e-15)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.label + getattr(k, "scheme", ""))
def test_stationarity_and_reversibility(kind):
    for seed in range(3):
        for n in (2, 4):
            X, h = _instance(seed, n)
            T = build_transition_matrix(prepare_proposal(kind, n, h), BornWeight(X))
            pi = exact_distribution(BornWeight(X))
            assert stationarity_error(T, pi) <= 1e-10
            assert np.all(T >= 0)
            np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-12)
            if is_symmetric_kind(kind):
                assert detailed_balance_error(T, pi) <= 1e-12
                s = np.sqrt(pi)
                A = s[:, None] * T / s[None, :]
                assert np.max(np.abs(A - A.T)) <= 1e-10


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.label + getattr(k, "scheme", ""))
def test_ergodicity_witness(kind):
    n = 4
    X, h = _instance(7, n)
    T = build_transition_matrix(prepare_proposal(kind, n, h), BornWeight(X))
    P = np.eye(2**n)
    for _ in range(2**n):
        P = P @ T
        if np.all(P > 0):
            break
    assert np.all(P > 0)


def test_transition_cap():
    with pytest.raises(ResourceError):
        build_transition_matrix(prepare_proposal(LocalFlip(), 11), uniform_target(11))


# ------------------------------------------------------------------ gaps


def test_spectral_gap_examples():
    assert spectral_gap(np.eye(4)).delta == 0.0
    pi = np.array([0.1, 0.2, 0.3, 0.4])
    r = spectral_gap(np.tile(pi, (4, 1)))
    assert r.delta == pytest.approx(1.0) and r.lambda1_mod == pytest.approx(0.0, abs=1e-12)
    r = spectral_gap(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert r.delta == pytest.approx(0.0, abs=1e-15)
    assert r.lambda_moduli == pytest.approx((1.0, 1.0))


def test_spectral_gap_rejects_non_stochastic():
    with pytest.raises(InvalidMatrixError):
        spectral_gap(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(InvalidMatrixError):
        spectral_gap(np.array([[1.2, -0.2], [0.5, 0.5]]))


def test_identity_limit_has_zero_gap(rng):
    X, h = _instance(1, 3)
    T = build_transition_matrix(prepare_proposal(TimeHomogeneous(1.0, 1.0), 3, h), BornWeight(X))
    assert spectral_gap(T).delta == pytest.approx(0.0, abs=1e-12)


def test_sweep_single_point():
    kinds = [LocalFlip(), TimeHomogeneous(1.0, 0.5)]
    records, summaries, slopes = gap_scaling_sweep(kinds, [3], 1, seed=0)
    assert len(records) == 2
    assert {r.kind for r in records} == {"local_flip", "TH(tau=1,gamma=0.5)"}
    assert all(0 <= r.delta <= 1 for r in records)
    assert slopes == {"local_flip": 0.0, "TH(tau=1,gamma=0.5)": 0.0}


def test_sweep_uniform_kind_on_uniform_target():
    records, _, slopes = gap_scaling_sweep([UniformRandom()], [2, 3, 4], 2, target_family="uniform")
    assert all(r.delta == pytest.approx(1.0) for r in records)
    assert slopes["uniform"] == pytest.approx(0.0, abs=1e-9)


def test_sweep_errors():
    with pytest.raises(DomainError):
        gap_scaling_sweep([LocalFlip()], [], 1)
    with pytest.raises(ResourceError):
        gap_scaling_sweep([LocalFlip()], [11], 1)


def test_sweep_is_deterministic():
    kinds = [LocalFlip(), Trotterized(1.0, 0.5, 2)]
    a = gap_records_csv(*gap_scaling_sweep(kinds, [3, 4], 3, seed=4)[:2])
    b = gap_records_csv(*gap_scaling_sweep(kinds, [3, 4], 3, seed=4)[:2])
    assert a == b


def test_fit_log_slope():
    ns = np.arange(4, 9)
    assert fit_log_slope(ns, np.exp(-0.3 * ns)) == pytest.approx(-0.3)
    assert np.isnan(fit_log_slope(ns, [1, 1, 0, 1, 1]))


def test_beta_sweep_examples():
    h = random_ferromagnet(4, derive_rng(0, "test-ferro"))
    recs = gap_beta_sweep([LocalFlip()], h, [0.0])
    T0 = build_transition_matrix(prepare_proposal(LocalFlip(), 4), uniform_target(4))
    assert recs[0].delta == pytest.approx(spectral_gap(T0).delta, abs=1e-12)
    frozen = gap_beta_sweep([TimeHomogeneous(1.0, 1.0)], h, [0.0, 2.0, 20.0])
    assert all(r.delta == pytest.approx(0.0, abs=1e-12) for r in frozen)
    with pytest.raises(DomainError):
        gap_beta_sweep([LocalFlip()], h, [-1.0])


def test_beta_sweep_low_temperature_ordering():
    h = random_ferromagnet(5, derive_rng(0, "test-ferro"))
    lf, th = gap_beta_sweep([LocalFlip(), TimeHomogeneous(1.5, 0.3)], h, [20.0])
    assert lf.delta < th.delta


def test_random_ferromagnet_ground_state():
    h = random_ferromagnet(5, derive_rng(2, "test-ferro"))
    E = h.energies()
    assert np.argmin(E) == 2**5 - 1  # all spins -1
    assert np.sum(E == E.min()) == 1
    pi = exact_distribution(SurrogateGibbs(h, 20.0))
    assert pi[-1] > 0.99
