import numpy as np
import pytest

from qvmc.basis import all_configurations
from qvmc.errors import (
    DegenerateFitError,
    DomainError,
    InvalidOperatorError,
    LinearSolveError,
    TrainingDivergedError,
)
from qvmc.hamiltonians import PauliString, PauliSum, build_tfim, exact_ground_state
from qvmc.rbm import RbmParameters, log_psi
from qvmc.samplers import LocalFlip, TimeHomogeneous
from qvmc.vmc import (
    TrainingTrace,
    VmcConfig,
    energy_estimate,
    exact_energy,
    local_energies,
    local_energy,
    min_of_tail,
    sr_direction,
    sr_statistics,
    sr_update,
    train,
    zero_variance_extrapolate,
)

from conftest import kron_sum


def _dense(H):
    return kron_sum([(c, dict(s.factors)) for c, s in H.terms], H.size)


def _tfim2_ground_rbm():
    """Exact RBM for the n=2 TFIM ground state: one hidden unit, W = (w, w)."""
    H = build_tfim(2, 1.0, 1.0)
    _, gs = exact_ground_state(H)
    amp = np.abs(gs.amplitudes)
    r = amp[0] / amp[1]  # aligned / anti-aligned amplitude ratio
    w = 0.5 * np.arccosh(r)
    return H, RbmParameters(np.zeros(2), np.zeros(1), np.array([[w], [w]]))


def test_diagonal_local_energy_independent_of_parameters(rng):
    H = PauliSum(((0.7, PauliString.parse("Z0 Z1")), (-0.3, PauliString.parse("Z2"))), 3)
    M = _dense(H)
    for X in (RbmParameters.zeros(3, 2), RbmParameters.random(3, 2, rng)):
        for idx, v in enumerate(all_configurations(3)):
            assert local_energy(H, X, v) == pytest.approx(M[idx, idx])


def test_transverse_field_on_uniform_state():
    H = build_tfim(1, 1.0, 0.0)
    X = RbmParameters.zeros(1, 1)
    for v in ([1], [-1]):
        assert local_energy(H, X, np.array(v)) == pytest.approx(-1.0)


def test_local_energy_matches_dense_ratio(rng):
    H = build_tfim(3, 0.8, 1.1, periodic=True) + PauliSum(((0.4, PauliString.parse("Y0 X2")),), 3)
    X = RbmParameters(
        rng.normal(size=3) + 1j * rng.normal(size=3),
        rng.normal(size=2) * 0.3,
        rng.normal(size=(3, 2)) * 0.3 + 0.2j,
    )
    V = all_configurations(3)
    psi = np.exp(log_psi(X, V))
    ref = (_dense(H) @ psi) / psi
    np.testing.assert_allclose(local_energies(H, X, V), ref, atol=1e-12)


def test_local_energy_is_constant_at_exact_ground_state():
    H, X = _tfim2_ground_rbm()
    e0, _ = exact_ground_state(H)
    E = local_energies(H, X, all_configurations(2))
    np.testing.assert_allclose(E, e0, atol=1e-12)
    e, var = exact_energy(H, X)
    assert e == pytest.approx(e0, abs=1e-12) and var <= 1e-10


def test_sr_update_is_fixed_point_at_eigenstate():
    H, X = _tfim2_ground_rbm()
    X1 = sr_update(X, all_configurations(2), H, lr=0.1, reg=1e-3)
    np.testing.assert_allclose(X1.flatten(), X.flatten(), atol=1e-12)


def test_sr_direction_with_identity_metric(rng):
    S = rng.normal(size=5) + 1j * rng.normal(size=5)
    d = sr_direction(np.eye(5), S, 0.0)
    np.testing.assert_allclose(d, S)
    d = sr_direction(np.zeros((5, 5)), S, 1e6)
    np.testing.assert_allclose(d * 1e6, S)


def test_sr_singular_metric_raises(rng):
    H = build_tfim(2, 1.0, 1.0)
    X = RbmParameters.random(2, 2, rng)
    same = np.tile([1, -1], (10, 1))
    with pytest.raises(LinearSolveError):
        sr_update(X, same, H, lr=0.1, reg=0.0)


def test_sr_statistics_enumeration_oracle(rng):
    H = build_tfim(2, 1.0, 1.0)
    X = RbmParameters(rng.normal(size=2) * 0.3, rng.normal(size=2) * 0.3, rng.normal(size=(2, 2)) * 0.3)
    V = all_configurations(2)
    psi = np.exp(log_psi(X, V))
    Eloc = (_dense(H) @ psi) / psi
    D = []
    for v in V.astype(float):
        theta = X.b + v @ X.W
        D.append(np.concatenate([v, np.tanh(theta), np.outer(v, np.tanh(theta)).ravel()]))
    D = np.array(D)
    F = np.zeros((8, 8), dtype=complex)
    S = np.zeros(8, dtype=complex)
    for i in range(8):
        S[i] = np.mean(Eloc * D[:, i].conj()) - Eloc.mean() * D[:, i].conj().mean()
        for j in range(8):
            F[i, j] = np.mean(D[:, i].conj() * D[:, j]) - D[:, i].conj().mean() * D[:, j].mean()
    stats = sr_statistics(H, X, V)
    np.testing.assert_allclose(stats.F, F, atol=1e-12)
    np.testing.assert_allclose(stats.S, S, atol=1e-12)
    assert stats.energy_mean == pytest.approx(Eloc.mean().real)


def test_metric_is_positive_semidefinite(rng):
    H = build_tfim(3, 1.0, 1.0)
    for _ in range(5):
        X = RbmParameters.random(3, 3, rng, weight_scale=1.0)
        samples = rng.choice(np.array([-1, 1], dtype=np.int8), (50, 3))
        F = sr_statistics(H, X, samples).F
        assert np.linalg.eigvalsh(F).min() >= -1e-10


# ------------------------------------------------------------------- train


def test_config_validation():
    with pytest.raises(DomainError):
        VmcConfig(iterations=0)
    with pytest.raises(DomainError):
        VmcConfig(lr=-1.0)
    cfg = VmcConfig(reg=1e-2, reg_decay=0.9, reg_decay_every=50, reg_min=1e-4)
    assert cfg.reg_at(0) == cfg.reg_at(49) == 1e-2
    assert cfg.reg_at(50) == pytest.approx(9e-3)
    assert cfg.reg_at(10**5) == 1e-4


def test_single_iteration_does_one_update():
    H = build_tfim(2, 1.0, 1.0)
    X0 = RbmParameters.initial(2, 2, np.random.default_rng(0))
    calls = []
    X, trace = train(H, X0, VmcConfig(iterations=1, n_samples=64, chains=8), lambda i, x: calls.append(i))
    assert len(trace) == 1 and calls == [0]
    assert X != X0


def test_minus_z_reaches_ground_energy():
    H = PauliSum(((-1.0, PauliString.parse("Z0")),), 1)
    X0 = RbmParameters.initial(1, 1, np.random.default_rng(0))
    X, trace = train(H, X0, VmcConfig(iterations=200, n_samples=1024))
    assert trace.energy_mean[-1] == pytest.approx(-1.0, abs=1e-3)


def test_variational_bound_along_training():
    H = build_tfim(4, 1.0, 1.0)
    e0, _ = exact_ground_state(H)
    energies = []
    cfg = VmcConfig(sampler=LocalFlip(), iterations=30, n_samples=256, chains=32)
    X0 = RbmParameters.initial(4, 4, np.random.default_rng(1))
    train(H, X0, cfg, lambda i, X: energies.append(exact_energy(H, X)[0]))
    assert min(energies) >= e0 - 1e-10
    assert energies[-1] < energies[0]


def test_training_is_deterministic():
    H = build_tfim(3, 1.0, 1.0)
    cfg = VmcConfig(sampler=TimeHomogeneous(1.0, 0.5), iterations=15, n_samples=128, chains=16, seed=3)
    X0 = RbmParameters.initial(3, 3, np.random.default_rng(2))
    a = train(H, X0, cfg)
    b = train(H, X0, cfg)
    assert a[0] == b[0] and a[1].to_csv() == b[1].to_csv()


def test_force_real_keeps_parameters_real():
    H = build_tfim(3, 1.0, 1.0)
    X0 = RbmParameters.initial(3, 3, np.random.default_rng(2))
    X, _ = train(H, X0, VmcConfig(iterations=5, n_samples=64, chains=8, force_real=True))
    assert X.real_valued


def test_divergent_energy_aborts_with_trace():
    H = PauliSum(((np.inf, PauliString.parse("Z0")),), 1)
    X0 = RbmParameters.initial(1, 1, np.random.default_rng(0))
    with pytest.raises(TrainingDivergedError) as err:
        train(H, X0, VmcConfig(iterations=5, n_samples=16, chains=4))
    assert len(err.value.trace) == 1


def test_non_hermitian_training_rejected():
    H = PauliSum(((1j, PauliString.parse("Z0")),), 1)
    with pytest.raises(InvalidOperatorError):
        train(H, RbmParameters.zeros(1, 1), VmcConfig(iterations=1))


# ------------------------------------------------------------- estimators


def _trace(energies, variances):
    t = TrainingTrace()
    for e, v in zip(energies, variances):
        t.append(e, v, 1.0, 0.0)
    return t


def test_zve_exact_line():
    var = np.linspace(0.01, 0.5, 30)
    t = _trace(-3.25 + 0.8 * var, var)
    b, m = zero_variance_extrapolate(t, 30)
    assert b == pytest.approx(-3.25, abs=1e-13)
    assert m == pytest.approx(0.8, abs=1e-12)


def test_zve_degenerate_falls_back_to_min_of_tail():
    t = _trace([-1.0] * 10, [0.0] * 10)
    with pytest.raises(DegenerateFitError):
        zero_variance_extrapolate(t, 5)
    assert energy_estimate(t, 5) == min_of_tail(t, 5) == -1.0


def test_trace_csv_format():
    t = _trace([-1.5, -1.75], [0.25, 0.125])
    lines = t.to_csv().splitlines()
    assert lines[0] == "iter,energy_mean,energy_var,accept_rate,param_norm"
    assert lines[2] == "1,-1.75,0.125,1,0"
