import mpmath
import numpy as np
import pytest

from qvmc.errors import DomainError, InvalidStateError, UndefinedSpecialTimeError
from qvmc.otoc import (
    OtocEvaluator,
    binary_entropy,
    eta_covariance,
    eta_from_otocs,
    i_eta_scan,
    ieta_csv,
    lb_eta,
    mutual_information,
    otoc_closed_form,
    otoc_combination,
    otoc_direct,
    otoc_trace,
    otoc_trace_csv,
    reduced_density_matrices,
    ub_eta,
    von_neumann_entropy,
    zz_correlator,
)
from qvmc.rbm import RbmParameters, thermal_state

from conftest import spin_configs


def _rand(rng, n=3, p=3, w=1.0):
    return RbmParameters.random(n, p, rng, bias_scale=0.5, weight_scale=w)


def _pair_oracle(X, k, m):
    """4-entry joint of (v_k, h_m) by explicit enumeration of e^{-E}."""
    joint = np.zeros((2, 2))
    for s in spin_configs(X.n + X.p):
        v, h = s[: X.n].astype(float), s[X.n :].astype(float)
        w = np.exp(-(X.a.real @ v + X.b.real @ h + v @ X.W.real @ h))
        joint[int(v[k] < 0), int(h[m] < 0)] += w
    return joint / joint.sum()


# ------------------------------------------------------------------- OTOCs


@pytest.mark.parametrize("ab", ["xx", "xy", "yx", "yy"])
def test_otoc_at_time_zero_is_one(ab, rng):
    X = _rand(rng)
    v = otoc_direct(X, 1, 2, ab[0], ab[1], 0.0, 0.0, 0.0)
    assert v.value == pytest.approx(1.0, abs=1e-12)


def test_otoc_of_zero_parameters_is_one():
    X = RbmParameters.zeros(2, 2)
    for t in (0.0, 0.7, 3.0):
        assert otoc_direct(X, 0, 1, t=t).value == pytest.approx(1.0, abs=1e-12)
        assert otoc_closed_form(X, 0, 1, t)[0].value == pytest.approx(1.0, abs=1e-12)
    assert zz_correlator(X, 0, 1) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("ab", ["xx", "xy", "yx", "yy"])
def test_closed_form_matches_direct(ab, rng):
    ts = np.linspace(0, 3, 20)
    for _ in range(5):
        X = _rand(rng)
        ev = OtocEvaluator(X)
        for k, m in ((0, 0), (2, 1)):
            for t in ts:
                d = otoc_direct(X, k, m, ab[0], ab[1], 0, 0, t, evaluator=ev)
                c, _ = otoc_closed_form(X, k, m, t, state=ev.state)
                assert abs(d.value - c.value) <= 1e-9
                assert d.tau == pytest.approx(c.tau)


def test_closed_form_quarter_period(rng):
    X = _rand(rng)
    t = np.pi / 2 / (4 * X.W[0, 1].real)
    c, _ = otoc_closed_form(X, 0, 1, t)
    assert c.tau == pytest.approx(np.pi / 2)
    # Heisenberg convention e^{iHt} O e^{-iHt} gives -i <ZZ> at tau = pi/2
    assert c.value == pytest.approx(-1j * zz_correlator(X, 0, 1), abs=1e-12)


def test_invariant_of_motion(rng):
    X = _rand(rng)
    r = zz_correlator(X, 1, 1)
    for t in np.linspace(0, 4, 20):
        C = otoc_direct(X, 1, 1, t=t).value
        assert C.real**2 + (C.imag / r) ** 2 == pytest.approx(1.0, abs=1e-9)


def test_closed_form_sampled_correlator():
    rng = np.random.default_rng(8)
    X = _rand(rng, w=0.6)
    exact, _ = otoc_closed_form(X, 0, 0, 0.4)
    est, se = otoc_closed_form(X, 0, 0, 0.4, samples=50_000, rng=rng)
    assert se > 0
    assert abs(est.value.imag - exact.value.imag) <= 4 * se * abs(np.sin(exact.tau)) + 1e-12


def test_otoc_rejects_bad_inputs(rng):
    X = _rand(rng)
    with pytest.raises(DomainError):
        otoc_direct(X, 3, 0)
    with pytest.raises(DomainError):
        otoc_direct(X, 0, 0, "z", "x")


# --------------------------------------------------------------------- eta


def test_eta_covariance_examples():
    assert eta_covariance(RbmParameters.zeros(2, 2), 0, 1) == 0.0
    X = RbmParameters(np.zeros(1), np.zeros(1), np.array([[5.0]]))
    assert eta_covariance(X, 0, 0) == pytest.approx(-np.tanh(5.0), abs=1e-12)


def test_eta_covariance_matches_enumeration(rng):
    for _ in range(5):
        X = _rand(rng)
        for k in range(3):
            for m in range(3):
                j = _pair_oracle(X, k, m)
                z = np.array([1.0, -1.0])
                ref = z @ j @ z - (z @ j.sum(1)) * (z @ j.sum(0))
                assert eta_covariance(X, k, m) == pytest.approx(ref, abs=1e-13)


def test_eta_from_otocs_unbiased_layers(rng):
    X = RbmParameters(np.zeros(3), np.zeros(2), rng.uniform(-1, 1, (3, 2)))
    for k in range(3):
        for m in range(2):
            eta = eta_covariance(X, k, m)
            assert eta_from_otocs(X, k, m) == pytest.approx(eta, abs=1e-9)
            # with zero means the combination is purely imaginary and carries
            # the correlator with the sign of -W
            R, _ = otoc_combination(X, k, m)
            assert R.real == pytest.approx(0.0, abs=1e-12)
            assert R.imag == pytest.approx(-np.sign(X.W[k, m].real) * eta, abs=1e-9)


def test_eta_from_otocs_matches_covariance(rng):
    done = 0
    while done < 20:
        X = _rand(rng)
        if abs(X.W[1, 2].real) < 0.1:
            continue
        for ab in ("xx", "yy"):
            assert eta_from_otocs(X, 1, 2, ab[0], ab[1]) == pytest.approx(
                eta_covariance(X, 1, 2), abs=1e-8
            )
        done += 1


def test_eta_from_otocs_needs_coupling(rng):
    X = RbmParameters(np.ones(2), np.ones(2), np.array([[0.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(UndefinedSpecialTimeError):
        eta_from_otocs(X, 0, 0)


# ------------------------------------------------------------- information


def test_reduced_density_matrices_examples(rng):
    rv, rh, rvh = reduced_density_matrices(RbmParameters.zeros(2, 2), 0, 1)
    np.testing.assert_allclose(rv, np.eye(2) / 2)
    np.testing.assert_allclose(rh, np.eye(2) / 2)
    np.testing.assert_allclose(rvh, np.eye(4) / 4)
    X = RbmParameters(np.array([20.0, 0.0]), np.zeros(2), np.zeros((2, 2)))
    rv, _, _ = reduced_density_matrices(X, 0, 0)
    np.testing.assert_allclose(rv, np.diag([0.0, 1.0]), atol=1e-15)
    X = _rand(rng)
    rv, rh, rvh = reduced_density_matrices(X, 2, 0)
    t = rvh.reshape(2, 2, 2, 2)
    np.testing.assert_allclose(np.einsum("ajbj->ab", t), rv, atol=1e-12)
    np.testing.assert_allclose(np.einsum("iaib->ab", t), rh, atol=1e-12)


def test_mutual_information_examples(rng):
    rv = np.diag([0.3, 0.7])
    rh = np.diag([0.6, 0.4])
    assert mutual_information(rv, rh, np.kron(rv, rh)) == pytest.approx(0.0, abs=1e-12)
    bell_mix = np.diag([0.5, 0.0, 0.0, 0.5])
    half = np.eye(2) / 2
    assert mutual_information(half, half, bell_mix) == pytest.approx(1.0, abs=1e-12)


def test_mutual_information_eigenvalue_oracle(rng):
    X = _rand(rng)
    rv, rh, rvh = reduced_density_matrices(X, 0, 2)

    def S(rho):
        lam = np.linalg.eigvalsh(rho)
        return -sum(x * np.log2(x) for x in lam if x > 1e-15)

    assert mutual_information(rv, rh, rvh) == pytest.approx(S(rv) + S(rh) - S(rvh), abs=1e-12)


def test_entropy_rejects_invalid_states():
    with pytest.raises(InvalidStateError):
        von_neumann_entropy(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        von_neumann_entropy(np.array([[0.5, 0.5], [0.0, 0.5]]))


def test_bounds_examples():
    assert lb_eta(0.0) == pytest.approx(0.0, abs=1e-15)
    assert ub_eta(0.0) == pytest.approx(0.0, abs=1e-15)
    assert ub_eta(1.0) == pytest.approx(1.0)
    with mpmath.workdps(40):
        ell = lambda x: -x * mpmath.log(x, 2)  # noqa: E731
        ref = 2 - 2 * ell(mpmath.mpf(3) / 4) - 2 * ell(mpmath.mpf(1) / 4)
    assert lb_eta(1.0) == pytest.approx(float(ref), abs=1e-14)
    assert lb_eta(1.0) == pytest.approx(0.3774, abs=1e-4)
    assert binary_entropy(0.5) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        lb_eta(2.5)
    with pytest.raises(DomainError):
        ub_eta(1.5)


def test_i_eta_scan_zero_parameters():
    pts = i_eta_scan(RbmParameters.zeros(2, 3))
    assert [(q.k, q.m) for q in pts] == [(k, m) for k in range(2) for m in range(3)]
    assert all(q.eta == 0 and q.mi == 0 for q in pts)


def test_i_eta_scan_points_within_bounds(rng):
    for _ in range(20):
        X = RbmParameters.random(2, 2, rng, bias_scale=1.0, weight_scale=1.5)
        for q in i_eta_scan(X):
            assert q.lb - 1e-12 <= q.mi <= q.ub + 1e-12


def test_i_eta_scan_matches_mutual_information(rng):
    X = _rand(rng)
    state = thermal_state(X)
    for q in i_eta_scan(X):
        mi = mutual_information(*reduced_density_matrices(X, q.k, q.m, state))
        assert q.mi == pytest.approx(mi, abs=1e-12)
        assert q.eta == pytest.approx(eta_covariance(X, q.k, q.m, state), abs=1e-14)


def test_i_eta_scan_sampling_fallback():
    rng = np.random.default_rng(4)
    X = _rand(rng, n=2, p=2, w=0.8)
    exact = i_eta_scan(X)
    sampled = i_eta_scan(X, cap=2, samples=40_000, rng=rng)
    for e, s in zip(exact, sampled):
        assert s.eta_stderr > 0
        assert abs(s.eta - e.eta) <= 5 * s.eta_stderr


def test_csv_writers(rng):
    X = _rand(rng, n=2, p=1)
    lines = ieta_csv(i_eta_scan(X)).splitlines()
    assert lines[0] == "k,m,eta,mi,lb,ub,eta_stderr,mi_stderr"
    assert len(lines) == 3
    rows = otoc_trace(X, 0, 0, [0.0, 0.5])
    lines = otoc_trace_csv(rows).splitlines()
    assert lines[0] == "t,tau,re_direct,im_direct,re_closed,im_closed"
    assert lines[1].startswith("0,0,1,")
