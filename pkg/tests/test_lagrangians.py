import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lavlab.lagrangians import (
    Domain, ParameterError, build, double_phase_ratio_bound, get_entry, interval,
    invariant_report, make_ball_mizel, make_catalog, make_counterexample, make_double_phase,
    make_mania, parse_params, reduction,
)


def test_mania_values():
    f = make_mania()
    eps = 0.1
    assert f.eval(1 - eps, 1.0, 1 / eps) == pytest.approx(eps ** -4, rel=1e-12)
    assert f.eval(0.5, 0.5, 2.0) == pytest.approx(9.0, rel=1e-14)
    x = np.linspace(0, 1, 11)
    assert np.all(f.eval(x, 0.3 * x, 0.0) == 0)
    assert f.vanishes_at_zero and f.claims_convex_in_xi and f.dim == 1


def test_ball_mizel_values():
    f = make_ball_mizel(1.0)
    eps = 0.01
    assert f.eval(eps, 0.0, eps ** -0.5) == pytest.approx(eps ** -5.5 + eps ** -1, rel=1e-12)
    assert f.eval(0.0, 0.0, 1.0) == pytest.approx(1.0)
    assert make_ball_mizel(0.3).eval(0.0, 0.0, 1.0) == pytest.approx(0.3)
    assert f.eval(0.2, 0.7, 0.0) == 0
    with pytest.raises(ParameterError):
        make_ball_mizel(0.0)


def test_double_phase_values():
    f = make_double_phase(2.0, 2.5, weight=lambda x, t: np.zeros(np.shape(t)))
    assert f.eval(0.3, 0.0, 1.7) == pytest.approx(1.7 ** 2)
    g = make_double_phase(1.0, 2.0, weight=lambda x, t: np.abs(np.asarray(x)[..., 0]), dim=2)
    assert g.eval(np.array([0.5, 0.0]), 0.0, np.array([2.0, 0.0])) == pytest.approx(4.0)
    with pytest.raises(ParameterError):
        make_double_phase(0.5, 2.0)
    with pytest.raises(ParameterError):
        make_double_phase(2.0, 1.5)


def test_counterexample_value():
    f = make_counterexample()
    eps = 0.01
    v = f.eval(np.array([0.0, np.sqrt(eps)]), 0.0, np.array([0.0, 1 / eps]))
    assert v == pytest.approx(10100.0, rel=1e-12)


def test_catalog_contents():
    names = [e.name for e in make_catalog()]
    for need in ("mania", "ball_mizel", "cerf_mariconda", "variable_exponent", "double_phase",
                 "orlicz_two_phase", "orlicz_general", "exp_phase", "exp_phase_convexified",
                 "anisotropic", "counterexample", "orthotropic"):
        assert need in names
    assert len(names) == len(set(names)) >= 10
    assert get_entry("exp_phase").companion == "exp_phase_convexified"
    assert build("mania").eval(0.9, 1.0, 10.0) == pytest.approx(1e4, rel=1e-12)
    with pytest.raises(KeyError):
        get_entry("nope")
    with pytest.raises(ParameterError):
        get_entry("double_phase").build(zeta=1.0)


@pytest.mark.parametrize("entry", make_catalog(), ids=lambda e: e.name)
def test_invariant_suite(entry):
    lag = entry.build()
    rep = invariant_report(lag, entry.domain, n=1000, seed=1)
    assert rep["passed"], rep
    assert rep["reduction"]
    if lag.claims_convex_in_xi:
        assert rep["convex_midpoint"]
    if lag.structure == "isotropic":
        assert rep["isotropic_rotation"]


def test_reduction_pointwise():
    f = make_ball_mizel(1.0)
    g = reduction(f)
    rng = np.random.default_rng(3)
    x, t, xi = rng.uniform(-1, 1, (3, 500))
    assert np.all(g.eval(x, t, xi) >= 0)
    assert np.all(g.eval(x, t, 0 * xi) == 0)
    assert np.all(g.eval(x, t, xi) <= f.eval(x, t, xi))


def test_double_phase_ratio_bound_sampled():
    # |xi|^2 + |x|^0.25 |xi|^2.5, N = 1: q <= p + kappa max(1, p/N)
    p, q, kappa = 2.0, 2.5, 0.25
    f = make_double_phase(p, q, kappa)
    rng = np.random.default_rng(0)
    for L2 in (0.5, 1.0, 4.0):
        eps = 10.0 ** rng.uniform(-4, 0, 2000)
        x = rng.uniform(0, 1, eps.size)
        y = np.clip(x + eps * rng.uniform(-1, 1, eps.size), 0, 1)
        xi = L2 / eps * rng.uniform(0, 1, eps.size)
        t = rng.uniform(-2, 2, eps.size)
        ratio = f.eval(x, t, xi) / np.maximum(f.eval(y, t, xi), 1e-300)
        ok = xi > 0
        assert np.all(ratio[ok] <= double_phase_ratio_bound(p, q, kappa, L2) * (1 + 1e-12))


def test_parse_params():
    assert parse_params(["nu=0.5", "qs=2.25,2.5", "dim=2", "mode=abc"]) == {
        "nu": 0.5, "qs": (2.25, 2.5), "dim": 2, "mode": "abc"}
    with pytest.raises(ParameterError):
        parse_params(["novalue"])


def test_domain():
    d = interval(0.0, 2.0, phi=lambda x: 0.5 * np.asarray(x), L_phi=0.5)
    assert d.dim == 1 and d.diam == 2.0
    assert d.check_phi() <= d.L_phi + 1e-12
    with pytest.raises(ParameterError):
        Domain(((1.0, 1.0),))


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 1), st.floats(0, 2 * np.pi), st.floats(0.01, 100))
def test_isotropic_rotation_2d(t, x0, theta, r):
    f = make_double_phase(2.0, 2.5, 0.25, dim=2)
    x = np.array([x0, 1 - x0])
    a = f.eval(x, t, np.array([r, 0.0]))
    b = f.eval(x, t, r * np.array([np.cos(theta), np.sin(theta)]))
    assert b == pytest.approx(a, rel=1e-12)
