import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from lavlab.convex import (
    F_eps, InputError, SampledProfile, UnsupportedStructureError, contact_point, convex_minorant,
    envelope_upper_bound, essinf_derivative_bound, hat, recession, right_derivative,
)
from lavlab.lagrangians import build, make_counterexample, make_mania, make_quadratic


# ---------------------------------------------------------------------------
# oracles

def chain_hull(s, w):
    """Lower hull by Andrew's monotone chain, returned as values on the grid."""
    low = []
    for p in zip(s, w):
        while len(low) >= 2:
            (x1, y1), (x2, y2) = low[-2], low[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                low.pop()
            else:
                break
        low.append(p)
    hx, hy = np.array(low).T
    return np.interp(s, hx, hy)


def brute_hull(s, w):
    """Pointwise min over all segments between sample pairs (and the samples)."""
    out = np.array(w, dtype=float)
    for i, j in itertools.combinations(range(len(s)), 2):
        for k in range(len(s)):
            if s[i] <= s[k] <= s[j]:
                lam = (s[k] - s[i]) / (s[j] - s[i])
                out[k] = min(out[k], (1 - lam) * w[i] + lam * w[j])
    return out


def lp_envelope(pts, vals, z):
    pts = np.atleast_2d(pts)
    n = len(vals)
    A = np.vstack([pts.T, np.ones(n)])
    b = np.concatenate([np.atleast_1d(z), [1.0]])
    res = linprog(vals, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
    return res.fun if res.status == 0 else np.inf


def random_monotone(rng, m):
    s = np.concatenate([[0.0], np.sort(rng.uniform(0, 10, m - 1))])
    s = np.unique(s)
    w = np.cumsum(rng.exponential(1.0, s.size) * (rng.random(s.size) < 0.7))
    return s, w


# ---------------------------------------------------------------------------

def test_convex_input_is_its_own_minorant():
    s = np.arange(4.0)
    env = convex_minorant(SampledProfile(s, s ** 2))
    assert np.allclose(env.on_grid(), s ** 2)
    assert list(env.breakpoints) == [0, 1, 2, 3]


def test_small_example():
    prof = SampledProfile([0.0, 1, 2, 3], [0.0, 2, 1, 3])
    env = convex_minorant(prof)
    assert list(env.breakpoints) == [0.0, 2.0, 3.0]
    assert env(1.0) == pytest.approx(0.5)
    assert np.allclose(env.on_grid(), brute_hull(prof.grid, prof.values))
    assert right_derivative(env, 1.0) == pytest.approx(0.5)
    assert contact_point(prof, 1.5, env) == 0.0


def test_input_errors():
    with pytest.raises(InputError):
        convex_minorant(SampledProfile([0.0], [1.0]))
    with pytest.raises(InputError):
        SampledProfile([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(InputError):
        SampledProfile([0.0, 1.0], [0.0, -1.0])
    env = convex_minorant(SampledProfile([0.0, 1.0], [0.0, 1.0]))
    with pytest.raises(InputError):
        right_derivative(env, -0.1)
    with pytest.raises(InputError):
        contact_point(SampledProfile([0.0, 1.0], [0.0, 1.0]), 2.0)
    with pytest.raises(InputError):
        essinf_derivative_bound([], 0.0)


def test_affine_right_derivative():
    s = np.arange(4.0)
    assert right_derivative(convex_minorant(SampledProfile(s, s)), 0.5) == pytest.approx(1.0)


def test_final_slope_extension():
    env = convex_minorant(SampledProfile([0.0, 1.0, 2.0], [0.0, 1.0, 3.0]))
    assert env(5.0) == pytest.approx(3.0 + 2.0 * 3.0)
    assert right_derivative(env, 10.0) == pytest.approx(2.0)


def test_monotone_chain_oracle_50_profiles():
    rng = np.random.default_rng(42)
    for _ in range(50):
        s, w = random_monotone(rng, 1024)
        env = convex_minorant(SampledProfile(s, w))
        assert np.max(np.abs(env.on_grid() - chain_hull(s, w))) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=2, max_size=9))
def test_brute_force_oracle(vals):
    s = np.arange(len(vals), dtype=float)
    w = np.array(vals)
    env = convex_minorant(SampledProfile(s, w))
    assert np.allclose(env.on_grid(), brute_hull(s, w), atol=1e-9)


def test_envelope_properties_and_contact_lemma():
    rng = np.random.default_rng(7)
    for _ in range(30):
        s, w = random_monotone(rng, 200)
        prof = SampledProfile(s, w)
        env = convex_minorant(prof)
        g = env.on_grid()
        assert np.all(g <= w + 1e-9)
        idx = np.searchsorted(s, env.breakpoints)
        assert np.allclose(g[idx], w[idx], atol=1e-9)
        assert np.all(np.diff(env.slopes) >= -1e-9)
        for t in s:
            at = contact_point(prof, t, env)
            assert at <= t
            assert env(at) == pytest.approx(prof.values[np.searchsorted(s, at)], abs=1e-9)
            # affine on [a_t, t]: the envelope matches the chord through its endpoints
            mid = s[(s >= at) & (s <= t)]
            if t > at:
                chord = env(at) + (env(t) - env(at)) * (mid - at) / (t - at)
                assert np.allclose(env(mid), chord, atol=1e-9 * (1 + abs(env(t))))


def test_slopes_nondecreasing_1000():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        s, w = random_monotone(rng, 12)
        env = convex_minorant(SampledProfile(s, w))
        pts = np.sort(rng.uniform(0, s[-1], 5))
        d = [right_derivative(env, p) for p in pts]
        assert np.all(np.diff(d) >= -1e-12)


def test_essinf_derivative_examples():
    s = np.linspace(0, 3, 301)
    assert essinf_derivative_bound([SampledProfile(s, s), SampledProfile(s, 2 * s)], 0.0)
    fam = [SampledProfile(s, s ** 2), SampledProfile(s, (s - 1) ** 2 + 0.5)]
    for x in (0.0, 0.5, 1.0, 2.0):
        assert essinf_derivative_bound(fam, x)


def test_essinf_derivative_random_families():
    rng = np.random.default_rng(5)
    s = np.linspace(0, 4, 81)
    for _ in range(100):
        fam = []
        for _ in range(rng.integers(2, 5)):
            knots = np.sort(rng.uniform(0, 4, 3))
            slopes = np.sort(rng.uniform(-1, 3, 4))
            w = rng.uniform(0, 2) + slopes[0] * s
            for k, dk in zip(knots, np.diff(slopes)):
                w = w + dk * np.maximum(s - k, 0)
            fam.append(SampledProfile(s, w - min(w.min(), 0)))
        for x in s[:-1]:
            assert essinf_derivative_bound(fam, x)


def test_hat_examples():
    one = lambda xi: 1.0
    rng = np.random.default_rng(0)
    for qt in -rng.exponential(1.0, 20):
        assert hat(one, rng.normal(size=2), qt) == abs(qt)
    assert hat(lambda xi: float(np.sum(xi ** 2)), [2.0], -1.0) == pytest.approx(4.0)
    assert hat(one, [1.0], 0.5) == np.inf


def test_hat_homogeneity_and_convexity():
    h = lambda xi: float(np.sum(np.abs(xi) ** 2.5)) + 1.0
    rng = np.random.default_rng(2)
    for _ in range(500):
        qx, qt = rng.normal(size=2), -rng.exponential()
        lam = rng.exponential(3.0)
        a = hat(h, lam * qx, lam * qt)
        assert a == pytest.approx(lam * hat(h, qx, qt), rel=1e-12)
        qx2, qt2 = rng.normal(size=2), -rng.exponential()
        mid = hat(h, 0.5 * (qx + qx2), 0.5 * (qt + qt2))
        assert mid <= 0.5 * (hat(h, qx, qt) + hat(h, qx2, qt2)) * (1 + 1e-12)


def test_recession():
    assert recession(lambda xi: float(np.sum(np.abs(xi))), [2.0]) == pytest.approx(2.0)
    assert recession(lambda xi: float(np.sum(xi ** 2)), [1.0]) == np.inf
    assert recession(lambda xi: float(np.sqrt(np.abs(xi[0]))), [1.0]) == 0.0
    assert hat(lambda xi: float(np.sum(xi ** 2)), [0.0], 0.0) == 0.0


def test_F_eps():
    assert F_eps(make_mania(), 1.0, 0.1, 1.0, [0.0], -1.0) == 0.0
    assert F_eps(build("double_phase"), 0.5, 0.1, 0.0, [0.0], -2.0) == 0.0
    q = make_quadratic()
    for xi in (0.3, 1.0, 7.0):
        assert F_eps(q, 0.4, 0.2, 0.0, [xi], -1.0) == pytest.approx(xi * xi, rel=1e-9)
    assert F_eps(make_mania(), 1.0, 0.1, 1.0, [1.0], -1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(UnsupportedStructureError):
        F_eps(make_counterexample(), [0.0, 0.0], 0.1, 0.0, [1.0, 0.0], -1.0)


def test_envelope_upper_bound_examples():
    assert envelope_upper_bound([((-1.0, 1.0), 4.0), ((1.0, 1.0), 4.0)], (0.0, 1.0)) <= 4.0
    assert envelope_upper_bound([((-1.0, 1.0), 4.0)], (5.0, 1.0)) == np.inf
    eps, a = 0.01, 3.0
    v = np.sqrt(1 + 1 / eps) * abs(a)
    samples = [((-a / np.sqrt(eps), a), v), ((a / np.sqrt(eps), a), v)]
    assert envelope_upper_bound(samples, (0.0, a)) <= 2 * eps ** -0.5 * abs(a) * (1 + 1e-12)


def test_envelope_upper_bound_matches_lp_in_2d():
    rng = np.random.default_rng(9)
    for _ in range(40):
        pts = rng.normal(size=(9, 2))
        vals = np.sum(pts ** 2, axis=1) + rng.uniform(0, 1, 9)
        z = pts[:3].mean(axis=0)
        ub = envelope_upper_bound(list(zip(pts, vals)), z)
        assert ub == pytest.approx(lp_envelope(pts, vals, z), rel=1e-7, abs=1e-9)


def test_upper_bound_dominates_1d_hull():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        s, w = random_monotone(rng, 8)
        t = rng.uniform(0, s[-1])
        ub = envelope_upper_bound(list(zip(s, w)), [t], order=2)
        exact = convex_minorant(SampledProfile(s, w))(t)
        assert ub >= exact - 1e-9
        assert ub == pytest.approx(exact, abs=1e-9 * (1 + abs(exact)))
