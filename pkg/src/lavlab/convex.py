"""Greatest convex minorants of sampled 1D profiles, certified N-D upper
bounds, and the 1-homogeneous hat-operation."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np


class InputError(ValueError):
    pass


class UnsupportedStructureError(ValueError):
    pass


@dataclass(frozen=True)
class SampledProfile:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", w)
        if g.ndim != 1 or g.shape != w.shape:
            raise InputError("grid and values must be 1D arrays of equal length")
        if g.size < 2:
            raise InputError("a profile needs at least 2 samples")
        if np.any(np.diff(g) <= 0):
            raise InputError("grid must be strictly increasing")
        if not np.all(np.isfinite(w)):
            raise InputError("profile values must be finite")
        if np.any(w < 0):
            raise InputError("profile values must be nonnegative")

    @classmethod
    def from_function(cls, w: Callable, grid) -> "SampledProfile":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(w(grid), dtype=float))


@dataclass(frozen=True)
class ConvexEnvelope:
    """Piecewise-linear convex function through its contact points.

    ``breakpoints`` are the grid indices where the envelope touches the
    samples; beyond the last breakpoint the final slope is continued.
    """
    grid: np.ndarray
    samples: np.ndarray
    index: np.ndarray
    cap: float

    @property
    def breakpoints(self) -> np.ndarray:
        return self.grid[self.index]

    @property
    def values(self) -> np.ndarray:
        return self.samples[self.index]

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        b, v = self.breakpoints, self.values
        if b.size == 1:
            return np.full(s.shape, v[0])
        k = np.clip(np.searchsorted(b, s, side="right") - 1, 0, b.size - 2)
        sl = self.slopes[k]
        return v[k] + sl * (s - b[k])

    def on_grid(self) -> np.ndarray:
        return self(self.grid)


def _lower_hull_vertices(s, w, rtol=1e-12):
    """Gift wrapping along increasing s: from the current vertex pick the
    farthest point achieving the smallest slope."""
    n = s.size
    out = [0]
    i = 0
    while i < n - 1:
        ds = s[i + 1:] - s[i]
        sl = (w[i + 1:] - w[i]) / ds
        m = sl.min()
        tol = rtol * (abs(m) + np.max(np.abs(w)) / max(ds[-1], 1e-300) + 1.0)
        j = i + 1 + int(np.flatnonzero(sl <= m + tol)[-1])
        out.append(j)
        i = j
    return np.asarray(out)


def convex_minorant(profile: SampledProfile, contact_rtol: float = 1e-12) -> ConvexEnvelope:
    """Lower convex hull of the samples, with every contact point kept as a breakpoint."""
    if not isinstance(profile, SampledProfile):
        profile = SampledProfile(*profile)
    s, w = profile.grid, profile.values
    vert = _lower_hull_vertices(s, w)
    # envelope on the whole grid from the hull vertices
    k = np.clip(np.searchsorted(s[vert], s, side="right") - 1, 0, max(vert.size - 2, 0))
    if vert.size == 1:
        env = np.full(s.shape, w[0])
    else:
        sl = np.diff(w[vert]) / np.diff(s[vert])
        env = w[vert][k] + sl[k] * (s - s[vert][k])
    scale = np.maximum(np.abs(w), 1.0)
    touch = np.abs(w - env) <= contact_rtol * scale
    touch[vert] = True
    idx = np.flatnonzero(touch)
    return ConvexEnvelope(s, w, idx, float(s[-1]))


def right_derivative(env: ConvexEnvelope, s: float) -> float:
    if s < 0:
        raise InputError("s must be nonnegative")
    b = env.breakpoints
    if b.size < 2:
        return 0.0
    k = int(np.clip(np.searchsorted(b, s, side="right") - 1, 0, b.size - 2))
    return float(env.slopes[k])


def contact_point(profile: SampledProfile, t: float, env: ConvexEnvelope | None = None) -> float:
    """Largest breakpoint a_t <= t; the envelope is affine on [a_t, t]."""
    if env is None:
        env = convex_minorant(profile)
    g = env.grid
    if t < g[0] or t > g[-1]:
        raise InputError("t outside the sampled range")
    b = env.breakpoints
    return float(b[np.searchsorted(b, t, side="right") - 1])


def essinf_derivative_bound(profiles: Sequence[SampledProfile], s: float,
                            tol: float = 1e-9) -> bool:
    """Check D+(min_y w_y)**(s) >= min_y D+ w_y(s) for convex w_y on a common grid."""
    if len(profiles) == 0:
        raise InputError("empty family")
    grid = profiles[0].grid
    for p in profiles:
        if p.grid.shape != grid.shape or np.any(p.grid != grid):
            raise InputError("family members must share one grid")
    w = np.min(np.stack([p.values for p in profiles]), axis=0)
    lhs = right_derivative(convex_minorant(SampledProfile(grid, w)), s)
    rhs = min(right_derivative(convex_minorant(p), s) for p in profiles)
    return bool(lhs >= rhs - tol)


# ---------------------------------------------------------------------------
# hat-operation

def recession(h: Callable, qx, cap: float = 1e12, kmax: int = 60) -> float:
    """lim h(lam qx)/lam over lam = 2^k; +inf once the sequence exceeds cap."""
    qx = np.asarray(qx, dtype=float)
    if not np.any(qx):
        return 0.0
    last = None
    shrink = False
    for k in range(kmax):
        lam = 2.0 ** k
        val = float(h(lam * qx)) / lam
        if not np.isfinite(val) or val > cap:
            return np.inf
        if last is not None and abs(val - last) <= 1e-12 * max(abs(val), 1.0):
            break
        shrink = last is not None and abs(val) < 0.99 * abs(last)
        last = val
    else:
        # still shrinking geometrically at the end of the ladder: sublinear h
        if shrink:
            return 0.0
    return 0.0 if abs(val) <= 1e-11 else float(val)


def hat(h: Callable, qx, qt: float, cap: float = 1e12) -> float:
    """-qt h(-qx/qt) for qt < 0, the recession value for qt = 0, +inf for qt > 0."""
    qx = np.asarray(qx, dtype=float)
    if qt < 0:
        return float(-qt * h(-qx / qt))
    if qt == 0:
        return recession(h, qx, cap)
    return np.inf


def F_eps(lag, x, eps: float, t: float, qx, qt: float, domain=None, s_cap: float | None = None,
          n_grid: int = 513, ball_samples: int = 257) -> float:
    """Hat of the convexified local infimum (f_B^-(t, .))** at q = (qx, qt)."""
    from .balance import radial_envelope

    if lag.structure not in ("isotropic", "orthotropic"):
        raise UnsupportedStructureError("F_eps needs an isotropic or orthotropic integrand")
    if qt > 0:
        return np.inf
    qx = np.atleast_1d(np.asarray(qx, dtype=float))
    if qt == 0:
        return 0.0 if not np.any(qx) else np.inf
    xi = -qx / qt
    if s_cap is None:
        s_cap = max(1.0, 2.0 * float(np.max(np.abs(xi))) if lag.structure == "orthotropic"
                    else 2.0 * float(np.linalg.norm(xi)))
    if lag.structure == "isotropic":
        r = float(np.linalg.norm(xi))
        env = radial_envelope(lag, x, eps, t, s_cap, domain=domain, n_grid=n_grid,
                              ball_samples=ball_samples, extra=[r])
        return float(-qt * env(r))
    envs = radial_envelope(lag, x, eps, t, s_cap, domain=domain, n_grid=n_grid,
                           ball_samples=ball_samples, per_axis=True, extra=np.abs(xi))
    return float(-qt * sum(e(abs(xi[i])) for i, e in enumerate(envs)))


# ---------------------------------------------------------------------------
# certified upper bounds in N dimensions

def envelope_upper_bound(samples, target, tol: float = 1e-9, order: int = 3) -> float:
    """Smallest convex combination of sampled values whose points average to
    ``target``, over single points, pairs and triples. Returns +inf if none.

    Any such combination bounds the convex minorant from above; with triples
    this is exact for the sampled point set when N <= 2. ``order=2`` skips
    the triples. A combination counts when it lands within
    ``tol * (1 + |target|)`` of the target, which absorbs rounding in the
    combination itself.
    """
    pts = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p, _ in samples])
    vals = np.array([float(v) for _, v in samples])
    z = np.atleast_1d(np.asarray(target, dtype=float))
    n, dim = pts.shape
    znorm = float(np.linalg.norm(z))
    best = np.inf

    d = np.linalg.norm(pts - z, axis=1)
    hit = d <= tol * (1.0 + znorm)
    if np.any(hit):
        best = vals[hit].min()
    if n < 2:
        return float(best)

    i, j = np.triu_indices(n, 1)
    a, b = pts[i], pts[j]
    ab = b - a
    L2 = np.sum(ab * ab, axis=1)
    ok = L2 > 0
    lam = np.where(ok, np.sum((z - a) * ab, axis=1) / np.where(ok, L2, 1.0), -1.0)
    lam = np.clip(lam, 0.0, 1.0)
    proj = a + lam[:, None] * ab
    good = ok & (np.linalg.norm(proj - z, axis=1) <= tol * (1.0 + znorm))
    if np.any(good):
        best = min(best, float(np.min((1 - lam[good]) * vals[i[good]] + lam[good] * vals[j[good]])))

    if order >= 3 and dim >= 2 and n >= 3:
        combos = np.array(list(combinations(range(n), 3)))
        for c0 in range(0, len(combos), 200_000):
            c = combos[c0:c0 + 200_000]
            best = min(best, _triple_bound(pts[c[:, 0]], pts[c[:, 1]], pts[c[:, 2]],
                                           vals[c], z, tol))
    return float(best)


def _triple_bound(p0, p1, p2, v, z, tol):
    # barycentric coordinates in the plane of the first two axes; higher axes must match
    e1, e2 = p1 - p0, p2 - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    ok = np.abs(det) > 1e-300
    r = z - p0
    sdet = np.where(ok, det, 1.0)
    l1 = (r[:, 0] * e2[:, 1] - r[:, 1] * e2[:, 0]) / sdet
    l2 = (e1[:, 0] * r[:, 1] - e1[:, 1] * r[:, 0]) / sdet
    l0 = 1.0 - l1 - l2
    lam = np.clip(np.stack([l0, l1, l2], axis=1), 0.0, None)
    lam /= np.maximum(lam.sum(axis=1, keepdims=True), 1e-300)
    rec = lam[:, :1] * p0 + lam[:, 1:2] * p1 + lam[:, 2:] * p2
    good = ok & (np.linalg.norm(rec - z, axis=1) <= tol * (1.0 + np.linalg.norm(z)))
    if not np.any(good):
        return np.inf
    return float(np.min(np.sum(lam[good] * v[good], axis=1)))
