"""Sampled checks of the balance (anti-jump) conditions.

The local worst case f_B^-(t, xi) is the minimum of f(y, t, xi) over a fixed
low-discrepancy sample of the closed ball cl B(x, eps) intersected with the
closed domain. Every condition has the shape

    antecedent(x, t, xi, eps)  ==>  f(x, t, xi) <= C (bound + 1)

with ``bound`` either f_B^- or its convex minorant in xi. A sweep records the
largest ratio f / (bound + 1) among admissible points for each eps and fits
its trend in eps.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .convex import (ConvexEnvelope, SampledProfile, UnsupportedStructureError,
                     convex_minorant, envelope_upper_bound)
from .lagrangians import Domain, Lagrangian

CONDITIONS = ("Hiso0", "Hiso", "HD2", "Hconv")
_ALIASES = {c.lower(): c for c in CONDITIONS}


class DomainError(ValueError):
    pass


class SpecError(ValueError):
    pass


def canonical_condition(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise SpecError(f"unknown condition {name!r}; choose from {CONDITIONS}") from None


# ---------------------------------------------------------------------------
# ball sampling

_BALL_CACHE: dict = {}


def unit_ball_samples(dim: int, n: int) -> np.ndarray:
    """Center, axis boundary points, then a Halton sequence mapped to the ball.

    The axis boundary points make the closed ball's extreme points along each
    axis part of every sample set.
    """
    key = (dim, n)
    if key in _BALL_CACHE:
        return _BALL_CACHE[key]
    if dim == 1:
        fixed = np.array([0.0, -1.0, 1.0])
        m = max(n - fixed.size, 0)
        u = qmc.Halton(d=1, scramble=False).random(m + 1)[1:, 0] if m else np.empty(0)
        pts = np.concatenate([fixed, 2.0 * u - 1.0])
    elif dim == 2:
        fixed = np.array([[0.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
        m = max(n - fixed.shape[0], 0)
        if m:
            h = qmc.Halton(d=2, scramble=False).random(m + 1)[1:]
            r = np.sqrt(h[:, 0])
            th = 2.0 * np.pi * h[:, 1]
            pts = np.concatenate([fixed, np.stack([r * np.cos(th), r * np.sin(th)], axis=1)])
        else:
            pts = fixed
    else:
        raise SpecError("ball sampling is implemented for N <= 2")
    pts.setflags(write=False)
    _BALL_CACHE[key] = pts
    return pts


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if dim == 1:
        return x.reshape(-1)
    return x.reshape(-1, dim)


def ball_points(domain: Domain | None, x, eps: float, n: int) -> np.ndarray:
    """Sample points of cl B(x, eps) ∩ cl(domain), shape (n_x, n) or (n_x, n, 2)."""
    dim = 1 if domain is None else domain.dim
    R = unit_ball_samples(dim, n)
    x = _as_points(x, dim)
    if domain is not None:
        # the closed ball must meet the closed box
        gap = x - domain.project(x)
        dist = np.abs(gap) if dim == 1 else np.linalg.norm(gap, axis=-1)
        if np.any(dist > eps):
            raise DomainError("ball does not intersect the domain")
    if dim == 1:
        y = x[:, None] + eps * R[None, :]
    else:
        y = x[:, None, :] + eps * R[None, :, :]
    if domain is not None:
        # the nearest box point to a ball point stays inside the ball
        y = domain.project(y)
    return y


def _eval_on_balls(lag: Lagrangian, y, t, xi, mode="vector", axis=None):
    """f on sampled balls: y (n_x, n_r[, dim]) against xi (n_xi[, dim]) -> (n_x, n_r, n_xi)."""
    dim = lag.dim
    yy = y[:, :, None] if dim == 1 else y[:, :, None, :]
    if mode == "radial":
        s = np.asarray(xi, dtype=float)
        return np.broadcast_to(lag.eval_radial(yy, t, s[None, None, :]),
                               y.shape[:2] + s.shape)
    if mode == "axis":
        s = np.asarray(xi, dtype=float)
        return np.broadcast_to(lag.eval_axis(axis, yy, t, s[None, None, :]),
                               y.shape[:2] + s.shape)
    xi = np.asarray(xi, dtype=float)
    xx = xi[None, None, :] if dim == 1 else xi[None, None, :, :]
    out = lag.eval(yy, t, xx)
    n_xi = xi.shape[0]
    return np.broadcast_to(out, y.shape[:2] + (n_xi,))


def inf_over_ball(lag: Lagrangian, x, eps: float, t: float, xi, domain: Domain | None = None,
                  ball_samples: int = 257, nest: Sequence[float] | None = None) -> float:
    """Sampled essinf of f(., t, xi) over cl B(x, eps) ∩ cl(domain).

    With ``nest`` the minimum also runs over the sample sets of every radius
    in ``nest`` below eps, which makes the value nonincreasing in eps along
    that family.
    """
    radii = [eps]
    if nest is not None:
        radii += [r for r in nest if r < eps]
    xi = np.asarray(xi, dtype=float)
    best = np.inf
    for r in radii:
        y = ball_points(domain, x, r, ball_samples)
        v = _eval_on_balls(lag, y, t, xi[None] if lag.dim > 1 else np.atleast_1d(xi))
        best = min(best, float(np.min(v)))
    return best


def lem_bdd_sup(lag: Lagrangian, domain: Domain, m: float, n_x: int = 33, n_t: int = 17,
                n_xi: int = 33) -> float:
    """Sampled max of f over x in the domain and |(t, xi)| <= m."""
    xs = domain.grid(n_x if domain.dim == 1 else max(5, int(np.sqrt(n_x)) + 1))
    ts = np.linspace(-m, m, n_t)
    best = 0.0
    for t in ts:
        rem = np.sqrt(max(m * m - t * t, 0.0))
        if lag.dim == 1:
            xi = np.linspace(-rem, rem, n_xi)
            v = lag.eval(xs[:, None], t, xi[None, :])
        else:
            ang = np.linspace(0, 2 * np.pi, 16, endpoint=False)
            mags = np.linspace(0, rem, n_xi)
            xi = (mags[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], -1)[None]).reshape(-1, 2)
            v = lag.eval(xs[:, None, :], t, xi[None, :, :])
        best = max(best, float(np.max(v)))
    return best


# ---------------------------------------------------------------------------
# specs and reports

@dataclass
class ConditionSpec:
    condition: str = "Hiso"
    k1: float = 2.0
    k2: float = 4.0
    p: float | None = None
    eps_grid: Sequence[float] | None = None
    t_grid: Sequence[float] | None = None
    x_grid: np.ndarray | None = None
    xi_grid: Sequence[float] | None = None
    n_xi: int | None = None
    ball_samples: int | None = None
    n_x: int | None = None
    n_t: int = 17
    R_cap: float = 1e6
    slope_satisfied: float = -0.1
    slope_violated: float = -0.5
    slope_tol: float = 1e-2
    shift_x: bool = True
    use_probes: bool = True
    probes: tuple = ()
    n_refine: int = 4

    def __post_init__(self):
        self.condition = canonical_condition(self.condition)
        if not (self.k1 > 0 and self.k2 > 0):
            raise SpecError("k1 and k2 must be positive")
        if self.R_cap <= 0:
            raise SpecError("R_cap must be positive")

    def resolved(self, lag: Lagrangian, domain: Domain) -> "ConditionSpec":
        """Fill every unset grid with its default for this integrand and domain."""
        s = ConditionSpec(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        dim = domain.dim
        diam = domain.diam
        if s.p is None:
            s.p = lag.p
        if s.eps_grid is None:
            s.eps_grid = [diam * 2.0 ** -k for k in range(1, 11)]
        eps = np.asarray(s.eps_grid, dtype=float)
        if eps.size == 0 or np.any(eps <= 0) or np.any(eps > diam * (1 + 1e-12)):
            raise SpecError("eps_grid values must lie in (0, diam]")
        s.eps_grid = sorted(float(e) for e in eps)[::-1]
        if s.t_grid is None:
            s.t_grid = list(np.linspace(-s.k1, s.k1, s.n_t if dim == 1 else min(s.n_t, 9)))
        if s.ball_samples is None:
            s.ball_samples = 257 if dim == 1 else 129
        if s.n_x is None:
            s.n_x = 33 if dim == 1 else 9
        if s.n_xi is None:
            if s.condition == "Hconv" and lag.structure != "general":
                s.n_xi = 513
            else:
                s.n_xi = 129 if dim == 1 else 8
        return s

    def describe(self) -> dict:
        d = {}
        for k in self.__dataclass_fields__:
            v = getattr(self, k)
            if k in ("probes",):
                d["n_probes"] = len(v)
                continue
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, (list, tuple)):
                v = [float(a) if np.ndim(a) == 0 else np.asarray(a).tolist() for a in v]
            d[k] = v
        return d


@dataclass
class BalanceReport:
    condition: str
    problem: str
    verdict: str
    C_est: float | None
    max_ratio: float
    slope: float | None
    table: list
    witnesses: list
    spec: dict
    notes: list = field(default_factory=list)
    probe_rows: list = field(default_factory=list)
    related: dict = field(default_factory=dict)

    @property
    def growth_exponent(self):
        return self.slope

    def to_dict(self) -> dict:
        return _clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "sup_ratio", "n_admissible"])
        for row in self.table:
            w.writerow([repr(row["eps"]), repr(row["sup_ratio"]), row["n_admissible"]])
        return buf.getvalue()

    def probe_ratio(self, eps: float, rtol: float = 1e-12):
        for r in self.probe_rows:
            if abs(r["eps"] - eps) <= rtol * eps:
                return r
        return None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return None
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# envelopes

def _envelopes_batch(grid, prof) -> np.ndarray:
    """Convex minorant values on ``grid`` for each row of ``prof``.

    Rows that are already convex (nondecreasing slopes) are their own
    minorant; the rest go through the hull routine.
    """
    out = prof.copy()
    sl = np.diff(prof, axis=1) / np.diff(grid)[None, :]
    scale = 1e-12 * (1.0 + np.abs(sl[:, :-1]) + np.abs(sl[:, 1:]))
    bad = np.any(np.diff(sl, axis=1) < -scale, axis=1)
    for i in np.flatnonzero(bad):
        out[i] = convex_minorant(SampledProfile(grid, prof[i])).on_grid()
    return out


def radial_grid(s_cap: float, n: int) -> np.ndarray:
    """0 followed by n-1 geometric points up to s_cap."""
    return np.concatenate([[0.0], np.geomspace(s_cap * 1e-3, s_cap, n - 1)])


def radial_envelope(lag: Lagrangian, x, eps: float, t: float, s_cap: float,
                    domain: Domain | None = None, n_grid: int = 513,
                    ball_samples: int = 257, per_axis: bool = False, extra=()):
    """Greatest convex minorant of s -> f_B^-(t, s e) on [0, s_cap].

    Magnitudes in ``extra`` (within the cap) are added to the radial grid, so
    the envelope is sampled exactly where it will be queried.

    For orthotropic integrands this returns the sum of per-axis envelopes as
    a callable, or the list of per-axis envelopes with ``per_axis=True``.
    """
    if lag.structure == "general":
        raise UnsupportedStructureError("radial envelopes need isotropic or orthotropic structure")
    grid = radial_grid(s_cap, n_grid)
    extra = np.asarray(extra, dtype=float).ravel()
    extra = extra[(extra > 0) & (extra < s_cap)]
    if extra.size:
        grid = np.union1d(grid, extra)
    y = ball_points(domain, x, eps, ball_samples)
    if lag.structure == "isotropic":
        prof = np.min(_eval_on_balls(lag, y, t, grid, mode="radial"), axis=1)[0]
        return convex_minorant(SampledProfile(grid, prof))
    envs = []
    for i in range(lag.dim):
        prof = np.min(_eval_on_balls(lag, y, t, grid, mode="axis", axis=i), axis=1)[0]
        envs.append(convex_minorant(SampledProfile(grid, prof)))
    if per_axis:
        return envs

    class _Sum:
        cap = s_cap

        def __call__(self, s):
            s = np.abs(np.asarray(s, dtype=float))
            return sum(e(s[..., i]) for i, e in enumerate(envs))
    return _Sum()


# ---------------------------------------------------------------------------
# the sweep

def _xi_cap(cond, k2, eps, N, p):
    if cond == "Hiso0":
        return k2 * eps ** (-min(1.0, N / p))
    if cond in ("Hiso", "Hconv"):
        return (k2 * eps ** (-N)) ** (1.0 / max(p, N))
    # HD2 has no explicit xi cap; sample up to L2 eps^-N
    return k2 * eps ** (-N)


def _antecedent(cond, k2, eps, N, p, bound, s):
    if cond == "Hiso0":
        return s <= k2 * eps ** (-min(1.0, N / p)) * (1 + 1e-12)
    if cond == "HD2":
        return bound <= k2 * eps ** (-N) * (1 + 1e-12)
    return bound + s ** max(p, N) <= k2 * eps ** (-N) * (1 + 1e-12)


def _directions(dim):
    if dim == 1:
        return np.array([1.0, -1.0])
    ang = np.arange(8) * np.pi / 4
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def _x_points(domain, spec, eps):
    base = spec.x_grid if spec.x_grid is not None else domain.grid(spec.n_x)
    base = np.asarray(base, dtype=float)
    if not spec.shift_x or domain.dim != 1:
        return base
    pts = np.concatenate([base, base - eps, base + eps])
    return np.unique(domain.project(pts))


def _chunks(n, size):
    for i in range(0, n, size):
        yield slice(i, min(i + size, n))


class _Best:
    """Running arg-max of ratios for one eps."""

    def __init__(self):
        self.ratio = -np.inf
        self.item = None
        self.count = 0
        self.top = []

    def offer(self, ratio, item):
        if ratio > self.ratio:
            self.ratio = ratio
            self.item = item


def _sweep_structured(lag, domain, spec, eps, cond, best, cands):
    """Radial (isotropic), per-axis (orthotropic) or vector (general) sweep at one eps."""
    N, p, k2 = domain.dim, spec.p, spec.k2
    xs = _x_points(domain, spec, eps)
    n_x = xs.shape[0]
    cap = _xi_cap(cond, k2, eps, N, p)
    if spec.xi_grid is not None:
        mags = np.asarray(spec.xi_grid, dtype=float)
        mags = mags[mags <= cap * (1 + 1e-12)] if cond != "HD2" else mags
    else:
        mags = radial_grid(cap, spec.n_xi)
    if mags.size == 0:
        return
    nr = spec.ball_samples
    chunk = max(1, int(4e6 // (nr * max(mags.size, 1) * (1 if lag.structure != "general" else 8))))
    for t in spec.t_grid:
        for sl in _chunks(n_x, chunk):
            x = xs[sl]
            y = ball_points(domain, x, eps, nr)
            if lag.structure == "isotropic":
                v = _eval_on_balls(lag, y, t, mags, mode="radial")
                f = v[:, 0, :]
                fb = v.min(axis=1)
                s = np.broadcast_to(mags, f.shape)
                if cond == "Hconv":
                    fb = _envelopes_batch(mags, fb)
                xi_of = lambda i, j: float(mags[j])
            elif lag.structure == "orthotropic":
                # product grid of per-axis magnitudes, all in the first quadrant
                parts_f, parts_b = [], []
                for i in range(lag.dim):
                    v = _eval_on_balls(lag, y, t, mags, mode="axis", axis=i)
                    parts_f.append(v[:, 0, :])
                    b = v.min(axis=1)
                    if cond == "Hconv":
                        b = _envelopes_batch(mags, b)
                    parts_b.append(b)
                m0, m1 = np.meshgrid(mags, mags, indexing="ij")
                f = (parts_f[0][:, :, None] + parts_f[1][:, None, :]).reshape(len(x), -1)
                fb = (parts_b[0][:, :, None] + parts_b[1][:, None, :]).reshape(len(x), -1)
                s = np.broadcast_to(np.sqrt(m0 ** 2 + m1 ** 2).ravel(), f.shape)
                flat = np.stack([m0.ravel(), m1.ravel()], axis=1)
                xi_of = lambda i, j: flat[j].tolist()
            else:
                dirs = _directions(lag.dim)
                if lag.dim == 1:
                    vecs = (mags[:, None] * dirs[None, :]).ravel()
                    norms = np.abs(vecs)
                else:
                    vecs = (mags[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
                    norms = np.linalg.norm(vecs, axis=1)
                v = _eval_on_balls(lag, y, t, vecs)
                f = v[:, 0, :]
                fb = v.min(axis=1)
                s = np.broadcast_to(norms, f.shape)
                xi_of = lambda i, j, vecs=vecs: np.asarray(vecs[j]).tolist()
            if cond == "Hconv" and lag.structure == "general":
                # necessary antecedent only; candidates are certified later
                ok = s ** max(p, N) <= k2 * eps ** (-N) * (1 + 1e-12)
                r = np.where(ok, f / (fb + 1.0), -np.inf)
                flat_idx = np.argsort(r, axis=None)[::-1][:spec.n_refine]
                for k in flat_idx:
                    i, j = np.unravel_index(k, r.shape)
                    if np.isfinite(r[i, j]):
                        cands.append((r[i, j], np.asarray(x[i]), float(t), np.asarray(xi_of(i, j))))
                continue
            ok = _antecedent(cond, k2, eps, N, p, fb, s)
            if not np.any(ok):
                continue
            best.count += int(np.count_nonzero(ok))
            r = np.where(ok, f / (fb + 1.0), -np.inf)
            k = int(np.argmax(r))
            i, j = np.unravel_index(k, r.shape)
            best.offer(float(r[i, j]), dict(x=np.asarray(x[i]).tolist(), t=float(t),
                                             xi=xi_of(i, j), eps=eps, f=float(f[i, j]),
                                             bound=float(fb[i, j]), ratio=float(r[i, j])))


def _ub_samples(lag, domain, x, t, xi, eps, nr):
    """Points xi +- lam d on a ladder of scales with their sampled f_B^- values."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    dim = xi.size
    nrm = float(np.linalg.norm(xi))
    base = max(nrm, 1.0)
    lams = [base * eps ** (-k / 4.0) for k in range(0, 5)] + [base * 2.0 ** j for j in range(-3, 4)]
    if dim == 1:
        dirs = np.array([[1.0]])
    else:
        dirs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]) / np.array(
            [1.0, 1.0, np.sqrt(2), np.sqrt(2)])[:, None]
    pts = [xi]
    for d in dirs:
        for lam in lams:
            pts.append(xi + lam * d)
            pts.append(xi - lam * d)
    pts = np.array(pts)
    y = ball_points(domain, x, eps, nr)
    vals = _eval_on_balls(lag, y, t, pts[:, 0] if dim == 1 else pts).min(axis=1)[0]
    return pts, vals


def hconv_upper_bound(lag, domain, x, t, xi, eps, ball_samples=129) -> float:
    """Certified upper bound on (f_B^-(t,.))**(xi) from symmetric pair samples."""
    pts, vals = _ub_samples(lag, domain, x, t, xi, eps, ball_samples)
    samples = [(p, v) for p, v in zip(pts, vals)]
    return envelope_upper_bound(samples, np.atleast_1d(xi), order=2)


def _probe_eval(lag, domain, spec, eps, cond, probe):
    x, t, xi = probe(eps)
    x = np.asarray(x, dtype=float)
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    N, p, k2 = domain.dim, spec.p, spec.k2
    if not domain.contains(x):
        return None
    if abs(t) > spec.k1 * (1 + 1e-12):
        return None
    xi_eval = xi_arr[0] if lag.dim == 1 else xi_arr
    f = float(lag.eval(x, t, xi_eval))
    s = float(np.linalg.norm(xi_arr))
    if cond == "Hconv":
        if lag.structure == "general":
            bound = hconv_upper_bound(lag, domain, x, t, xi_arr, eps, spec.ball_samples)
        elif lag.structure == "isotropic":
            env = radial_envelope(lag, x, eps, t, max(s, 1e-300) * 1.0, domain, spec.n_xi,
                                  spec.ball_samples)
            bound = float(env(s))
        else:
            env = radial_envelope(lag, x, eps, t, max(np.max(np.abs(xi_arr)), 1e-300),
                                  domain, spec.n_xi, spec.ball_samples)
            bound = float(env(np.abs(xi_arr)))
    else:
        bound = inf_over_ball(lag, x, eps, t, xi_eval, domain, spec.ball_samples)
    ok = bool(_antecedent(cond, k2, eps, N, p, bound, s))
    return dict(x=np.atleast_1d(x).tolist() if lag.dim > 1 else float(x), t=float(t),
                xi=xi_arr.tolist() if lag.dim > 1 else float(xi_arr[0]), eps=eps, f=f,
                bound=bound, ratio=f / (bound + 1.0), admissible=ok, source="probe")


def _fit_slope(eps, sup):
    eps = np.asarray(eps, dtype=float)
    sup = np.asarray(sup, dtype=float)
    ok = np.isfinite(sup) & (sup > 0)
    if np.count_nonzero(ok) < 2:
        return None
    return float(np.polyfit(np.log(eps[ok]), np.log(sup[ok]), 1)[0])


def check_condition(lag: Lagrangian, domain: Domain, spec: ConditionSpec,
                    problem: str | None = None) -> BalanceReport:
    """Sweep (x, t, xi, eps) and return a witnessed verdict for one condition."""
    if lag.dim != domain.dim:
        raise SpecError("integrand and domain dimensions differ")
    spec = spec.resolved(lag, domain)
    cond = spec.condition
    notes = []
    if cond == "Hconv" and lag.structure == "general":
        notes.append("general structure: envelope replaced by certified pair upper bounds; "
                     "SATISFIED is not attainable")
    if cond == "Hconv" and lag.structure != "general":
        notes.append("envelopes computed on a truncated radial grid ending at the antecedent cap")
    if cond == "Hconv" and lag.structure == "orthotropic":
        notes.append("orthotropic: sum of per-axis envelopes of per-axis local infima")
    notes.append("t sampled on the closed range [-k1, k1]")

    rows, witnesses, probe_rows = [], [], []
    for eps in spec.eps_grid:
        best = _Best()
        cands = []
        _sweep_structured(lag, domain, spec, eps, cond, best, cands)
        if cands:
            cands.sort(key=lambda c: -c[0])
            for _, x, t, xi in cands[:spec.n_refine]:
                ub = hconv_upper_bound(lag, domain, x, t, xi, eps, spec.ball_samples)
                s = float(np.linalg.norm(np.atleast_1d(xi)))
                if not _antecedent(cond, spec.k2, eps, domain.dim, spec.p, ub, s):
                    continue
                f = float(lag.eval(x, t, xi if lag.dim > 1 else float(np.atleast_1d(xi)[0])))
                best.count += 1
                best.offer(f / (ub + 1.0), dict(x=np.atleast_1d(x).tolist(), t=t,
                                                xi=np.atleast_1d(xi).tolist(), eps=eps, f=f,
                                                bound=ub, ratio=f / (ub + 1.0)))
        if spec.use_probes:
            for probe in spec.probes:
                row = _probe_eval(lag, domain, spec, eps, cond, probe)
                if row is None:
                    continue
                probe_rows.append(row)
                if row["admissible"]:
                    best.count += 1
                    best.offer(row["ratio"], {k: v for k, v in row.items() if k != "admissible"})
        sup = best.ratio if best.count else np.nan
        rows.append(dict(eps=eps, sup_ratio=sup, n_admissible=best.count))
        if best.item is not None:
            witnesses.append(best.item)

    sups = np.array([r["sup_ratio"] for r in rows], dtype=float)
    eps_arr = np.array([r["eps"] for r in rows])
    slope = _fit_slope(eps_arr, sups)
    max_ratio = float(np.nanmax(sups)) if np.any(np.isfinite(sups)) else float("nan")
    verdict = "INCONCLUSIVE"
    C_est = None
    if slope is not None and np.isfinite(max_ratio):
        sat = max_ratio <= spec.R_cap and slope >= spec.slope_satisfied
        vio = max_ratio > spec.R_cap and slope <= spec.slope_violated + spec.slope_tol
        if cond == "Hconv" and lag.structure == "general":
            sat = False
        if sat and not vio:
            verdict = "SATISFIED"
            C_est = max_ratio
        elif vio and not sat:
            verdict = "VIOLATED"
    witnesses.sort(key=lambda w: -w["ratio"])
    return BalanceReport(condition=cond, problem=problem or lag.name, verdict=verdict,
                         C_est=C_est, max_ratio=max_ratio, slope=slope, table=rows,
                         witnesses=witnesses, spec=spec.describe(), notes=notes,
                         probe_rows=probe_rows)


def check_iso_implies_conv(lag: Lagrangian, domain: Domain, spec: ConditionSpec,
                           iso_report: BalanceReport | None = None) -> BalanceReport:
    """Run Hconv on the grids of a satisfied Hiso check; the verdict must not be VIOLATED."""
    if lag.structure != "isotropic":
        raise UnsupportedStructureError("the implication is stated for isotropic integrands")
    base = {k: getattr(spec, k) for k in spec.__dataclass_fields__}
    if iso_report is None:
        base["condition"] = "Hiso"
        iso_report = check_condition(lag, domain, ConditionSpec(**base))
    if iso_report.verdict != "SATISFIED":
        raise SpecError(f"Hiso check is {iso_report.verdict}, not SATISFIED")
    base["condition"] = "Hconv"
    base["n_xi"] = None
    rep = check_condition(lag, domain, ConditionSpec(**base))
    rep.related = {"Hiso_C_est": iso_report.C_est, "Hiso_verdict": iso_report.verdict,
                   "implication_holds": rep.verdict != "VIOLATED"}
    return rep


def constant_map(lag: Lagrangian, domain: Domain, spec: ConditionSpec,
                 k2_values: Sequence[float]) -> list:
    """Empirical k2 -> (verdict, C_est) map; no growth law is asserted."""
    out = []
    for k2 in k2_values:
        base = {k: getattr(spec, k) for k in spec.__dataclass_fields__}
        base["k2"] = float(k2)
        rep = check_condition(lag, domain, ConditionSpec(**base))
        out.append(dict(k2=float(k2), verdict=rep.verdict, C_est=rep.C_est,
                        max_ratio=rep.max_ratio))
    return out


def admissible_set(lag: Lagrangian, domain: Domain, spec: ConditionSpec) -> set:
    """(x index, t index, xi index, eps index) tuples whose antecedent holds.

    Needs an explicit absolute ``xi_grid``; used to test antecedent monotonicity.
    """
    if spec.xi_grid is None:
        raise SpecError("admissible_set needs an explicit xi_grid")
    spec = spec.resolved(lag, domain)
    if lag.structure != "isotropic":
        raise UnsupportedStructureError("admissible_set supports isotropic integrands")
    mags = np.asarray(spec.xi_grid, dtype=float)
    out = set()
    xs = np.asarray(spec.x_grid if spec.x_grid is not None else domain.grid(spec.n_x))
    for ie, eps in enumerate(spec.eps_grid):
        y = ball_points(domain, xs, eps, spec.ball_samples)
        for it, t in enumerate(spec.t_grid):
            v = _eval_on_balls(lag, y, t, mags, mode="radial")
            fb = v.min(axis=1)
            if spec.condition == "Hconv":
                fb = _envelopes_batch(mags, fb)
            ok = _antecedent(spec.condition, spec.k2, eps, domain.dim, spec.p, fb,
                             np.broadcast_to(mags, fb.shape))
            for i, j in zip(*np.nonzero(ok)):
                out.add((int(i), it, int(j), ie))
    return out
