"""Lipschitz approximation of 1D functions through their subgraphs.

The subgraph indicator 1_u(x, t) = [t <= u(x)] is mollified in x with a
compact kernel, a small strictly decreasing slack delta*alpha(t) is added,
and the level s of the result is inverted in t. The inverse is Lipschitz
with an explicit rank, bounded by an explicit constant, and close to u in
energy when alpha dominates the level-set energy density of u.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .mesh import Mesh1D, PLFunction, energy, gauss_legendre, l1_distance, l1_error
from .lagrangians import interval
from .balance import lem_bdd_sup


class InputError(ValueError):
    pass


class DomainError(ValueError):
    pass


class CertificateError(RuntimeError):
    """A certified bound failed; carries the offending node pair."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


# ---------------------------------------------------------------------------
# kernel

_SUPPORTS = {
    "centered": (-1.0, 1.0),
    "decentered": (0.25, 0.75),
    "decentered_right": (-0.75, -0.25),
}


def _bump(r):
    r = np.asarray(r, dtype=float)
    inside = np.abs(r) < 1.0
    d = np.where(inside, 1.0 - r * r, 1.0)
    return np.where(inside, np.exp(-1.0 / d), 0.0)


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    val, _ = integrate.quad(lambda r: float(_bump(r)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-12)
    return val


@dataclass(frozen=True)
class Kernel:
    """Normalized exp(-1/(1-r^2)) bump mapped onto (lo, hi).

    ``decentered`` sits in (1/4, 3/4), so v(x, .) only sees u to the left of
    x; ``decentered_right`` is its mirror image.
    """
    variant: str = "centered"
    quad_order: int = 65

    def __post_init__(self):
        if self.variant not in _SUPPORTS:
            raise InputError(f"unknown kernel variant {self.variant!r}; "
                             f"choose from {sorted(_SUPPORTS)}")

    @property
    def support(self) -> tuple[float, float]:
        return _SUPPORTS[self.variant]

    @property
    def reach(self) -> float:
        lo, hi = self.support
        return max(abs(lo), abs(hi))

    @property
    def _half(self) -> float:
        lo, hi = self.support
        return 0.5 * (hi - lo)

    @property
    def _mid(self) -> float:
        lo, hi = self.support
        return 0.5 * (hi + lo)

    def pdf(self, z):
        h = self._half
        return _bump((np.asarray(z, dtype=float) - self._mid) / h) / (_bump_mass() * h)

    def scaled(self, y, eps: float):
        """rho_eps(y) = rho(y / eps) / eps."""
        return self.pdf(np.asarray(y, dtype=float) / eps) / eps

    def cdf(self, z):
        """int_lo^z rho by Gauss-Legendre on [lo, z]."""
        lo, hi = self.support
        g, w = gauss_legendre(self.quad_order)
        zc = np.clip(np.asarray(z, dtype=float), lo, hi)[..., None]
        half = 0.5 * (zc - lo)
        return np.sum(w * self.pdf(lo + half * (1.0 + g)), axis=-1) * half[..., 0]

    @property
    def sup_norm(self) -> float:
        return float(np.exp(-1.0) / (_bump_mass() * self._half))

    @property
    def deriv_l1(self) -> float:
        # the bump is unimodal: total variation is twice the peak
        return 2.0 * self.sup_norm


def as_kernel(kernel) -> Kernel:
    return kernel if isinstance(kernel, Kernel) else Kernel(str(kernel))


# ---------------------------------------------------------------------------
# subgraph indicator and extension

def indicator_subgraph(u, x, t):
    """1 where t <= u(x), else 0."""
    ux = np.asarray(u(x), dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(ux)):
        raise InputError("u must be finite at x")
    return (t <= ux).astype(int)


def _as_pl(u, a=0.0, b=1.0, n=4096, beta=3.0) -> PLFunction:
    if isinstance(u, PLFunction):
        return u
    mesh = Mesh1D.graded(n, beta, a, b)
    return PLFunction(mesh, np.asarray(u(mesh.nodes), dtype=float))


def _default_phi(u: PLFunction):
    a, b = u.mesh.a, u.mesh.b
    ua, ub = float(u.values[0]), float(u.values[-1])
    slope = (ub - ua) / (b - a)
    return lambda x: ua + slope * (np.asarray(x, dtype=float) - a)


class Extension:
    """u on [a, b] continued by the datum phi on a margin on both sides.

    Stored as one PL function on the extended interval, split into maximal
    monotone runs; cells touching a NaN node form poisoned runs.
    """

    def __init__(self, u: PLFunction, phi: Callable | None = None, margin: float | None = None,
                 n_margin: int = 64):
        self.u = u
        self.a, self.b = u.mesh.a, u.mesh.b
        self.phi = phi if phi is not None else _default_phi(u)
        self.margin = 0.25 * (self.b - self.a) if margin is None else float(margin)
        if self.margin <= 0:
            raise InputError("margin must be positive")
        left = np.linspace(self.a - self.margin, self.a, n_margin + 1)[:-1]
        right = np.linspace(self.b, self.b + self.margin, n_margin + 1)[1:]
        self.nodes = np.concatenate([left, u.nodes, right])
        self.values = np.concatenate([self.phi(left), u.values, self.phi(right)]).astype(float)
        fin = self.values[np.isfinite(self.values)]
        self.M = float(np.max(np.abs(fin))) if fin.size else 0.0
        self.runs = self._split_runs()

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.nodes, self.values)

    def _split_runs(self):
        v = self.values
        bad = ~(np.isfinite(v[:-1]) & np.isfinite(v[1:]))
        dv = np.where(bad, 0.0, np.diff(v))
        runs = []
        start, direction, poisoned = 0, 0, bool(bad[0])
        for k in range(dv.size):
            if bool(bad[k]) != poisoned:
                runs.append((start, k, direction, poisoned))
                start, direction, poisoned = k, 0, bool(bad[k])
                if poisoned:
                    continue
            if poisoned:
                continue
            sgn = int(np.sign(dv[k]))
            if sgn == 0:
                continue
            if direction == 0:
                direction = sgn
            elif sgn != direction:
                runs.append((start, k, direction, False))
                start, direction = k, sgn
        runs.append((start, dv.size, direction, poisoned))
        return [(i0, i1, d if d != 0 else 1, p) for i0, i1, d, p in runs]

    @property
    def lo(self) -> float:
        return float(self.nodes[0])

    @property
    def hi(self) -> float:
        return float(self.nodes[-1])


# ---------------------------------------------------------------------------
# slack function

@dataclass(frozen=True)
class SlackFunction:
    """Positive decreasing alpha: piecewise linear on [-M, M] with slope
    -(c0 + S), S the larger of the level-set energy densities of u sampled
    just inside the two ends of each grid interval, and exponential tails of
    rate 1 outside."""
    grid: np.ndarray
    values: np.ndarray
    rate: np.ndarray
    c0: float
    M: float

    @property
    def slopes(self) -> np.ndarray:
        return -self.rate

    @property
    def c_M(self) -> float:
        return float(np.min(-self.slopes))

    @property
    def sup_norm(self) -> float:
        return float(self.values[0] + self.c0)

    @property
    def tail_T(self) -> float:
        """alpha < 1e-6 for t beyond this."""
        return self.M + max(0.0, float(np.log(self.c0 / 1e-6)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        M, c0 = self.M, self.c0
        above = c0 * np.exp(-np.maximum(t - M, 0.0))
        below = self.values[0] + c0 * (1.0 - np.exp(-np.maximum(-M - t, 0.0)))
        if self.grid.size > 1:
            mid = np.interp(t, self.grid, self.values)
        else:
            mid = np.full(t.shape, float(self.values[0]))
        return np.where(t > M, above, np.where(t < -M, below, mid))

    def prime(self, t):
        t = np.asarray(t, dtype=float)
        M, c0 = self.M, self.c0
        sl = self.slopes
        if self.grid.size > 1:
            k = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, sl.size - 1)
            mid = sl[k]
        else:
            mid = np.full(t.shape, -c0)
        return np.where(t > M, -c0 * np.exp(-(t - M)),
                        np.where(t < -M, -c0 * np.exp(-(-M - t)), mid))


def level_density(lag, nodes, values, t, p: float):
    """Sum over crossings z of u = t of (f(z, t, m) + |m|^p) / |m|, with m the cell slope.

    Each cell counts t in [min, max) of its end values; flat cells never count.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x0, x1 = nodes[:-1], nodes[1:]
    u0, u1 = values[:-1], values[1:]
    ok = np.isfinite(u0) & np.isfinite(u1) & (u0 != u1)
    x0, x1, u0, u1 = x0[ok], x1[ok], u0[ok], u1[ok]
    lo, hi = np.minimum(u0, u1), np.maximum(u0, u1)
    ts = np.sort(t)
    order = np.argsort(t)
    j0 = np.searchsorted(ts, lo, side="left")
    j1 = np.searchsorted(ts, hi, side="left")
    cnt = j1 - j0
    out = np.zeros(t.size)
    if cnt.sum() == 0:
        return out
    cell = np.repeat(np.arange(cnt.size), cnt)
    offs = np.arange(cell.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    j = j0[cell] + offs
    tt = ts[j]
    m = (u1[cell] - u0[cell]) / (x1[cell] - x0[cell])
    z = x0[cell] + (tt - u0[cell]) / m
    am = np.abs(m)
    val = (lag.eval(z, tt, m) + am ** p) / am
    np.add.at(out, order[j], val)
    return out


def build_alpha(lag, u, p: float | None = None, c0: float = 1.0, n_grid: int = 4097) -> SlackFunction:
    """Slack function for u (a PLFunction or an Extension, whose crossings
    on the margin are then counted too)."""
    if lag.dim != 1:
        raise InputError("the slack construction is one-dimensional")
    if c0 <= 0:
        raise InputError("c0 must be positive")
    nodes, values = np.asarray(u.nodes), np.asarray(u.values)
    fin = values[np.isfinite(values)]
    if fin.size == 0 or np.any(np.isinf(values)):
        raise InputError("u must be bounded")
    p = float(lag.p if p is None else p)
    M = float(np.max(np.abs(fin)))
    if M == 0.0:
        return SlackFunction(np.array([0.0]), np.array([c0]), np.array([float(c0)]), float(c0), 0.0)
    # node values are breakpoints of the crossing pattern; between them S is
    # smooth and is sampled just inside both ends of each interval
    grid = np.union1d(np.linspace(-M, M, n_grid), fin)
    grid = grid[np.concatenate([[True], np.diff(grid) > 1e-13 * M])]
    grid[-1] = M
    dt = np.diff(grid)
    S_right = level_density(lag, nodes, values, grid[:-1] + 1e-6 * dt, p)
    S_left = level_density(lag, nodes, values, grid[1:] - 1e-6 * dt, p)
    g = c0 + np.maximum(S_right, S_left)
    tail = np.concatenate([np.cumsum((g * np.diff(grid))[::-1])[::-1], [0.0]])
    return SlackFunction(grid, c0 + tail, g, float(c0), M)


# ---------------------------------------------------------------------------
# mollified subgraph

class SubgraphField:
    """v(x, t) = int 1_u(x - y, t) rho_eps(y) dy + delta * alpha(t)."""

    def __init__(self, ext: Extension, kernel: Kernel, eps: float, delta: float,
                 alpha: SlackFunction):
        self.ext = ext
        self.kernel = kernel
        self.eps = float(eps)
        self.delta = float(delta)
        self.alpha = alpha
        self.M = ext.M

    @property
    def eps0(self) -> float:
        return self.ext.margin / self.kernel.reach

    def conv(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        ext, eps, K = self.ext, self.eps, self.kernel
        zlo, zhi = K.support
        W1, W2 = x - eps * zhi, x - eps * zlo
        total = np.zeros(x.shape)
        nodes, vals = ext.nodes, ext.values
        for i0, i1, direction, poisoned in ext.runs:
            wl, wr = nodes[i0], nodes[i1]
            hit = (wr > W1) & (wl < W2)
            if not np.any(hit):
                continue
            if poisoned:
                total = np.where(hit, np.nan, total)
                continue
            w, v = nodes[i0:i1 + 1], vals[i0:i1 + 1]
            if direction > 0:
                j = np.searchsorted(v, t, side="left")
                jc = np.clip(j, 1, v.size - 1)
                frac = (t - v[jc - 1]) / np.where(v[jc] > v[jc - 1], v[jc] - v[jc - 1], 1.0)
                s1 = np.where(j == 0, wl, w[jc - 1] + frac * (w[jc] - w[jc - 1]))
                s2 = np.full(x.shape, wr)
                empty = j >= v.size
            else:
                vr, wrev = v[::-1], w[::-1]
                j = np.searchsorted(vr, t, side="left")
                jc = np.clip(j, 1, vr.size - 1)
                frac = (t - vr[jc - 1]) / np.where(vr[jc] > vr[jc - 1], vr[jc] - vr[jc - 1], 1.0)
                s2 = np.where(j == 0, wr, wrev[jc - 1] + frac * (wrev[jc] - wrev[jc - 1]))
                s1 = np.full(x.shape, wl)
                empty = j >= vr.size
            lo = np.maximum(s1, W1)
            hi = np.minimum(s2, W2)
            keep = hit & ~empty & (hi > lo)
            if np.any(keep):
                mass = K.cdf((x[keep] - lo[keep]) / eps) - K.cdf((x[keep] - hi[keep]) / eps)
                total[keep] += mass
        M = self.M
        return np.where(t <= -M, 1.0, np.where(t > M, 0.0, total))

    def __call__(self, x, t):
        return self.conv(x, t) + self.delta * self.alpha(t)

    def M_s(self, s: float) -> float:
        """Bound on |u^s| valid for every eps and every delta <= 1."""
        return self.M + max(0.0, float(np.log(self.alpha.c0 / s)))

    @property
    def cbar(self) -> float:
        """Lipschitz constant of the inverse times eps."""
        return self.kernel.deriv_l1 / (self.delta * self.alpha.c_M)


def smooth_field(u, kernel, eps: float, alpha: SlackFunction | None, delta: float,
                 phi: Callable | None = None, margin: float | None = None,
                 lag=None, p: float | None = None, c0: float = 1.0) -> SubgraphField:
    kernel = as_kernel(kernel)
    ext = u if isinstance(u, Extension) else Extension(_as_pl(u), phi, margin)
    if not 0.0 < delta < 1.0:
        raise InputError("delta must lie in (0, 1)")
    eps0 = ext.margin / kernel.reach
    if not 0.0 < eps < eps0:
        raise DomainError(f"eps={eps:g} must lie in (0, {eps0:g}); widen the margin")
    if alpha is None:
        if lag is None:
            raise InputError("pass alpha or a Lagrangian to build it")
        alpha = build_alpha(lag, ext, p, c0)
    return SubgraphField(ext, kernel, eps, delta, alpha)


# ---------------------------------------------------------------------------
# generalized inverse

def generalized_inverse(v, x, s: float, tol: float = 1e-10, bracket=None):
    """inf{t : v(x, t) <= s} by bisection, finished with one secant step.

    ``v`` is a SubgraphField (bracket [-M_s, M_s]) or any callable
    nonincreasing in t together with a ``bracket`` (lo, hi).
    """
    if not 0.0 < s < 1.0:
        raise InputError("s must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    if bracket is None:
        if not isinstance(v, SubgraphField):
            raise InputError("a bracket is required for a plain callable")
        ms = v.M_s(s)
        lo_v, hi_v = -ms, ms
    else:
        lo_v, hi_v = map(float, bracket)
    lo = np.full(x.shape, lo_v)
    hi = np.full(x.shape, hi_v)
    f_lo = np.asarray(v(x, lo), dtype=float)
    f_hi = np.asarray(v(x, hi), dtype=float)
    if np.any(f_hi > s) or np.any(f_lo <= s):
        raise InputError("bracket does not enclose the level s")
    n_iter = int(np.ceil(np.log2(max(hi_v - lo_v, tol) / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        fm = np.asarray(v(x, mid), dtype=float)
        below = fm <= s
        hi = np.where(below, mid, hi)
        f_hi = np.where(below, fm, f_hi)
        lo = np.where(below, lo, mid)
        f_lo = np.where(below, f_lo, fm)
    gap = f_lo - f_hi
    lam = np.where(gap > 0, (f_lo - s) / np.where(gap > 0, gap, 1.0), 1.0)
    return lo + np.clip(lam, 0.0, 1.0) * (hi - lo)


# ---------------------------------------------------------------------------
# approximants

@dataclass
class Approximant:
    u: PLFunction
    field: SubgraphField
    s: float
    certificates: dict = dc_field(default_factory=dict)


def _refine(inv, x, y, lag, rtol, max_nodes, levels):
    """Split cells whose energy changes by more than rtol of the mean cell energy."""
    from .mesh import cell_energies
    for _ in range(levels):
        xm = 0.5 * (x[:-1] + x[1:])
        ym = inv(xm)
        e0 = cell_energies(lag, x[:-1], x[1:], y[:-1], y[1:])
        e1 = (cell_energies(lag, x[:-1], xm, y[:-1], ym) + cell_energies(lag, xm, x[1:], ym, y[1:]))
        tau = rtol * max(float(np.sum(e1)), 1e-300) / 1024.0
        bad = np.abs(e1 - e0) > tau
        bad &= np.diff(x) > 1e-12 * (x[-1] - x[0])
        if not np.any(bad) or x.size + int(bad.sum()) > max_nodes:
            break
        x = np.insert(x, np.flatnonzero(bad) + 1, xm[bad])
        y = np.insert(y, np.flatnonzero(bad) + 1, ym[bad])
    return x, y


def certify(field: SubgraphField, u: PLFunction, s: float, tol: float = 1e-10) -> dict:
    """Boundedness and Lipschitz-rank certificates; raises CertificateError on failure."""
    ms = field.M_s(s)
    sup = float(np.max(np.abs(u.values)))
    if not sup <= ms + tol:
        k = int(np.argmax(np.abs(u.values)))
        raise CertificateError(f"|u^s| = {sup:.6g} exceeds M_s = {ms:.6g} at x = {u.nodes[k]:.6g}",
                               pair=(float(u.nodes[k]), float(u.nodes[k])))
    bound = field.cbar / field.eps
    h = u.mesh.h
    du = np.abs(np.diff(u.values))
    slack = du - bound * h * (1.0 + 1e-9) - 4.0 * tol
    if np.any(slack > 0):
        k = int(np.argmax(slack))
        raise CertificateError(f"slope {du[k] / h[k]:.6g} exceeds cbar/eps = {bound:.6g}",
                               pair=(float(u.nodes[k]), float(u.nodes[k + 1])))
    rank = float(np.max(du / h))
    return {"M_s": ms, "sup": sup, "rank": rank, "rank_bound": bound,
            "rank_ratio": rank / bound, "cbar": field.cbar, "c_M": field.alpha.c_M,
            "alpha_sup": field.alpha.sup_norm, "nodes": int(u.nodes.size)}


def coupling_check(field: SubgraphField, n: int = 1000, seed: int = 0) -> float:
    """max of v(x, t + cbar|x-y|/eps) - v(y, t) over random triples; <= 0 when the
    coupling inequality holds."""
    rng = np.random.default_rng(seed)
    a, b = field.ext.a, field.ext.b
    x = rng.uniform(a, b, n)
    y = rng.uniform(a, b, n)
    ms = field.M_s(0.5) + 1.0
    t = rng.uniform(-ms, ms, n)
    h = field.cbar * np.abs(x - y) / field.eps
    return float(np.max(field(x, t + h) - field(y, t)))


def approximate(u, lag, eps: float, delta: float, s: float = 0.5, out_mesh: Mesh1D | None = None,
                kernel="decentered", phi: Callable | None = None, margin: float | None = None,
                alpha: SlackFunction | None = None, c0: float = 1.0, p: float | None = None,
                refine: bool = True, rtol: float = 1e-3, max_nodes: int = 200_000,
                tol: float = 1e-10) -> Approximant:
    """Level-s inverse of the mollified subgraph of u, sampled on out_mesh
    (refined adaptively where the energy is not yet resolved)."""
    upl = _as_pl(u)
    kernel = as_kernel(kernel)
    if margin is None:
        margin = max(0.25 * (upl.mesh.b - upl.mesh.a), 2.0 * eps * kernel.reach)
    ext = Extension(upl, phi, margin)
    fld = smooth_field(ext, kernel, eps, alpha, delta, lag=lag, p=p, c0=c0)
    if out_mesh is None:
        out_mesh = Mesh1D.uniform(1024, upl.mesh.a, upl.mesh.b)
    if abs(out_mesh.a - upl.mesh.a) > 1e-12 or abs(out_mesh.b - upl.mesh.b) > 1e-12:
        raise InputError("out_mesh must cover the domain of u")

    def inv(xs):
        return generalized_inverse(fld, xs, s, tol=tol)

    x = out_mesh.nodes
    y = inv(x)
    if refine:
        x, y = _refine(inv, x, y, lag, rtol, max_nodes, levels=40)
    pl = PLFunction(Mesh1D(x), y)
    cert = certify(fld, pl, s, tol)
    return Approximant(pl, fld, s, cert)


# ---------------------------------------------------------------------------
# boundary matching

def _lipschitz_of(phi, lo, hi, n=20_001):
    def slope(m):
        xs = np.linspace(lo, hi, m)
        return float(np.max(np.abs(np.diff(phi(xs)) / np.diff(xs))))
    s1, s2 = slope(n), slope(4 * n - 3)
    if not np.isfinite(s2) or s2 > 1.05 * s1 + 1e-12:
        raise InputError("phi does not look Lipschitz on the extended domain")
    return s2


@dataclass
class BoundaryMatch:
    u: PLFunction
    unmatched: PLFunction
    side: str
    band: float
    L_phi: float
    deviation: float
    deviation_bound: float
    K: float
    energy_change: float | None
    energy_bound: float | None
    slack_ok: bool = True


def boundary_match(u, phi: Callable, eps: float, delta: float, s: float = 0.5, lag=None,
                   side: str = "left", out_mesh: Mesh1D | None = None, L_phi: float | None = None,
                   margin: float | None = None, band_nodes: int = 64, **kw) -> BoundaryMatch:
    """Approximant equal to phi at one endpoint.

    A decentered kernel makes v near the endpoint depend only on phi; the
    approximant is then blended into phi with a smooth cutoff on a band of
    width eps/8.
    """
    from .lagrangians import make_quadratic
    if side not in ("left", "right"):
        raise InputError("side must be 'left' or 'right'")
    upl = _as_pl(u)
    a, b = upl.mesh.a, upl.mesh.b
    kernel = Kernel("decentered" if side == "left" else "decentered_right")
    if margin is None:
        margin = max(0.25 * (b - a), 2.0 * eps)
    if L_phi is None:
        L_phi = _lipschitz_of(phi, a - margin, b + margin)
    if not np.isfinite(L_phi):
        raise InputError("phi must be Lipschitz")
    lag = lag if lag is not None else make_quadratic()
    band = eps / 8.0
    if out_mesh is None:
        out_mesh = Mesh1D.uniform(1024, a, b)
    end = a if side == "left" else b
    inner = end + band if side == "left" else end - band
    extra = np.linspace(min(end, inner), max(end, inner), band_nodes + 1)
    nodes = np.union1d(out_mesh.nodes, extra)
    res = approximate(upl, lag, eps, delta, s, Mesh1D(nodes), kernel=kernel, phi=phi,
                      margin=margin, **kw)
    ub = res.u
    x, y = ub.nodes, ub.values
    dist = (x - a) if side == "left" else (b - x)
    in_band = dist <= band * (1 + 1e-12)
    dev = float(np.max(np.abs(y[in_band] - phi(x[in_band]))))
    # smooth cutoff: 0 at the endpoint, 1 from the inner edge of the band on
    theta = Kernel("centered").cdf(2.0 * np.clip(dist / band, 0.0, 1.0) - 1.0)
    theta = np.where(dist >= band, 1.0, theta)
    theta = np.where(dist <= 0.0, 0.0, theta)
    w = phi(x) + theta * (y - phi(x))
    matched = PLFunction(ub.mesh, w)
    K = e_change = e_bound = None
    if lag.dim == 1:
        sl_m = np.abs(matched.slopes)
        sl_u = np.abs(ub.slopes)
        cells = (np.minimum(dist[:-1], dist[1:]) < band)
        m = float(np.max(np.concatenate([np.abs(w[in_band]), np.abs(y[in_band]),
                                         sl_m[cells], sl_u[cells]])))
        bdom = interval(min(end, inner), max(end, inner))
        K = lem_bdd_sup(lag, bdom, 1.05 * m + 1e-12, n_x=9, n_t=33, n_xi=129)
        e_change = abs(energy(lag, matched) - energy(lag, ub))
        e_bound = 2.0 * band * K
    # with delta*alpha >= s somewhere the inverse is lifted to a flat level and
    # the deviation bound no longer applies
    slack_ok = bool(delta * res.field.alpha.sup_norm < s)
    return BoundaryMatch(matched, ub, side, band, float(L_phi), dev, float(L_phi) * eps,
                         K, e_change, e_bound, slack_ok)


# ---------------------------------------------------------------------------
# schedules

@dataclass
class SchemeTable:
    rows: list
    target_energy: float | None
    meta: dict = dc_field(default_factory=dict)

    COLUMNS = ("n", "eps", "delta", "l1_error", "rank", "energy", "target_energy")

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r["n"]] + [repr(float(r[c])) if r[c] is not None else "" for c in self.COLUMNS[1:]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": self.rows, "target_energy": self.target_energy, "meta": self.meta}


def default_schedule(n_max: int = 9, n_min: int = 1):
    """(eps_n, delta_n) = (min(2^-n, delta_n^2), 2^(-n/2))."""
    out = []
    for n in range(n_min, n_max + 1):
        d = 2.0 ** (-n / 2.0)
        out.append((min(2.0 ** -n, d * d), d))
    return out


def run_scheme(u, lag, schedule: Sequence[tuple] | None = None, s: float = 0.5,
               out_mesh: Mesh1D | None = None, target_energy: float | None = None,
               kernel="decentered", phi: Callable | None = None, c0: float = 1.0,
               p: float | None = None, s_fallback: Sequence[float] = (0.37, 0.61),
               coupling_samples: int = 1000, seed: int = 0, source_n: int = 4096,
               keep: bool = False, workers: int = 1, **kw) -> SchemeTable:
    """Approximants along a schedule of (eps, delta), with errors, ranks and energies.

    Rows are independent given the shared extension and slack function and
    may run on ``workers`` threads; the table keeps schedule order.
    """
    schedule = list(default_schedule() if schedule is None else schedule)
    if not schedule:
        raise InputError("empty schedule")
    upl = _as_pl(u, n=source_n)
    a, b = upl.mesh.a, upl.mesh.b
    kernel = as_kernel(kernel)
    eps_max = max(e for e, _ in schedule)
    margin = max(0.25 * (b - a), 2.0 * eps_max * kernel.reach)
    ext = Extension(upl, phi, margin)
    alpha = build_alpha(lag, ext, p, c0)
    if target_energy is None:
        target_energy = energy(lag, upl, quad_order=10)
    def row(n, eps, delta):
        res, used = None, None
        for s_try in (s, *s_fallback):
            try:
                res = approximate(upl, lag, eps, delta, s_try, out_mesh, kernel=kernel, phi=phi,
                                  margin=margin, alpha=alpha, **kw)
                used = s_try
                break
            except CertificateError:
                continue
        if res is None:
            raise CertificateError(f"certificates fail at every s for eps={eps:g}")
        un = res.u
        err = l1_error(un, u) if not isinstance(u, PLFunction) else l1_distance(un, u)
        coup = coupling_check(res.field, coupling_samples, seed + n) if coupling_samples else None
        cert = res.certificates
        return res, {"n": n, "eps": float(eps), "delta": float(delta), "s": used,
                     "l1_error": float(err), "rank": cert["rank"], "rank_bound": cert["rank_bound"],
                     "sup": cert["sup"], "M_s": cert["M_s"], "coupling": coup,
                     "energy": energy(lag, un), "target_energy": float(target_energy),
                     "nodes": cert["nodes"]}

    jobs = [(n, e, d) for n, (e, d) in enumerate(schedule, start=1)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda j: row(*j), jobs))
    else:
        out = [row(*j) for j in jobs]
    rows = [r for _, r in out]
    approx = [a for a, _ in out] if keep else []
    meta = {"kernel": kernel.variant, "margin": margin, "c0": c0, "c_M": alpha.c_M,
            "alpha_sup": alpha.sup_norm, "M": ext.M, "s": s}
    table = SchemeTable(rows, float(target_energy), meta)
    if keep:
        table.approximants = approx
    return table
