"""Piecewise-linear functions on 1D meshes, energy quadrature and a
derivative-free nodal minimizer."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh1D:
    nodes: np.ndarray
    kind: str = "custom"
    beta: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", x)
        if x.ndim != 1 or x.size < 2:
            raise InputError("a mesh needs at least two nodes")
        if np.any(np.diff(x) <= 0):
            raise InputError("mesh nodes must be strictly increasing")

    @classmethod
    def uniform(cls, n: int, a: float = 0.0, b: float = 1.0) -> "Mesh1D":
        if n < 1:
            raise InputError("n must be >= 1")
        return cls(np.linspace(a, b, n + 1), "uniform", 1.0)

    @classmethod
    def graded(cls, n: int, beta: float, a: float = 0.0, b: float = 1.0) -> "Mesh1D":
        """Nodes a + (b - a)(i/n)^beta, clustered at a for beta > 1."""
        if n < 1 or beta < 1:
            raise InputError("need n >= 1 and beta >= 1")
        x = a + (b - a) * (np.arange(n + 1) / n) ** beta
        x[-1] = b
        return cls(x, "graded", float(beta))

    @property
    def n(self) -> int:
        return self.nodes.size - 1

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    def spec(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.n}"
        if self.kind == "graded":
            return f"graded:{self.n}:{self.beta:g}"
        return f"custom:{self.n}"


def parse_mesh(text: str, a: float = 0.0, b: float = 1.0) -> Mesh1D:
    """``uniform:n`` or ``graded:n:beta``."""
    parts = text.split(":")
    try:
        if parts[0] == "uniform" and len(parts) == 2:
            return Mesh1D.uniform(int(parts[1]), a, b)
        if parts[0] == "graded" and len(parts) == 3:
            return Mesh1D.graded(int(parts[1]), float(parts[2]), a, b)
    except ValueError as exc:
        raise InputError(f"bad mesh spec {text!r}: {exc}") from None
    raise InputError(f"bad mesh spec {text!r}; use uniform:n or graded:n:beta")


@dataclass(frozen=True)
class PLFunction:
    mesh: Mesh1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != self.mesh.nodes.shape:
            raise InputError("one nodal value per mesh node is required")

    @property
    def nodes(self) -> np.ndarray:
        return self.mesh.nodes

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.mesh.h

    @property
    def lipschitz_rank(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.nodes, self.values)

    def with_values(self, values) -> "PLFunction":
        return PLFunction(self.mesh, np.asarray(values, dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, u in zip(self.nodes, self.values):
            w.writerow([repr(float(x)), repr(float(u))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PLFunction":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(Mesh1D(data[:, 0]), data[:, 1])


def interpolate(u: Callable, mesh: Mesh1D) -> PLFunction:
    vals = np.asarray(u(mesh.nodes), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InputError("u is not finite at every node")
    return PLFunction(mesh, vals)


# ---------------------------------------------------------------------------
# energy

_GL_CACHE: dict = {}


def gauss_legendre(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def cell_energies(lag, xl, xr, ul, ur, quad_order: int = 5) -> np.ndarray:
    """Gauss-Legendre energy of the linear piece from (xl, ul) to (xr, ur), per cell."""
    g, w = gauss_legendre(quad_order)
    xl = np.asarray(xl, dtype=float)[..., None]
    xr = np.asarray(xr, dtype=float)[..., None]
    ul = np.asarray(ul, dtype=float)[..., None]
    ur = np.asarray(ur, dtype=float)[..., None]
    h = xr - xl
    lam = 0.5 * (1.0 + g)
    xq = xl + h * lam
    uq = ul + (ur - ul) * lam
    m = (ur - ul) / h
    vals = lag.eval(xq, uq, np.broadcast_to(m, xq.shape))
    return 0.5 * h[..., 0] * np.sum(w * vals, axis=-1)


def energy(lag, u: PLFunction, quad_order: int = 5) -> float:
    """int f(x, u, u') dx on a 1D mesh, with the cell slope as u'."""
    if quad_order < 1:
        raise InputError("quad_order must be >= 1")
    if lag.dim != 1:
        raise InputError("energy on meshes needs a 1D integrand")
    x, v = u.nodes, u.values
    return float(np.sum(cell_energies(lag, x[:-1], x[1:], v[:-1], v[1:], quad_order)))


def energy_2d(lag, xs, ys, U, quad_order: int = 3) -> float:
    """Energy of the bilinear interpolant of U on the tensor grid xs x ys."""
    g, w = gauss_legendre(quad_order)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    U = np.asarray(U, dtype=float)
    hx = np.diff(xs)[:, None, None, None]
    hy = np.diff(ys)[None, :, None, None]
    a = (0.5 * (1 + g))[None, None, :, None]
    b = (0.5 * (1 + g))[None, None, None, :]
    u00, u10 = U[:-1, :-1, None, None], U[1:, :-1, None, None]
    u01, u11 = U[:-1, 1:, None, None], U[1:, 1:, None, None]
    uq = u00 * (1 - a) * (1 - b) + u10 * a * (1 - b) + u01 * (1 - a) * b + u11 * a * b
    ux = ((u10 - u00) * (1 - b) + (u11 - u01) * b) / hx
    uy = ((u01 - u00) * (1 - a) + (u11 - u10) * a) / hy
    X = xs[:-1, None, None, None] + hx * a
    Y = ys[None, :-1, None, None] + hy * b
    X, Y, uq, ux, uy = np.broadcast_arrays(X, Y, uq, ux, uy)
    vals = lag.eval(np.stack([X, Y], -1), uq, np.stack([ux, uy], -1))
    W = (w[:, None] * w[None, :])[None, None]
    return float(np.sum(0.25 * hx * hy * W * vals))


def l1_distance(u: PLFunction, v: PLFunction) -> float:
    """Exact int |u - v| for two PL functions on the same interval."""
    if abs(u.mesh.a - v.mesh.a) > 1e-14 or abs(u.mesh.b - v.mesh.b) > 1e-14:
        raise InputError("PL functions live on different intervals")
    x = np.union1d(u.nodes, v.nodes)
    d = u(x) - v(x)
    h = np.diff(x)
    d0, d1 = d[:-1], d[1:]
    same = d0 * d1 >= 0
    out = np.where(same, 0.5 * h * np.abs(d0 + d1), 0.0)
    # sign change inside the cell: two triangles
    den = np.where(same, 1.0, np.abs(d0) + np.abs(d1))
    out = np.where(same, out, 0.5 * h * (d0 * d0 + d1 * d1) / den)
    return float(np.sum(out))


def l1_error(u: PLFunction, target: Callable, quad_order: int = 20, subdivide: int = 4) -> float:
    """int |u - target| by composite Gauss-Legendre on each cell split ``subdivide`` times."""
    g, w = gauss_legendre(quad_order)
    x = u.nodes
    t = np.linspace(0.0, 1.0, subdivide + 1)
    xl = (x[:-1, None] + np.diff(x)[:, None] * t[None, :-1]).ravel()
    xr = (x[:-1, None] + np.diff(x)[:, None] * t[None, 1:]).ravel()
    xq = xl[:, None] + (xr - xl)[:, None] * 0.5 * (1 + g)[None, :]
    vals = np.abs(u(xq) - target(xq))
    return float(np.sum(0.5 * (xr - xl) * np.sum(w * vals, axis=1)))


def quad_energy(lag, u: Callable, du: Callable, a: float, b: float, n: int = 4096,
                beta: float = 8.0, quad_order: int = 10) -> float:
    """Energy of a smooth (possibly endpoint-singular) u by graded composite quadrature."""
    x = Mesh1D.graded(n, beta, a, b).nodes
    g, w = gauss_legendre(quad_order)
    h = np.diff(x)[:, None]
    xq = x[:-1, None] + h * 0.5 * (1 + g)[None, :]
    vals = lag.eval(xq, u(xq), du(xq))
    return float(np.sum(0.5 * h * w * vals))


# ---------------------------------------------------------------------------
# minimizer

_GOLD = (np.sqrt(5.0) - 1.0) / 2.0


def _local_energy(lag, x, u, idx, v, quad_order):
    """Energy of the two cells around nodes ``idx`` with u[idx] replaced by v."""
    return (cell_energies(lag, x[idx - 1], x[idx], u[idx - 1], v, quad_order)
            + cell_energies(lag, x[idx], x[idx + 1], v, u[idx + 1], quad_order))


def _golden(fun, lo, hi, tol):
    """Vectorized golden-section search, one function evaluation per step."""
    a, b = lo.copy(), hi.copy()
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = fun(c), fun(d)
    while np.max(b - a) > tol:
        left = fc <= fd
        # left: minimum in [a, d]; keep c as the new d
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        keep = np.where(left, c, d)
        fkeep = np.where(left, fc, fd)
        new = np.where(left, b - _GOLD * (b - a), a + _GOLD * (b - a))
        fnew = fun(new)
        c = np.where(left, new, keep)
        d = np.where(left, keep, new)
        fc = np.where(left, fnew, fkeep)
        fd = np.where(left, fkeep, fnew)
    return 0.5 * (a + b)


def _sweep(lag, x, u, quad_order, tol):
    """One red-black pass: nodes of one parity do not share cells, so they
    are updated together exactly as a sequential pass would."""
    for parity in (1, 2):
        idx = np.arange(parity, x.size - 1, 2)
        if idx.size == 0:
            continue
        cur = u[idx]
        span = np.abs(u[idx + 1] - u[idx - 1])
        half = span + 1.0
        lo, hi = cur - half, cur + half
        fun = lambda v: _local_energy(lag, x, u, idx, v, quad_order)
        scale = 1.0 + np.max(np.abs(u))
        cand = _golden(fun, lo, hi, tol * scale)
        # a hit on the bracket edge widens the bracket once
        edge = (np.abs(cand - lo) < 1e-6 * half) | (np.abs(cand - hi) < 1e-6 * half)
        if np.any(edge):
            cand2 = _golden(fun, cur - 4 * half, cur + 4 * half, tol * scale)
            cand = np.where(edge, cand2, cand)
        e_old = fun(cur)
        e_new = fun(cand)
        better = e_new < e_old
        u[idx] = np.where(better, cand, cur)
    return u


def minimize_energy(lag, mesh: Mesh1D, bc: tuple, init: PLFunction | None = None,
                    iters: int = 200, restarts: int = 0, quad_order: int = 5,
                    tol: float = 1e-12, line_tol: float = 1e-10, seed: int = 0,
                    history: list | None = None):
    """Cyclic coordinate descent over interior nodal values.

    Each nodal update is a golden-section search and is accepted only if it
    lowers the energy, so the energy is nonincreasing across sweeps. Returns
    ``(best PLFunction, its energy)``.
    """
    ua, ub = map(float, bc)
    if init is None:
        init = PLFunction(mesh, ua + (ub - ua) * (mesh.nodes - mesh.a) / (mesh.b - mesh.a))
    if init.mesh.nodes.shape != mesh.nodes.shape or np.any(init.mesh.nodes != mesh.nodes):
        raise InputError("init lives on a different mesh")
    if abs(init.values[0] - ua) > 1e-12 or abs(init.values[-1] - ub) > 1e-12:
        raise InputError("init violates the boundary values")
    e0 = energy(lag, init, quad_order)
    if not np.isfinite(e0):
        raise InputError("energy of the initial guess is not finite")
    x = mesh.nodes
    rng = np.random.default_rng(seed)

    def descend(u):
        e = energy(lag, PLFunction(mesh, u), quad_order)
        hist = [e]
        for _ in range(iters):
            u = _sweep(lag, x, u, quad_order, line_tol)
            e_new = energy(lag, PLFunction(mesh, u), quad_order)
            hist.append(e_new)
            if e - e_new <= tol * max(abs(e), 1.0):
                e = min(e, e_new)
                break
            e = e_new
        return u, e, hist

    best_u, best_e, hist = descend(init.values.copy())
    if history is not None:
        history.append(hist)
    osc = float(np.ptp(best_u)) + 1e-12
    for _ in range(restarts):
        start = best_u.copy()
        start[1:-1] += 0.05 * osc * rng.standard_normal(start.size - 2)
        if not np.isfinite(energy(lag, PLFunction(mesh, start), quad_order)):
            continue
        u, e, hist = descend(start)
        if history is not None:
            history.append(hist)
        if e < best_e:
            best_u, best_e = u, e
    return PLFunction(mesh, best_u), float(best_e)


def prolong(u: PLFunction, mesh: Mesh1D) -> PLFunction:
    return PLFunction(mesh, u(mesh.nodes))


def minimize_nested(lag, mesh: Mesh1D, bc: tuple, coarse_levels: int = 4, **kw):
    """Minimize on a hierarchy of coarser meshes of the same kind, prolonging
    each result as the next initial guess."""
    sizes = [max(2, mesh.n >> k) for k in range(coarse_levels, 0, -1)]
    u = None
    for n in sizes:
        m = (Mesh1D.graded(n, mesh.beta, mesh.a, mesh.b) if mesh.kind == "graded"
             else Mesh1D.uniform(n, mesh.a, mesh.b))
        init = prolong(u, m) if u is not None else None
        u, _ = minimize_energy(lag, m, bc, init=init, **kw)
    init = prolong(u, mesh) if u is not None else None
    return minimize_energy(lag, mesh, bc, init=init, **kw)
