"""Integrands f(x, t, xi) and a catalog of parameterized examples.

Every integrand is a vectorized callable plus a little structural metadata.
For ``dim == 1`` the arguments ``x`` and ``xi`` are plain arrays; for
``dim >= 2`` they carry a trailing axis of length ``dim``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

STRUCTURES = ("isotropic", "orthotropic", "general")


class ParameterError(ValueError):
    """Raised when a constructor receives parameters outside its range."""


def _norm(v, dim):
    v = np.asarray(v, dtype=float)
    if dim == 1:
        return np.abs(v)
    if dim == 2:
        return np.hypot(v[..., 0], v[..., 1])
    return np.sqrt(np.sum(v * v, axis=-1))


def _dot(a, b, dim):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if dim == 2:
        return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    return np.sum(a * b, axis=-1)


@dataclass(frozen=True)
class Lagrangian:
    name: str
    dim: int
    func: Callable
    structure: str = "general"
    p: float = 1.0
    vanishes_at_zero: bool = False
    claims_delta2: bool = False
    claims_convex_in_xi: bool = False
    # radial profile r(x, t, s) with s = |xi|, for isotropic integrands
    radial: Callable | None = None
    # per-axis profiles f_i(x, t, |xi_i|), for orthotropic integrands
    axes: tuple | None = None
    params: Mapping = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        if self.structure not in STRUCTURES:
            raise ParameterError(f"unknown structure {self.structure!r}")
        if self.p < 1:
            raise ParameterError("growth exponent p must be >= 1")
        if self.structure == "orthotropic" and not self.axes:
            raise ParameterError("orthotropic integrands need per-axis parts")

    def eval(self, x, t, xi):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        xi = np.asarray(xi, dtype=float)
        return np.asarray(self.func(x, t, xi), dtype=float)

    __call__ = eval

    def eval_radial(self, x, t, s):
        """f(x, t, s e) for a unit vector e; only meaningful for isotropic f."""
        if self.radial is not None:
            return np.asarray(self.radial(np.asarray(x, float), np.asarray(t, float),
                                          np.asarray(s, float)), dtype=float)
        s = np.asarray(s, dtype=float)
        if self.dim == 1:
            return self.eval(x, t, s)
        xi = np.zeros(s.shape + (self.dim,))
        xi[..., 0] = s
        return self.eval(x, t, xi)

    def eval_axis(self, i, x, t, s):
        return np.asarray(self.axes[i](np.asarray(x, float), np.asarray(t, float),
                                       np.asarray(s, float)), dtype=float)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "structure": self.structure,
            "p": self.p,
            "vanishes_at_zero": self.vanishes_at_zero,
            "claims_delta2": self.claims_delta2,
            "claims_convex_in_xi": self.claims_convex_in_xi,
            "params": {k: v for k, v in self.params.items() if _jsonable(v)},
            "description": self.description,
        }


def _jsonable(v):
    return isinstance(v, (int, float, str, bool, list, tuple)) or v is None


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box with a Lipschitz boundary datum phi."""
    box: tuple
    phi: Callable = field(default=lambda x: np.zeros(np.shape(x)[:-1] if np.ndim(x) > 1 else np.shape(x)))
    L_phi: float = 0.0

    def __post_init__(self):
        for a, b in self.box:
            if not a < b:
                raise ParameterError(f"degenerate box side ({a}, {b})")
        if self.L_phi < 0:
            raise ParameterError("L_phi must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def lower(self):
        return np.array([a for a, _ in self.box], dtype=float)

    @property
    def upper(self):
        return np.array([b for _, b in self.box], dtype=float)

    @property
    def diam(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def project(self, x):
        """Nearest point of the closed box (componentwise clip)."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return np.clip(x, self.box[0][0], self.box[0][1])
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, closed=True):
        x = np.asarray(x, dtype=float)
        lo, hi = self.lower, self.upper
        if self.dim == 1:
            lo, hi = lo[0], hi[0]
            return (x >= lo) & (x <= hi) if closed else (x > lo) & (x < hi)
        if closed:
            return np.all((x >= lo) & (x <= hi), axis=-1)
        return np.all((x > lo) & (x < hi), axis=-1)

    def grid(self, n_per_axis):
        axes = [np.linspace(a, b, n_per_axis) for a, b in self.box]
        if self.dim == 1:
            return axes[0]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def check_phi(self, n=1000, seed=0) -> float:
        """Largest observed |phi(x)-phi(y)|/|x-y| on random pairs."""
        rng = np.random.default_rng(seed)
        lo, hi = self.lower, self.upper
        a = lo + (hi - lo) * rng.random((n, self.dim))
        b = lo + (hi - lo) * rng.random((n, self.dim))
        if self.dim == 1:
            a, b = a[:, 0], b[:, 0]
            d = np.abs(a - b)
        else:
            d = np.linalg.norm(a - b, axis=-1)
        q = np.abs(np.asarray(self.phi(a)) - np.asarray(self.phi(b))) / np.maximum(d, 1e-300)
        return float(np.max(q))


def interval(a=0.0, b=1.0, phi=None, L_phi=None) -> Domain:
    """1D domain (a, b); the boundary datum defaults to zero."""
    if phi is None:
        return Domain(((a, b),), phi=lambda x: np.zeros(np.shape(x)), L_phi=0.0)
    return Domain(((a, b),), phi=phi, L_phi=float(L_phi))


def affine_datum(a, b, ua, ub) -> tuple[Callable, float]:
    slope = (ub - ua) / (b - a)
    return (lambda x: ua + slope * (np.asarray(x, dtype=float) - a)), abs(slope)


# ---------------------------------------------------------------------------
# constructors

def make_mania() -> Lagrangian:
    def rad(x, t, s):
        return (t ** 3 - x) ** 2 * s ** 6

    return Lagrangian(
        name="mania", dim=1,
        func=lambda x, t, xi: rad(x, t, np.abs(xi)),
        radial=rad, structure="isotropic", p=1.0,
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        description="(t^3 - x)^2 xi^6",
    )


def make_ball_mizel(nu: float = 1.0) -> Lagrangian:
    if not nu > 0:
        raise ParameterError("nu must be positive")

    def rad(x, t, s):
        return (x ** 4 - t ** 6) ** 2 * s ** 27 + nu * s ** 2

    return Lagrangian(
        name="ball_mizel", dim=1,
        func=lambda x, t, xi: rad(x, t, np.abs(xi)),
        radial=rad, structure="isotropic", p=2.0,
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"nu": nu}, description="(x^4 - t^6)^2 |xi|^27 + nu |xi|^2",
    )


def make_cerf_mariconda() -> Lagrangian:
    def f(x, t, xi):
        t = np.asarray(t, dtype=float)
        xi = np.asarray(xi, dtype=float)
        safe = np.where(t == 0.0, 1.0, t)
        val = (xi - 1.0 / (2.0 * safe)) ** 2
        return np.where(t == 0.0, 0.0 * xi, val) + 0.0 * np.asarray(x)

    return Lagrangian(
        name="cerf_mariconda", dim=1, func=f, structure="general", p=2.0,
        vanishes_at_zero=False, claims_delta2=False, claims_convex_in_xi=True,
        description="(xi - 1/(2t))^2 for t != 0, 0 at t = 0",
    )


def _xnorm(x, dim):
    return _norm(x, dim)


def make_double_phase(p: float = 2.0, q: float = 2.5, kappa: float = 0.25,
                      weight: Callable | None = None, dim: int = 1,
                      b: Callable | None = None) -> Lagrangian:
    """|xi|^p + a(x,t)|xi|^q, default weight a(x,t) = |x|^kappa."""
    if p < 1:
        raise ParameterError("p must be >= 1")
    if q < p:
        raise ParameterError("q must be >= p")
    if weight is None:
        def weight(x, t):
            return _xnorm(x, dim) ** kappa
    bt = b if b is not None else (lambda t: 1.0)

    def rad(x, t, s):
        return bt(t) * (s ** p + weight(x, t) * s ** q)

    return Lagrangian(
        name="double_phase", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=float(p),
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"p": p, "q": q, "kappa": kappa, "C": 1.0},
        description="|xi|^p + a(x,t)|xi|^q",
    )


def make_variable_exponent(r0: float = 2.0, amp: float = 0.5, dim: int = 1) -> Lagrangian:
    """|xi|^{r(x,t)} with r(x,t) = r0 + amp |x| / (1 + t^2), Lipschitz hence log-Hoelder in x."""
    if r0 < 1 or amp < 0:
        raise ParameterError("need r0 >= 1 and amp >= 0")

    def expo(x, t):
        return r0 + amp * _xnorm(x, dim) / (1.0 + np.asarray(t, float) ** 2)

    def rad(x, t, s):
        return s ** expo(x, t)

    return Lagrangian(
        name="variable_exponent", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=float(r0),
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"r0": r0, "amp": amp}, description="|xi|^r(x,t)",
    )


def make_orlicz_two_phase(gamma: float = 1.5, dim: int = 1) -> Lagrangian:
    """psi(|xi|) + a(x) psi(|xi|)^gamma with psi(s) = s log(1+s) and a = |x|^{N(gamma-1)}."""
    if gamma <= 1:
        raise ParameterError("gamma must exceed 1")
    expo_a = dim * (gamma - 1.0)

    def psi(s):
        return s * np.log1p(s)

    def rad(x, t, s):
        return psi(s) + _xnorm(x, dim) ** expo_a * psi(s) ** gamma

    return Lagrangian(
        name="orlicz_two_phase", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=1.0,
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"gamma": gamma, "kappa": expo_a},
        description="psi(|xi|) + a(x) psi(|xi|)^gamma, psi(s) = s log(1+s)",
    )


def make_orlicz_general(p0: float = 2.0, p1: float = 3.0, dim: int = 1) -> Lagrangian:
    """psi0(|xi|) + a(x) psi1(|xi|) with psi0(s)=s^p0, psi1(s)=s^p1 log(e+s), a = |x|^kappa."""
    if p0 < 1 or p1 < p0:
        raise ParameterError("need 1 <= p0 <= p1")
    # weight exponent large enough for the modulus condition with a log margin
    kappa = (p1 - p0) + 1.0

    def rad(x, t, s):
        return s ** p0 + _xnorm(x, dim) ** kappa * s ** p1 * np.log(np.e + s)

    return Lagrangian(
        name="orlicz_general", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=float(p0),
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"p0": p0, "p1": p1, "kappa": kappa},
        description="psi0(|xi|) + a(x) psi1(|xi|)",
    )


def _exp_weight(kappa):
    def a(x, dim):
        r = _xnorm(x, dim)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(r > 0, np.exp(-np.power(np.where(r > 0, r, 1.0), -kappa)), 0.0)
    return a


def make_exp_phase(p: float = 2.0, q: float = 0.5, kappa: float = 1.0, dim: int = 1) -> Lagrangian:
    """|xi|^p + a(x) exp(|xi|^q) with a(x) = exp(-|x|^-kappa); not convex for q < 1."""
    if p < 1 or q <= 0:
        raise ParameterError("need p >= 1, q > 0")
    a = _exp_weight(kappa)

    def rad(x, t, s):
        return s ** p + a(x, dim) * np.exp(s ** q)

    return Lagrangian(
        name="exp_phase", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=float(p),
        vanishes_at_zero=False, claims_delta2=False, claims_convex_in_xi=q >= 1,
        params={"p": p, "q": q, "kappa": kappa, "a_sup": 1.0},
        description="|xi|^p + a(x) exp(|xi|^q)",
    )


def make_exp_phase_convexified(p: float = 2.0, q: float = 0.5, kappa: float = 1.0,
                               dim: int = 1) -> Lagrangian:
    """Convex companion of exp_phase: exp(s^q) replaced by its tangent line below r* = q^(-1/q)."""
    if p < 1 or q <= 0:
        raise ParameterError("need p >= 1, q > 0")
    a = _exp_weight(kappa)
    r_star = q ** (-1.0 / q)
    slope = np.exp(r_star ** q) / r_star

    def psi1(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= r_star, slope * s, np.exp(np.maximum(s, r_star) ** q))

    def rad(x, t, s):
        return s ** p + a(x, dim) * psi1(s)

    return Lagrangian(
        name="exp_phase_convexified", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=float(p),
        vanishes_at_zero=True, claims_delta2=False, claims_convex_in_xi=True,
        params={"p": p, "q": q, "kappa": kappa, "r_star": r_star,
                "gap": float(np.exp(r_star ** q))},
        description="|xi|^p + a(x) psi1(|xi|), psi1 linear below r*",
    )


def make_anisotropic(gamma: float = 0.5, dim: int = 2) -> Lagrangian:
    """psi(|<v(x), xi>|) + |xi|^{N/gamma} with psi(s)=s^2 and a gamma-Hoelder field v."""
    if not 0 < gamma <= 1:
        raise ParameterError("gamma must lie in (0, 1]")
    if dim != 2:
        raise ParameterError("anisotropic example is defined for N = 2")

    def field_v(x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.ones(x.shape[:-1]), np.abs(x[..., 0]) ** gamma], axis=-1)

    def f(x, t, xi):
        v = field_v(x)
        inner = _dot(v, xi, dim)
        return inner ** 2 + _norm(xi, dim) ** (dim / gamma)

    return Lagrangian(
        name="anisotropic", dim=dim, func=f, structure="general", p=dim / gamma,
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"gamma": gamma}, description="psi(|<v(x),xi>|) + |xi|^(N/gamma)",
    )


def make_counterexample() -> Lagrangian:
    """|<x, xi>|^4 + |xi| in two dimensions."""
    def f(x, t, xi):
        d = _dot(x, xi, 2)
        d = d * d
        return d * d + _norm(xi, 2)

    return Lagrangian(
        name="counterexample", dim=2, func=f, structure="general", p=1.0,
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        description="|<x,xi>|^4 + |xi|",
    )


def make_orthotropic(ps: Sequence[float] = (2.0, 3.0), qs: Sequence[float] = (2.5, 3.5),
                     kappas: Sequence[float] | None = None) -> Lagrangian:
    """sum_i |xi_i|^{p_i} + a_i(x)|xi_i|^{q_i}, a_i = |x|^{kappa_i}."""
    dim = len(ps)
    if len(qs) != dim:
        raise ParameterError("ps and qs must have equal length")
    for p, q in zip(ps, qs):
        if p < 1 or q < p:
            raise ParameterError("need 1 <= p_i <= q_i")
    if kappas is None:
        kappas = [(q - p) / max(1.0, p / dim) for p, q in zip(ps, qs)]

    def part(i):
        p, q, k = ps[i], qs[i], kappas[i]

        def fi(x, t, s):
            return s ** p + _xnorm(x, dim) ** k * s ** q
        return fi

    parts = tuple(part(i) for i in range(dim))

    def f(x, t, xi):
        xi = np.asarray(xi, dtype=float)
        return sum(parts[i](x, t, np.abs(xi[..., i])) for i in range(dim))

    return Lagrangian(
        name="orthotropic", dim=dim, func=f, structure="orthotropic", p=float(min(ps)),
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True, axes=parts,
        params={"ps": list(ps), "qs": list(qs), "kappas": list(kappas)},
        description="sum_i |xi_i|^p_i + a_i(x)|xi_i|^q_i",
    )


def make_multi_phase(p: float = 2.0, qs: Sequence[float] = (2.25, 2.5),
                     kappas: Sequence[float] = (0.25, 0.5), dim: int = 1) -> Lagrangian:
    """|xi|^p + sum_j |x|^{kappa_j}|xi|^{q_j}."""
    if p < 1 or any(q < p for q in qs):
        raise ParameterError("need 1 <= p <= q_j")

    def rad(x, t, s):
        r = _xnorm(x, dim)
        return s ** p + sum(r ** k * s ** q for q, k in zip(qs, kappas))

    return Lagrangian(
        name="multi_phase", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=float(p),
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"p": p, "qs": list(qs), "kappas": list(kappas)},
        description="|xi|^p + sum_j a_j(x)|xi|^q_j",
    )


def make_log_phase(p: float = 2.0, dim: int = 1) -> Lagrangian:
    """|xi|^p (1 + a(x) log(e + |xi|)) with a(x) = |x|."""
    if p < 1:
        raise ParameterError("p must be >= 1")

    def rad(x, t, s):
        return s ** p * (1.0 + _xnorm(x, dim) * np.log(np.e + s))

    return Lagrangian(
        name="log_phase", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=float(p),
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        params={"p": p}, description="|xi|^p (1 + a(x) log(e + |xi|))",
    )


def make_quadratic(dim: int = 1) -> Lagrangian:
    """|xi|^2, the x-independent reference integrand."""
    def rad(x, t, s):
        return np.asarray(s, dtype=float) ** 2 + 0.0 * np.asarray(t, dtype=float)

    return Lagrangian(
        name="quadratic", dim=dim,
        func=lambda x, t, xi: rad(x, t, _norm(xi, dim)),
        radial=rad, structure="isotropic", p=2.0,
        vanishes_at_zero=True, claims_delta2=True, claims_convex_in_xi=True,
        description="|xi|^2",
    )


def reduction(lag: Lagrangian) -> Lagrangian:
    """g = (f - f(x,t,0))_+, which vanishes at xi = 0."""
    def g(x, t, xi):
        f0 = lag.eval(x, t, np.zeros_like(np.asarray(xi, float)))
        return np.maximum(lag.eval(x, t, xi) - f0, 0.0)

    return Lagrangian(
        name=lag.name + "_reduced", dim=lag.dim, func=g, structure="general" if lag.structure == "orthotropic" else lag.structure,
        p=lag.p, vanishes_at_zero=True, claims_delta2=False, claims_convex_in_xi=False,
        params=dict(lag.params), description=f"({lag.description}) - f(x,t,0), positive part",
    )


# ---------------------------------------------------------------------------
# catalog

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: Mapping
    builder: Callable
    domain: Domain
    description: str = ""
    # known witness families: eps -> (x, t, xi), used as extra probes by sweeps
    probes: tuple = ()
    # name of a comparable convex companion, if any
    companion: str | None = None

    def build(self, **overrides) -> Lagrangian:
        params = dict(self.params)
        unknown = set(overrides) - set(params)
        if unknown:
            raise ParameterError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        params.update(overrides)
        return self.builder(**params)

    def to_json(self) -> dict:
        return {"name": self.name, "params": {k: (list(v) if isinstance(v, tuple) else v)
                                               for k, v in self.params.items()},
                "description": self.description, "dim": self.domain.dim,
                "box": [list(s) for s in self.domain.box]}


def _unit_interval_xdatum():
    phi, L = affine_datum(0.0, 1.0, 0.0, 1.0)
    return Domain(((0.0, 1.0),), phi=phi, L_phi=L)


def make_catalog() -> list[CatalogEntry]:
    unit = _unit_interval_xdatum()
    sym = Domain(((-1.0, 1.0),), phi=lambda x: 0.5 * np.asarray(x, float), L_phi=0.5)
    sq = Domain(((-1.0, 1.0), (-1.0, 1.0)), phi=lambda x: np.zeros(np.shape(x)[:-1]), L_phi=0.0)
    return [
        CatalogEntry("mania", {}, lambda: make_mania(), unit,
                     "(t^3 - x)^2 xi^6",
                     probes=(lambda e: (1.0 - e, 1.0, 1.0 / e),)),
        CatalogEntry("ball_mizel", {"nu": 1.0}, make_ball_mizel, sym,
                     "(x^4 - t^6)^2 |xi|^27 + nu |xi|^2",
                     probes=(lambda e: (e, 0.0, e ** -0.5),)),
        CatalogEntry("cerf_mariconda", {}, lambda: make_cerf_mariconda(), unit,
                     "(xi - 1/(2t))^2, zero at t = 0"),
        CatalogEntry("variable_exponent", {"r0": 2.0, "amp": 0.5, "dim": 1},
                     make_variable_exponent, unit, "|xi|^r(x,t)"),
        CatalogEntry("double_phase", {"p": 2.0, "q": 2.5, "kappa": 0.25, "dim": 1},
                     make_double_phase, unit, "|xi|^p + |x|^kappa |xi|^q"),
        CatalogEntry("multi_phase", {"p": 2.0, "qs": (2.25, 2.5), "kappas": (0.25, 0.5), "dim": 1},
                     make_multi_phase, unit, "|xi|^p + sum_j |x|^kappa_j |xi|^q_j"),
        CatalogEntry("log_phase", {"p": 2.0, "dim": 1}, make_log_phase, unit,
                     "|xi|^p (1 + |x| log(e + |xi|))"),
        CatalogEntry("orlicz_two_phase", {"gamma": 1.5, "dim": 1}, make_orlicz_two_phase, unit,
                     "psi + a psi^gamma"),
        CatalogEntry("orlicz_general", {"p0": 2.0, "p1": 3.0, "dim": 1}, make_orlicz_general, unit,
                     "psi0 + a psi1"),
        CatalogEntry("exp_phase", {"p": 2.0, "q": 0.5, "kappa": 1.0, "dim": 1}, make_exp_phase, unit,
                     "|xi|^p + a exp(|xi|^q)", companion="exp_phase_convexified"),
        CatalogEntry("exp_phase_convexified", {"p": 2.0, "q": 0.5, "kappa": 1.0, "dim": 1},
                     make_exp_phase_convexified, unit, "convex companion of exp_phase",
                     companion="exp_phase"),
        CatalogEntry("anisotropic", {"gamma": 0.5, "dim": 2}, make_anisotropic, sq,
                     "|<v(x),xi>|^2 + |xi|^(N/gamma)"),
        CatalogEntry("counterexample", {}, lambda: make_counterexample(), sq,
                     "|<x,xi>|^4 + |xi|",
                     probes=(lambda e: (np.array([0.0, np.sqrt(e)]), 0.0, np.array([0.0, 1.0 / e])),)),
        CatalogEntry("orthotropic", {"ps": (2.0, 3.0), "qs": (2.5, 3.5)}, make_orthotropic, sq,
                     "sum_i |xi_i|^p_i + a_i(x)|xi_i|^q_i"),
        CatalogEntry("quadratic", {"dim": 1}, make_quadratic, unit, "|xi|^2"),
    ]


def get_entry(name: str) -> CatalogEntry:
    for e in make_catalog():
        if e.name == name:
            return e
    raise KeyError(f"unknown catalog entry {name!r}")


def build(name: str, **params) -> Lagrangian:
    return get_entry(name).build(**params)


def parse_params(pairs: Sequence[str]) -> dict:
    """Parse ``key=value`` strings; values become floats, tuples of floats, or strings."""
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ParameterError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        v = v.strip()
        if "," in v:
            out[k] = tuple(float(s) for s in v.split(","))
            continue
        try:
            fv = float(v)
            out[k] = int(fv) if k == "dim" else fv
        except ValueError:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# sample-based invariant checks

def _sample_inputs(lag, domain, n, rng, t_range=2.0, xi_scale=(-2.0, 2.0)):
    lo, hi = domain.lower, domain.upper
    x = lo + (hi - lo) * rng.random((n, domain.dim))
    if lag.dim == 1:
        x = x[:, 0]
    t = rng.uniform(-t_range, t_range, n)
    mag = 10.0 ** rng.uniform(*xi_scale, n)
    if lag.dim == 1:
        xi = mag * rng.choice([-1.0, 1.0], n)
    else:
        d = rng.normal(size=(n, lag.dim))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        xi = mag[:, None] * d
    return x, t, xi


def invariant_report(lag: Lagrangian, domain: Domain, n: int = 1000, seed: int = 0,
                     xi_scale=(-2.0, 1.0)) -> dict:
    """Run the sample-based invariant suite and return pass flags plus worst offenders."""
    rng = np.random.default_rng(seed)
    x, t, xi = _sample_inputs(lag, domain, n, rng, xi_scale=xi_scale)
    vals = lag.eval(x, t, xi)
    out = {"nonnegative": bool(np.all(vals >= 0) and np.all(np.isfinite(vals)))}

    zero = np.zeros_like(xi)
    f0 = lag.eval(x, t, zero)
    out["vanishes_at_zero"] = bool(np.all(f0 == 0)) if lag.vanishes_at_zero else None

    if lag.claims_convex_in_xi:
        _, _, xi2 = _sample_inputs(lag, domain, n, rng, xi_scale=xi_scale)
        a = lag.eval(x, t, xi)
        b = lag.eval(x, t, xi2)
        m = lag.eval(x, t, 0.5 * (xi + xi2))
        slack = 0.5 * (a + b) + 1e-10 * (1.0 + np.maximum(a, b)) - m
        out["convex_midpoint"] = bool(np.all(slack >= 0))
        out["convex_worst_slack"] = float(np.min(slack))
    else:
        out["convex_midpoint"] = None

    if lag.structure == "isotropic":
        if lag.dim == 1:
            rot = -xi
        else:
            th = rng.uniform(0, 2 * np.pi, n)
            c, s = np.cos(th), np.sin(th)
            rot = np.stack([c * xi[:, 0] - s * xi[:, 1], s * xi[:, 0] + c * xi[:, 1]], axis=-1)
        r = lag.eval(x, t, rot)
        rel = np.abs(r - vals) / np.maximum(np.abs(vals), 1e-300)
        ok = (rel <= 1e-12) | (np.abs(r - vals) <= 1e-300)
        out["isotropic_rotation"] = bool(np.all(ok))
    else:
        out["isotropic_rotation"] = None

    g = reduction(lag)
    gv = g.eval(x, t, xi)
    out["reduction"] = bool(np.all(gv >= 0) and np.all(g.eval(x, t, zero) == 0)
                            and np.all(gv <= vals))
    out["passed"] = all(v for k, v in out.items()
                        if k in ("nonnegative", "vanishes_at_zero", "convex_midpoint",
                                 "isotropic_rotation", "reduction") and v is not None)
    return out


def double_phase_ratio_bound(p, q, kappa, L2, C=1.0, dim=1):
    """Analytic ceiling 1 + C + C L2^(q-p) for the neighbouring-point ratio of |xi|^p + a|xi|^q."""
    return 1.0 + C + C * L2 ** (q - p)
