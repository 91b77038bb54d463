"""Two-mesh Lavrentiev experiments and report files.

Minimal energies on uniform meshes stand in for the Lipschitz class; graded
meshes clustered at the expected singularity, warm-started from the singular
profile when one is known, stand in for the Sobolev class.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .balance import BalanceReport, ConditionSpec, _clean, check_condition
from .lagrangians import get_entry
from .mesh import Mesh1D, PLFunction, energy, interpolate, minimize_energy, minimize_nested, prolong
from .scheme import run_scheme

SCHEMA_VERSION = 1
VERDICTS = ("GAP", "NO_GAP", "INCONCLUSIVE")


class InputError(ValueError):
    pass


class RefusedError(RuntimeError):
    pass


class ReportError(OSError):
    pass


# boundary values, interval, singular point and singular profile per problem
SETUPS = {
    "mania": dict(bc=(0.0, 1.0), interval=(0.0, 1.0), center=0.0,
                  profile=lambda bc: np.cbrt),
    "ball_mizel": dict(bc=(-0.5, 0.5), interval=(-1.0, 1.0), center=0.0,
                       profile=lambda bc: (lambda x: np.where(
                           np.asarray(x) < 0, -np.minimum(np.abs(x) ** (2 / 3), -bc[0]),
                           np.minimum(np.abs(x) ** (2 / 3), bc[1])))),
    "quadratic": dict(bc=(0.0, 1.0), interval=(0.0, 1.0), center=0.0, profile=None),
}


def setup_for(problem: str) -> dict:
    if problem in SETUPS:
        return SETUPS[problem]
    entry = get_entry(problem)
    if entry.domain.dim != 1:
        raise InputError("gap experiments are one-dimensional")
    a, b = entry.domain.box[0]
    return dict(bc=(0.0, 1.0), interval=(a, b), center=a, profile=None)


def graded_mesh(n: int, beta: float, a: float, b: float, center: float) -> Mesh1D:
    """Mesh graded with exponent beta toward ``center``, on one or both sides.

    Doubling n gives nested meshes, so minimal energies are nonincreasing
    along a doubling ladder.
    """
    if center <= a:
        return Mesh1D.graded(n, beta, a, b)
    if center >= b:
        m = Mesh1D.graded(n, beta, 0.0, 1.0)
        return Mesh1D(b - (b - a) * m.nodes[::-1], "graded", beta)
    nl = max(1, int(round(n * (center - a) / (b - a))))
    nr = max(1, n - nl)
    left = center - (center - a) * (np.arange(nl, -1, -1) / nl) ** beta
    right = center + (b - center) * (np.arange(nr + 1) / nr) ** beta
    nodes = np.concatenate([left, right[1:]])
    nodes[0], nodes[-1] = a, b
    return Mesh1D(nodes, "graded", float(beta))


@dataclass
class GapExperiment:
    problem: str
    params: dict = field(default_factory=dict)
    bc: tuple | None = None
    levels: tuple = (256, 512, 1024, 2048)
    graded_beta: float = 3.0
    iters: int = 100
    restarts: int = 0
    seed: int = 0
    separation: float = 5.0
    stability: float = 0.2
    agreement: float = 0.03
    coarse_levels: int = 3

    def __post_init__(self):
        self.levels = tuple(int(n) for n in self.levels)
        if not self.levels:
            raise InputError("at least one level is required")
        if any(n < 2 for n in self.levels) or any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise InputError("levels must be increasing integers >= 2")
        if self.graded_beta < 1:
            raise InputError("graded_beta must be >= 1")
        if self.iters < 1 or self.restarts < 0:
            raise InputError("need iters >= 1 and restarts >= 0")
        if self.bc is None:
            self.bc = tuple(setup_for(self.problem)["bc"])
        self.bc = tuple(float(v) for v in self.bc)

    def describe(self) -> dict:
        return {"problem": self.problem, "params": dict(self.params), "bc": list(self.bc),
                "levels": list(self.levels), "graded_beta": self.graded_beta,
                "iters": self.iters, "restarts": self.restarts, "seed": self.seed,
                "separation": self.separation, "stability": self.stability,
                "agreement": self.agreement, "coarse_levels": self.coarse_levels}


def decide_verdict(uniform, graded, separation=5.0, stability=0.2, agreement=0.03):
    """GAP: over the top two levels the graded value sits below the uniform one by
    ``separation``, graded does not increase and uniform moves by at most
    ``stability``. NO_GAP: the top values agree to ``agreement``. Otherwise, or with
    more than half of the levels failed, INCONCLUSIVE."""
    u = np.asarray(uniform, dtype=float)
    g = np.asarray(graded, dtype=float)
    ok = np.isfinite(u) & np.isfinite(g)
    stats = {"failed_levels": int(np.sum(~ok))}
    if np.sum(~ok) > u.size / 2 or not ok[-1]:
        return "INCONCLUSIVE", stats
    top_u, top_g = float(u[-1]), float(g[-1])
    rel = abs(top_u - top_g) / max(abs(top_u), abs(top_g), 1e-300)
    stats["top_relative_difference"] = rel
    if u.size >= 2 and ok[-2]:
        sep = [u[-2] / max(g[-2], 1e-300), top_u / max(top_g, 1e-300)]
        drift = abs(top_u - u[-2]) / max(abs(u[-2]), 1e-300)
        stats.update(separation=[float(s) for s in sep], uniform_drift=float(drift))
        if (min(sep) >= separation and drift <= stability
                and top_g <= g[-2] * (1 + 1e-9)):
            return "GAP", stats
    if rel <= agreement:
        return "NO_GAP", stats
    return "INCONCLUSIVE", stats


@dataclass
class GapReport:
    experiment: GapExperiment
    rows: list
    verdict: str
    stats: dict

    @property
    def uniform(self):
        return [r["uniform_min_energy"] for r in self.rows]

    @property
    def graded(self):
        return [r["graded_min_energy"] for r in self.rows]

    def to_dict(self) -> dict:
        e = self.experiment
        return _clean({"kind": "gap", "problem": e.problem, "params": dict(e.params),
                       "bc": list(e.bc), "levels": list(e.levels), "uniform": self.uniform,
                       "graded": self.graded, "verdict": self.verdict, "seed": e.seed,
                       "tool_version": __version__, "stats": self.stats, "rows": self.rows,
                       "experiment": e.describe()})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "uniform_min_energy", "graded_min_energy"])
        for r in self.rows:
            w.writerow([r["n"], repr(float(r["uniform_min_energy"])),
                        repr(float(r["graded_min_energy"]))])
        return buf.getvalue()

    def to_dat(self) -> str:
        lines = ["# n uniform_min_energy graded_min_energy"]
        lines += [f"{r['n']} {float(r['uniform_min_energy']):.17g} {float(r['graded_min_energy']):.17g}"
                  for r in self.rows]
        return "\n".join(lines) + "\n"


def _safe_min(lag, mesh, bc, init, exp, nested=False):
    try:
        if nested:
            u, e = minimize_nested(lag, mesh, bc, coarse_levels=exp.coarse_levels, iters=exp.iters,
                                   restarts=exp.restarts, seed=exp.seed)
        else:
            u, e = minimize_energy(lag, mesh, bc, init=init, iters=exp.iters,
                                   restarts=exp.restarts, seed=exp.seed)
    except (ValueError, FloatingPointError, OverflowError):
        return None, np.nan
    return (u, e) if np.isfinite(e) else (None, np.nan)


def lavrentiev_probe(exp: GapExperiment) -> GapReport:
    """Minimal energies on uniform and graded meshes at each level.

    Uniform levels are warm-started from the previous level. Graded levels
    start from the lowest-energy candidate among the singular-profile
    interpolant, the previous graded minimizer and the uniform minimizer of
    the same level, so the result never exceeds the interpolant's energy.
    """
    entry = get_entry(exp.problem)
    if entry.domain.dim != 1:
        raise InputError("gap experiments are one-dimensional")
    lag = entry.build(**exp.params)
    st = setup_for(exp.problem)
    a, b = st["interval"]
    bc = exp.bc
    profile = st["profile"](bc) if st["profile"] is not None else None
    if profile is not None and (abs(profile(a) - bc[0]) > 1e-12 or abs(profile(b) - bc[1]) > 1e-12):
        profile = None
    rows = []
    u_prev = g_prev = None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in exp.levels:
            um = Mesh1D.uniform(n, a, b)
            if u_prev is None:
                u_sol, ue = _safe_min(lag, um, bc, None, exp, nested=True)
            else:
                u_sol, ue = _safe_min(lag, um, bc, prolong(u_prev, um), exp)
            gm = graded_mesh(n, exp.graded_beta, a, b, st["center"])
            seeds = {}
            if profile is not None:
                seeds["profile"] = interpolate(profile, gm)
            if g_prev is not None:
                seeds["previous"] = prolong(g_prev, gm)
            if u_sol is not None:
                seeds["uniform"] = prolong(u_sol, gm)
            if not seeds:
                seeds["linear"] = PLFunction(gm, bc[0] + (bc[1] - bc[0]) * (gm.nodes - a) / (b - a))
            seed_e = {k: energy(lag, v) for k, v in seeds.items()}
            finite = {k: e for k, e in seed_e.items() if np.isfinite(e)}
            if finite:
                pick = min(finite, key=lambda k: (finite[k], k))
                g_sol, ge = _safe_min(lag, gm, bc, seeds[pick], exp)
            else:
                pick, g_sol, ge = None, None, np.nan
            rows.append({"n": n, "uniform_min_energy": float(ue), "graded_min_energy": float(ge),
                         "graded_seed": pick,
                         "interpolant_energy": float(seed_e["profile"]) if "profile" in seed_e else None})
            u_prev = u_sol if u_sol is not None else u_prev
            g_prev = g_sol if g_sol is not None else g_prev
    verdict, stats = decide_verdict([r["uniform_min_energy"] for r in rows],
                                    [r["graded_min_energy"] for r in rows],
                                    exp.separation, exp.stability, exp.agreement)
    stats["note"] = ("both proxies are piecewise linear, hence Lipschitz: their minima bound the "
                     "Lipschitz infimum from above, so agreement does not exclude a gap against "
                     "the Sobolev class")
    return GapReport(exp, rows, verdict, stats)


def mania_reference(levels: Sequence[int] = (256, 512, 1024, 2048), beta: float = 3.0):
    """Interpolants of the cube-root profile on graded and uniform meshes with
    their Mania energies. Returns (finest graded interpolant, table rows)."""
    lag = get_entry("mania").build()
    rows, last = [], None
    for n in levels:
        g = interpolate(np.cbrt, Mesh1D.graded(n, beta))
        u = interpolate(np.cbrt, Mesh1D.uniform(n))
        rows.append({"n": int(n), "graded_energy": energy(lag, g, quad_order=10),
                     "uniform_energy": energy(lag, u, quad_order=10)})
        last = g
    return last, rows


# ---------------------------------------------------------------------------
# scheme demo

def scheme_no_gap_demo(problem: str, u_target: Callable, params: dict | None = None,
                       target_energy: float | None = None, du_target: Callable | None = None,
                       condition: str = "hiso0", spec: ConditionSpec | None = None,
                       schedule=None, tolerance: float = 0.05, balance: BalanceReport | None = None,
                       **kw) -> dict:
    """Run the approximation scheme on a problem whose balance check is SATISFIED.

    The target energy defaults to a graded-quadrature value when the derivative
    is given. Raises RefusedError when the balance check is not SATISFIED.
    """
    from .mesh import quad_energy
    params = dict(params or {})
    entry = get_entry(problem)
    lag = entry.build(**params)
    if balance is None:
        spec = spec or ConditionSpec(condition)
        balance = check_condition(lag, entry.domain, spec, problem=problem)
    if balance.verdict != "SATISFIED":
        raise RefusedError(f"{problem}: balance condition {balance.condition} is "
                           f"{balance.verdict}, so the scheme carries no convergence guarantee")
    a, b = entry.domain.box[0]
    if target_energy is None and du_target is not None:
        target_energy = quad_energy(lag, u_target, du_target, a, b, n=8192)
    table = run_scheme(u_target, lag, schedule, target_energy=target_energy, **kw)
    final = table.rows[-1]
    rel = abs(final["energy"] - table.target_energy) / abs(table.target_energy)
    return _clean({"kind": "scheme_demo", "problem": problem, "params": params,
                   "balance": balance.to_dict(), "table": table.to_dict(),
                   "final_relative_energy_error": rel, "tolerance": tolerance,
                   "converged": bool(rel <= tolerance), "tool_version": __version__})


# ---------------------------------------------------------------------------
# report files

def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _payload(report):
    if isinstance(report, GapReport):
        return report.to_dict(), report.to_csv(), report.to_dat()
    if isinstance(report, BalanceReport):
        return report.to_dict(), report.to_csv(), None
    if isinstance(report, dict):
        csv_text = None
        table = report.get("table")
        if isinstance(table, dict) and "rows" in table:
            cols = ("n", "eps", "delta", "l1_error", "rank", "energy", "target_energy")
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(cols)
            for r in table["rows"]:
                w.writerow([r.get(c) for c in cols])
            csv_text = buf.getvalue()
        return report, csv_text, None
    raise InputError(f"cannot write a report of type {type(report).__name__}")


def report_writer(reports: Sequence, path: str) -> list[str]:
    """Write JSON (full), CSV (tables) and .dat files plus index.json under ``path``."""
    written, index = [], []
    try:
        os.makedirs(path, exist_ok=True)
        for i, rep in enumerate(reports):
            data, csv_text, dat = _payload(rep)
            stem = f"{i:02d}_{data.get('problem', 'report')}"
            files = {"json": stem + ".json"}
            if csv_text is not None:
                files["csv"] = stem + ".csv"
            if dat is not None:
                files["dat"] = stem + ".dat"
            for kind, name in files.items():
                text = {"json": _dumps(data) if kind == "json" else None,
                        "csv": csv_text, "dat": dat}[kind]
                full = os.path.join(path, name)
                with open(full, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
                written.append(full)
            index.append({"problem": data.get("problem"), "verdict": data.get("verdict"),
                          "files": files})
        full = os.path.join(path, "index.json")
        with open(full, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_dumps({"schema_version": SCHEMA_VERSION, "tool_version": __version__,
                             "reports": index}))
        written.append(full)
    except OSError as exc:
        raise ReportError(f"{path}: {exc}") from exc
    return written
