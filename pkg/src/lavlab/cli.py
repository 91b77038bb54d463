"""Command-line entry point: ``lavlab <subcommand> [options]``.

Exit codes: 0 success, 1 runtime error, 2 VIOLATED under ``--expect satisfied``,
3 INCONCLUSIVE under ``--strict``, 64 bad usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3, 64

log = logging.getLogger("lavlab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


_EXAMPLES = {
    "catalog": "lavlab catalog --json",
    "check": "lavlab check --problem mania --condition hiso --out r.json",
    "envelope": "lavlab envelope --problem double_phase --x 0.5 --t 0 --eps 0.1 --out env.csv",
    "approx": "lavlab approx --problem quadratic --target power:0.6 --n-max 9 --out approx/",
    "gap": "lavlab gap --problem mania --levels 256,512,1024,2048 --out g/",
    "demo": "lavlab demo --problem double_phase --target power:0.6 --out demo/",
}

# every option a config file may set, per subcommand, with its default
_DEFAULTS = {
    "catalog": {"json": False},
    "check": {"problem": None, "param": [], "condition": "Hiso", "k1": 2.0, "k2": 4.0,
              "eps_grid": None, "R_cap": 1e6, "n_x": None, "n_t": 17, "n_xi": None,
              "ball_samples": None, "expect": None, "strict": False, "out": None, "csv": None},
    "envelope": {"problem": None, "param": [], "x": 0.5, "t": 0.0, "eps": 0.1, "s_cap": 10.0,
                 "n_grid": 513, "ball_samples": 257, "out": None},
    "approx": {"problem": "quadratic", "param": [], "target": "power:0.6", "target_energy": None,
               "n_max": 9, "schedule": None, "s": 0.5, "mesh": "uniform:1024",
               "kernel": "decentered", "out": None},
    "gap": {"problem": None, "param": [], "levels": "256,512,1024,2048", "bc": None,
            "beta": 3.0, "iters": 100, "restarts": 0, "strict": False, "out": None},
    "demo": {"problem": "double_phase", "param": [], "target": "power:0.6",
             "condition": "Hiso0", "n_max": 9, "out": None},
}
_GLOBAL = {"seed": None, "threads": 1, "verbose": 0, "config": None}


def _add_common(p):
    p.add_argument("--problem", help="catalog entry name")
    p.add_argument("--param", action="append", metavar="K=V",
                   help="override a catalog parameter (repeatable)")
    p.add_argument("--out", help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    sup = argparse.SUPPRESS
    parser = _Parser(prog="lavlab", description="Balance checks, subgraph approximation and "
                     "Lavrentiev gap experiments.", argument_default=sup)
    parser.add_argument("--version", action="version", version=f"lavlab {__version__}")
    common = _Parser(add_help=False, argument_default=sup)
    common.add_argument("--seed", type=int, help="random seed (default: $LAVLAB_SEED or 0)")
    common.add_argument("--threads", type=int, help="maximum worker threads")
    common.add_argument("--config", help="JSON file with option values; flags win")
    common.add_argument("-v", "--verbose", action="count", help="more logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common], argument_default=sup,
                              epilog=f"example:\n  {_EXAMPLES[name]}",
                              formatter_class=argparse.RawDescriptionHelpFormatter,
                              description=help_text)

    p = add("catalog", "list catalog entries")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")

    p = add("check", "run a balance-condition check")
    _add_common(p)
    p.add_argument("--condition", help="Hiso0, Hiso, HD2 or Hconv (case-insensitive)")
    p.add_argument("--k1", type=float)
    p.add_argument("--k2", type=float)
    p.add_argument("--eps-grid", dest="eps_grid", help="comma-separated radii")
    p.add_argument("--R-cap", dest="R_cap", type=float)
    p.add_argument("--n-x", dest="n_x", type=int)
    p.add_argument("--n-t", dest="n_t", type=int)
    p.add_argument("--n-xi", dest="n_xi", type=int)
    p.add_argument("--ball-samples", dest="ball_samples", type=int)
    p.add_argument("--expect", choices=["satisfied", "violated"])
    p.add_argument("--strict", action="store_true", help="exit 3 on INCONCLUSIVE")
    p.add_argument("--csv", help="also write the per-eps table as CSV")

    p = add("envelope", "dump the convexified local infimum along a ray")
    _add_common(p)
    p.add_argument("--x", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--s-cap", dest="s_cap", type=float)
    p.add_argument("--n-grid", dest="n_grid", type=int)
    p.add_argument("--ball-samples", dest="ball_samples", type=int)

    p = add("approx", "run the subgraph approximation scheme")
    _add_common(p)
    p.add_argument("--target", help="power:a (u = x^a), linear, or csv:PATH")
    p.add_argument("--target-energy", dest="target_energy", type=float)
    p.add_argument("--n-max", dest="n_max", type=int, help="schedule (2^-n, 2^-n/2), n = 1..n_max")
    p.add_argument("--schedule", help="explicit eps:delta pairs, comma-separated")
    p.add_argument("--s", type=float, help="inversion level in (0, 1)")
    p.add_argument("--mesh", help="output mesh, uniform:n or graded:n:beta")
    p.add_argument("--kernel", choices=["centered", "decentered", "decentered_right"])

    p = add("gap", "two-mesh Lavrentiev experiment")
    _add_common(p)
    p.add_argument("--levels", help="comma-separated mesh sizes")
    p.add_argument("--bc", help="boundary values a,b")
    p.add_argument("--beta", type=float, help="grading exponent")
    p.add_argument("--iters", type=int, help="sweeps per minimization")
    p.add_argument("--restarts", type=int)
    p.add_argument("--strict", action="store_true", help="exit 3 on INCONCLUSIVE")

    p = add("demo", "scheme convergence on a problem that passes its balance check")
    _add_common(p)
    p.add_argument("--target", help="power:a (u = x^a) or linear")
    p.add_argument("--condition")
    p.add_argument("--n-max", dest="n_max", type=int)
    return parser


def resolve(argv) -> dict:
    """Parse argv, merge config-file values and defaults; flags win."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    cmd = ns.pop("command", None)
    if cmd is None:
        parser.print_help(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    opts = dict(_GLOBAL)
    opts.update(_DEFAULTS[cmd])
    cfg_path = ns.get("config")
    if cfg_path:
        try:
            with open(cfg_path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(opts) - {"command"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if cfg.get("command", cmd) != cmd:
            raise UsageError(f"config is for {cfg['command']!r}, not {cmd!r}")
        cfg.pop("command", None)
        opts.update(cfg)
    opts.update(ns)
    if opts["seed"] is None:
        env = os.environ.get("LAVLAB_SEED")
        try:
            opts["seed"] = int(env) if env not in (None, "") else 0
        except ValueError:
            raise UsageError(f"LAVLAB_SEED must be an integer, got {env!r}") from None
    if opts["threads"] is None or int(opts["threads"]) < 1:
        raise UsageError("--threads must be >= 1")
    if opts.get("param") is None:
        opts["param"] = []
    elif isinstance(opts["param"], dict):
        opts["param"] = [f"{k}={v}" for k, v in opts["param"].items()]
    opts["command"] = cmd
    return opts


# ---------------------------------------------------------------------------
# helpers

def _floats(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated numbers") from None


def _entry(opts):
    from .lagrangians import get_entry, parse_params
    if not opts.get("problem"):
        raise UsageError("--problem is required")
    try:
        entry = get_entry(opts["problem"])
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    params = parse_params(opts["param"])
    return entry, params, entry.build(**params)


def _target(text):
    from .mesh import PLFunction
    if text == "linear":
        return (lambda x: np.asarray(x, dtype=float)), (lambda x: np.ones(np.shape(x))), None
    if text.startswith("power:"):
        try:
            a = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad target {text!r}") from None
        if a <= 0:
            raise UsageError("power targets need a > 0")
        return (lambda x: np.asarray(x, dtype=float) ** a,
                lambda x: a * np.asarray(x, dtype=float) ** (a - 1), a)
    if text.startswith("csv:"):
        with open(text[4:], encoding="utf-8") as fh:
            return PLFunction.from_csv(fh.read()), None, None
    raise UsageError(f"bad target {text!r}; use power:a, linear or csv:PATH")


def _write(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dumps(obj):
    from .balance import _clean
    return json.dumps(_clean(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_catalog(opts):
    from .lagrangians import make_catalog
    entries = make_catalog()
    if opts["json"]:
        print(_dumps([e.to_json() for e in entries]), end="")
    else:
        for e in entries:
            params = ", ".join(f"{k}={v}" for k, v in e.params.items())
            print(f"{e.name:24s} N={e.domain.dim}  {e.description}" + (f"  [{params}]" if params else ""))
    return EXIT_OK


def cmd_check(opts):
    from .balance import ConditionSpec, check_condition
    entry, params, lag = _entry(opts)
    kw = {k: opts[k] for k in ("k1", "k2", "R_cap", "n_x", "n_t", "n_xi", "ball_samples")
          if opts[k] is not None}
    if opts["eps_grid"] is not None:
        grid = opts["eps_grid"]
        kw["eps_grid"] = _floats(grid, "eps-grid") if isinstance(grid, str) else list(grid)
    spec = ConditionSpec(opts["condition"], probes=entry.probes, **kw)
    rep = check_condition(lag, entry.domain, spec, problem=entry.name)
    data = rep.to_dict()
    data["params"] = params
    data["tool_version"] = __version__
    data["seed"] = opts["seed"]
    if opts["out"]:
        _write(opts["out"], _dumps(data))
    if opts["csv"]:
        _write(opts["csv"], rep.to_csv())
    C = "n/a" if rep.C_est is None else f"{rep.C_est:.6g}"
    slope = "n/a" if rep.slope is None else f"{rep.slope:.4f}"
    print(f"{entry.name} {rep.condition}: {rep.verdict} (C_est={C}, max_ratio={rep.max_ratio:.6g}, "
          f"slope={slope})")
    if opts["expect"] == "satisfied" and rep.verdict == "VIOLATED":
        return EXIT_VIOLATED
    if opts["strict"] and rep.verdict == "INCONCLUSIVE":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_envelope(opts):
    from .balance import radial_envelope
    entry, _, lag = _entry(opts)
    if entry.domain.dim != 1 or lag.structure != "isotropic":
        raise UsageError("envelope supports 1D isotropic entries")
    env = radial_envelope(lag, opts["x"], opts["eps"], opts["t"], opts["s_cap"],
                          domain=entry.domain, n_grid=opts["n_grid"],
                          ball_samples=opts["ball_samples"])
    lines = ["s,f_ball_inf,envelope"]
    lines += [f"{s!r},{w!r},{e!r}" for s, w, e in zip(env.grid.tolist(), env.samples.tolist(),
                                                      env.on_grid().tolist())]
    text = "\n".join(lines) + "\n"
    if opts["out"]:
        _write(opts["out"], text)
    else:
        print(text, end="")
    return EXIT_OK


def _schedule(opts):
    from .scheme import default_schedule
    if opts.get("schedule"):
        out = []
        for pair in str(opts["schedule"]).split(","):
            try:
                e, d = pair.split(":")
                out.append((float(e), float(d)))
            except ValueError:
                raise UsageError("--schedule expects eps:delta pairs") from None
        return out
    return default_schedule(int(opts["n_max"]))


def cmd_approx(opts):
    from .mesh import parse_mesh, energy, quad_energy
    from .scheme import run_scheme
    entry, params, lag = _entry(opts)
    if entry.domain.dim != 1:
        raise UsageError("the scheme runs in one dimension")
    u, du, _ = _target(opts["target"])
    a, b = entry.domain.box[0]
    target_energy = opts["target_energy"]
    if target_energy is None and du is not None:
        target_energy = quad_energy(lag, u, du, a, b, n=8192)
    table = run_scheme(u, lag, _schedule(opts), s=opts["s"],
                       out_mesh=parse_mesh(opts["mesh"], a, b), target_energy=target_energy,
                       kernel=opts["kernel"], seed=opts["seed"], workers=int(opts["threads"]),
                       keep=bool(opts["out"]))
    for r in table.rows:
        print(f"n={r['n']:2d} eps={r['eps']:.4g} delta={r['delta']:.4g} l1={r['l1_error']:.4g} "
              f"rank={r['rank']:.4g} E={r['energy']:.6g}")
    if opts["out"]:
        d = opts["out"]
        data = {"problem": entry.name, "params": params, "target": opts["target"],
                "seed": opts["seed"], "tool_version": __version__, **table.to_dict()}
        _write(os.path.join(d, "table.json"), _dumps(data))
        _write(os.path.join(d, "table.csv"), table.to_csv())
        _write(os.path.join(d, "approximant.csv"), table.approximants[-1].u.to_csv())
    return EXIT_OK


def cmd_gap(opts):
    from .gap import GapExperiment, lavrentiev_probe, report_writer
    from .lagrangians import parse_params
    if not opts.get("problem"):
        raise UsageError("--problem is required")
    levels = opts["levels"]
    levels = [int(v) for v in _floats(levels, "levels")] if isinstance(levels, str) else list(levels)
    bc = opts["bc"]
    if isinstance(bc, str):
        bc = _floats(bc, "bc")
    if bc is not None and len(bc) != 2:
        raise UsageError("--bc expects two values")
    exp = GapExperiment(opts["problem"], parse_params(opts["param"]), bc=bc, levels=tuple(levels),
                        graded_beta=opts["beta"], iters=opts["iters"], restarts=opts["restarts"],
                        seed=opts["seed"])
    rep = lavrentiev_probe(exp)
    for r in rep.rows:
        print(f"n={r['n']:5d} uniform={r['uniform_min_energy']:.6g} graded={r['graded_min_energy']:.6g}")
    print(f"verdict: {rep.verdict}")
    if opts["out"]:
        report_writer([rep], opts["out"])
    if opts["strict"] and rep.verdict == "INCONCLUSIVE":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_demo(opts):
    from .balance import ConditionSpec
    from .gap import RefusedError, report_writer, scheme_no_gap_demo
    from .scheme import default_schedule
    entry, params, _ = _entry(opts)
    u, du, _ = _target(opts["target"])
    try:
        rep = scheme_no_gap_demo(entry.name, u, params=params, du_target=du,
                                 spec=ConditionSpec(opts["condition"], probes=entry.probes),
                                 schedule=default_schedule(int(opts["n_max"])),
                                 seed=opts["seed"], workers=int(opts["threads"]))
    except RefusedError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_ERROR
    final = rep["table"]["rows"][-1]
    print(f"{entry.name}: balance {rep['balance']['verdict']}, final energy {final['energy']:.6g} "
          f"vs {rep['table']['target_energy']:.6g} (relative error "
          f"{rep['final_relative_energy_error']:.3g})")
    if opts["out"]:
        report_writer([rep], opts["out"])
    return EXIT_OK


COMMANDS = {"catalog": cmd_catalog, "check": cmd_check, "envelope": cmd_envelope,
            "approx": cmd_approx, "gap": cmd_gap, "demo": cmd_demo}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        opts = resolve(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"lavlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(int(opts["verbose"] or 0), 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[opts["command"]](opts)
    except UsageError as exc:
        print(f"lavlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, RuntimeError, OSError, TypeError) as exc:
        log.debug("failure", exc_info=True)
        print(f"lavlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
