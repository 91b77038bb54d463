"""Run the balance checks over catalog entries and print one verdict per line."""
import numpy as np

from lavlab.balance import ConditionSpec, check_condition
from lavlab.lagrangians import get_entry

RUNS = [
    ("mania", "Hiso", {}),
    ("ball_mizel", "Hiso", {}),
    ("double_phase", "Hiso0", {"k2": 4.0}),
    ("quadratic", "Hiso", {}),
    ("counterexample", "Hconv", {"k2": 3.0, "eps_grid": list(10.0 ** -np.arange(1, 15))}),
]

for name, cond, kw in RUNS:
    e = get_entry(name)
    rep = check_condition(e.build(), e.domain, ConditionSpec(cond, probes=e.probes, **kw))
    C = "-" if rep.C_est is None else f"{rep.C_est:.4g}"
    slope = "-" if rep.slope is None else f"{rep.slope:.3f}"
    print(f"{name:16s} {cond:6s} {rep.verdict:13s} C_est={C:8s} slope={slope}")
