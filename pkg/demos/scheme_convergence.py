"""Subgraph approximants of x^0.6 for f = xi^2 and for the balanced double phase.

The energy of x^0.6 is 1.8 for xi^2. The cusp at 0 costs the scheme an amount
shrinking like (eps delta)^(1/4), so convergence there is slow; smooth targets
converge quickly.
"""
import numpy as np

from lavlab.lagrangians import get_entry, make_quadratic
from lavlab.mesh import quad_energy
from lavlab.scheme import default_schedule, run_scheme

u = lambda x: np.asarray(x, dtype=float) ** 0.6
du = lambda x: 0.6 * np.asarray(x, dtype=float) ** -0.4

cases = [("xi^2", make_quadratic(), 1.8)]
dp = get_entry("double_phase").build()
cases.append(("double phase", dp, quad_energy(dp, u, du, 0.0, 1.0, n=8192)))

for label, lag, E in cases:
    table = run_scheme(u, lag, default_schedule(), target_energy=E, workers=4)
    print(f"{label}: target energy {E:.6f}")
    for r in table.rows:
        print(f"  n={r['n']} eps={r['eps']:.3g} delta={r['delta']:.3g} "
              f"L1={r['l1_error']:.3g} rank={r['rank']:.3g} E={r['energy']:.5f}")

smooth = run_scheme(lambda x: np.sin(2 * x), make_quadratic(), default_schedule(),
                    target_energy=2 * (1 + np.sin(4) / 4), coupling_samples=0, workers=4)
r = smooth.rows[-1]
print(f"sin(2x): E(u_9) = {r['energy']:.5f} vs {smooth.target_energy:.5f}")
