#!/usr/bin/env python3
"""Tour of the built-in coefficient bundles and their assumption checkers.

Every model declares structural constants (one-sided Lipschitz constants,
growth degree, moment order).  The checkers sample the declared inequalities
on random point clouds: a FAIL line means the declared bound is violated
somewhere, which for two of the bundles below is the expected, documented
state of affairs -- those simulate fine regardless.
"""

import numpy as np

from mvsde import builtin_model, compute_zeta, verify_model
from mvsde.measure import MeasureSummary

MODELS = [
    ("double-well", 1),
    ("invariant", 1),
    ("vdp2d", 2),
    ("supermeasure-case1", 1),
    ("supermeasure-case2", 1),
    ("poc-dd", 2),
]

for name, d in MODELS:
    model = builtin_model(name, d)
    zeta = compute_zeta(model.constants)
    cap = min(1.0, 1.0 / zeta) if zeta > 0 else 1.0
    print(f"\n=== {name} (d={d}, l={model.l}) ===")
    print(f"  stepsize rule: h < {cap:.4g}   (zeta = {zeta:.4g})")
    for report in verify_model(model):
        print("  " + str(report))

# The drift of the double-well bundle has three rest points when the
# empirical measure is a point mass: the cluster states.
model = builtin_model("double-well", 1)
xs = np.linspace(-3, 3, 13)[:, None]
meas = MeasureSummary(xs * 0)  # measure details do not matter at a point mass
drift = model.u(0.0, xs, meas) + model.b(0.0, xs, meas)
print("\npoint-mass drift of the double-well bundle (roots at -2, 0, 2):")
for x, v in zip(xs[:, 0], drift[:, 0]):
    marker = "  <-- rest point" if abs(v) < 1e-12 else ""
    print(f"  x = {x:+.1f}   drift = {v:+9.3f}{marker}")
