"""Numerical non-uniqueness evidence: the backward funnel probe.

For f = -sqrt(|x|) the IVP x' = sqrt(|x|), x(0) = 0 has the classical
solution family x(t) = ((t - a)_+)^2 / 4, a in [0, 1]: every terminal value
x(1) in [0, 1/4] flows backward into the origin.  The probe integrates
backward from a terminal grid and measures that basin; for a Lipschitz
field the basin collapses to a single grid cell.
"""
import numpy as np

from odeuniq import funnel_probe, parse

for f_src, label in [("-sqrt(abs(x))", "square-root field"),
                     ("x", "Lipschitz field"),
                     ("0", "trivial field")]:
    f = parse(f_src, {"t", "x"})
    rep = funnel_probe(f, T=1.0, n=201, t_floor=1e-6)
    n_reach = int(np.count_nonzero(rep.reaches_zero))
    print(f"\nf = {f_src}   ({label})")
    print(f"  basin_width = {rep.basin_width:.4f}  "
          f"({n_reach} of {len(rep.terminal_values)} samples, "
          f"cell = {rep.grid_spacing:.4f})")
    reached = rep.terminal_values[rep.reaches_zero]
    if reached.size:
        print(f"  reaching terminal values: [{reached.min():+.3f}, "
              f"{reached.max():+.3f}]")
    # forward corroboration: spread of nearby starts as t0 = delta -> 0
    print("  forward spread (t0 = delta):")
    for t0, spread in rep.spread_curve[:5]:
        print(f"    delta = {t0:8.2e}  spread at T = {spread:.3e}")

print("\nFor the square-root field the basin stays ~ 1/4 as t_floor shrinks "
      "(non-uniqueness); for the Lipschitz field it is one grid cell.")
