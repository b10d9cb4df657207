"""
Green's functions and their renormalization
===========================================

Compare the modal Green's function of a level-1 Cantor drum with a dense
resolvent solve and with the sum of contracted level-0 Green's functions.
"""

import numpy as np

from fractaldrum.green import GreenEvaluator, green_direct, green_modal, green_renormalized
from fractaldrum.grid import rasterize_prefractal, refine_to_grid
from fractaldrum.ifs import load_ifs
from fractaldrum.laplacian import domain_spectrum

cantor = load_ifs("cantor")
parent = refine_to_grid(rasterize_prefractal(cantor, 0), 9)
child = refine_to_grid(rasterize_prefractal(cantor, 1), 9)
pev = GreenEvaluator.from_spectrum(domain_spectrum(parent, 1e-6), parent)
cev = GreenEvaluator.from_spectrum(domain_spectrum(child, 1e-6), child)

pts = child.points()
rng = np.random.default_rng(1)
print(f"{'x':>8} {'x_prime':>8} {'modal':>14} {'direct':>14} {'renormalized':>14}")
for i, k in rng.integers(0, len(pts), size=(6, 2)):
    x, xp = pts[i], pts[k]
    row = (green_modal(cev, x, xp, -100.0), green_direct(child, x, xp, -100.0),
           green_renormalized(pev, cantor, x, xp, -100.0))
    print(f"{x[0]:8.4f} {xp[0]:8.4f} " + " ".join(f"{v:14.6e}" for v in row))

# Truncating the modal sum: on the diagonal and above the spectrum it grows monotonically.
x = pts[3]
for m in (1, 2, 4, 8, 16):
    ev = GreenEvaluator.from_spectrum(domain_spectrum(child, 1e-6), child, truncation=m)
    print(f"M = {m:2d}: g(x, x; 0.5) = {green_modal(ev, x, x, 0.5):.6e}")
