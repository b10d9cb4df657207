"""
Diaperiodic and interconnective modes
=====================================

Contract modes of one prefractal onto each copy of the next and see
which child eigenvalues they account for.
"""

import math

import numpy as np

from fractaldrum.diaperiodic import (classify_spectrum, lift_eigenfunction, lift_residual,
                                     predicted_spectrum)
from fractaldrum.grid import rasterize_prefractal, refine_to_grid
from fractaldrum.ifs import load_ifs
from fractaldrum.laplacian import assemble_dirichlet_laplacian, domain_spectrum, interval_spectrum


def levels(ifs, r):
    parent = refine_to_grid(rasterize_prefractal(ifs, 0), r)
    child = refine_to_grid(rasterize_prefractal(ifs, 1), r)
    return parent, child, domain_spectrum(parent, 1e-3), domain_spectrum(child, 1e-3)


# Cantor: the copies never touch, so every child mode is a contracted parent mode.
cantor = load_ifs("cantor")
pg, cg, ps, cs = levels(cantor, 9)
result = classify_spectrum(cs, ps, cantor.ratios)
print("Cantor: diaperiodic", result.diaperiodic_count(), "interconnective",
      result.interconnective_count())
v = lift_eigenfunction(ps.eigenvectors[:, 0], pg, cantor, 2, cg)
print("  residual of the lifted ground mode:",
      lift_residual(v, assemble_dirichlet_laplacian(cg), 3 * ps.magnitudes[0]))

# Unit interval split in halves: odd sines straddle the midpoint and are not lifts.
interval = load_ifs("interval")
pg, cg, ps, cs = levels(interval, 16)
result = classify_spectrum(cs.truncate(8), ps, interval.ratios)
for e in result.entries:
    kind = f"copy {e.branch}" if e.branch else "interconnective"
    print(f"  kappa {e.magnitude:8.4f}  ({e.magnitude / math.pi:5.2f} pi)  {kind}")

# Carpet: a single-copy lift leaks through the shared edges.
carpet = load_ifs("carpet")
pg, cg, ps, cs = levels(carpet, 9)
v = lift_eigenfunction(ps.eigenvectors[:, 0], pg, carpet, 1, cg)
print("carpet single-copy lift residual:",
      lift_residual(v, assemble_dirichlet_laplacian(cg), 3 * ps.magnitudes[0]))

# The predicted (diaperiodic-only) spectrum at depth 1000 is stored in log form.
pred = predicted_spectrum(interval_spectrum(3), cantor.ratios, 1000)
print("level 1000 Cantor: log kappa", np.round(pred.log_magnitudes, 3),
      " log mul", np.round(pred.log_multiplicities, 3))
