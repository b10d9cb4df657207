"""
Dirichlet spectra of prefractal drums
=====================================

Refine a prefractal into a node-centred grid, solve for its discrete
Dirichlet spectrum and look at the multiplicity staircase.
"""

import numpy as np

from fractaldrum.grid import rasterize_prefractal, refine_to_grid
from fractaldrum.ifs import load_ifs
from fractaldrum.laplacian import domain_spectrum, plateau_data

cantor = load_ifs("cantor")

# Four disjoint thirds-of-thirds: every wavenumber appears four times.
g = refine_to_grid(rasterize_prefractal(cantor, 2), 8)
s = domain_spectrum(g, rel_tol=1e-6, want_vectors=False)
print("Cantor level 2:", g.n, "unknowns")
print("  wavenumbers   ", np.round(s.magnitudes, 4))
print("  multiplicities", s.multiplicities)

# The carpet couples its copies through shared edges, so most plateaus are short.
carpet = load_ifs("carpet")
g = refine_to_grid(rasterize_prefractal(carpet, 1), 9)
s = domain_spectrum(g, rel_tol=1e-3, want_vectors=False)
print("\ncarpet level 1:", g.n, "unknowns; staircase of the first 12 entries")
for kappa, count in plateau_data(s)[:12]:
    print(f"  {kappa:9.4f}  {count:4d}")

# Shift-invert Lanczos for a handful of the smallest wavenumbers of a bigger grid.
g = refine_to_grid(rasterize_prefractal(carpet, 2), 6)
s = domain_spectrum(g, rel_tol=1e-3, want_vectors=False, k=8)
print(f"\ncarpet level 2 ({g.n} unknowns): 8 smallest eigenpairs, distinct wavenumbers",
      np.round(s.magnitudes, 3), "with multiplicities", s.multiplicities)
