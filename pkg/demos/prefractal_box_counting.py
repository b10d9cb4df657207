"""
Prefractals and box counting
============================

Rasterize the Cantor set and the square carpet, count occupied boxes on
the b-adic hierarchy and compare the fitted slope with the root of the
Moran equation.
"""

import numpy as np

from fractaldrum.grid import box_counts, box_dimension_fit, rasterize_prefractal
from fractaldrum.ifs import load_ifs, moran_dimension

for name in ("cantor", "carpet"):
    ifs = load_ifs(name)
    cs = rasterize_prefractal(ifs, 4)
    counts = box_counts(cs)
    print(f"{name}: {len(cs)} cells at level 4 (p^N = {ifs.p ** 4})")
    for delta, n in counts:
        print(f"   delta = {delta:.5f}   count = {n}")
    print(f"   box fit {box_dimension_fit(counts):.9f}   Moran {moran_dimension(ifs.ratios):.9f}")

# Mixed ratios have no closed form; the Moran root is found numerically.
print("Moran root for ratios (1/2, 1/3):", moran_dimension([0.5, 1 / 3]))

# The level-2 carpet as an occupancy image.
occ = rasterize_prefractal(load_ifs("carpet"), 2).occupancy()
print("\n".join("".join("#" if v else "." for v in row) for row in np.asarray(occ, dtype=bool)))
