"""
Spectral dimension along the prefractal sequence
================================================

Evaluate the log-multiplicity over log-wavenumber ratio on predicted
spectra at increasing depth and compare with box and Moran dimensions.
"""

import numpy as np

from fractaldrum.dimension import (dimension_report, fit_asymptotic_constant,
                                   spectral_dimension_sequence)
from fractaldrum.ifs import IteratedFunctionSystem, SimilarityMap, load_ifs, moran_dimension

levels = [10, 100, 1000, 10000]
for name in ("interval", "cantor", "carpet"):
    ifs = load_ifs(name)
    target = moran_dimension(ifs.ratios)
    dims = [d for _, d in spectral_dimension_sequence(ifs, None, levels, 100)]
    C = fit_asymptotic_constant(levels, dims, target)
    print(f"{name:9s} Moran {target:.6f}  " + "  ".join(f"N={n}: {d:.6f}" for n, d in zip(levels, dims))
          + f"  C ~ {C:.3f}")

print()
print(dimension_report(load_ifs("carpet"), level=1000, truncation=100).to_text())

# With unequal ratios the smallest wavenumbers all come from the weakest
# contraction, each once, and the truncated ratio drifts towards zero.
mixed = IteratedFunctionSystem([SimilarityMap.scaling(0.5, [0.0]),
                                SimilarityMap.scaling(1 / 3, [2 / 3])], name="mixed")
print("mixed (1/2, 1/3):", np.round([d for _, d in spectral_dimension_sequence(mixed, None, levels, 100)], 4),
      " Moran", round(moran_dimension(mixed.ratios), 4))
