"""Laplacian spectra of self-similar prefractals and their fractal dimensions."""
from .diaperiodic import (classify_spectrum, lift_eigenfunction, lift_residual,
                          predicted_spectrum)
from .dimension import (DimensionReport, dimension_report, spectral_dimension,
                        spectral_dimension_sequence)
from .green import GreenEvaluator, green_direct, green_modal, green_renormalized
from .grid import (CellSet, GridDomain, box_counts, box_dimension_fit, rasterize_prefractal,
                   refine_to_grid)
from .ifs import (IteratedFunctionSystem, OverlapClass, SimilarityMap, apply_map,
                  classify_overlap, compose_word, invert_map, load_ifs, moran_dimension)
from .laplacian import (Spectrum, assemble_dirichlet_laplacian, cluster_multiplicities,
                        full_spectrum, partial_spectrum, to_magnitudes)

__version__ = "0.1.0"
