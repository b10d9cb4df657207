"""Spectral dimension of prefractal spectra and comparison with box/Moran dimensions.

The spectral dimension of a spectrum truncated to its ``M`` smallest
distinct magnitudes is

    sum_{n<=M} log mul_n / sum_{n<=M} log kappa_n ,

and the attractor value is its limit along the prefractal sequence.  Both
sums grow linearly in the level ``N`` for the analytic diaperiodic spectra,
so the limit is approached at rate ``O(1/N)``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .diaperiodic import predicted_spectrum
from .errors import ArgumentError, IllConditionedSpectrumError
from .grid import box_counts, box_dimension_fit, rasterize_prefractal, refine_to_grid
from .ifs import IteratedFunctionSystem, moran_dimension
from .laplacian import WAVENUMBER, Spectrum, domain_spectrum, hypercube_spectrum


def spectral_sums(s: Spectrum, truncation: int) -> tuple[float, float]:
    """Numerator and denominator sums over the ``truncation`` smallest entries."""
    M = int(truncation)
    if M < 1:
        raise ArgumentError("truncation must be >= 1")
    if len(s) < M:
        raise ArgumentError(f"spectrum has {len(s)} distinct entries, truncation is {M}")
    lk = s.log_magnitudes[:M]
    if np.any(lk <= 0):
        bad = float(np.exp(lk[lk <= 0][0]))
        raise IllConditionedSpectrumError(
            f"magnitude {bad:.6g} <= 1 among the first {M}; rescale the domain")
    return float(s.log_multiplicities[:M].sum()), float(lk.sum())


def spectral_dimension(s: Spectrum, truncation: int) -> float:
    """Ratio of summed log multiplicities to summed log magnitudes."""
    num, den = spectral_sums(s, truncation)
    return num / den


def analytic_initiator(ifs: IteratedFunctionSystem, count: int) -> Spectrum:
    """Continuum Dirichlet spectrum of the unit-cube initiator."""
    if ifs.initiator is not None:
        raise ArgumentError("no closed-form initiator spectrum for a polytope initiator; "
                            "pass one explicitly or use numeric mode")
    return hypercube_spectrum(ifs.dim, count)


def spectral_dimension_sequence(ifs: IteratedFunctionSystem, initiator: Spectrum | None,
                                levels: Sequence[int], truncation: int,
                                mode: str = "analytic", refinement: int = 4,
                                cluster_tol: float = 1e-3, base: int | None = None):
    """``(N, dim)`` for each requested level.

    ``mode="analytic"`` uses the predicted diaperiodic spectrum grown from
    ``initiator`` (only its first ``truncation`` entries can reach the
    truncated window, so that many suffice).  ``mode="numeric"`` rasterizes
    each level, refines it by ``refinement`` and solves for its discrete
    spectrum.
    """
    out = []
    if mode == "analytic":
        if initiator is None:
            initiator = analytic_initiator(ifs, truncation)
        seed = initiator.truncate(min(len(initiator), truncation))
        for N in levels:
            pred = predicted_spectrum(seed, ifs.ratios, N).to_spectrum()
            out.append((int(N), spectral_dimension(pred, truncation)))
    elif mode == "numeric":
        for N in levels:
            g = refine_to_grid(rasterize_prefractal(ifs, N, base), refinement)
            s = domain_spectrum(g, cluster_tol, want_vectors=False, level=N)
            out.append((int(N), spectral_dimension(s, truncation)))
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    return out


def fit_asymptotic_constant(levels, dims, target: float) -> float:
    """Least-squares ``C`` in ``dim(N) - target ~ C / N``."""
    inv = 1.0 / np.asarray(levels, dtype=float)
    err = np.asarray(dims, dtype=float) - target
    return float((inv @ err) / (inv @ inv))


@dataclass
class DimensionReport:
    name: str
    spectral_dim: float
    box_dim: float
    moran_dim: float
    levels_used: list
    box_levels: list
    truncation: int
    mode: str
    convention: str = WAVENUMBER
    gaps: dict = field(default_factory=dict)

    def __post_init__(self):
        self.gaps = {
            "spectral_box": abs(self.spectral_dim - self.box_dim),
            "spectral_moran": abs(self.spectral_dim - self.moran_dim),
            "box_moran": abs(self.box_dim - self.moran_dim),
        }

    def as_dict(self):
        return asdict(self)

    def to_text(self) -> str:
        lines = []
        for k, v in self.as_dict().items():
            if k == "gaps":
                lines += [f"gap_{g}: {x:.12g}" for g, x in v.items()]
            else:
                lines.append(f"{k}: {v:.12g}" if isinstance(v, float) else f"{k}: {v}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        flat = {k: v for k, v in self.as_dict().items() if k != "gaps"}
        flat.update({f"gap_{g}": x for g, x in self.gaps.items()})
        flat["levels_used"] = " ".join(map(str, self.levels_used))
        flat["box_levels"] = " ".join(map(str, self.box_levels))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
        w.writeheader()
        w.writerow(flat)
        return buf.getvalue()


def dimension_report(ifs: IteratedFunctionSystem, level: int = 1000, truncation: int = 100,
                     box_levels: int = 4, mode: str = "analytic", initiator: Spectrum | None = None,
                     refinement: int = 4, cluster_tol: float = 1e-3,
                     base: int | None = None) -> DimensionReport:
    """Spectral, box-counting and Moran dimensions side by side.

    The box dimension is fitted on exact counts at ``b**-1 .. b**-box_levels``
    of the level-``box_levels`` prefractal; the spectral dimension is taken
    at ``level`` in the chosen ``mode``.
    """
    cs = rasterize_prefractal(ifs, box_levels, base)
    box = box_dimension_fit(box_counts(cs))
    moran = moran_dimension(ifs.ratios)
    (_, spectral), = spectral_dimension_sequence(ifs, initiator, [level], truncation, mode,
                                                 refinement, cluster_tol, base)
    return DimensionReport(ifs.name, spectral, box, moran, [level],
                           list(range(1, box_levels + 1)), truncation, mode)

