"""Self-similar (diaperiodic) modes: lifting, predicted spectra, classification.

A mode of the level ``N-1`` prefractal, contracted onto copy ``j`` of the
level ``N`` prefractal and set to zero elsewhere, is a candidate mode of
level ``N`` whose wavenumber is multiplied by ``1/c_j``.  Functions on the
copy are obtained by pulling points back through ``w_j^{-1}``, which is the
direction that keeps the contracted waveform on its copy.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ArgumentError, ResolutionError
from .grid import GridDomain
from .ifs import IteratedFunctionSystem, invert_map
from .laplacian import Spectrum, merge_log_entries

RATIO_GROUP_TOL = 1e-12


@dataclass(frozen=True)
class ModeLabel:
    """``(level, branch, index)`` of a mode; branch 0 is interconnective."""

    level: int
    branch: int
    index: int
    parent_index: int | None = None

    def __post_init__(self):
        if self.branch < 0:
            raise ArgumentError("branch must be >= 0")
        if self.branch > 0 and self.parent_index is None:
            raise ArgumentError("diaperiodic labels must reference a parent mode")


def _ratio_groups(ratios):
    groups: list[list] = []
    for j, c in enumerate(ratios, start=1):
        if not 0 < c < 1:
            raise ArgumentError(f"ratio {c} outside (0, 1)")
        for g in groups:
            if abs(g[0] - c) <= RATIO_GROUP_TOL:
                g[1].append(j)
                break
        else:
            groups.append([float(c), [j]])
    return [(c, tuple(members)) for c, members in groups]


@dataclass(frozen=True, eq=False)
class PredictedSpectrum:
    """Diaperiodic spectrum predicted from an initiator spectrum.

    Entries are stored in log form like :class:`Spectrum`.  Provenance of
    entry ``i`` is ``(n, counts)``: the initiator entry ``n`` it descends from
    and how many times each distinct ratio was applied (``groups[g]`` lists
    the ratio value and the 1-based maps sharing it).  Merged entries keep
    the provenance of their first constituent.
    """

    log_magnitudes: np.ndarray
    log_multiplicities: np.ndarray
    provenance: list
    groups: list
    level: int

    def __len__(self):
        return len(self.log_magnitudes)

    @property
    def magnitudes(self):
        return np.exp(self.log_magnitudes)

    @property
    def multiplicities(self):
        return self.to_spectrum().multiplicities

    def word(self, i: int) -> tuple:
        """A representative address word (over 1..p) for entry ``i``."""
        _, counts = self.provenance[i]
        out = []
        for (_, members), k in zip(self.groups, counts):
            out += [members[0]] * k
        return tuple(out)

    def to_spectrum(self, **meta) -> Spectrum:
        info = {"level": self.level, "analytic": True}
        info.update(meta)
        return Spectrum(self.log_magnitudes, self.log_multiplicities, meta=info)


def _compositions(total: int, parts: int):
    """All ``parts``-tuples of non-negative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def predicted_spectrum(initiator: Spectrum, ratios: Sequence[float], level: int,
                       rel_tol: float = 1e-12) -> PredictedSpectrum:
    """Diaperiodic spectrum of the level-``level`` prefractal.

    Applies ``S_k = U_j (1/c_j) * S_{k-1}`` starting from ``S_0 = initiator``
    with multiplicities adding.  Because scaling commutes with the union,
    the level-``N`` scale factors are indexed by how many times each
    distinct ratio was used; a count vector ``k`` occurs
    ``N! / prod(k_g!) * prod(p_g**k_g)`` times.  Logs of magnitudes and
    multiplicities are evaluated in closed form from those counts, so exact
    collisions merge reliably even at depth 10**4.

    Only diaperiodic entries are produced; interconnective ones are absent by
    construction.
    """
    if level < 0:
        raise ArgumentError("level must be >= 0")
    groups = _ratio_groups(list(ratios))
    if not groups:
        raise ArgumentError("need at least one ratio")
    q = len(groups)
    log_p = np.array([math.log(len(members)) for _, members in groups])
    log_inv_c = np.array([-math.log(c) for c, _ in groups])

    keys = sorted(_compositions(level, q))
    counts = np.array(keys, dtype=float).reshape(len(keys), q)
    log_scale = counts @ log_inv_c
    log_scale_mul = (math.lgamma(level + 1) - np.sum([[math.lgamma(k + 1) for k in key]
                                                      for key in keys], axis=1)
                     + counts @ log_p)
    n0 = len(initiator)
    lk = (log_scale[:, None] + initiator.log_magnitudes[None, :]).ravel()
    lm = (log_scale_mul[:, None] + initiator.log_multiplicities[None, :]).ravel()
    prov = [(n, keys[s]) for s in range(len(keys)) for n in range(n0)]

    order = np.argsort(lk, kind="stable")
    merged = merge_log_entries(lk, lm, rel_tol=rel_tol)
    # first constituent of each merged group, in sorted order
    tol = rel_tol * np.maximum(1.0, np.abs(lk[order]))
    starts = np.r_[0, np.flatnonzero(np.diff(lk[order]) > tol[1:]) + 1] if len(lk) else []
    provenance = [prov[order[s]] for s in starts]
    return PredictedSpectrum(merged.log_magnitudes, merged.log_multiplicities,
                             provenance, groups, level)


# ---------------------------------------------------------------------------
# lifting modes onto copies

def _lattice_field(domain: GridDomain, values):
    full = np.zeros(domain.shape)
    full[tuple(domain.interior.T)] = values
    return full


def lift_eigenfunction(parent_mode, parent: GridDomain, ifs: IteratedFunctionSystem,
                       j: int, target: GridDomain) -> np.ndarray:
    """Contract a parent grid function onto copy ``j`` of the target grid.

    Returns ``v`` on the target interior nodes with
    ``v(x) = parent_mode(w_j^{-1}(x))`` on copy ``j`` and zero elsewhere.
    Target nodes that pull back onto parent lattice nodes copy the value
    exactly; others are interpolated multilinearly.

    Parameters
    ----------
    parent_mode : (parent.n,) array_like
        Values on the parent interior nodes.
    parent, target : GridDomain
        Grids of ``E_{N-1}`` and ``E_N``.
    j : int
        1-based copy index.
    """
    if not 1 <= j <= ifs.p:
        raise ArgumentError(f"branch {j} outside 1..{ifs.p}")
    u = np.asarray(parent_mode, dtype=float)
    if u.shape != (parent.n,):
        raise ArgumentError(f"parent mode has shape {u.shape}, expected ({parent.n},)")
    field_ = _lattice_field(parent, u)
    pre = invert_map(ifs.maps[j - 1], target.points()) / parent.spacing
    if pre.ndim == 1:
        pre = pre[:, None]
    upper = np.asarray(parent.shape) - 1
    inside = np.all((pre > -1e-9) & (pre < upper + 1e-9), axis=1)
    if not inside.any():
        raise ResolutionError(f"copy {j} contains no node of the target grid")

    out = np.zeros(target.n)
    node = np.rint(pre)
    exact = inside & np.all(np.abs(pre - node) <= 1e-9, axis=1)
    idx = node[exact].astype(np.int64)
    out[exact] = field_[tuple(idx.T)]
    rest = inside & ~exact
    if rest.any():
        axes = [np.arange(s, dtype=float) for s in parent.shape]
        interp = RegularGridInterpolator(axes, field_, bounds_error=False, fill_value=0.0)
        out[rest] = interp(np.clip(pre[rest], 0, upper))
    return out


def lift_residual(lifted, L, predicted_magnitude: float, exponent: float = 0.5) -> float:
    """Relative eigen-residual ``|L v + lam v| / (lam |v|)`` of a lifted mode.

    ``lam = predicted_magnitude ** (1/exponent)`` is the predicted
    eigenvalue size; ``L`` is negative definite so ``-lam`` is the
    eigenvalue being tested.
    """
    v = np.asarray(lifted, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ArgumentError("cannot take the residual of a zero vector")
    lam = float(predicted_magnitude) ** (1.0 / exponent)
    return float(np.linalg.norm(L @ v + lam * v) / (lam * norm))


# ---------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class ClassifiedEntry:
    magnitude: float
    multiplicity: int
    branch: int
    parent_magnitude: float | None = None
    child_index: int = -1
    parent_index: int | None = None

    @property
    def label(self) -> ModeLabel:
        return ModeLabel(-1, self.branch, self.child_index, self.parent_index)


@dataclass(frozen=True, eq=False)
class Classification:
    """Partition of a child spectrum into diaperiodic and interconnective parts."""

    entries: list = field(default_factory=list)
    match_tol: float = 5e-2
    child_size: int = 0

    @property
    def diaperiodic(self):
        return [e for e in self.entries if e.branch > 0]

    @property
    def interconnective(self):
        return [e for e in self.entries if e.branch == 0]

    def diaperiodic_count(self) -> int:
        return sum(e.multiplicity for e in self.diaperiodic)

    def interconnective_count(self) -> int:
        return sum(e.multiplicity for e in self.interconnective)

    def matched_per_child(self) -> np.ndarray:
        """Diaperiodic multiplicity claimed by each child entry."""
        out = np.zeros(self.child_size, dtype=np.int64)
        for e in self.diaperiodic:
            out[e.child_index] += e.multiplicity
        return out


def classify_spectrum(child: Spectrum, parent: Spectrum, ratios: Sequence[float],
                      match_tol: float = 5e-2) -> Classification:
    """Match child magnitudes against the rescaled parent spectrum.

    Every pair ``(j, n)`` predicts ``kappa_n / c_j`` with budget
    ``mul_n``.  Child entries, in ascending order, claim the nearest
    prediction with budget left whose relative distance is within
    ``match_tol`` (ties go to the smaller prediction, then the smaller
    ``j``) until their own multiplicity is exhausted.  Whatever is left is
    labelled interconnective (branch 0).
    """
    preds = []
    pk, pm = parent.magnitudes, np.rint(np.exp(parent.log_multiplicities))
    for j, c in enumerate(ratios, start=1):
        for n, (k, m) in enumerate(zip(pk, pm)):
            preds.append((k / c, j, k, n))
    preds.sort()
    pred_mag = np.array([p[0] for p in preds])
    budget = np.array([pm[p[3]] for p in preds], dtype=float)

    entries = []
    ck, cm = child.magnitudes, np.rint(np.exp(child.log_multiplicities)).astype(np.int64)
    for i, (k, m) in enumerate(zip(ck, cm)):
        remaining = int(m)
        while remaining > 0 and len(pred_mag):
            dist = np.abs(pred_mag - k)
            ok = (budget > 0) & (dist <= match_tol * pred_mag)
            if not ok.any():
                break
            cand = np.flatnonzero(ok)
            best = cand[np.argmin(dist[cand])]  # argmin keeps the first (smaller) on ties
            take = int(min(remaining, budget[best]))
            budget[best] -= take
            remaining -= take
            _, j, kp, n = preds[best]
            entries.append(ClassifiedEntry(float(k), take, j, float(kp), i, n))
        if remaining:
            entries.append(ClassifiedEntry(float(k), remaining, 0, None, i, None))
    return Classification(entries, match_tol, len(child))


def diaperiodic_mode_mask(child: Spectrum, result: Classification) -> np.ndarray:
    """Mask of raw child eigenpairs whose whole cluster was matched."""
    if child.cluster is None:
        raise ArgumentError("spectrum carries no raw eigenpairs")
    full = result.matched_per_child() == np.rint(np.exp(child.log_multiplicities))
    return full[child.cluster]


def format_classification(result: Classification) -> str:
    buf = io.StringIO()
    buf.write(f"# match_tol: {result.match_tol}\n")
    buf.write("magnitude,multiplicity,branch,parent_magnitude\n")
    for e in result.entries:
        parent = "" if e.parent_magnitude is None else repr(e.parent_magnitude)
        buf.write(f"{float(e.magnitude)!r},{e.multiplicity},{e.branch},{parent}\n")
    return buf.getvalue()
