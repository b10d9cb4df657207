"""Rasterized prefractals, Dirichlet node sets and coarse-grained box counting.

A level-``N`` prefractal is stored as the set of integer cells of side
``base**-N`` it occupies inside the unit box.  Refining every cell into
``r`` grid steps gives a node-centred finite-difference grid; a node is an
interior (unknown) node when every cell touching it is occupied, so nodes on
the outer boundary are eliminated while nodes on internal interfaces between
just-touching copies are kept.
"""
from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .errors import ArgumentError, ParseError, UnsupportedIFSError
from .ifs import IteratedFunctionSystem, apply_map, compose_word, invert_map

_ALIGN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CellSet:
    """Occupied cells of a level-``N`` prefractal on the ``base**N`` grid.

    ``cells`` is an ``(n, d)`` integer array, unique rows in lexicographic
    order.
    """

    level: int
    base: int
    dim: int
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, self.dim)
        side = self.base ** self.level
        if cells.size and (cells.min() < 0 or cells.max() >= side):
            raise ArgumentError(f"cell coordinate outside [0, {side})")
        uniq = np.unique(cells, axis=0)
        if len(uniq) != len(cells):
            raise ArgumentError("duplicate cells")
        uniq.setflags(write=False)
        object.__setattr__(self, "cells", uniq)

    @property
    def side(self) -> int:
        return self.base ** self.level

    @property
    def cell_size(self) -> float:
        return float(self.base) ** -self.level

    def __len__(self):
        return len(self.cells)

    @cached_property
    def _occupancy(self):
        occ = np.zeros((self.side,) * self.dim, dtype=bool)
        occ[tuple(self.cells.T)] = True
        occ.setflags(write=False)
        return occ

    def occupancy(self) -> np.ndarray:
        """Boolean array of shape ``(side,) * dim`` (read-only)."""
        return self._occupancy


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Interior nodes of a refined prefractal.

    Node ``i`` (an integer vector) sits at the physical point ``i * spacing``.
    ``mask`` marks interior nodes on the full ``shape`` node lattice and
    ``index`` maps each lattice node to its unknown number (``-1`` when the
    node is not interior).
    """

    spacing: float
    dim: int
    interior: np.ndarray
    shape: tuple
    cellset: CellSet | None = field(default=None, repr=False)
    refinement: int | None = None

    def __post_init__(self):
        interior = np.asarray(self.interior, dtype=np.int64).reshape(-1, self.dim)
        interior.setflags(write=False)
        object.__setattr__(self, "interior", interior)
        index = np.full(self.shape, -1, dtype=np.int64)
        index[tuple(interior.T)] = np.arange(len(interior))
        index.setflags(write=False)
        object.__setattr__(self, "index", index)

    @property
    def mask(self) -> np.ndarray:
        return self.index >= 0

    @property
    def n(self) -> int:
        return len(self.interior)

    def points(self) -> np.ndarray:
        return self.interior * self.spacing

    def locate(self, point, tol: float = 1e-9) -> int:
        """Unknown number of the interior node at ``point``, or -1.

        Points farther than ``tol * spacing`` from every lattice node, or on
        a non-interior node, give -1.
        """
        x = np.atleast_1d(np.asarray(point, dtype=float)) / self.spacing
        node = np.rint(x)
        if np.max(np.abs(x - node)) > tol:
            return -1
        node = node.astype(np.int64)
        if np.any(node < 0) or np.any(node >= np.asarray(self.shape)):
            return -1
        return int(self.index[tuple(node)])

    def in_closure(self, point, tol: float = 1e-9) -> bool:
        """Whether ``point`` lies in the closed union of the occupied cells."""
        if self.cellset is None:
            raise ArgumentError("closure test needs the originating CellSet")
        cs = self.cellset
        y = np.atleast_1d(np.asarray(point, dtype=float)) / cs.cell_size
        ranges = [range(max(math.ceil(v - 1 - tol), 0), min(math.floor(v + tol), cs.side - 1) + 1)
                  for v in y]
        occ = cs.occupancy()
        return any(occ[c] for c in itertools.product(*ranges))


def _grid_alignment(ifs: IteratedFunctionSystem, base: int):
    """Signed permutation and integer offset of each map, or raise."""
    out = []
    for j, m in enumerate(ifs.maps, start=1):
        if abs(m.ratio * base - 1.0) > _ALIGN_TOL:
            raise UnsupportedIFSError(
                f"map {j} has ratio {m.ratio:.6g}, not 1/{base}; "
                "not grid aligned (build a GridDomain directly instead)")
        perm = m.linear * base
        rounded = np.rint(perm)
        if np.max(np.abs(perm - rounded)) > _ALIGN_TOL:
            raise UnsupportedIFSError(f"map {j} is rotated off the grid axes")
        neg = (rounded < 0).any(axis=1).astype(np.int64)
        shift = m.translation * base
        rshift = np.rint(shift)
        if np.max(np.abs(shift - rshift)) > _ALIGN_TOL:
            raise UnsupportedIFSError(f"map {j} translation is not a multiple of 1/{base}")
        corner = rshift - neg
        if np.any(corner < 0) or np.any(corner > base - 1):
            raise UnsupportedIFSError(f"map {j} sends the unit cell outside the unit box")
        out.append((rounded.astype(np.int64), neg, rshift.astype(np.int64)))
    return out


def _rasterize_aligned(ifs, level, base):
    maps = _grid_alignment(ifs, base)
    cells = np.zeros((1, ifs.dim), dtype=np.int64)
    for n in range(1, level + 1):
        side = base ** n
        parts = [cells @ perm.T - neg + shift * (side // base) for perm, neg, shift in maps]
        cells = np.unique(np.concatenate(parts), axis=0)
        assert cells.min() >= 0 and cells.max() < side
    return cells


def _rasterize_sampled(ifs, level, base):
    verts = ifs.initiator if ifs.initiator is not None else \
        np.array(list(itertools.product((0.0, 1.0), repeat=ifs.dim)))
    hull = ConvexHull(verts)
    normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
    side = base ** level
    size = 1.0 / side
    half_diag = 0.5 * size * math.sqrt(ifs.dim)
    occupied = np.zeros((side,) * ifs.dim, dtype=bool)
    for word in itertools.product(range(1, ifs.p + 1), repeat=level):
        m = compose_word(ifs, word)
        image = apply_map(m, verts)
        lo = np.clip(np.floor((image.min(axis=0) - half_diag) / size).astype(int), 0, side)
        hi = np.clip(np.ceil((image.max(axis=0) + half_diag) / size).astype(int), 0, side)
        if np.any(hi <= lo):
            continue
        axes = [np.arange(a, b) for a, b in zip(lo, hi)]
        block = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, ifs.dim)
        pre = invert_map(m, (block + 0.5) * size)
        inside = np.all(pre @ normals.T + offsets <= half_diag / m.ratio, axis=1)
        occupied[tuple(block[inside].T)] = True
    return np.argwhere(occupied)


def rasterize_prefractal(ifs: IteratedFunctionSystem, level: int, base: int | None = None,
                         sampled: bool | None = None) -> CellSet:
    """Cells occupied by the level-``level`` prefractal of the unit-box initiator.

    Grid-aligned systems (every map sends cells of side ``1/base`` onto grid
    cells) are rasterized exactly.  Systems with a polytope initiator are
    point sampled: a cell is kept when its centre lies within half a cell
    diagonal of some level-``level`` image of the initiator.

    Parameters
    ----------
    ifs : IteratedFunctionSystem
    level : int
        Prefractal order ``N >= 0``.
    base : int, optional
        Cells per side per iteration; inferred from the first ratio when
        omitted.
    sampled : bool, optional
        Force (``True``) or forbid (``False``) the point-sampling path.
        Defaults to sampling only when the IFS has a polytope initiator.
    """
    if level < 0:
        raise ArgumentError("level must be >= 0")
    if base is None:
        base = int(round(1.0 / ifs.maps[0].ratio))
    if base < 2:
        raise ArgumentError("base must be >= 2")
    if sampled is None:
        sampled = ifs.initiator is not None
    if sampled:
        cells = _rasterize_sampled(ifs, level, base)
    else:
        cells = _rasterize_aligned(ifs, level, base)
    return CellSet(level, base, ifs.dim, cells)


def refine_to_grid(cs: CellSet, refinement: int) -> GridDomain:
    """Node-centred grid with ``refinement`` steps per cell side.

    Spacing is ``base**-N / refinement``.  A node is interior when all cells
    sharing it are occupied.
    """
    r = int(refinement)
    if r < 2:
        raise ArgumentError(f"refinement must be >= 2, got {refinement}")
    d = cs.dim
    nodes = cs.side * r + 1
    padded = np.zeros((cs.side + 2,) * d, dtype=bool)
    padded[(slice(1, -1),) * d] = cs.occupancy()
    i = np.arange(nodes)
    # +1 for the padding layer; lower == upper away from cell faces
    lower = (i - 1) // r + 1
    upper = i // r + 1
    mask = np.ones((nodes,) * d, dtype=bool)
    for choice in itertools.product((lower, upper), repeat=d):
        mask &= padded[np.ix_(*choice)]
    interior = np.argwhere(mask)
    return GridDomain(cs.cell_size / r, d, interior, (nodes,) * d, cs, r)


def interval_domain(n_steps: int, length: float = 1.0) -> GridDomain:
    """Grid on ``[0, length]`` with ``n_steps`` steps (``n_steps - 1`` unknowns)."""
    if n_steps < 2:
        raise ArgumentError("need at least two steps")
    return GridDomain(length / n_steps, 1, np.arange(1, n_steps)[:, None], (n_steps + 1,))


def box_domain(n_steps: Sequence[int], spacing: float) -> GridDomain:
    """Rectangle/box with ``n_steps[k]`` steps of ``spacing`` along axis ``k``."""
    n_steps = [int(s) for s in n_steps]
    if min(n_steps) < 2:
        raise ArgumentError("need at least two steps per axis")
    axes = [np.arange(1, s) for s in n_steps]
    interior = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(n_steps))
    return GridDomain(spacing, len(n_steps), interior, tuple(s + 1 for s in n_steps))


def _scale_level(cs: CellSet, delta: float) -> int:
    k = int(round(-math.log(delta) / math.log(cs.base)))
    if k < 0 or k > cs.level or abs(cs.base ** -k - delta) > 1e-12 * delta:
        raise ArgumentError(
            f"box side {delta!r} is not base**-k with 0 <= k <= {cs.level}")
    return k


def box_counts(cs: CellSet, scales: Sequence[float] | None = None) -> list[tuple[float, int]]:
    """Number of occupied ``b**-k`` boxes for each requested box side.

    ``scales`` defaults to ``b**-1 .. b**-N``.
    """
    if scales is None:
        scales = [float(cs.base) ** -k for k in range(1, cs.level + 1)]
    out = []
    for delta in scales:
        k = _scale_level(cs, float(delta))
        coarse = cs.cells // cs.base ** (cs.level - k)
        out.append((float(delta), int(len(np.unique(coarse, axis=0)))))
    return out


def box_dimension_fit(counts: Sequence[tuple[float, int]]) -> float:
    """Least-squares slope of ``log count`` against ``-log delta``."""
    counts = list(counts)
    if len(counts) < 2:
        raise ArgumentError("box dimension fit needs at least two scales")
    delta = np.array([c[0] for c in counts], dtype=float)
    n = np.array([c[1] for c in counts], dtype=float)
    if np.any(n < 1) or np.any(delta <= 0):
        raise ArgumentError("counts must be >= 1 and box sides positive")
    x, y = -np.log(delta), np.log(n)
    if np.ptp(x) == 0:
        raise ArgumentError("box sides must not all be equal")
    x0, y0 = x - x.mean(), y - y.mean()
    return float((x0 @ y0) / (x0 @ x0))


# ---------------------------------------------------------------------------
# text formats

def format_cellset(cs: CellSet) -> str:
    buf = io.StringIO()
    buf.write(f"{cs.level} {cs.base} {cs.dim}\n")
    for c in cs.cells.tolist():
        buf.write(" ".join(map(str, c)) + "\n")
    return buf.getvalue()


def parse_cellset(text: str, path=None) -> CellSet:
    lines = [(n, ln.strip()) for n, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not lines:
        raise ParseError("empty cell file", None, path)
    try:
        level, base, dim = (int(t) for t in lines[0][1].split())
    except ValueError:
        raise ParseError("header must be 'level base dim'", lines[0][0], path) from None
    cells = []
    for n, ln in lines[1:]:
        try:
            row = [int(t) for t in ln.split()]
        except ValueError:
            raise ParseError(f"non-integer cell coordinate in {ln!r}", n, path) from None
        if len(row) != dim:
            raise ParseError(f"expected {dim} coordinates", n, path)
        cells.append(row)
    try:
        return CellSet(level, base, dim, np.array(cells, dtype=np.int64).reshape(-1, dim))
    except ArgumentError as exc:
        raise ParseError(str(exc), None, path) from None


def format_box_counts(counts) -> str:
    rows = ["delta,count,log_count"]
    rows += [f"{float(delta)!r},{n},{math.log(n)!r}" for delta, n in counts]
    return "\n".join(rows) + "\n"
