"""Affine similarities, iterated function systems and the Moran equation.

Maps act on column vectors: ``w(x) = linear @ x + translation``.  Every map
is a similarity, i.e. ``linear = ratio * Q`` with ``Q`` orthogonal, so the
contraction ratio is exact and all eigenvalue scaling laws hold with
equality.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ParseError

SIMILARITY_TOL = 1e-12


class OverlapClass(str, enum.Enum):
    DISCONNECTED = "disconnected"
    JUST_TOUCHING = "just_touching"
    OVERLAPPING = "overlapping"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class SimilarityMap:
    """One contracting similarity ``x -> linear @ x + translation``.

    Parameters
    ----------
    linear : (d, d) array_like
        Linear part; must equal ``ratio`` times an orthogonal matrix.
    translation : (d,) array_like
    ratio : float
        Contraction ratio, strictly inside (0, 1).
    """

    linear: np.ndarray
    translation: np.ndarray
    ratio: float

    def __post_init__(self):
        lin = np.atleast_2d(np.asarray(self.linear, dtype=float))
        t = np.atleast_1d(np.asarray(self.translation, dtype=float))
        ratio = float(self.ratio)
        if lin.ndim != 2 or lin.shape[0] != lin.shape[1]:
            raise ArgumentError(f"linear part must be square, got shape {lin.shape}")
        if t.shape != (lin.shape[0],):
            raise ArgumentError(
                f"translation has shape {t.shape}, expected ({lin.shape[0]},)")
        if not 0.0 < ratio < 1.0:
            raise ArgumentError(f"contraction ratio must lie in (0, 1), got {ratio}")
        gram = lin.T @ lin
        if np.max(np.abs(gram - ratio**2 * np.eye(len(t)))) > SIMILARITY_TOL:
            raise ArgumentError(
                "linear part is not ratio * orthogonal; only similarities are supported")
        lin.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "ratio", ratio)

    @classmethod
    def scaling(cls, ratio, translation):
        """Homothety ``x -> ratio * x + translation``."""
        t = np.atleast_1d(np.asarray(translation, dtype=float))
        return cls(ratio * np.eye(len(t)), t, ratio)

    @property
    def dim(self) -> int:
        return len(self.translation)

    def __call__(self, x):
        return apply_map(self, x)

    def __repr__(self):
        return (f"SimilarityMap(ratio={self.ratio:.6g}, "
                f"linear={self.linear.tolist()}, translation={self.translation.tolist()})")


@dataclass(frozen=True, eq=False)
class Identity:
    """Identity marker returned for the empty word (the initiator itself).

    Not a contraction, so it is deliberately a separate type from
    :class:`SimilarityMap`; it supports the same ``apply``/``invert`` calls.
    """

    dim: int
    ratio: float = 1.0

    @property
    def linear(self):
        return np.eye(self.dim)

    @property
    def translation(self):
        return np.zeros(self.dim)

    def __call__(self, x):
        return apply_map(self, x)


def _check_point(m, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (m.dim,) and not (m.dim == 1 and x.ndim == 0):
        raise ArgumentError(f"point of shape {x.shape} does not match map dimension {m.dim}")
    return x


def apply_map(m, x):
    """Apply ``m`` to a point or to a stack of points of shape (..., d)."""
    x = _check_point(m, x)
    if m.dim == 1 and x.ndim == 0:
        return float(m.linear[0, 0] * x + m.translation[0])
    return x @ m.linear.T + m.translation


def invert_map(m, y):
    """Pull ``y`` back through ``m``: returns ``x`` with ``m(x) = y``.

    Uses ``linear^{-1} = linear.T / ratio**2`` which is exact for similarities.
    """
    y = _check_point(m, y)
    inv = m.linear.T / m.ratio**2
    if not np.all(np.isfinite(inv)):
        raise ArithmeticError("singular linear part")
    if m.dim == 1 and y.ndim == 0:
        return float(inv[0, 0] * (y - m.translation[0]))
    return (y - m.translation) @ inv.T


def _compose(outer, inner):
    # (outer o inner)(x) = A_o (A_i x + t_i) + t_o
    return SimilarityMap(outer.linear @ inner.linear,
                         outer.linear @ inner.translation + outer.translation,
                         outer.ratio * inner.ratio)


@dataclass(frozen=True, eq=False)
class IteratedFunctionSystem:
    """Ordered family of similarities ``w_1 .. w_p``.

    ``initiator`` is ``None`` for the unit hypercube ``[0, 1]^d``, otherwise
    the vertices of a convex polytope (used for gasket-like systems).
    ``overlap_class`` is only meaningful together with ``probe_depth``, the
    rasterization depth at which it was determined.
    """

    maps: tuple
    overlap_class: OverlapClass = OverlapClass.UNKNOWN
    probe_depth: int | None = None
    name: str = ""
    initiator: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 2:
            raise ArgumentError("an IFS needs at least two maps")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise ArgumentError(f"maps disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "overlap_class", OverlapClass(self.overlap_class))
        if self.overlap_class is not OverlapClass.UNKNOWN and self.probe_depth is None:
            raise ArgumentError("a known overlap class must record its probe depth")
        if self.initiator is not None:
            verts = np.asarray(self.initiator, dtype=float)
            if verts.ndim != 2 or verts.shape[1] != self.dim or len(verts) <= self.dim:
                raise ArgumentError("initiator must be an array of at least d+1 vertices in R^d")
            object.__setattr__(self, "initiator", verts)

    @property
    def p(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def ratios(self) -> list[float]:
        return [m.ratio for m in self.maps]

    def classified(self, depth: int = 6) -> "IteratedFunctionSystem":
        """Return a copy carrying the overlap class probed at ``depth``."""
        verdict = classify_overlap(self, depth)
        return IteratedFunctionSystem(self.maps, verdict, depth, self.name, self.initiator)

    def __len__(self):
        return self.p


def compose_word(ifs: IteratedFunctionSystem, word: Sequence[int]):
    """Compose ``w_{a1} o w_{a2} o ... o w_{aN}`` for a 1-based address word.

    The empty word yields an :class:`Identity` marker for the initiator.
    """
    word = list(word)
    for letter in word:
        if not (isinstance(letter, (int, np.integer)) and 1 <= letter <= ifs.p):
            raise ArgumentError(f"address letter {letter!r} outside 1..{ifs.p}")
    if not word:
        return Identity(ifs.dim)
    out = ifs.maps[word[-1] - 1]
    for letter in reversed(word[:-1]):
        out = _compose(ifs.maps[letter - 1], out)
    return out


def _cube_corners(d):
    return np.array(list(itertools.product((0.0, 1.0), repeat=d)))


def _reference_hull(ifs):
    from scipy.spatial import ConvexHull

    verts = ifs.initiator if ifs.initiator is not None else _cube_corners(ifs.dim)
    if ifs.dim == 1:
        lo, hi = float(verts.min()), float(verts.max())
        return verts, np.array([[-1.0], [1.0]]), np.array([lo, -hi])
    eq = ConvexHull(verts).equations
    return verts, eq[:, :-1], eq[:, -1]


def classify_overlap(ifs: IteratedFunctionSystem, depth: int) -> OverlapClass:
    """Classify how the first-level copies of the reference initiator meet.

    The reference is the unit hypercube, or the IFS's polytope initiator when
    it has one.  Each copy is rasterized on a grid of side ``2**-depth``: a
    cell belongs to the copy's interior set when its centre pulls back
    strictly inside the reference, and to its closure set when the centre
    pulls back within the (scaled) cell half-diagonal of it.  Ambiguity at
    the probe resolution therefore errs toward touching/overlapping.
    """
    if depth < 1:
        raise ArgumentError("probe depth must be >= 1")
    d = ifs.dim
    verts, normals, offsets = _reference_hull(ifs)
    images = np.concatenate([apply_map(m, verts) for m in ifs.maps])
    step = 2.0 ** -depth
    lo = np.floor(images.min(axis=0) / step) - 1
    hi = np.ceil(images.max(axis=0) / step) + 1
    axes = [(np.arange(a, b) + 0.5) * step for a, b in zip(lo, hi)]
    centres = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    half_diag = 0.5 * step * math.sqrt(d)

    interiors, closures = [], []
    for m in ifs.maps:
        signed = invert_map(m, centres) @ normals.T + offsets
        interiors.append(np.all(signed < -1e-12, axis=1))
        closures.append(np.all(signed <= half_diag / m.ratio, axis=1))

    touching = False
    for i, j in itertools.combinations(range(ifs.p), 2):
        if np.any(interiors[i] & interiors[j]):
            return OverlapClass.OVERLAPPING
        if np.any(closures[i] & closures[j]):
            touching = True
    return OverlapClass.JUST_TOUCHING if touching else OverlapClass.DISCONNECTED


def moran_dimension(ratios: Sequence[float]) -> float:
    """Similarity dimension: the root ``s >= 0`` of ``sum(c_j**s) == 1``.

    Bisection on a bracket grown until the sum drops below one, followed by
    a single Newton polish.
    """
    c = np.asarray(list(ratios), dtype=float)
    if c.size == 0:
        raise ArgumentError("moran_dimension needs at least one ratio")
    if np.any((c <= 0) | (c >= 1)):
        raise ArgumentError("all ratios must lie in (0, 1)")
    logc = np.log(c)

    def f(s):
        return np.exp(s * logc).sum() - 1.0

    lo, hi = 0.0, float(c.size) + 10.0
    while f(hi) > 0:
        hi *= 2.0
    if f(lo) <= 0:
        return 0.0
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    slope = (logc * np.exp(s * logc)).sum()
    polished = s - f(s) / slope
    # keep the polish only if it does not leave the bracket
    return float(polished if lo - 1e-13 <= polished <= hi + 1e-13 else s)


# ---------------------------------------------------------------------------
# presets

def interval_ifs():
    maps = [SimilarityMap.scaling(0.5, [0.0]), SimilarityMap.scaling(0.5, [0.5])]
    return IteratedFunctionSystem(maps, name="interval").classified()


def cantor_ifs():
    maps = [SimilarityMap.scaling(1 / 3, [0.0]), SimilarityMap.scaling(1 / 3, [2 / 3])]
    return IteratedFunctionSystem(maps, name="cantor").classified()


def carpet_ifs():
    maps = [SimilarityMap.scaling(1 / 3, [a / 3, b / 3])
            for a in range(3) for b in range(3) if (a, b) != (1, 1)]
    return IteratedFunctionSystem(maps, name="carpet").classified()


def gasket_ifs():
    h = math.sqrt(3) / 2
    maps = [SimilarityMap.scaling(0.5, t) for t in ([0.0, 0.0], [0.5, 0.0], [0.25, h / 2])]
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, h]])
    return IteratedFunctionSystem(maps, name="gasket", initiator=tri).classified()


PRESETS = {
    "interval": interval_ifs,
    "cantor": cantor_ifs,
    "carpet": carpet_ifs,
    "gasket": gasket_ifs,
}


# ---------------------------------------------------------------------------
# IFS definition files
#
#   # comment
#   dim: 2
#   [map]
#   matrix: 1/3 0 0 1/3        (row major)
#   translation: 0 2/3
#   ratio: 1/3
#   [map]
#   ...
#   initiator: x0 y0 x1 y1 ...  (optional, top level, flattened vertices)

def _numbers(text, lineno, path):
    try:
        return [float(Fraction(tok)) for tok in text.split()]
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"cannot parse numbers from {text!r}", lineno, path) from None


def parse_ifs_text(text: str, path=None, name="") -> IteratedFunctionSystem:
    """Parse the ``key: value`` IFS definition format (see module source)."""
    dim = None
    initiator = None
    blocks: list[dict] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower() == "[map]":
            blocks.append({"_line": lineno})
            continue
        if ":" not in line:
            raise ParseError(f"expected 'key: value' or '[map]', got {line!r}", lineno, path)
        key, value = (s.strip() for s in line.split(":", 1))
        key = key.lower()
        if key == "dim":
            if blocks:
                raise ParseError("'dim' must precede the first [map]", lineno, path)
            try:
                dim = int(value)
            except ValueError:
                raise ParseError(f"dim must be an integer, got {value!r}", lineno, path) from None
            if dim < 1:
                raise ParseError("dim must be positive", lineno, path)
        elif key == "initiator":
            initiator = (_numbers(value, lineno, path), lineno)
        elif key in ("matrix", "translation", "ratio"):
            if not blocks:
                raise ParseError(f"'{key}' outside a [map] block", lineno, path)
            if key in blocks[-1]:
                raise ParseError(f"duplicate '{key}' in map", lineno, path)
            blocks[-1][key] = (_numbers(value, lineno, path), lineno)
        else:
            raise ParseError(f"unknown key {key!r}", lineno, path)

    if dim is None:
        raise ParseError("missing 'dim'", None, path)
    if len(blocks) < 2:
        raise ParseError(f"need at least two [map] blocks, found {len(blocks)}", None, path)

    maps = []
    for block in blocks:
        for key in ("matrix", "translation", "ratio"):
            if key not in block:
                raise ParseError(f"map is missing '{key}'", block["_line"], path)
        mat, ml = block["matrix"]
        tr, tl = block["translation"]
        ratio, rl = block["ratio"]
        if len(mat) != dim * dim:
            raise ParseError(f"matrix needs {dim * dim} entries, got {len(mat)}", ml, path)
        if len(tr) != dim:
            raise ParseError(f"translation needs {dim} entries, got {len(tr)}", tl, path)
        if len(ratio) != 1:
            raise ParseError("ratio takes a single value", rl, path)
        try:
            maps.append(SimilarityMap(np.reshape(mat, (dim, dim)), tr, ratio[0]))
        except ArgumentError as exc:
            raise ParseError(str(exc), block["_line"], path) from None

    verts = None
    if initiator is not None:
        vals, il = initiator
        if len(vals) % dim or len(vals) // dim <= dim:
            raise ParseError("initiator needs at least d+1 vertices of d coordinates", il, path)
        verts = np.reshape(vals, (-1, dim))
    return IteratedFunctionSystem(maps, name=name, initiator=verts)


def format_ifs(ifs: IteratedFunctionSystem) -> str:
    """Serialize to the definition format read by :func:`parse_ifs_text`."""
    fmt = lambda xs: " ".join(repr(float(v)) for v in np.ravel(xs))  # noqa: E731
    lines = [f"dim: {ifs.dim}"]
    if ifs.initiator is not None:
        lines.append(f"initiator: {fmt(ifs.initiator)}")
    for m in ifs.maps:
        lines += ["[map]", f"matrix: {fmt(m.linear)}",
                  f"translation: {fmt(m.translation)}", f"ratio: {float(m.ratio)!r}"]
    return "\n".join(lines) + "\n"


def load_ifs(source: str | Path, depth: int = 6) -> IteratedFunctionSystem:
    """Resolve a preset name or read an IFS definition file and classify it."""
    key = str(source)
    if key in PRESETS:
        return PRESETS[key]()
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read IFS file: {exc.strerror}", None, path) from None
    return parse_ifs_text(text, path=path, name=path.stem).classified(depth)
