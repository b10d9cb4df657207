import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fractaldrum.errors import ArgumentError, UnsupportedIFSError
from fractaldrum.grid import (CellSet, box_counts, box_dimension_fit, format_box_counts,
                              format_cellset, interval_domain, parse_cellset,
                              rasterize_prefractal, refine_to_grid)
from fractaldrum.ifs import IteratedFunctionSystem, SimilarityMap, apply_map, compose_word
from oracles import point_in_cells


def test_cantor_level2_cells(cantor):
    cs = rasterize_prefractal(cantor, 2, 3)
    assert cs.cells.ravel().tolist() == [0, 2, 6, 8]


def test_carpet_level1_cells(carpet):
    cs = rasterize_prefractal(carpet, 1, 3)
    expected = sorted((a, b) for a in range(3) for b in range(3) if (a, b) != (1, 1))
    assert [tuple(c) for c in cs.cells.tolist()] == expected


@pytest.mark.parametrize("name", ["cantor", "interval", "carpet"])
def test_level0_is_unit_cell(name, request):
    ifs = request.getfixturevalue(name)
    cs = rasterize_prefractal(ifs, 0)
    assert cs.cells.tolist() == [[0] * ifs.dim]


@pytest.mark.parametrize("name, level", [("cantor", 3), ("carpet", 2), ("interval", 4)])
def test_cells_are_word_images(name, level, request):
    ifs = request.getfixturevalue(name)
    cs = rasterize_prefractal(ifs, level)
    b = cs.base
    import itertools
    brute = set()
    for word in itertools.product(range(1, ifs.p + 1), repeat=level):
        m = compose_word(ifs, word)
        lo = apply_map(m, np.zeros(ifs.dim))
        hi = apply_map(m, np.ones(ifs.dim))
        corner = np.minimum(lo, hi) * b**level
        brute.add(tuple(np.rint(corner).astype(int)))
    assert brute == {tuple(c) for c in cs.cells.tolist()}


def test_non_aligned_rejected():
    ifs = IteratedFunctionSystem([SimilarityMap.scaling(0.4, [0.0]),
                                  SimilarityMap.scaling(0.4, [0.6])])
    with pytest.raises(UnsupportedIFSError):
        rasterize_prefractal(ifs, 2, 3)


def test_reflected_map_is_aligned():
    flip = SimilarityMap(np.array([[-1 / 3]]), [1 / 3], 1 / 3)
    ifs = IteratedFunctionSystem([flip, SimilarityMap.scaling(1 / 3, [2 / 3])])
    cs = rasterize_prefractal(ifs, 2, 3)
    # flip(x) = 1/3 - x/3 sends [0,1/3] -> [2/9,1/3] and [2/3,1] -> [0,1/9]
    assert cs.cells.ravel().tolist() == [0, 2, 6, 8]


def test_gasket_sampling_is_conservative(gasket):
    cs = rasterize_prefractal(gasket, 4, 2)
    occ = cs.occupancy()
    # every level-4 triangle vertex lies in an occupied cell (or on a cell edge next to one)
    import itertools
    for word in itertools.product(range(1, 4), repeat=4):
        m = compose_word(gasket, word)
        for v in apply_map(m, gasket.initiator):
            c = np.minimum((v * cs.side).astype(int), cs.side - 1)
            assert occ[tuple(c)] or occ[tuple(np.maximum(c - 1, 0))]
    assert 3**4 <= len(cs) < cs.side**2


def test_refine_unit_interval():
    cs = CellSet(0, 2, 1, [[0]])
    g = refine_to_grid(cs, 4)
    assert g.spacing == 0.25
    assert np.allclose(g.points().ravel(), [0.25, 0.5, 0.75])


def test_refine_cantor(cantor):
    g = refine_to_grid(rasterize_prefractal(cantor, 1), 3)
    assert g.n == 4
    assert g.interior.ravel().tolist() == [1, 2, 7, 8]


def test_refine_rejects_small_r(cantor):
    with pytest.raises(ArgumentError):
        refine_to_grid(rasterize_prefractal(cantor, 1), 1)


def _brute_interior(cs, r):
    size = cs.cell_size
    h = size / r
    nodes = cs.side * r + 1
    import itertools
    out = []
    for idx in itertools.product(range(nodes), repeat=cs.dim):
        if point_in_cells(np.array(idx) * h, cs.cells.tolist(), size, eps=h * 1e-3):
            out.append(idx)
    return out


@pytest.mark.parametrize("name, level, r", [("carpet", 1, 3), ("cantor", 2, 3), ("interval", 2, 2)])
def test_refine_matches_brute_force_membership(name, level, r, request):
    cs = rasterize_prefractal(request.getfixturevalue(name), level)
    g = refine_to_grid(cs, r)
    assert [tuple(i) for i in g.interior.tolist()] == _brute_interior(cs, r)


def test_carpet_interfaces_are_interior(carpet):
    g = refine_to_grid(rasterize_prefractal(carpet, 1), 3)
    # full 8x8 interior of the 9x9-step square minus the closed centre hole (4x4 nodes)
    assert g.n == 64 - 16
    assert g.locate([1 / 3, 1 / 9]) >= 0      # on the interface between two copies
    assert g.locate([0.5, 0.5]) == -1          # inside the hole


def test_box_count_examples(cantor, carpet):
    cs = rasterize_prefractal(cantor, 3)
    assert dict(box_counts(cs, [3**-3, 3**-1])) == {3**-3: 8, 3**-1: 2}
    cs = rasterize_prefractal(carpet, 2)
    assert dict(box_counts(cs, [3**-2]))[3**-2] == 64


def test_box_count_rejects_misaligned(cantor):
    with pytest.raises(ArgumentError):
        box_counts(rasterize_prefractal(cantor, 2), [0.25])
    with pytest.raises(ArgumentError):
        box_counts(rasterize_prefractal(cantor, 2), [3**-3])


def test_box_fit_examples():
    data = [(3.0**-k, 2**k) for k in range(1, 5)]
    assert box_dimension_fit(data) == pytest.approx(math.log(2) / math.log(3), abs=1e-12)
    assert box_dimension_fit([(0.5, 2), (0.25, 4)]) == pytest.approx(1.0, abs=1e-12)
    data = [(3.0**-k, 8**k) for k in range(1, 5)]
    assert box_dimension_fit(data) == pytest.approx(1.8927892607, abs=1e-10)


def test_box_fit_needs_two_points():
    with pytest.raises(ArgumentError):
        box_dimension_fit([(0.5, 2)])


def test_cellset_roundtrip(carpet):
    cs = rasterize_prefractal(carpet, 2)
    text = format_cellset(cs)
    assert text.splitlines()[0] == "2 3 2"
    back = parse_cellset(text)
    assert np.array_equal(back.cells, cs.cells)


def test_box_count_csv(cantor):
    text = format_box_counts(box_counts(rasterize_prefractal(cantor, 2)))
    lines = text.splitlines()
    assert lines[0] == "delta,count,log_count"
    assert lines[2].split(",")[1] == "4"


def test_interval_domain():
    g = interval_domain(4)
    assert g.n == 3 and g.spacing == 0.25


# ---------------------------------------------------------------------------
# properties

@pytest.mark.parametrize("name, levels", [("cantor", 5), ("interval", 6), ("carpet", 3)])
def test_self_similar_counts(name, levels, request):
    ifs = request.getfixturevalue(name)
    cs = rasterize_prefractal(ifs, levels)
    assert len(cs) == ifs.p**levels
    counts = [n for _, n in box_counts(cs, [cs.base**-k for k in range(levels + 1)])]
    for k in range(levels):
        assert counts[k + 1] == ifs.p * counts[k]


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_box_counts_monotone(seed, level):
    rng = np.random.default_rng(seed)
    side = 3**level
    cells = np.unique(rng.integers(0, side, size=(rng.integers(1, 40), 2)), axis=0)
    cs = CellSet(level, 3, 2, cells)
    counts = box_counts(cs, [3.0**-k for k in range(level + 1)])
    deltas = [d for d, _ in counts]
    values = [n for _, n in counts]
    assert deltas == sorted(deltas, reverse=True)
    assert values == sorted(values)     # smaller boxes never count fewer


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_interior_nodes_pass_membership(seed, r):
    rng = np.random.default_rng(seed)
    cells = np.unique(rng.integers(0, 3, size=(rng.integers(1, 9), 2)), axis=0)
    cs = CellSet(1, 3, 2, cells)
    g = refine_to_grid(cs, r)
    pts = g.points()
    for p in pts:
        assert point_in_cells(p, cs.cells.tolist(), cs.cell_size, eps=g.spacing * 1e-3)
