import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import shortest_costs
from swarminspect.planner import (Region, astar, entry_candidates, inspection_layers,
                                  nearest_target_dijkstra, octile_3d, partition_regions)
from swarminspect.voxel_map import Submap, VoxelGrid


def grid(n=10, occ=()):
    g = VoxelGrid((0, 0, 0), 1.0, (n, n, n))
    for v in occ:
        g.occupied[v] = True
    return g


def test_astar_trivial_and_diagonal():
    g = grid()
    p = astar(g, (2, 2, 2), (2, 2, 2))
    assert p.cells == ((2, 2, 2),) and p.cost == 0
    p = astar(g, (0, 0, 0), (9, 9, 9))
    assert abs(p.cost - 9 * math.sqrt(3)) < 1e-9 and len(p) == 10


def test_astar_walled_off():
    g = grid(5, [v for v in itertools.product(range(5), repeat=3) if max(abs(x - 2) for x in v) == 1])
    assert astar(g, (0, 0, 0), (2, 2, 2)) is None


def test_astar_respects_blocked_and_adjacency():
    g = grid(6)
    blocked = {(2, j, k) for j in range(6) for k in range(5)}
    p = astar(g, (0, 0, 0), (5, 0, 0), blocked)
    assert not set(p.cells) & blocked
    for a, b in zip(p.cells, p.cells[1:]):
        assert max(abs(a[i] - b[i]) for i in range(3)) == 1


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.integers(-20, 20)] * 3), st.tuples(*[st.integers(-20, 20)] * 3))
def test_octile_is_exact_on_empty_grid_metric(a, b):
    d = sorted(abs(a[i] - b[i]) for i in range(3))
    assert math.isclose(octile_3d(a, b), d[0] * math.sqrt(3) + (d[1] - d[0]) * math.sqrt(2) + d[2] - d[1])


def test_astar_matches_reference_on_random_grids():
    rng = np.random.default_rng(1)
    for _ in range(30):
        dims = tuple(int(x) for x in rng.integers(2, 8, size=3))
        free = rng.random(dims) > 0.3
        cells = np.argwhere(free)
        if len(cells) < 2:
            continue
        s, t = (tuple(int(x) for x in cells[i]) for i in rng.choice(len(cells), 2, replace=False))
        g = VoxelGrid((0, 0, 0), 1.0, dims)
        g.occupied[:] = ~free
        ref = shortest_costs(free, s)[t]
        p = astar(g, s, t)
        if math.isinf(ref):
            assert p is None
        else:
            assert abs(p.cost - ref) < 1e-9


def _submap(dims, occ=()):
    s = Submap(0, (0, 0, 0), 1.0, dims)
    s.insert_voxels(occ)
    return s


def test_nearest_target_picks_closer_of_two():
    s = _submap((12, 3, 3))
    s.interesting[3, 1, 1] = True
    s.interesting[11, 1, 1] = True
    p = nearest_target_dijkstra(s, (6, 1, 1), 1)
    assert p.goal == (3, 1, 1) and p.cost == 3


def test_nearest_target_boundary_fallback_and_done():
    s = _submap((4, 4, 2))
    p = nearest_target_dijkstra(s, (1, 1, 0), 0)
    assert p.goal in s.boundary_unvisited(0) and p.cost == 1
    for v in itertools.product(range(4), range(4), range(2)):
        s.mark_visited(v)
    assert nearest_target_dijkstra(s, (1, 1, 0), 0) is None


def test_entry_candidates_spiral():
    s = _submap((3, 3, 2))
    seq = list(itertools.islice(entry_candidates(s, (1.5, 1.5, 0.0)), 10))
    assert seq[:9] == [(1, 1, 0), (2, 1, 0), (2, 2, 0), (1, 2, 0), (0, 2, 0),
                       (0, 1, 0), (0, 0, 0), (1, 0, 0), (2, 0, 0)]
    assert seq[9] == (1, 1, 1)


def test_entry_candidates_single_voxel_and_outside():
    one = _submap((1, 1, 3))
    assert list(entry_candidates(one, (50, 50, 0))) == [(0, 0, 0), (0, 0, 1), (0, 0, 2)]
    s = _submap((5, 4, 1))
    assert next(entry_candidates(s, (-20.0, 2.5, 0.0))) == (0, 2, 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(1, 3),
       st.floats(-10, 20), st.floats(-10, 20))
def test_entry_candidates_properties(nx, ny, nl, fx, fy):
    s = _submap((nx, ny, nl))
    seq = list(entry_candidates(s, (fx, fy, 0.0)))
    assert len(seq) == nx * ny * nl == len(set(seq))
    assert [v[2] for v in seq] == sorted(v[2] for v in seq)
    first = seq[0]
    radii = [max(abs(v[0] - first[0]), abs(v[1] - first[1])) for v in seq[: nx * ny]]
    assert radii == sorted(radii)


@pytest.mark.parametrize("n, m, sizes", [(9, 3, [3, 3, 3]), (5, 1, [5]), (4, 3, [2, 1, 1]), (2, 4, [1, 1, 0, 0])])
def test_partition_regions(n, m, sizes):
    regions = partition_regions(_submap((2, 2, n)), m)
    assert [len(r.layers) for r in regions] == sizes
    assert [r.empty for r in regions] == [s == 0 for s in sizes]
    layers = [l for r in regions for l in r.layers]
    assert layers == list(range(n))


def test_inspection_layers():
    assert inspection_layers(Region(0, 0, 8), 3) == [0, 3, 6]
    assert inspection_layers(Region(0, 0, 4), 1) == [0, 1, 2, 3, 4]
    assert inspection_layers(Region(0, 4, 4)) == [4]
    assert inspection_layers(Region(0, 3, 2)) == []
    with pytest.raises(ValueError):
        inspection_layers(Region(0, 0, 1), 0)
