"""Grid search and scheduling primitives used by the agents."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Collection, Iterator, Protocol, Sequence

from .voxel_map import Index, Submap

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
_STEP_COST = {1: 1.0, 2: SQRT2, 3: SQRT3}

NEIGHBORS_26: tuple[tuple[Index, float], ...] = tuple(
    ((di, dj, dk), _STEP_COST[abs(di) + abs(dj) + abs(dk)])
    for di in (-1, 0, 1) for dj in (-1, 0, 1) for dk in (-1, 0, 1)
    if (di, dj, dk) != (0, 0, 0)
)
NEIGHBORS_8: tuple[tuple[Index, float], ...] = tuple(n for n in NEIGHBORS_26 if n[0][2] == 0)


class Grid(Protocol):
    def in_bounds(self, idx: Index) -> bool: ...
    def is_occupied(self, idx: Index) -> bool: ...


@dataclass(frozen=True)
class GridPath:
    cells: tuple[Index, ...]
    cost: float

    @property
    def goal(self) -> Index:
        return self.cells[-1]

    def __len__(self) -> int:
        return len(self.cells)


def octile_3d(a: Index, b: Index) -> float:
    d = sorted((abs(a[0] - b[0]), abs(a[1] - b[1]), abs(a[2] - b[2])), reverse=True)
    return SQRT3 * d[2] + SQRT2 * (d[1] - d[2]) + (d[0] - d[1])


def _free(grid: Grid, idx: Index, blocked: Collection[Index]) -> bool:
    return grid.in_bounds(idx) and not grid.is_occupied(idx) and idx not in blocked


def _unwind(parent: dict, node: Index) -> list[Index]:
    out = [node]
    while node in parent:
        node = parent[node]
        out.append(node)
    out.reverse()
    return out


def astar(grid: Grid, start: Index, goal: Index,
          blocked: Collection[Index] = frozenset()) -> GridPath | None:
    """Cost-minimal 26-connected path avoiding occupied and blocked voxels, or None.

    Heap entries are ordered (f, index) so equal-f ties go to the
    lexicographically (row-major) lower voxel.
    """
    if start == goal:
        return GridPath((start,), 0.0)
    if not _free(grid, goal, blocked) or not grid.in_bounds(start):
        return None
    g = {start: 0.0}
    parent: dict[Index, Index] = {}
    closed: set[Index] = set()
    heap = [(octile_3d(start, goal), start)]
    while heap:
        _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == goal:
            return GridPath(tuple(_unwind(parent, cur)), g[cur])
        closed.add(cur)
        gc = g[cur]
        for d, c in NEIGHBORS_26:
            nb = (cur[0] + d[0], cur[1] + d[1], cur[2] + d[2])
            if nb in closed or not _free(grid, nb, blocked):
                continue
            ng = gc + c
            if ng < g.get(nb, math.inf):
                g[nb] = ng
                parent[nb] = cur
                heapq.heappush(heap, (ng + octile_3d(nb, goal), nb))
    return None


def dijkstra_to_any(grid: Grid, start: Index, targets: Collection[Index],
                    blocked: Collection[Index] = frozenset(),
                    restrict_layer: int | None = None) -> GridPath | None:
    """Shortest path from start to the nearest member of ``targets``.

    With ``restrict_layer`` set, only voxels with that k are expanded
    (8-connected in-plane search).
    """
    targets = set(targets)
    if not targets:
        return None
    neighbors = NEIGHBORS_26 if restrict_layer is None else NEIGHBORS_8
    dist = {start: 0.0}
    parent: dict[Index, Index] = {}
    heap = [(0.0, start)]
    done: set[Index] = set()
    while heap:
        dcur, cur = heapq.heappop(heap)
        if cur in done:
            continue
        if cur in targets:
            return GridPath(tuple(_unwind(parent, cur)), dcur)
        done.add(cur)
        for d, c in neighbors:
            nb = (cur[0] + d[0], cur[1] + d[1], cur[2] + d[2])
            if nb in done or not _free(grid, nb, blocked):
                continue
            nd = dcur + c
            if nd < dist.get(nb, math.inf):
                dist[nb] = nd
                parent[nb] = cur
                heapq.heappush(heap, (nd, nb))
    return None


def layer_target_set(submap: Submap, layer: int) -> list[Index]:
    """Targets of a layer: interesting-unvisited voxels, or the unvisited boundary
    when the layer holds no interesting voxel at all."""
    targets = submap.layer_targets(layer)
    if targets or submap.layer_has_interesting(layer):
        return targets
    return submap.boundary_unvisited(layer)


def nearest_target_dijkstra(submap: Submap, start: Index, layer: int,
                            selector: Callable[[Submap, int], list[Index]] = layer_target_set,
                            blocked: Collection[Index] = frozenset(),
                            restrict_layer: bool = False) -> GridPath | None:
    """Path (local submap indices) to the closest selected voxel of ``layer``."""
    targets = [t for t in selector(submap, layer) if t not in blocked]
    if restrict_layer and start[2] != layer:
        return None
    return dijkstra_to_any(submap, start, targets, blocked,
                           restrict_layer=layer if restrict_layer else None)


def _ring(center: tuple[int, int], r: int) -> list[tuple[int, int]]:
    if r == 0:
        return [center]
    cells = []
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            if max(abs(di), abs(dj)) == r:
                cells.append((di, dj))
    # counter-clockwise from +x
    cells.sort(key=lambda d: math.atan2(d[1], d[0]) % (2 * math.pi))
    return [(center[0] + di, center[1] + dj) for di, dj in cells]


def entry_candidates(submap: Submap, from_point: Sequence[float]) -> Iterator[Index]:
    """Layer-by-layer square spiral starting at the voxel nearest ``from_point``."""
    nx, ny, nl = submap.dims
    vs = submap.voxel_size
    ci = min(max(math.floor((from_point[0] - submap.origin[0]) / vs), 0), nx - 1)
    cj = min(max(math.floor((from_point[1] - submap.origin[1]) / vs), 0), ny - 1)
    rmax = max(ci, nx - 1 - ci, cj, ny - 1 - cj)
    for k in range(nl):
        for r in range(rmax + 1):
            for i, j in _ring((ci, cj), r):
                if 0 <= i < nx and 0 <= j < ny:
                    yield (i, j, k)


@dataclass(frozen=True)
class Region:
    box_id: int
    lo: int
    hi: int

    @property
    def empty(self) -> bool:
        return self.hi < self.lo

    @property
    def layers(self) -> range:
        return range(self.lo, self.hi + 1)


def partition_regions(submap: Submap, m: int) -> list[Region]:
    """M contiguous layer bands, bottom first; the remainder goes to the lowest bands."""
    if m < 1:
        raise ValueError("M must be >= 1")
    n = submap.nlayers
    base, extra = divmod(n, m)
    regions = []
    lo = 0
    for r in range(m):
        size = base + (1 if r < extra else 0)
        regions.append(Region(submap.box_id, lo, lo + size - 1))
        lo += size
    return regions


def inspection_layers(region: Region, stride: int = 3) -> list[int]:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if region.empty:
        return []
    return list(range(region.lo, region.hi + 1, stride))
