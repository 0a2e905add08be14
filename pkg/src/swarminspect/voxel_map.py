"""Layered voxel maps with the occupied / interesting / visited labelling scheme.

Every map works on the world lattice ``floor(p / voxel_size)``. A ``Submap``
covers one bounding box with local indices ``(i, j, k)`` where ``k`` is the
layer (layer 0 at the bottom); ``GlobalMap`` covers the whole arena in world
indices and keeps its attributes in sparse sets.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .world import BoundingBox

Index = tuple[int, int, int]

FACE_NEIGHBORS: tuple[Index, ...] = (
    (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
)


def _add(a: Index, b: Index) -> Index:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _point_voxels(points, voxel_size: float) -> list[Index]:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return []
    idx = np.unique(np.floor(pts / voxel_size).astype(np.int64), axis=0)
    return [tuple(int(x) for x in row) for row in idx]


class VoxelGrid:
    """Dense voxel grid: ``dims`` voxels from ``origin`` (world point of the low corner)."""

    def __init__(self, origin: Sequence[float], voxel_size: float, dims: Sequence[int]):
        if any(d < 1 for d in dims):
            raise ValueError("grid dims must be >= 1")
        self.origin = tuple(float(x) for x in origin)
        self.voxel_size = float(voxel_size)
        self.dims = tuple(int(d) for d in dims)
        self.occupied = np.zeros(self.dims, dtype=bool)
        self.interesting = np.zeros(self.dims, dtype=bool)
        self.visited = np.zeros(self.dims, dtype=bool)

    def in_bounds(self, idx: Index) -> bool:
        return all(0 <= idx[a] < self.dims[a] for a in range(3))

    def world_to_index(self, p: Sequence[float]) -> Index:
        idx = tuple(math.floor((p[a] - self.origin[a]) / self.voxel_size) for a in range(3))
        if not self.in_bounds(idx):
            raise IndexError(f"point {tuple(p)} outside grid")
        return idx

    def index_to_center(self, idx: Index) -> tuple[float, float, float]:
        if not self.in_bounds(idx):
            raise IndexError(f"index {idx} outside grid")
        return tuple(self.origin[a] + (idx[a] + 0.5) * self.voxel_size for a in range(3))

    def attr(self, idx: Index) -> tuple[bool, bool, bool]:
        return bool(self.occupied[idx]), bool(self.interesting[idx]), bool(self.visited[idx])

    def is_occupied(self, idx: Index) -> bool:
        return bool(self.occupied[idx])

    def insert_points(self, points: Iterable[Sequence[float]]) -> set[Index]:
        """Mark point voxels occupied and their in-bounds face neighbours interesting."""
        pts = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=float)
        if pts.size == 0:
            return set()
        pts = pts.reshape(-1, 3) - np.asarray(self.origin)
        changed: set[Index] = set()
        for v in _point_voxels(pts, self.voxel_size):
            if not self.in_bounds(v):
                continue
            self._mark_occupied(v, changed)
        return changed

    def insert_voxels(self, voxels: Iterable[Index]) -> set[Index]:
        changed: set[Index] = set()
        for v in voxels:
            if self.in_bounds(v):
                self._mark_occupied(v, changed)
        return changed

    def _mark_occupied(self, v: Index, changed: set[Index]) -> None:
        if not self.occupied[v]:
            self.occupied[v] = True
            changed.add(v)
        for d in FACE_NEIGHBORS:
            n = _add(v, d)
            if self.in_bounds(n) and not self.interesting[n]:
                self.interesting[n] = True
                changed.add(n)

    def mark_visited(self, idx: Index) -> None:
        if not self.in_bounds(idx):
            raise IndexError(f"index {idx} outside grid")
        self.visited[idx] = True

    def dump_layers(self) -> str:
        """One block per layer; each cell is occupied*4 + interesting*2 + visited."""
        code = (self.occupied.astype(int) * 4 + self.interesting.astype(int) * 2
                + self.visited.astype(int))
        out = []
        for k in range(self.dims[2]):
            out.append(f"layer {k}")
            for j in reversed(range(self.dims[1])):
                out.append("".join(str(code[i, j, k]) for i in range(self.dims[0])))
        return "\n".join(out) + "\n"


class Submap(VoxelGrid):
    """Per-box layered grid, aligned to the world lattice."""

    def __init__(self, box_id: int, offset: Sequence[int], voxel_size: float, dims: Sequence[int]):
        super().__init__(tuple(o * voxel_size for o in offset), voxel_size, dims)
        self.box_id = box_id
        self.offset = tuple(int(o) for o in offset)

    @classmethod
    def for_box(cls, box: BoundingBox, voxel_size: float) -> "Submap":
        lo = [math.floor(box.lo[a] / voxel_size + 1e-9) for a in range(3)]
        hi = [math.ceil(box.hi[a] / voxel_size - 1e-9) for a in range(3)]
        return cls(box.id, lo, voxel_size, [max(1, h - l) for h, l in zip(hi, lo)])

    @property
    def nlayers(self) -> int:
        return self.dims[2]

    def to_local(self, g: Index) -> Index:
        return (g[0] - self.offset[0], g[1] - self.offset[1], g[2] - self.offset[2])

    def to_global(self, l: Index) -> Index:
        return (l[0] + self.offset[0], l[1] + self.offset[1], l[2] + self.offset[2])

    def contains_global(self, g: Index) -> bool:
        return self.in_bounds(self.to_local(g))

    def _check_layer(self, layer: int) -> None:
        if not 0 <= layer < self.nlayers:
            raise IndexError(f"layer {layer} outside 0..{self.nlayers - 1}")

    def layer_targets(self, layer: int) -> list[Index]:
        """Interesting, unvisited, unoccupied voxels of a layer in row-major order."""
        self._check_layer(layer)
        m = (self.interesting[:, :, layer] & ~self.visited[:, :, layer]
             & ~self.occupied[:, :, layer])
        return [(int(i), int(j), layer) for i, j in np.argwhere(m)]

    def layer_has_interesting(self, layer: int) -> bool:
        self._check_layer(layer)
        return bool((self.interesting[:, :, layer] & ~self.occupied[:, :, layer]).any())

    def boundary_unvisited(self, layer: int) -> list[Index]:
        self._check_layer(layer)
        nx, ny = self.dims[0], self.dims[1]
        edge = np.zeros((nx, ny), dtype=bool)
        edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
        m = edge & ~self.visited[:, :, layer] & ~self.occupied[:, :, layer]
        return [(int(i), int(j), layer) for i, j in np.argwhere(m)]


class GlobalMap:
    """Arena-wide sparse map in world voxel indices; bounds are inclusive ``lo``..``hi``."""

    def __init__(self, lo: Index, hi: Index, voxel_size: float):
        self.lo = tuple(lo)
        self.hi = tuple(hi)
        self.voxel_size = float(voxel_size)
        self.occupied: set[Index] = set()
        self.interesting: set[Index] = set()
        self.visited: set[Index] = set()

    def in_bounds(self, idx: Index) -> bool:
        return all(self.lo[a] <= idx[a] <= self.hi[a] for a in range(3))

    def world_to_index(self, p: Sequence[float]) -> Index:
        idx = tuple(math.floor(p[a] / self.voxel_size) for a in range(3))
        if not self.in_bounds(idx):
            raise IndexError(f"point {tuple(p)} outside arena")
        return idx

    def index_to_center(self, idx: Index) -> tuple[float, float, float]:
        return tuple((idx[a] + 0.5) * self.voxel_size for a in range(3))

    def is_occupied(self, idx: Index) -> bool:
        return idx in self.occupied

    def insert_points(self, points) -> set[Index]:
        return self.insert_voxels(_point_voxels(points, self.voxel_size))

    def insert_voxels(self, voxels: Iterable[Index]) -> set[Index]:
        changed: set[Index] = set()
        for v in voxels:
            if not self.in_bounds(v):
                continue
            if v not in self.occupied:
                self.occupied.add(v)
                changed.add(v)
            for d in FACE_NEIGHBORS:
                n = _add(v, d)
                if self.in_bounds(n) and n not in self.interesting:
                    self.interesting.add(n)
                    changed.add(n)
        return changed

    def mark_visited(self, idx: Index) -> None:
        if not self.in_bounds(idx):
            raise IndexError(f"index {idx} outside arena")
        self.visited.add(idx)
