"""Grid traversal (Amanatides-Woo DDA) over cubic cells of a fixed resolution."""

from __future__ import annotations

import math
from typing import Callable, Iterator, Sequence

import numpy as np

Cell = tuple[int, int, int]


def _start_cell(a: float, d: float, res: float) -> int:
    idx = math.floor(a / res)
    # a point on a face going backwards starts in the lower cell
    if d < 0 and idx * res == a:
        idx -= 1
    return idx


def traverse_segment(a: Sequence[float], b: Sequence[float], res: float) -> Iterator[Cell]:
    """Yield, in order, every cell that the segment a->b crosses with positive length.

    Cells only touched at an edge or corner are skipped by stepping tied axes
    together. A zero-length segment yields nothing.
    """
    d = [b[n] - a[n] for n in range(3)]
    if d[0] == 0 and d[1] == 0 and d[2] == 0:
        return
    cell = [_start_cell(a[n], d[n], res) for n in range(3)]
    step = [0, 0, 0]
    t_max = [math.inf] * 3
    t_delta = [math.inf] * 3
    for n in range(3):
        if d[n] > 0:
            step[n] = 1
            t_max[n] = ((cell[n] + 1) * res - a[n]) / d[n]
            t_delta[n] = res / d[n]
        elif d[n] < 0:
            step[n] = -1
            t_max[n] = (cell[n] * res - a[n]) / d[n]
            t_delta[n] = -res / d[n]
    while True:
        yield (cell[0], cell[1], cell[2])
        t_next = min(t_max)
        if t_next >= 1.0:
            return
        for n in range(3):
            if t_max[n] == t_next:
                cell[n] += step[n]
                t_max[n] += t_delta[n]


def segment_clear(a: Sequence[float], b: Sequence[float], res: float,
                  is_occupied: Callable[[Cell], bool]) -> bool:
    """True when no occupied cell is crossed. Symmetric in a and b: the walk
    always starts from the lexicographically smaller endpoint, so rounding on
    grazing segments cannot make the two directions disagree."""
    a, b = tuple(a), tuple(b)
    if b < a:
        a, b = b, a
    return not any(is_occupied(c) for c in traverse_segment(a, b, res))


def cast_rays(origin: np.ndarray, dirs: np.ndarray, max_range: float, res: float,
              grid: np.ndarray, grid_lo: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised first-hit ray cast against a dense boolean occupancy grid.

    ``grid[i, j, k]`` is cell ``grid_lo + (i, j, k)``; everything outside is free.
    Returns ``(points, hit_mask)``. Hit points sit on the entered face of the
    occupied cell, nudged 1e-7 m inside it so that flooring recovers that cell.
    """
    origin = np.asarray(origin, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    n = len(dirs)
    points = np.zeros((n, 3))
    hit = np.zeros(n, dtype=bool)
    if n == 0 or grid.size == 0 or not grid.any():
        return points, hit

    lo = grid_lo.astype(float) * res
    hi = (grid_lo + np.array(grid.shape)).astype(float) * res
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (lo - origin) * inv
        t2 = (hi - origin) * inv
    # axes with zero direction: inside slab -> unbounded, outside -> miss
    zero = dirs == 0
    inside = (origin >= lo) & (origin < hi)
    t1 = np.where(zero, np.where(inside, -np.inf, np.inf), t1)
    t2 = np.where(zero, np.where(inside, np.inf, -np.inf), t2)
    tnear_axis = np.minimum(t1, t2)
    tfar = np.minimum(np.maximum(t1, t2).min(axis=1), max_range)
    entry_axis = np.argmax(tnear_axis, axis=1)
    t0 = np.maximum(tnear_axis.max(axis=1), 0.0)
    active = t0 < tfar
    entered_from_outside = tnear_axis.max(axis=1) > 0.0

    step = np.sign(dirs).astype(int)
    p0 = origin + dirs * t0[:, None]
    rows = np.nonzero(entered_from_outside)[0]
    ax = entry_axis[rows]
    # snap the entry coordinate exactly onto the box face it crossed
    p0[rows, ax] = np.where(dirs[rows, ax] > 0, lo[ax], hi[ax])
    cell = np.floor(p0 / res).astype(int)
    on_face = (cell * res == p0) & (dirs < 0)
    cell = np.where(on_face, cell - 1, cell)

    with np.errstate(divide="ignore", invalid="ignore"):
        nxt = np.where(step > 0, (cell + 1) * res, cell * res)
        t_max = np.where(zero, np.inf, (nxt - origin) / dirs)
        t_delta = np.where(zero, np.inf, res / np.abs(dirs))
    t_enter = t0.copy()
    last_axis = np.where(entered_from_outside, entry_axis, -1)
    shape = np.array(grid.shape)

    while active.any():
        idx = np.nonzero(active)[0]
        local = cell[idx] - grid_lo
        inb = np.all((local >= 0) & (local < shape), axis=1)
        occ = np.zeros(len(idx), dtype=bool)
        li = local[inb]
        occ[inb] = grid[li[:, 0], li[:, 1], li[:, 2]]
        if occ.any():
            h = idx[occ]
            hit[h] = True
            active[h] = False
        idx = idx[~occ]
        if len(idx) == 0:
            break
        tm = t_max[idx]
        ax = np.argmin(tm, axis=1)
        t_next = tm[np.arange(len(idx)), ax]
        done = t_next >= tfar[idx]
        active[idx[done]] = False
        idx, ax, t_next = idx[~done], ax[~done], t_next[~done]
        cell[idx, ax] += step[idx, ax]
        t_max[idx, ax] += t_delta[idx, ax]
        t_enter[idx] = t_next
        last_axis[idx] = ax

    if hit.any():
        h = np.nonzero(hit)[0]
        p = origin + dirs[h] * t_enter[h, None]
        for j, i in enumerate(h):
            ax = last_axis[i]
            if ax < 0:
                continue
            c = cell[i, ax]
            face = (c if step[i, ax] > 0 else c + 1) * res
            p[j, ax] = face + 1e-7 * step[i, ax]
        points[h] = p
    return points, hit
