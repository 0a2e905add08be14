"""Independent reference implementations used to cross-check the package."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra


def grid_graph(free: np.ndarray, in_layer: int | None = None):
    """Sparse 26-connected (or 8-connected within one k plane) weighted graph over free cells."""
    dims = free.shape
    idx = np.arange(free.size).reshape(dims)
    rows, cols, w = [], [], []
    offsets = [d for d in itertools.product((-1, 0, 1), repeat=3) if any(d)]
    if in_layer is not None:
        offsets = [d for d in offsets if d[2] == 0]
    for d in offsets:
        cost = math.sqrt(sum(abs(x) for x in d))
        src = tuple(slice(max(0, -o), dims[a] - max(0, o)) for a, o in enumerate(d))
        dst = tuple(slice(max(0, o), dims[a] - max(0, -o)) for a, o in enumerate(d))
        ok = free[src] & free[dst]
        if in_layer is not None:
            kk = np.zeros(dims, dtype=bool)
            kk[:, :, in_layer] = True
            ok &= kk[src]
        rows.append(idx[src][ok])
        cols.append(idx[dst][ok])
        w.append(np.full(int(ok.sum()), cost))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    return coo_matrix((np.concatenate(w), (r, c)), shape=(free.size, free.size)).tocsr(), idx


def shortest_costs(free: np.ndarray, start, in_layer: int | None = None) -> np.ndarray:
    g, idx = grid_graph(free, in_layer)
    d = dijkstra(g, directed=True, indices=int(idx[tuple(start)]))
    return d.reshape(free.shape)


def box_endpoints(center, half):
    """Face centres pierced by the longest box axis (x before y before z on ties)."""
    axis = 0
    for a in (1, 2):
        if half[a] > half[axis]:
            axis = a
    p1 = list(center)
    p2 = list(center)
    p1[axis] -= half[axis]
    p2[axis] += half[axis]
    return tuple(p1), tuple(p2)


def greedy_path(boxes, gcs):
    """Brute-force nearest-endpoint-next: at every step score all remaining (box, side) options."""
    remaining = {b_id: box_endpoints(c, h) for b_id, c, h in boxes}
    cur = tuple(gcs)
    out = []
    while remaining:
        options = []
        for b_id, (p1, p2) in remaining.items():
            options.append((math.dist(cur, p1), b_id, 0, p1, p2))
            options.append((math.dist(cur, p2), b_id, 1, p2, p1))
        options.sort(key=lambda o: o[:3])
        _, b_id, _, enter, exit_ = options[0]
        out.append((b_id, enter, exit_))
        del remaining[b_id]
        cur = exit_
    return out


def sampled_los(a, b, occupied: set, res: float, step: float = 0.01) -> bool:
    """Walk the segment in ``step`` increments; blocked if any sample lies in an occupied cell."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(1, int(math.ceil(np.linalg.norm(b - a) / step)))
    t = np.linspace(0.0, 1.0, n + 1)
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    cells = np.floor(pts / res).astype(np.int64)
    return not any(tuple(int(x) for x in c) in occupied for c in cells)


def chord_length(a, b, lo, hi) -> float:
    """Length of the part of segment a-b inside the axis-aligned box [lo, hi]."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(b, dtype=float) - a
    t0, t1 = 0.0, 1.0
    for k in range(3):
        if abs(d[k]) < 1e-15:
            if a[k] < lo[k] or a[k] > hi[k]:
                return 0.0
            continue
        u = (lo[k] - a[k]) / d[k]
        v = (hi[k] - a[k]) / d[k]
        if u > v:
            u, v = v, u
        t0, t1 = max(t0, u), min(t1, v)
        if t0 > t1:
            return 0.0
    return (t1 - t0) * float(np.linalg.norm(d))


def los_case_is_clean(a, b, occupied: set, res: float, margin: float = 1e-3,
                      min_chord: float = 0.02) -> bool:
    """Whether the segment stays > ``margin`` away from every face it could graze.

    Clean means either no occupied cell grown by ``margin`` is touched at all,
    or some occupied cell shrunk by ``margin`` is crossed along at least
    ``min_chord`` (so 1 cm sampling cannot step over it).
    """
    touched = False
    for c in occupied:
        lo = np.asarray(c, dtype=float) * res
        hi = lo + res
        if chord_length(a, b, lo + margin, hi - margin) >= min_chord:
            return True
        if chord_length(a, b, lo - margin, hi + margin) > 0.0:
            touched = True
    return not touched
