"""Simulated rotating lidar and gimbal camera.

Capture quality is a stand-in for the benchmark's scoring metric:

    quality = cos(view_angle) * max(0, 1 - speed / v_blur)

where ``view_angle`` is measured between the defect's inward normal and the
viewing ray. Scores are only comparable between runs of this simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .raycast import cast_rays
from .world import CameraConfig, Defect, GroundTruthModel, LidarConfig


class SensorError(ValueError):
    pass


@dataclass(frozen=True)
class Capture:
    defect_id: int
    quality: float
    tick: int
    agent: str


@lru_cache(maxsize=16)
def lidar_directions(n_azimuth: int, n_elevation: int) -> np.ndarray:
    """Unit ray directions on an azimuth x elevation grid covering the full sphere."""
    az = (np.arange(n_azimuth) + 0.5) * (2 * np.pi / n_azimuth)
    el = -np.pi / 2 + (np.arange(n_elevation) + 0.5) * (np.pi / n_elevation)
    A, E = np.meshgrid(az, el, indexing="ij")
    d = np.stack([np.cos(E) * np.cos(A), np.cos(E) * np.sin(A), np.sin(E)], axis=-1)
    return d.reshape(-1, 3)


def lidar_scan(pose: Sequence[float], model: GroundTruthModel, cfg: LidarConfig) -> np.ndarray:
    """First occupied-cell hit of every ray within range, as an (n, 3) array."""
    if model.is_occupied_point(pose):
        raise SensorError(f"lidar pose {tuple(pose)} is inside an occupied cell")
    grid, lo = model.dense
    dirs = lidar_directions(cfg.n_azimuth, cfg.n_elevation)
    pts, hit = cast_rays(np.asarray(pose, dtype=float), dirs, cfg.max_range,
                         model.resolution, grid, lo)
    return pts[hit]


def capture_quality(view_angle: float, speed: float, v_blur: float) -> float:
    blur = max(0.0, 1.0 - speed / v_blur)
    return max(0.0, math.cos(view_angle)) * blur


def _camera_frame(forward: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    up_ref = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up_ref)
    if np.linalg.norm(right) < 1e-9:
        right = np.array([0.0, -1.0, 0.0]) if forward[2] > 0 else np.array([0.0, 1.0, 0.0])
    right = right / np.linalg.norm(right)
    up = np.cross(right, forward)
    return right, up


def camera_capture(pose: Sequence[float], gimbal_dir: Sequence[float], speed: float,
                   defects: Sequence[Defect], model: GroundTruthModel, cfg: CameraConfig,
                   v_blur: float, tick: int = 0, agent: str = "") -> list[Capture]:
    """Captures of every defect in range, inside the view frustum, visible and front-facing."""
    fwd = np.asarray(gimbal_dir, dtype=float)
    if abs(np.linalg.norm(fwd) - 1.0) > 1e-6:
        raise SensorError("gimbal_dir must be a unit vector")
    if not defects:
        return []
    p = np.asarray(pose, dtype=float)
    pos = np.array([d.position for d in defects], dtype=float)
    nrm = np.array([d.normal for d in defects], dtype=float)
    ray = p - pos  # defect -> camera
    dist = np.linalg.norm(ray, axis=1)
    front = np.einsum("ij,ij->i", nrm, ray) > 0
    cand = front & (dist <= cfg.max_range) & (dist > 0)
    if not cand.any():
        return []
    right, up = _camera_frame(fwd)
    view = -ray  # camera -> defect
    f = view @ fwd
    h = np.abs(view @ right)
    v = np.abs(view @ up)
    in_fov = (f > 0) & (np.arctan2(h, f) <= cfg.hfov / 2) & (np.arctan2(v, f) <= cfg.vfov / 2)
    cand &= in_fov
    out = []
    for n in np.nonzero(cand)[0]:
        d = defects[n]
        # start the LOS test just off the surface so the defect's own cell does not block it
        off = pos[n] + nrm[n] * 1e-6
        if not model.segment_clear(p, off):
            continue
        cos_a = float(np.dot(nrm[n], ray[n]) / dist[n])
        angle = math.acos(min(1.0, max(-1.0, cos_a)))
        out.append(Capture(d.id, capture_quality(angle, speed, v_blur), tick, agent))
    out.sort(key=lambda c: c.defect_id)
    return out
