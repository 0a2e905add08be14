"""Scenario definition: bounding boxes, ground-truth structure, defects, fleet, config."""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .raycast import Cell, segment_clear

Vec3 = tuple[float, float, float]

EXD = "EXD"
PGD = "PGD"

_FACE_DIRS: tuple[Cell, ...] = (
    (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
)


class ScenarioError(ValueError):
    """Raised for malformed or invalid scenario files."""


@dataclass(frozen=True)
class BoundingBox:
    id: int
    center: Vec3
    half_extents: Vec3

    def __post_init__(self):
        if any(h <= 0 for h in self.half_extents):
            raise ScenarioError(f"box {self.id}: half_extents must be strictly positive")

    @property
    def lo(self) -> Vec3:
        return tuple(c - h for c, h in zip(self.center, self.half_extents))

    @property
    def hi(self) -> Vec3:
        return tuple(c + h for c, h in zip(self.center, self.half_extents))

    @property
    def volume(self) -> float:
        hx, hy, hz = self.half_extents
        return 8.0 * hx * hy * hz

    def contains(self, p: Sequence[float]) -> bool:
        return all(l <= x <= h for l, x, h in zip(self.lo, p, self.hi))


@dataclass(frozen=True)
class EnterExitPair:
    box_id: int
    p1: Vec3
    p2: Vec3


def principal_axis(box: BoundingBox) -> EnterExitPair:
    """Centers of the two faces pierced by the box's longest axis (ties: x, y, z)."""
    axis = max(range(3), key=lambda a: (box.half_extents[a], -a))
    p1 = list(box.center)
    p2 = list(box.center)
    p1[axis] -= box.half_extents[axis]
    p2[axis] += box.half_extents[axis]
    return EnterExitPair(box.id, tuple(p1), tuple(p2))


@dataclass(frozen=True)
class Defect:
    id: int
    position: Vec3
    normal: Vec3
    box_id: int


@dataclass(frozen=True)
class GroundTruthModel:
    """Occupied cells on a regular grid anchored at the world origin."""

    resolution: float
    occupied: frozenset[Cell]
    defects: tuple[Defect, ...] = ()

    def cell_of(self, p: Sequence[float]) -> Cell:
        r = self.resolution
        return (math.floor(p[0] / r), math.floor(p[1] / r), math.floor(p[2] / r))

    def is_occupied_cell(self, c: Cell) -> bool:
        return c in self.occupied

    def is_occupied_point(self, p: Sequence[float]) -> bool:
        return self.cell_of(p) in self.occupied

    @cached_property
    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """(grid, lo) dense boolean copy of the occupied set for vectorised casts."""
        if not self.occupied:
            return np.zeros((0, 0, 0), dtype=bool), np.zeros(3, dtype=int)
        arr = np.array(sorted(self.occupied), dtype=int)
        lo = arr.min(axis=0)
        grid = np.zeros(arr.max(axis=0) - lo + 1, dtype=bool)
        grid[tuple((arr - lo).T)] = True
        return grid, lo

    def segment_clear(self, a: Sequence[float], b: Sequence[float]) -> bool:
        return segment_clear(a, b, self.resolution, self.occupied.__contains__)

    def exposed_faces(self) -> list[tuple[Cell, Cell]]:
        """(cell, outward direction) for every occupied-cell face with a free neighbour."""
        out = []
        for c in sorted(self.occupied):
            for d in _FACE_DIRS:
                if (c[0] + d[0], c[1] + d[1], c[2] + d[2]) not in self.occupied:
                    out.append((c, d))
        return out


def sample_defects(model: GroundTruthModel, count: int, seed: int,
                   boxes: Sequence[BoundingBox] = ()) -> list[Defect]:
    """Place ``count`` defects uniformly over exposed cell faces.

    A face is chosen uniformly, then a point uniformly within it. When boxes
    are given, only faces whose point lands inside some box are eligible and
    each defect is tagged with the first such box (by id).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return []
    faces = model.exposed_faces()
    if not faces:
        raise ScenarioError("model has no exposed surface to place defects on")
    r = model.resolution
    ordered_boxes = sorted(boxes, key=lambda b: b.id)
    rng = random.Random(seed)
    defects: list[Defect] = []
    attempts = 0
    while len(defects) < count:
        attempts += 1
        if attempts > 1000 * count + 1000:
            raise ScenarioError("could not place defects inside any bounding box")
        cell, d = faces[rng.randrange(len(faces))]
        u, v = rng.random(), rng.random()
        pos = []
        it = iter((u, v))
        for a in range(3):
            if d[a] == 0:
                pos.append((cell[a] + next(it)) * r)
            else:
                pos.append((cell[a] + (1 if d[a] > 0 else 0)) * r)
        pos = tuple(pos)
        box_id = -1
        if ordered_boxes:
            owner = next((b for b in ordered_boxes if b.contains(pos)), None)
            if owner is None:
                continue
            box_id = owner.id
        defects.append(Defect(len(defects), pos, tuple(float(x) for x in d), box_id))
    return defects


def defect_on_surface(model: GroundTruthModel, defect: Defect, tol: float = 1e-6) -> bool:
    n = defect.normal
    if abs(math.sqrt(sum(x * x for x in n)) - 1.0) > 1e-9:
        return False
    axes = [a for a in range(3) if abs(n[a]) > 0.5]
    if len(axes) != 1:
        return False
    a = axes[0]
    r = model.resolution
    sign = 1 if n[a] > 0 else -1
    inside = list(defect.position)
    inside[a] -= sign * r * 1e-3
    outside = list(defect.position)
    outside[a] += sign * r * 1e-3
    plane = defect.position[a] / r
    if abs(plane - round(plane)) * r > tol:
        return False
    return model.is_occupied_point(inside) and not model.is_occupied_point(outside)


@dataclass(frozen=True)
class LidarConfig:
    max_range: float = 60.0
    n_azimuth: int = 48
    n_elevation: int = 24
    period: int = 1

    def __post_init__(self):
        if self.max_range <= 0:
            raise ScenarioError("lidar.max_range must be > 0")
        if self.n_azimuth < 1 or self.n_elevation < 1 or self.period < 1:
            raise ScenarioError("lidar ray counts and period must be >= 1")


@dataclass(frozen=True)
class CameraConfig:
    hfov: float = math.radians(100.0)
    vfov: float = math.radians(100.0)
    max_range: float = 15.0

    def __post_init__(self):
        for name in ("hfov", "vfov"):
            v = getattr(self, name)
            if not 0 < v < math.pi:
                raise ScenarioError(f"camera.{name} must lie in (0, pi)")
        if self.max_range <= 0:
            raise ScenarioError("camera.max_range must be > 0")


@dataclass(frozen=True)
class SimConfig:
    voxel_size: float = 4.0
    dt: float = 0.5
    v_blur: float = 2.0
    stride: int = 3
    horizon: int = 5
    standoff: int = 2
    max_replans: int = 3
    arena_margin: int = 3
    return_home: bool = True
    lidar: LidarConfig = field(default_factory=LidarConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)

    def __post_init__(self):
        if self.voxel_size <= 0 or self.dt <= 0 or self.v_blur <= 0:
            raise ScenarioError("config: voxel_size, dt and v_blur must be > 0")
        if self.stride < 1:
            raise ScenarioError("config.stride must be >= 1")


@dataclass(frozen=True)
class FleetMember:
    name: str
    role: str
    start: Vec3


@dataclass(frozen=True)
class Scenario:
    boxes: tuple[BoundingBox, ...]
    model: GroundTruthModel
    gcs: Vec3
    fleet: tuple[FleetMember, ...]
    config: SimConfig = field(default_factory=SimConfig)
    name: str = ""

    @property
    def voxel_size(self) -> float:
        return self.config.voxel_size

    def box(self, box_id: int) -> BoundingBox:
        for b in self.boxes:
            if b.id == box_id:
                return b
        raise KeyError(box_id)


def validate_scenario(sc: Scenario) -> None:
    if not sc.boxes:
        raise ScenarioError("boxes: at least one bounding box is required")
    ids = [b.id for b in sc.boxes]
    if len(set(ids)) != len(ids):
        raise ScenarioError("boxes: duplicate box id")
    names = [m.name for m in sc.fleet]
    if len(set(names)) != len(names):
        raise ScenarioError("fleet: agent names must be unique")
    if "GCS" in names:
        raise ScenarioError("fleet: 'GCS' is reserved")
    for m in sc.fleet:
        if m.role not in (EXD, PGD):
            raise ScenarioError(f"fleet: unknown role {m.role!r} for {m.name}")
    if not any(m.role == EXD for m in sc.fleet):
        raise ScenarioError("fleet: at least one EXD is required")
    vs = sc.config.voxel_size
    seen = {}
    for m in sc.fleet:
        if sc.model.is_occupied_point(m.start):
            raise ScenarioError(f"fleet: start position of {m.name} is inside the structure")
        v = tuple(math.floor(x / vs) for x in m.start)
        if v in seen:
            raise ScenarioError(f"fleet: {m.name} and {seen[v]} start in the same voxel")
        seen[v] = m.name
    for d in sc.model.defects:
        if not defect_on_surface(sc.model, d):
            raise ScenarioError(f"defects: defect {d.id} does not lie on an exposed face")
        if d.box_id not in ids:
            raise ScenarioError(f"defects: defect {d.id} references unknown box {d.box_id}")


_TOP_KEYS = {"name", "boxes", "model", "defects", "defect_count", "seed", "gcs", "fleet", "config"}
_MODEL_KEYS = {"resolution", "occupied_cells", "blocks"}
_CONFIG_KEYS = {f for f in SimConfig.__dataclass_fields__}


def _vec(v, what: str) -> Vec3:
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ScenarioError(f"{what}: expected a 3-vector")
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{what}: non-numeric component") from exc


def _check_keys(obj: dict, allowed: set[str], what: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{what}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"{what}: unknown key(s) {sorted(unknown)}")


def blocks_to_cells(blocks: Iterable[dict], res: float) -> set[Cell]:
    """Cells whose centers fall inside any of the [min, max] boxes (meters)."""
    cells: set[Cell] = set()
    for n, b in enumerate(blocks):
        _check_keys(b, {"min", "max"}, f"model.blocks[{n}]")
        lo, hi = _vec(b["min"], f"model.blocks[{n}].min"), _vec(b["max"], f"model.blocks[{n}].max")
        rng = [range(math.ceil(lo[a] / res - 0.5), math.floor(hi[a] / res - 0.5) + 1) for a in range(3)]
        for i in rng[0]:
            for j in rng[1]:
                for k in rng[2]:
                    cells.add((i, j, k))
    return cells


def _parse_config(raw: dict) -> SimConfig:
    _check_keys(raw, _CONFIG_KEYS, "config")
    kw = dict(raw)
    try:
        if "lidar" in kw:
            _check_keys(kw["lidar"], set(LidarConfig.__dataclass_fields__), "config.lidar")
            kw["lidar"] = LidarConfig(**kw["lidar"])
        if "camera" in kw:
            _check_keys(kw["camera"], set(CameraConfig.__dataclass_fields__), "config.camera")
            kw["camera"] = CameraConfig(**kw["camera"])
        return SimConfig(**kw)
    except TypeError as exc:
        raise ScenarioError(f"config: {exc}") from exc


def scenario_from_dict(data: dict) -> Scenario:
    _check_keys(data, _TOP_KEYS, "scenario")
    for key in ("boxes", "model", "gcs", "fleet"):
        if key not in data:
            raise ScenarioError(f"scenario: missing required key {key!r}")
    config = _parse_config(data.get("config", {}))

    boxes = []
    for n, b in enumerate(data["boxes"]):
        _check_keys(b, {"id", "center", "half_extents"}, f"boxes[{n}]")
        boxes.append(BoundingBox(int(b["id"]), _vec(b["center"], f"boxes[{n}].center"),
                                 _vec(b["half_extents"], f"boxes[{n}].half_extents")))

    m = data["model"]
    _check_keys(m, _MODEL_KEYS, "model")
    res = float(m.get("resolution", config.voxel_size))
    if res <= 0:
        raise ScenarioError("model.resolution must be > 0")
    cells: set[Cell] = set()
    for n, c in enumerate(m.get("occupied_cells", [])):
        if not isinstance(c, (list, tuple)) or len(c) != 3:
            raise ScenarioError(f"model.occupied_cells[{n}]: expected an integer triple")
        cells.add(tuple(int(x) for x in c))
    cells |= blocks_to_cells(m.get("blocks", []), res)
    model = GroundTruthModel(res, frozenset(cells))

    if "defects" in data:
        if "defect_count" in data:
            raise ScenarioError("scenario: give either defects or defect_count, not both")
        defects = []
        for n, d in enumerate(data["defects"]):
            _check_keys(d, {"id", "position", "normal", "box_id"}, f"defects[{n}]")
            defects.append(Defect(int(d["id"]), _vec(d["position"], f"defects[{n}].position"),
                                  _vec(d["normal"], f"defects[{n}].normal"), int(d["box_id"])))
    else:
        defects = sample_defects(model, int(data.get("defect_count", 0)),
                                 int(data.get("seed", 0)), boxes)
    model = replace(model, defects=tuple(defects))

    fleet = []
    for n, a in enumerate(data["fleet"]):
        _check_keys(a, {"name", "role", "start"}, f"fleet[{n}]")
        fleet.append(FleetMember(str(a["name"]), str(a["role"]), _vec(a["start"], f"fleet[{n}].start")))

    sc = Scenario(tuple(boxes), model, _vec(data["gcs"], "gcs"), tuple(fleet), config,
                  str(data.get("name", "")))
    validate_scenario(sc)
    return sc


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: malformed JSON ({exc})") from exc
    return scenario_from_dict(data)


def scenario_to_dict(sc: Scenario) -> dict:
    """Explicit form: occupied cells and defects are written out in full."""
    cfg = asdict(sc.config)
    return {
        "name": sc.name,
        "boxes": [{"id": b.id, "center": list(b.center), "half_extents": list(b.half_extents)}
                  for b in sc.boxes],
        "model": {"resolution": sc.model.resolution,
                  "occupied_cells": [list(c) for c in sorted(sc.model.occupied)]},
        "defects": [{"id": d.id, "position": list(d.position), "normal": list(d.normal),
                     "box_id": d.box_id} for d in sc.model.defects],
        "gcs": list(sc.gcs),
        "fleet": [{"name": m.name, "role": m.role, "start": list(m.start)} for m in sc.fleet],
        "config": cfg,
    }


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=1), encoding="utf-8")


BUNDLED_DIR = Path(__file__).parent / "scenarios"


def resolve_scenario_path(name: str | Path) -> Path:
    """Accept a filesystem path or the file name of a bundled scenario."""
    p = Path(name)
    if p.exists():
        return p
    for cand in (BUNDLED_DIR / p.name, BUNDLED_DIR / (p.name + ".scn")):
        if cand.exists():
            return cand
    raise ScenarioError(f"scenario file not found: {name}")
