"""Deterministic tick loop tying sensing, comms, decisions, arbitration and scoring together.

Phase order per tick (changing it changes every trace):

1. lidar scans of active EXDs are inserted into their team's maps
2. pending messages are delivered where LOS holds
3. every agent steps (priority order) against last tick's published intents
4. collisions are resolved
5. granted moves are applied and the entered voxels marked visited
6. camera captures go into per-agent FD buffers
7. buffered FD reports are flushed to the GCS where LOS holds
8. the tick counter advances and the score series is extended
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .agents import (Agent, ExplorerAgent, Intent, Mode, PhotographerAgent, TeamMaps, TeamView,
                     priority_key, resolve_collisions)
from .assignment import TaskArea, Team, build_inspection_path, form_teams, partition_path
from .comms import GCS, CommBus
from .planner import inspection_layers, partition_regions
from .sensors import Capture, camera_capture, lidar_scan
from .voxel_map import GlobalMap, Index, Submap
from .world import EXD, Scenario

log = logging.getLogger(__name__)


class SimulationInvariantError(RuntimeError):
    """Two agents share a voxel or an agent sits in an obstacle; always a bug."""


@dataclass
class ScoreLedger:
    best: dict[int, Capture] = field(default_factory=dict)
    series: list[tuple[int, float]] = field(default_factory=list)

    def record(self, captures: Sequence[Capture]) -> None:
        for c in captures:
            old = self.best.get(c.defect_id)
            if old is None or c.quality > old.quality:
                self.best[c.defect_id] = c

    @property
    def total(self) -> float:
        return sum(c.quality for c in self.best.values())


@dataclass
class MissionReport:
    scenario: str
    terminated: bool
    completion_tick: int | None
    ticks: int
    total_score: float
    defects: int
    coverage_fraction: float
    distance_flown: dict[str, float]
    final_voxels: dict[str, list[int]]
    at_start: dict[str, bool]
    score_series: list[tuple[int, float]]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "terminated": self.terminated,
            "completion_tick": self.completion_tick,
            "ticks": self.ticks,
            "total_score": round(self.total_score, 9),
            "defects": self.defects,
            "coverage_fraction": round(self.coverage_fraction, 9),
            "distance_flown": {k: round(v, 6) for k, v in sorted(self.distance_flown.items())},
            "final_voxels": dict(sorted(self.final_voxels.items())),
            "at_start": dict(sorted(self.at_start.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def score_csv(self) -> str:
        lines = ["tick,score"]
        lines += [f"{t},{s:.9f}" for t, s in self.score_series]
        return "\n".join(lines) + "\n"


@dataclass
class TeamRuntime:
    team: Team
    maps: TeamMaps
    area: TaskArea


def _arena_bounds(sc: Scenario) -> tuple[Index, Index]:
    vs = sc.voxel_size
    pts = [sc.gcs] + [m.start for m in sc.fleet]
    for b in sc.boxes:
        pts += [b.lo, b.hi]
    arr = np.array(pts, dtype=float)
    lo = np.floor(arr.min(axis=0) / vs).astype(int)
    hi = np.floor(arr.max(axis=0) / vs).astype(int)
    m = sc.config.arena_margin
    lo_z = 0 if lo[2] >= 0 else lo[2] - m
    return (int(lo[0] - m), int(lo[1] - m), int(lo_z)), (int(hi[0] + m), int(hi[1] + m), int(hi[2] + m))


class Simulation:
    def __init__(self, scenario: Scenario, return_home: bool | None = None):
        self.scenario = sc = scenario
        self.cfg = cfg = scenario.config
        self.return_home = cfg.return_home if return_home is None else return_home
        vs = cfg.voxel_size
        self.model = sc.model
        self.defects = list(sc.model.defects)

        # an empty fleet is allowed here so the tick loop can be exercised on its own
        self.teams = form_teams(sc.fleet, sc.gcs) if sc.fleet else []
        self.path = build_inspection_path(sc.boxes, sc.gcs)
        self.volumes = {b.id: b.volume for b in sc.boxes}
        starts = {m.name: m.start for m in sc.fleet}
        self.areas = partition_path(self.path, self.teams, self.volumes,
                                    {t.leader: starts[t.leader] for t in self.teams}) if self.teams else []
        lo, hi = _arena_bounds(sc)

        # planning voxels that contain any ground-truth occupied cell
        r = sc.model.resolution
        self.gt_voxels = set()
        for c in sc.model.occupied:
            lo_v = [math.floor(c[a] * r / vs + 1e-9) for a in range(3)]
            hi_v = [math.ceil((c[a] + 1) * r / vs - 1e-9) for a in range(3)]
            self.gt_voxels.update(itertools.product(*(range(lo_v[a], hi_v[a]) for a in range(3))))

        self.runtime: dict[int, TeamRuntime] = {}
        self.agents: dict[str, Agent] = {}
        self.team_of: dict[str, int] = {}
        roles = {m.name: m.role for m in sc.fleet}
        for team, area in zip(self.teams, self.areas):
            subs = {}
            for bid in area.box_ids:
                subs[bid] = Submap.for_box(sc.box(bid), vs)
            maps = TeamMaps(GlobalMap(lo, hi, vs), subs, list(area.box_ids))
            self.runtime[team.id] = TeamRuntime(team, maps, area)
            for n, name in enumerate((team.leader,) + team.members):
                start = tuple(math.floor(x / vs) for x in starts[name])
                cls = ExplorerAgent if n == 0 else PhotographerAgent
                agent = cls(name, start, team, max(n - 1, 0))
                self.agents[name] = agent
                self.team_of[name] = team.id
                maps.mark_visited(start)
        self.rank = {n: priority_key(n, roles[n]) for n in self.agents}
        self.order = sorted(self.agents, key=lambda n: self.rank[n])
        self.bus = CommBus(set(self.agents))
        self.ledger = ScoreLedger()
        self.tick = 0
        self.intents = {n: Intent(n, a.voxel, a.voxel, (), tuple(a.trail)) for n, a in self.agents.items()}
        self.distance = {n: 0.0 for n in self.agents}
        self.speed = {n: 0.0 for n in self.agents}
        self.events: list[tuple] = []
        self._scan_cache: dict[Index, list[Index]] = {}

    # -- helpers ---------------------------------------------------------------
    def pose(self, name: str) -> tuple[float, float, float]:
        vs = self.cfg.voxel_size
        return tuple((x + 0.5) * vs for x in self.agents[name].voxel)

    def poses(self) -> dict[str, tuple[float, float, float]]:
        return {n: self.pose(n) for n in self.agents}

    def _scan(self, voxel: Index) -> list[Index]:
        hits = self._scan_cache.get(voxel)
        if hits is None:
            vs = self.cfg.voxel_size
            pts = lidar_scan(tuple((x + 0.5) * vs for x in voxel), self.model, self.cfg.lidar)
            if len(pts):
                arr = np.unique(np.floor(pts / vs).astype(np.int64), axis=0)
                hits = [tuple(int(x) for x in row) for row in arr]
            else:
                hits = []
            self._scan_cache[voxel] = hits
        return hits

    def finished(self) -> bool:
        for a in self.agents.values():
            if a.mode != Mode.DONE:
                return False
            if self.return_home and a.voxel != a.start:
                return False
        return True

    def _check_invariants(self) -> None:
        seen: dict[Index, str] = {}
        for n in self.order:
            v = self.agents[n].voxel
            if v in seen:
                raise SimulationInvariantError(f"tick {self.tick}: {n} and {seen[v]} share voxel {v}")
            if v in self.gt_voxels:
                raise SimulationInvariantError(f"tick {self.tick}: {n} is inside an obstacle at {v}")
            seen[v] = n

    # -- the tick ----------------------------------------------------------------
    def step(self) -> None:
        cfg = self.cfg
        # 1. sense and map
        if self.tick % cfg.lidar.period == 0:
            for n in self.order:
                a = self.agents[n]
                if a.role == EXD and a.mode != Mode.DONE:
                    self.runtime[self.team_of[n]].maps.insert_voxels(self._scan(a.voxel))
        # 2. communicate
        poses = self.poses()
        inbox = self.bus.deliver(poses, self.model, self.tick, self.scenario.gcs)
        # 3. decide
        new_intents: dict[str, Intent] = {}
        sent: dict[str, list] = {}
        for n in self.order:
            a = self.agents[n]
            rt = self.runtime[self.team_of[n]]
            view = TeamView(self.tick, rt.team, rt.maps, self.intents, self.rank, self.bus, cfg,
                            self.return_home)
            intent, msgs = a.step(view, inbox.get(n, []))
            new_intents[n] = intent
            sent[n] = msgs
        # 4. arbitrate
        final = resolve_collisions(list(new_intents.values()), self.rank, self.gt_voxels.__contains__)
        # 5. move
        vs = cfg.voxel_size
        for n in self.order:
            a = self.agents[n]
            it = new_intents[n]
            maps = self.runtime[self.team_of[n]].maps
            if it.moving and final[n] == a.voxel and it.next in self.gt_voxels:
                # bumped into structure the map did not know about yet
                maps.insert_voxels([it.next])
            step_len = math.dist(final[n], a.voxel) * vs
            self.distance[n] += step_len
            self.speed[n] = step_len / cfg.dt
            a.commit(final[n])
            maps.mark_visited(a.voxel)
        self._check_invariants()
        self.intents = {n: Intent(n, a.voxel, a.voxel, tuple(a.path[:cfg.horizon]), tuple(a.trail))
                        for n, a in self.agents.items()}
        # 6. capture
        for n in self.order:
            a = self.agents[n]
            caps = camera_capture(self.pose(n), a.gimbal, self.speed[n], self.defects, self.model,
                                  cfg.camera, cfg.v_blur, self.tick, n)
            for c in caps:
                if c.quality > 0:
                    self.bus.buffer_capture(n, c)
        # 7. flush FD reports
        self.ledger.record(self.bus.flush_fd(self.poses(), self.model, self.scenario.gcs, self.tick))
        for n in self.order:
            a = self.agents[n]
            kinds = "|".join(m.kind.value for m in sent[n])
            self.events.append((self.tick, n, a.mode.value, *a.voxel, kinds))
        # 8. advance
        self.ledger.series.append((self.tick, self.ledger.total))
        self.tick += 1

    # -- reporting ---------------------------------------------------------------
    def coverage_fraction(self) -> float:
        total = 0
        covered = 0
        for rt in self.runtime.values():
            m = rt.team.size
            for bid in rt.area.box_ids:
                sub = rt.maps.submaps[bid]
                layers = sorted({l for r in partition_regions(sub, m)
                                 for l in inspection_layers(r, self.cfg.stride)})
                for l in layers:
                    mask = sub.interesting[:, :, l] & ~sub.occupied[:, :, l]
                    for i, j in np.argwhere(mask):
                        g = sub.to_global((int(i), int(j), l))
                        # never-observed cells inside the structure are not flyable targets
                        if g in self.gt_voxels:
                            continue
                        total += 1
                        if sub.visited[i, j, l] and g not in rt.maps.abandoned:
                            covered += 1
        return 1.0 if total == 0 else covered / total

    def report(self) -> MissionReport:
        done = self.finished()
        return MissionReport(
            scenario=self.scenario.name,
            terminated=done,
            completion_tick=self.tick if done else None,
            ticks=self.tick,
            total_score=self.ledger.total,
            defects=len(self.defects),
            coverage_fraction=self.coverage_fraction(),
            distance_flown=dict(self.distance),
            final_voxels={n: list(a.voxel) for n, a in self.agents.items()},
            at_start={n: a.voxel == a.start for n, a in self.agents.items()},
            score_series=list(self.ledger.series),
        )

    def events_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tick", "agent", "mode", "i", "j", "k", "sent"])
        w.writerows(self.events)
        return buf.getvalue()

    def write_outputs(self, out_dir: str | Path, report: MissionReport | None = None) -> MissionReport:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report = report or self.report()
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "score_series.csv").write_text(report.score_csv(), encoding="utf-8")
        (out / "events.csv").write_text(self.events_csv(), encoding="utf-8")
        (out / "messages.csv").write_text(self.bus.trace_csv(), encoding="utf-8")
        return report


def run(scenario: Scenario, max_ticks: int, return_home: bool | None = None,
        sim: Simulation | None = None) -> MissionReport:
    """Tick until every agent is done (and home, when returning) or ``max_ticks`` elapse."""
    sim = sim or Simulation(scenario, return_home)
    while sim.tick < max_ticks and not sim.finished():
        sim.step()
    return sim.report()
