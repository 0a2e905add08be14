"""GCS-side one-shot planning: teams, the first-best inspection path, task areas."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from .world import EXD, PGD, BoundingBox, FleetMember, Vec3, principal_axis

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Team:
    id: int
    leader: str
    members: tuple[str, ...]

    @property
    def size(self) -> int:
        return 1 + len(self.members)


@dataclass(frozen=True)
class PathLeg:
    box_id: int
    enter: Vec3
    exit: Vec3


InspectionPath = tuple[PathLeg, ...]


@dataclass(frozen=True)
class TaskArea:
    team_id: int
    legs: tuple[PathLeg, ...]

    @property
    def box_ids(self) -> list[int]:
        return [leg.box_id for leg in self.legs]


def form_teams(fleet: Sequence[FleetMember], gcs: Vec3 | None = None) -> list[Team]:
    """One team per EXD; each PGD joins its nearest EXD (ties: alphabetical EXD name)."""
    exds = sorted((m for m in fleet if m.role == EXD), key=lambda m: m.name)
    if not exds:
        raise ValueError("at least one EXD is required")
    members: dict[str, list[str]] = {e.name: [] for e in exds}
    for p in sorted((m for m in fleet if m.role == PGD), key=lambda m: m.name):
        leader = min(exds, key=lambda e: (math.dist(p.start, e.start), e.name))
        members[leader.name].append(p.name)
    return [Team(n, e.name, tuple(members[e.name])) for n, e in enumerate(exds)]


def first_best_next(current: Vec3, pairs: Sequence) -> tuple[int, bool]:
    """The greedy rule: (index into pairs, flipped) whose nearer endpoint is closest.

    Ties go to the lower box id, then to p1 over p2.
    """
    best = None
    for n, pair in enumerate(pairs):
        for flipped, p in ((False, pair.p1), (True, pair.p2)):
            key = (math.dist(current, p), pair.box_id, flipped)
            if best is None or key < best[0]:
                best = (key, n, flipped)
    return best[1], best[2]


def build_inspection_path(boxes: Sequence[BoundingBox], gcs: Vec3) -> InspectionPath:
    pairs = [principal_axis(b) for b in boxes]
    legs = []
    current = gcs
    while pairs:
        n, flipped = first_best_next(current, pairs)
        pair = pairs.pop(n)
        enter, exit_ = (pair.p2, pair.p1) if flipped else (pair.p1, pair.p2)
        legs.append(PathLeg(pair.box_id, enter, exit_))
        current = exit_
    return tuple(legs)


def partition_path(path: InspectionPath, teams: Sequence[Team],
                   volumes: dict[int, float],
                   leader_positions: dict[str, Vec3] | None = None) -> list[TaskArea]:
    """Split the path into contiguous task areas with volume quotas proportional to team size.

    Teams are served in order of their leader's distance to the path start
    (then name). Quotas are counted along the path: team i's area closes at
    the first box where the volume walked so far reaches the summed quotas of
    teams 0..i, so every cut sits within one box of its ideal position and
    each team's volume is within one box of its quota. A team whose quota is
    already covered by the previous overshoot gets an empty area (logged).
    """
    if not teams:
        raise ValueError("at least one team is required")
    ordered = list(teams)
    if leader_positions and path:
        start = path[0].enter
        ordered.sort(key=lambda t: (math.dist(leader_positions[t.leader], start), t.leader))
    total_size = sum(t.size for t in ordered)
    total_vol = sum(volumes[leg.box_id] for leg in path)

    areas = []
    pos = 0
    cum = 0.0
    target = 0.0
    tol = 1e-9 * max(total_vol, 1.0)
    for n, team in enumerate(ordered):
        target += total_vol * team.size / total_size
        if n == len(ordered) - 1:
            legs = tuple(path[pos:])
        else:
            start = pos
            while pos < len(path) and cum < target - tol:
                cum += volumes[path[pos].box_id]
                pos += 1
            legs = tuple(path[start:pos])
        if not legs and path:
            log.warning("team %d gets an empty task area: its volume quota is already covered", team.id)
        areas.append(TaskArea(team.id, legs))
    areas.sort(key=lambda a: a.team_id)
    return areas


def assignment_report(teams: Sequence[Team], path: InspectionPath, areas: Sequence[TaskArea],
                      volumes: dict[int, float]) -> str:
    total = sum(volumes.values()) or 1.0
    lines = ["teams:"]
    for t in teams:
        lines.append(f"  team {t.id}: leader={t.leader} members={','.join(t.members) or '-'}")
    lines.append("path:")
    for leg in path:
        e = ", ".join(f"{x:g}" for x in leg.enter)
        x = ", ".join(f"{v:g}" for v in leg.exit)
        lines.append(f"  box {leg.box_id}: enter ({e}) exit ({x})")
    lines.append("task areas:")
    for a in areas:
        share = sum(volumes[b] for b in a.box_ids) / total
        lines.append(f"  team {a.team_id}: boxes {a.box_ids} volume share {share:.3f}")
    return "\n".join(lines) + "\n"
