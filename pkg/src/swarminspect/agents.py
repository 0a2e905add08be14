"""Per-UAV decision logic for explorer (EXD) and photographer (PGD) drones.

Agents live on the world voxel lattice and move at most one 26-connected step
per tick. Each tick the simulator calls :meth:`Agent.step` with a
:class:`TeamView` snapshot and the agent's inbox; the agent returns its
:class:`Intent` and the messages it sent. :func:`resolve_collisions` then
decides which intents are granted.
"""

from __future__ import annotations

import enum
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .assignment import Team
from .comms import CommBus, Kind, Message
from .planner import (NEIGHBORS_26, GridPath, Region, astar, entry_candidates,
                      inspection_layers, layer_target_set, nearest_target_dijkstra,
                      partition_regions)
from .raycast import segment_clear
from .voxel_map import FACE_NEIGHBORS, GlobalMap, Index, Submap
from .world import EXD, PGD, SimConfig

log = logging.getLogger(__name__)

# ticks an agent tolerates being boxed in by higher-priority agents before abandoning a goal
STALL_LIMIT = 40
TRAIL_LEN = 12


class Mode(str, enum.Enum):
    TRANSFER = "Transfer"
    SEEK_ENTRY = "SeekEntry"
    MAP_REGION_FLOOR = "MapRegionFloor"
    INSPECT = "Inspect"
    SEEK_LOS = "SeekLOS"
    WAIT = "Wait"
    RETURN = "Return"
    DONE = "Done"


@dataclass(frozen=True)
class Intent:
    agent: str
    current: Index
    next: Index
    future: tuple[Index, ...] = ()
    trail: tuple[Index, ...] = ()

    @property
    def moving(self) -> bool:
        return self.next != self.current


def priority_key(name: str, role: str) -> tuple[int, str]:
    """EXDs outrank PGDs; within a role, alphabetical order."""
    return (0 if role == EXD else 1, name)


def chebyshev(a: Index, b: Index) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]), abs(a[2] - b[2]))


def _box_gap(sub: Submap, g: Index) -> int:
    """Chebyshev distance in voxels from a global index to the submap's extent (0 inside)."""
    loc = sub.to_local(g)
    return max(max(0, -loc[a], loc[a] - sub.dims[a] + 1) for a in range(3))


@dataclass
class TeamMaps:
    """Map state shared by one team: arena map, per-box submaps, abandoned goals."""

    global_map: GlobalMap
    submaps: dict[int, Submap]
    area: list[int]
    abandoned: set[Index] = field(default_factory=set)
    closed: set[int] = field(default_factory=set)

    def insert_voxels(self, voxels: Sequence[Index]) -> None:
        self.global_map.insert_voxels(voxels)
        for box_id, sub in self.submaps.items():
            if box_id in self.closed:
                continue
            sub.insert_voxels([sub.to_local(v) for v in voxels])

    def mark_visited(self, g: Index) -> None:
        if self.global_map.in_bounds(g):
            self.global_map.mark_visited(g)
        for sub in self.submaps.values():
            loc = sub.to_local(g)
            if sub.in_bounds(loc):
                sub.mark_visited(loc)

    def abandon(self, g: Index) -> None:
        self.abandoned.add(g)
        self.mark_visited(g)


@dataclass
class TeamView:
    tick: int
    team: Team
    maps: TeamMaps
    intents: dict[str, Intent]
    rank: dict[str, tuple[int, str]]
    bus: CommBus
    cfg: SimConfig
    return_home: bool = True

    def outranks(self, a: str, b: str) -> bool:
        return self.rank[a] < self.rank[b]


class Agent:
    role = ""

    def __init__(self, name: str, start: Index, team: Team, member_index: int = 0):
        self.name = name
        self.start = start
        self.voxel = start
        self.team = team
        self.member_index = member_index
        self.mode = Mode.TRANSFER
        self.path: list[Index] = []
        self.gimbal: tuple[float, float, float] = (1.0, 0.0, 0.0)
        self.trail: deque[Index] = deque([start], maxlen=TRAIL_LEN)
        self.failures: dict[Index, int] = {}
        self.stalls: dict[Index, int] = {}
        self.mode_history: list[Mode] = [self.mode]
        self.sent: list[Message] = []
        # layer walk state
        self.walk_layers: list[int] = []
        self.walk_cursor = 0
        self.walk_hover = False
        self.target: Index | None = None
        self.target_hover = False
        self.box_id: int | None = None
        self.entry: Index | None = None

    # -- bookkeeping -------------------------------------------------------
    def set_mode(self, mode: Mode) -> None:
        if mode != self.mode:
            self.mode = mode
            self.mode_history.append(mode)
            self.path = []

    def send(self, view: TeamView, to: str, kind: Kind, payload=None) -> Message:
        msg = view.bus.send(self.name, to, kind, view.tick, payload)
        self.sent.append(msg)
        return msg

    def commit(self, new_voxel: Index) -> None:
        """Apply the arbitrated move."""
        if new_voxel != self.voxel:
            if self.path and self.path[0] == new_voxel:
                self.path.pop(0)
            else:
                self.path = []
            self.voxel = new_voxel
            self.trail.append(new_voxel)

    def intent(self, nxt: Index | None, horizon: int) -> Intent:
        nxt = self.voxel if nxt is None else nxt
        future = tuple(self.path[:horizon]) if nxt != self.voxel else ()
        return Intent(self.name, self.voxel, nxt, future, tuple(self.trail))

    # -- navigation --------------------------------------------------------
    def _higher_voxels(self, view: TeamView, include_future: bool = True) -> set[Index]:
        out: set[Index] = set()
        h = view.cfg.horizon
        for name, it in view.intents.items():
            if name != self.name and view.outranks(name, self.name):
                out.add(it.current)
                if include_future:
                    out.update(it.future[:h])
        return out

    def _others_current(self, view: TeamView) -> set[Index]:
        return {it.current for n, it in view.intents.items() if n != self.name}

    def _path_ok(self, view: TeamView, blocked: set[Index]) -> bool:
        if not self.path or chebyshev(self.path[0], self.voxel) != 1:
            return False
        occ = view.maps.global_map.occupied
        if any(v in occ for v in self.path):
            return False
        h = view.cfg.horizon
        return not any(v in blocked for v in self.path[: h + 1])

    def _grid_for(self, view: TeamView, goal: Index) -> tuple[object, Callable, Callable]:
        if self.box_id is not None:
            sub = view.maps.submaps[self.box_id]
            if sub.contains_global(self.voxel) and sub.contains_global(goal):
                return sub, sub.to_local, sub.to_global
        ident = lambda v: v  # noqa: E731
        return view.maps.global_map, ident, ident

    def _plan(self, view: TeamView, goal: Index, blocked: set[Index]) -> list[Index]:
        grid, to_loc, to_glob = self._grid_for(view, goal)
        bl = {to_loc(b) for b in blocked}
        res = astar(grid, to_loc(self.voxel), to_loc(goal), bl)
        if res is not None:
            self.stalls.pop(goal, None)
            return [to_glob(c) for c in res.cells[1:]]
        if astar(grid, to_loc(self.voxel), to_loc(goal)) is not None:
            self.stalls[goal] = self.stalls.get(goal, 0) + 1
        else:
            self.failures[goal] = self.failures.get(goal, 0) + 1
        return []

    def unreachable(self, view: TeamView, goal: Index) -> bool:
        return (self.failures.get(goal, 0) >= view.cfg.max_replans
                or self.stalls.get(goal, 0) >= STALL_LIMIT)

    def navigate(self, view: TeamView, goal: Index) -> Index | None:
        """Next voxel toward ``goal`` (replanning when the current path is stale), or None."""
        if self.voxel == goal:
            self.path = []
            return None
        blocked = self._higher_voxels(view)
        if goal in blocked:
            self.stalls[goal] = self.stalls.get(goal, 0) + 1
            return None
        if not (self.path and self.path[-1] == goal and self._path_ok(view, blocked)):
            self.path = self._plan(view, goal, blocked)
            if not self.path:
                return None
        return self.path[0]

    # -- layer walks ---------------------------------------------------------
    def start_walk(self, layers: Iterable[int], hover: bool) -> None:
        self.walk_layers = list(layers)
        self.walk_cursor = 0
        self.walk_hover = hover
        self.target = None
        self.path = []

    def _selector(self, view: TeamView) -> Callable[[Submap, int], list[Index]]:
        ab = view.maps.abandoned

        def select(sub: Submap, layer: int) -> list[Index]:
            return [t for t in layer_target_set(sub, layer) if sub.to_global(t) not in ab]
        return select

    def _choose_target(self, view: TeamView, layer: int) -> GridPath | str | None:
        sub = view.maps.submaps[self.box_id]
        start = sub.to_local(self.voxel)
        select = self._selector(view)
        blocked = {sub.to_local(b) for b in self._higher_voxels(view) if sub.contains_global(b)}
        blocked |= {sub.to_local(b) for b in self._others_current(view) if sub.contains_global(b)}
        blocked.discard(start)
        p = None
        if start[2] == layer:
            p = nearest_target_dijkstra(sub, start, layer, select, blocked, restrict_layer=True)
        if p is None:
            p = nearest_target_dijkstra(sub, start, layer, select, blocked)
        if p is not None:
            return p
        q = nearest_target_dijkstra(sub, start, layer, select)
        if q is None:
            # whatever is left in this layer cannot be reached from here
            for t in select(sub, layer):
                view.maps.abandon(sub.to_global(t))
            return None
        g = sub.to_global(q.goal)
        self.stalls[g] = self.stalls.get(g, 0) + 1
        if self.stalls[g] >= STALL_LIMIT:
            log.warning("%s abandons target %s after stalling", self.name, g)
            view.maps.abandon(g)
        return "hover"

    def _target_live(self, view: TeamView) -> bool:
        sub = view.maps.submaps[self.box_id]
        loc = sub.to_local(self.target)
        if not sub.in_bounds(loc) or sub.visited[loc] or sub.occupied[loc]:
            return False
        return self.target not in view.maps.abandoned

    def walk_step(self, view: TeamView) -> tuple[Index | None, bool]:
        """Advance the current layer walk; returns (next voxel or None, finished)."""
        sub = view.maps.submaps[self.box_id]
        if not sub.contains_global(self.voxel):
            return self.navigate(view, self.entry), False
        if self.target is not None and self.voxel == self.target:
            self.target = None
            self.path = []
            if self.target_hover:
                return None, False
        for _ in range(len(self.walk_layers) * 4 + 4):
            if self.walk_cursor >= len(self.walk_layers):
                leftovers = [n for n, l in enumerate(self.walk_layers)
                             if self._selector(view)(sub, l) and sub.layer_has_interesting(l)]
                if not leftovers:
                    return None, True
                self.walk_cursor = leftovers[0]
            layer = self.walk_layers[self.walk_cursor]
            if self.target is not None and self._target_live(view):
                blocked = self._higher_voxels(view)
                if self._path_ok(view, blocked) and self.path[-1] == self.target:
                    return self.path[0], False
            p = self._choose_target(view, layer)
            if p == "hover":
                self.target = None
                return None, False
            if p is None:
                self.target = None
                self.walk_cursor += 1
                continue
            self.target = sub.to_global(p.goal)
            self.target_hover = self.walk_hover and sub.interesting[p.goal]
            self.path = [sub.to_global(c) for c in p.cells[1:]]
            if not self.path:
                return None, False
            return self.path[0], False
        return None, False

    # -- helpers -------------------------------------------------------------
    def column_voxels(self, view: TeamView) -> list[Index]:
        """Known-free voxels sharing the entry voxel's (i, j), bottom to top."""
        sub = view.maps.submaps[self.box_id]
        e = sub.to_local(self.entry)
        return [sub.to_global((e[0], e[1], k)) for k in range(sub.nlayers)
                if not sub.occupied[e[0], e[1], k]]

    def aim_gimbal(self, view: TeamView, at: Index) -> None:
        occ = view.maps.global_map.occupied
        for d in FACE_NEIGHBORS:
            if (at[0] + d[0], at[1] + d[1], at[2] + d[2]) in occ:
                self.gimbal = (float(d[0]), float(d[1]), float(d[2]))
                return
        best = None
        for di in range(-2, 3):
            for dj in range(-2, 3):
                for dk in range(-2, 3):
                    v = (at[0] + di, at[1] + dj, at[2] + dk)
                    if v in occ:
                        key = (di * di + dj * dj + dk * dk, v)
                        if best is None or key < best:
                            best = key
        if best is not None:
            v = best[1]
            d = (v[0] - at[0], v[1] - at[1], v[2] - at[2])
            n = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
            self.gimbal = (d[0] / n, d[1] / n, d[2] / n)

    def yield_move(self, view: TeamView) -> Index | None:
        """Step aside when hovering on a voxel a higher-priority agent plans to enter."""
        h = view.cfg.horizon
        future: set[Index] = set()
        higher_cur: list[Index] = []
        for name, it in view.intents.items():
            if name != self.name and view.outranks(name, self.name):
                future.update(it.future[:h])
                higher_cur.append(it.current)
        if self.voxel not in future:
            return None
        gm = view.maps.global_map
        taken = self._others_current(view) | set(higher_cur)
        free = []
        for d, _ in sorted(NEIGHBORS_26, key=lambda n: (n[1], n[0])):
            v = (self.voxel[0] + d[0], self.voxel[1] + d[1], self.voxel[2] + d[2])
            if gm.in_bounds(v) and v not in gm.occupied and v not in taken:
                free.append(v)
        for v in free:
            if v not in future:
                return v
        if free and higher_cur:
            return max(free, key=lambda v: (min(chebyshev(v, c) for c in higher_cur), tuple(-x for x in v)))
        return None

    def go_home(self, view: TeamView) -> Index | None:
        if not view.return_home:
            self.set_mode(Mode.DONE)
            return None
        self.box_id = None
        if self.voxel == self.start:
            self.set_mode(Mode.DONE)
            return None
        nxt = self.navigate(view, self.start)
        if nxt is None and self.unreachable(view, self.start):
            log.warning("%s cannot reach its start voxel; stopping at %s", self.name, self.voxel)
            self.set_mode(Mode.DONE)
        return nxt

    def step(self, view: TeamView, inbox: Sequence[Message]) -> tuple[Intent, list[Message]]:
        n_sent = len(self.sent)
        nxt = self.decide(view, list(inbox))
        if nxt is None:
            if self.mode == Mode.DONE and view.return_home and self.voxel != self.start:
                nxt = self.navigate(view, self.start)
            if nxt is None:
                nxt = self.yield_move(view)
                if nxt is not None:
                    self.path = []
        self.aim_gimbal(view, nxt if nxt is not None else self.voxel)
        return self.intent(nxt, view.cfg.horizon), self.sent[n_sent:]

    def decide(self, view: TeamView, inbox: list[Message]) -> Index | None:
        raise NotImplementedError


class ExplorerAgent(Agent):
    """Team leader: finds entries, maps region floors, hands regions to PGDs, inspects the top region."""

    role = EXD

    def __init__(self, name: str, start: Index, team: Team, member_index: int = 0):
        super().__init__(name, start, team, member_index)
        self.box_cursor = 0
        self.candidates: Iterator[Index] | None = None
        self.candidate: Index | None = None
        self.regions: list[Region] = []
        self.region_cursor = 0
        self.done_reports: set[str] = set()
        self.awaiting: list[Message] = []
        self.after_ack: Callable[[TeamView], None] | None = None
        self.resume_mode: Mode = Mode.WAIT
        self.los_goal: Index | None = None
        self.los_tried: set[Index] = set()

    # -- dispatch with acknowledgement ---------------------------------------
    def dispatch(self, view: TeamView, sends: list[tuple[str, Kind, object]],
                 then: Callable[[TeamView], None]) -> None:
        self.awaiting = [self.send(view, to, kind, payload) for to, kind, payload in sends]
        self.after_ack = then
        self.resume_mode = self.mode
        self.los_goal = None
        self.los_tried = set()

    def _pending(self, view: TeamView) -> list[Message]:
        return [m for m in self.awaiting if m.id not in view.bus.acked]

    def _handle_awaiting(self, view: TeamView) -> tuple[bool, Index | None]:
        """(still busy, next voxel) while dispatched commands wait for delivery."""
        if not self.awaiting:
            return False, None
        pending = self._pending(view)
        if not pending:
            self.awaiting = []
            then, self.after_ack = self.after_ack, None
            if self.mode == Mode.SEEK_LOS:
                self.set_mode(self.resume_mode)
            if then is not None:
                then(view)
            return False, None
        if pending[0].tick >= view.tick:
            return True, None
        self.set_mode(Mode.SEEK_LOS)
        return True, self._seek_los(view, pending[0].to)

    def _seek_los(self, view: TeamView, recipient: str) -> Index | None:
        target = view.intents[recipient].current
        gm = view.maps.global_map
        if self.los_goal is not None and self.voxel == self.los_goal:
            self.los_tried.add(self.los_goal)
            self.los_goal = None
        if self.los_goal is None or self.unreachable(view, self.los_goal):
            self.los_goal = self._find_los_voxel(view, target)
        if self.los_goal is None:
            # fall back to drifting through adjacent free voxels
            taken = self._others_current(view)
            for d, _ in NEIGHBORS_26:
                v = (self.voxel[0] + d[0], self.voxel[1] + d[1], self.voxel[2] + d[2])
                if gm.in_bounds(v) and v not in gm.occupied and v not in taken and v not in self.los_tried:
                    self.los_tried.add(v)
                    return v
            self.los_tried.clear()
            return None
        return self.navigate(view, self.los_goal)

    def _find_los_voxel(self, view: TeamView, target: Index, limit: int = 4000) -> Index | None:
        gm = view.maps.global_map
        vs = gm.voxel_size
        tc = gm.index_to_center(target)
        taken = self._others_current(view)
        seen = {self.voxel}
        queue = deque([self.voxel])
        while queue and len(seen) < limit:
            v = queue.popleft()
            if v != self.voxel and v not in taken and v not in self.los_tried and \
                    segment_clear(gm.index_to_center(v), tc, vs, gm.occupied.__contains__):
                return v
            for d, _ in NEIGHBORS_26:
                n = (v[0] + d[0], v[1] + d[1], v[2] + d[2])
                if n not in seen and gm.in_bounds(n) and n not in gm.occupied:
                    seen.add(n)
                    queue.append(n)
        return None

    # -- box lifecycle -------------------------------------------------------
    def _current_box(self, view: TeamView) -> int | None:
        area = view.maps.area
        return area[self.box_cursor] if self.box_cursor < len(area) else None

    def _next_candidate(self, view: TeamView) -> None:
        sub = view.maps.submaps[self.box_id]
        for loc in self.candidates:
            g = sub.to_global(loc)
            if not sub.occupied[loc] and g not in view.maps.abandoned:
                self.candidate = g
                return
        self.candidate = None

    def _on_entry(self, view: TeamView) -> None:
        self.entry = self.voxel
        sub = view.maps.submaps[self.box_id]
        for pgd in self.team.members:
            self.send(view, pgd, Kind.POSE_PING, {"box": self.box_id, "entry": self.entry})
        self.regions = partition_regions(sub, self.team.size)
        self.region_cursor = 0
        self.done_reports = set()
        if self.team.size > 1:
            self.set_mode(Mode.MAP_REGION_FLOOR)
            self._begin_floor(view)
        else:
            self._begin_inspect(view)

    def _begin_floor(self, view: TeamView) -> None:
        region = self.regions[self.region_cursor]
        self.start_walk([] if region.empty else [region.lo], hover=False)

    def _begin_inspect(self, view: TeamView) -> None:
        self.set_mode(Mode.INSPECT)
        self.start_walk(inspection_layers(self.regions[-1], view.cfg.stride), hover=True)

    def _region_handed(self, view: TeamView) -> None:
        self.region_cursor += 1
        if self.region_cursor < len(self.regions) - 1:
            self.set_mode(Mode.MAP_REGION_FLOOR)
            self._begin_floor(view)
        else:
            self._begin_inspect(view)

    def _wait_voxel(self, view: TeamView) -> Index:
        col = self.column_voxels(view)
        return col[-1] if col else self.entry

    def _finish_box(self, view: TeamView) -> None:
        view.maps.closed.add(self.box_id)
        self.box_cursor += 1
        more = self._current_box(view) is not None
        if self.team.members:
            self.set_mode(Mode.WAIT)
            self.dispatch(view, [(p, Kind.TRANSFER_CMD, {"return": not more}) for p in self.team.members],
                          self._after_transfer_cmd)
        else:
            self._after_transfer_cmd(view)

    def _after_transfer_cmd(self, view: TeamView) -> None:
        self.box_id = None
        self.entry = None
        self.candidates = None
        self.candidate = None
        if self._current_box(view) is None:
            self.set_mode(Mode.RETURN)
        else:
            self.set_mode(Mode.TRANSFER)

    def _leftover_layers(self, view: TeamView) -> list[int]:
        sub = view.maps.submaps[self.box_id]
        select = self._selector(view)
        layers = sorted({l for r in self.regions for l in inspection_layers(r, view.cfg.stride)})
        return [l for l in layers if select(sub, l) and sub.layer_has_interesting(l)]

    def decide(self, view: TeamView, inbox: list[Message]) -> Index | None:
        for m in inbox:
            if m.kind is Kind.DONE_REPORT and self.box_id is not None and m.payload.get("box") == self.box_id:
                self.done_reports.add(m.sender)
        busy, nxt = self._handle_awaiting(view)
        if busy:
            return nxt
        for _ in range(8):
            mode = self.mode
            nxt = self._decide_mode(view)
            if nxt is not None or self.mode == mode or self.awaiting:
                return nxt
        return nxt

    def _decide_mode(self, view: TeamView) -> Index | None:
        mode = self.mode
        if mode in (Mode.TRANSFER, Mode.SEEK_ENTRY):
            box = self._current_box(view)
            if box is None:
                self._after_transfer_cmd(view) if not self.team.members else \
                    self.dispatch(view, [(p, Kind.TRANSFER_CMD, {"return": True}) for p in self.team.members],
                                  self._after_transfer_cmd)
                return None
            if self.box_id != box or self.candidates is None:
                self.box_id = box
                sub = view.maps.submaps[box]
                self.candidates = entry_candidates(sub, view.maps.global_map.index_to_center(self.voxel))
                self._next_candidate(view)
            sub = view.maps.submaps[box]
            if mode == Mode.TRANSFER and _box_gap(sub, self.voxel) <= 1:
                self.set_mode(Mode.SEEK_ENTRY)
            while self.candidate is not None:
                if self.voxel == self.candidate:
                    self.set_mode(Mode.SEEK_ENTRY)
                    self._on_entry(view)
                    return None
                if sub.occupied[sub.to_local(self.candidate)] or self.unreachable(view, self.candidate):
                    self.set_mode(Mode.SEEK_ENTRY)
                    self._next_candidate(view)
                    continue
                return self.navigate(view, self.candidate)
            log.warning("%s found no reachable entry voxel for box %s; skipping it", self.name, box)
            self.box_cursor += 1
            self.candidates = None
            return None

        if mode == Mode.MAP_REGION_FLOOR:
            nxt, finished = self.walk_step(view)
            if not finished:
                return nxt
            pgd = self.team.members[self.region_cursor]
            region = self.regions[self.region_cursor]
            payload = {"box": self.box_id, "entry": self.entry, "region": region}
            self.dispatch(view, [(pgd, Kind.MAP_SHARE, {"box": self.box_id}),
                                 (pgd, Kind.INSPECT_CMD, payload)], self._region_handed)
            return None

        if mode == Mode.INSPECT:
            nxt, finished = self.walk_step(view)
            if not finished:
                return nxt
            if not self.team.members:
                leftovers = self._leftover_layers(view)
                if leftovers:
                    self.start_walk(leftovers, hover=True)
                    return None
                self._finish_box(view)
                return None
            self.set_mode(Mode.WAIT)
            return None

        if mode == Mode.WAIT:
            if set(self.team.members) <= self.done_reports:
                leftovers = self._leftover_layers(view)
                if leftovers:
                    self.set_mode(Mode.INSPECT)
                    self.start_walk(leftovers, hover=True)
                    return None
                self._finish_box(view)
                return None
            return self.navigate(view, self._wait_voxel(view))

        if mode == Mode.RETURN:
            return self.go_home(view)

        return None


class PhotographerAgent(Agent):
    """Follows its leader, inspects the region it is handed, then waits in the entry column."""

    role = PGD

    def __init__(self, name: str, start: Index, team: Team, member_index: int = 0):
        super().__init__(name, start, team, member_index)
        self.wait_goal: Index | None = None
        self.region: Region | None = None
        self.reported = False

    def _pre_wait_voxel(self, view: TeamView) -> Index:
        col = [v for v in self.column_voxels(view) if v != self.entry]
        if not col:
            return self.entry
        return col[min(self.member_index, len(col) - 1)]

    def _done_wait_voxel(self, view: TeamView) -> Index:
        col = self.column_voxels(view)
        top = col[-1] if col else self.entry
        taken = self._others_current(view)
        choices = [v for v in col if v != top and v not in taken] or [v for v in col if v not in taken] or col
        return min(choices, key=lambda v: (abs(v[2] - self.voxel[2]), v[2]))

    def decide(self, view: TeamView, inbox: list[Message]) -> Index | None:
        for m in inbox:
            if m.kind is Kind.POSE_PING and m.sender == self.team.leader:
                self.box_id = m.payload["box"]
                self.entry = m.payload["entry"]
                if self.mode == Mode.TRANSFER:
                    self.set_mode(Mode.WAIT)
                    self.wait_goal = self._pre_wait_voxel(view)
            elif m.kind is Kind.INSPECT_CMD:
                self.box_id = m.payload["box"]
                self.entry = m.payload["entry"]
                self.region = m.payload["region"]
                self.reported = False
                self.set_mode(Mode.INSPECT)
                self.start_walk(inspection_layers(self.region, view.cfg.stride), hover=True)
            elif m.kind is Kind.TRANSFER_CMD:
                self.region = None
                self.wait_goal = None
                self.entry = None
                self.box_id = None
                self.set_mode(Mode.RETURN if m.payload["return"] else Mode.TRANSFER)

        if self.mode == Mode.TRANSFER:
            lead = view.intents.get(self.team.leader)
            if lead is None:
                return None
            back = view.cfg.standoff + self.member_index
            trail = lead.trail
            goal = trail[-1 - back] if len(trail) > back else trail[0]
            if goal == self.voxel:
                return None
            return self.navigate(view, goal)

        if self.mode == Mode.INSPECT:
            nxt, finished = self.walk_step(view)
            if not finished:
                return nxt
            self.wait_goal = self._done_wait_voxel(view)
            self.set_mode(Mode.WAIT)

        if self.mode == Mode.WAIT:
            goal = self.wait_goal
            at_goal = goal is None or self.voxel == goal
            if not at_goal and goal in self._others_current(view):
                at_goal = self.region is not None and chebyshev(self.voxel, goal) <= 1
                if not at_goal:
                    return None
            if at_goal:
                if self.region is not None and not self.reported:
                    self.send(view, self.team.leader, Kind.DONE_REPORT, {"box": self.box_id})
                    self.reported = True
                return None
            nxt = self.navigate(view, goal)
            if nxt is None and self.unreachable(view, goal):
                self.wait_goal = self.voxel
            return nxt

        if self.mode == Mode.RETURN:
            return self.go_home(view)
        return None


def step_exd(agent: ExplorerAgent, view: TeamView, inbox: Sequence[Message]):
    return agent.step(view, inbox)


def step_pgd(agent: PhotographerAgent, view: TeamView, inbox: Sequence[Message]):
    return agent.step(view, inbox)


def resolve_collisions(intents: Sequence[Intent], rank: dict[str, tuple[int, str]],
                       is_blocked: Callable[[Index], bool] = lambda v: False) -> dict[str, Index]:
    """Grant or deny each intent; returns the voxel each agent occupies next tick.

    Intents are processed in priority order. A move is denied when it targets
    a blocked voxel, a voxel already granted to a higher-priority agent, or a
    voxel whose holder ends the tick there. Head-on swaps deny the
    lower-priority agent, which in turn pins the other.
    """
    order = sorted(intents, key=lambda it: rank[it.agent])
    final = {it.agent: it.current for it in order}
    moving: set[str] = set()
    claimed: dict[Index, str] = {}
    for it in order:
        if it.moving and not is_blocked(it.next) and it.next not in claimed:
            moving.add(it.agent)
            claimed[it.next] = it.agent
            final[it.agent] = it.next
    by_current = {it.current: it for it in order}
    changed = True
    while changed:
        changed = False
        for it in order:
            if it.agent not in moving:
                continue
            holder = by_current.get(it.next)
            if holder is None or holder.agent == it.agent:
                continue
            swap = holder.agent in moving and holder.next == it.current
            if holder.agent not in moving or (swap and rank[it.agent] > rank[holder.agent]):
                moving.discard(it.agent)
                final[it.agent] = it.current
                changed = True
            elif swap:
                moving.discard(holder.agent)
                final[holder.agent] = holder.current
                changed = True
    return final
