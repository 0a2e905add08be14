import itertools

from conftest import make_scene
from swarminspect import Simulation, run
from swarminspect.agents import (Agent, Intent, Mode, PhotographerAgent, TeamMaps, TeamView,
                                 priority_key, resolve_collisions)
from swarminspect.assignment import Team
from swarminspect.comms import CommBus
from swarminspect.voxel_map import GlobalMap, Submap
from swarminspect.world import SimConfig

RANK = {n: priority_key(n, r) for n, r in
        [("exd1", "EXD"), ("exd2", "EXD"), ("pgdA", "PGD"), ("pgdB", "PGD")]}


def test_contention_goes_alphabetical():
    out = resolve_collisions([Intent("pgdB", (0, 0, 0), (1, 0, 0)),
                              Intent("pgdA", (2, 0, 0), (1, 0, 0))], RANK)
    assert out == {"pgdA": (1, 0, 0), "pgdB": (0, 0, 0)}


def test_no_conflicts_all_granted():
    its = [Intent("exd1", (0, 0, 0), (1, 1, 0)), Intent("pgdA", (5, 0, 0), (5, 1, 0)),
           Intent("pgdB", (9, 9, 9), (9, 9, 9))]
    assert resolve_collisions(its, RANK) == {"exd1": (1, 1, 0), "pgdA": (5, 1, 0), "pgdB": (9, 9, 9)}


def test_following_into_vacated_voxel_allowed():
    its = [Intent("exd1", (1, 0, 0), (2, 0, 0)), Intent("pgdA", (0, 0, 0), (1, 0, 0))]
    assert resolve_collisions(its, RANK) == {"exd1": (2, 0, 0), "pgdA": (1, 0, 0)}


def test_denied_holder_pins_follower():
    its = [Intent("exd1", (1, 0, 0), (2, 0, 0)), Intent("pgdA", (0, 0, 0), (1, 0, 0))]
    out = resolve_collisions(its, RANK, is_blocked=lambda v: v == (2, 0, 0))
    assert out == {"exd1": (1, 0, 0), "pgdA": (0, 0, 0)}


def test_move_onto_stationary_lower_agent_denied():
    its = [Intent("exd1", (0, 0, 0), (1, 0, 0)), Intent("pgdA", (1, 0, 0), (1, 0, 0))]
    assert resolve_collisions(its, RANK)["exd1"] == (0, 0, 0)


def test_head_on_swap_never_shares_a_voxel():
    its = [Intent("exd1", (0, 0, 0), (1, 0, 0)), Intent("pgdA", (1, 0, 0), (0, 0, 0))]
    out = resolve_collisions(its, RANK)
    assert out == {"exd1": (0, 0, 0), "pgdA": (1, 0, 0)}


def test_rank_order():
    assert sorted(RANK, key=RANK.get) == ["exd1", "exd2", "pgdA", "pgdB"]


class Walker(Agent):
    """Minimal agent that flies to a goal and stops."""

    def __init__(self, name, role, start, goal):
        super().__init__(name, start, Team(0, name, ()))
        self.role = role
        self.goal = goal

    def decide(self, view, inbox):
        if self.voxel == self.goal:
            self.set_mode(Mode.DONE)
            return None
        return self.navigate(view, self.goal)


def _run_walkers(walkers, gm, ticks):
    rank = {w.name: priority_key(w.name, w.role) for w in walkers}
    cfg = SimConfig()
    maps = TeamMaps(gm, {}, [])
    intents = {w.name: Intent(w.name, w.voxel, w.voxel) for w in walkers}
    for tick in range(ticks):
        if all(w.voxel == w.goal for w in walkers):
            return tick
        view = TeamView(tick, walkers[0].team, maps, intents, rank, CommBus(set(rank)), cfg, False)
        new = [w.step(view, [])[0] for w in walkers]
        final = resolve_collisions(new, rank, gm.occupied.__contains__)
        for w in walkers:
            w.commit(final[w.name])
        positions = [w.voxel for w in walkers]
        assert len(set(positions)) == len(positions)
        assert not set(positions) & gm.occupied
        intents = {w.name: Intent(w.name, w.voxel, w.voxel, tuple(w.path[:cfg.horizon])) for w in walkers}
    return None


def test_corridor_swap_resolves():
    # a 12-long corridor, 2 wide and 1 high, walled in by the arena bounds
    gm = GlobalMap((0, 0, 0), (11, 1, 0), 4.0)
    e = Walker("exd1", "EXD", (0, 0, 0), (11, 0, 0))
    p = Walker("pgd1", "PGD", (11, 0, 0), (0, 0, 0))
    took = _run_walkers([e, p], gm, 40)
    assert took is not None and took <= 20


def test_crossing_traffic_resolves():
    gm = GlobalMap((0, 0, 0), (9, 9, 2), 4.0)
    gm.insert_voxels([(4, j, k) for j in range(10) for k in range(3) if j not in (4, 5)])
    walkers = [Walker("exd1", "EXD", (0, 4, 1), (9, 5, 1)), Walker("exd2", "EXD", (9, 4, 1), (0, 5, 1)),
               Walker("pgdA", "PGD", (0, 5, 1), (9, 4, 1)), Walker("pgdB", "PGD", (9, 5, 1), (0, 4, 1))]
    assert _run_walkers(walkers, gm, 200) is not None


def test_done_wait_voxel_skips_blocked_column_cell():
    sub = Submap(0, (0, 0, 0), 4.0, (4, 4, 6))
    gm = GlobalMap((-2, -2, 0), (6, 6, 8), 4.0)
    maps = TeamMaps(gm, {0: sub}, [0])
    maps.insert_voxels([(1, 1, 2)])
    team = Team(0, "exd1", ("pgd1",))
    pgd = PhotographerAgent("pgd1", (1, 1, 2), team)
    pgd.voxel = (3, 3, 2)
    pgd.box_id, pgd.entry = 0, (1, 1, 0)
    intents = {"exd1": Intent("exd1", (1, 1, 5), (1, 1, 5)), "pgd1": Intent("pgd1", (3, 3, 2), (3, 3, 2))}
    view = TeamView(0, team, maps, intents, {"exd1": (0, "exd1"), "pgd1": (1, "pgd1")},
                    CommBus({"exd1", "pgd1"}), SimConfig())
    got = pgd._done_wait_voxel(view)
    assert got[:2] == (1, 1) and got[2] in (1, 3)


EXD_ONLY = [{"name": "exd1", "role": "EXD", "start": [18, 50, 2]}]
WITH_PGD = EXD_ONLY + [{"name": "pgd1", "role": "PGD", "start": [18, 58, 2]}]


def test_open_box_exd_only_mode_sequence():
    sc = make_scene(fleet=EXD_ONLY)
    sim = Simulation(sc)
    r = run(sc, 1000, sim=sim)
    assert r.terminated and r.coverage_fraction == 1.0
    assert [m.value for m in sim.agents["exd1"].mode_history] == ["Transfer", "SeekEntry", "Inspect",
                                                                  "Return", "Done"]


def test_empty_region_pgd_walks_boundary_and_reports():
    sc = make_scene(fleet=WITH_PGD)
    sim = Simulation(sc)
    r = run(sc, 1000, sim=sim)
    assert r.terminated and all(r.at_start.values())
    rows = [line.split(",") for line in sim.bus.trace_csv().splitlines()[1:]]
    kinds = [(row[1], row[3]) for row in rows]
    assert kinds.count(("exd1", "InspectCmd")) == 1 and kinds.count(("pgd1", "DoneReport")) == 1
    sub = next(iter(sim.runtime.values())).maps.submaps[0]
    # the PGD's region is the lower half: its first layer is fully walked round the perimeter
    assert sub.boundary_unvisited(0) == []
    assert "Inspect" in [m.value for m in sim.agents["pgd1"].mode_history]


def _events(sim):
    out = {}
    for row in sim.events:
        out.setdefault(row[1], []).append(row)
    return out


def test_protocol_and_mode_order_on_bundled_fleets():
    from swarminspect.cli import RunSpec, prepare
    for name, fleet in itertools.product(["block12", "three_box"], ["1E2P", "2E3P"]):
        sc = prepare(RunSpec(name, None, 3000, fleet))
        sim = Simulation(sc)
        r = run(sc, 3000, sim=sim)
        assert r.terminated
        rows = [line.split(",") for line in sim.bus.trace_csv().splitlines()[1:]]
        assert all(row[4] == "1" for row in rows)
        cmds = [row[2] for row in rows if row[3] == "InspectCmd"]
        dones = [row[1] for row in rows if row[3] == "DoneReport"]
        assert sorted(cmds) == sorted(dones)
        for agent, evs in _events(sim).items():
            modes = [e[2] for e in evs]
            # within a box no agent goes back to looking for an entry after inspecting
            seen_inspect = False
            for m in modes:
                if m == "Inspect":
                    seen_inspect = True
                elif m in ("Transfer", "Return"):
                    seen_inspect = False
                assert not (seen_inspect and m == "SeekEntry")
