import dataclasses
import json

import pytest

from conftest import make_scene
from swarminspect import Simulation, load_scenario, run
from swarminspect.sim import SimulationInvariantError
from swarminspect.world import resolve_scenario_path


def test_zero_agents_only_tick_advances():
    sc = dataclasses.replace(make_scene(), fleet=())
    sim = Simulation(sc)
    sim.step()
    assert sim.tick == 1 and sim.ledger.total == 0 and sim.agents == {}


def test_single_tick_next_to_wall():
    # wall occupying x in [20, 24), y in [40, 64), z in [0, 12); the EXD hovers just west of it
    sc = make_scene(blocks=[((20, 40, 0), (24, 64, 12))],
                    fleet=[{"name": "exd1", "role": "EXD", "start": [18, 50, 2]}])
    sim = Simulation(sc)
    sim.step()
    gm = next(iter(sim.runtime.values())).maps.global_map
    wall = {(5, j, k) for j in range(10, 16) for k in range(3)}
    seen = wall & gm.occupied
    assert (5, 12, 0) in seen and gm.occupied <= wall
    for v in seen:
        assert (v[0] - 1, v[1], v[2]) in gm.interesting
    assert (4, 12, 0) in gm.visited


def test_max_ticks_zero():
    r = run(make_scene(), 0)
    assert not r.terminated and r.total_score == 0 and r.score_series == [] and r.ticks == 0


def test_open_scene_terminates_full_coverage(open_scene):
    r = run(open_scene, 1000)
    assert r.terminated and r.coverage_fraction == 1.0 and all(r.at_start.values())


def test_score_series_monotone_and_bounded():
    sc = load_scenario(resolve_scenario_path("block12"))
    r = run(sc, 3000)
    scores = [s for _, s in r.score_series]
    assert scores == sorted(scores)
    assert r.total_score <= len(sc.model.defects)
    assert [t for t, _ in r.score_series] == list(range(r.ticks))


def test_occluded_gcs_return_gating():
    sc = load_scenario(resolve_scenario_path("occluded_gcs"))
    on = Simulation(sc, return_home=True)
    r_on = run(sc, 3000, sim=on)
    off = Simulation(sc, return_home=False)
    r_off = run(sc, 3000, sim=off)
    assert r_on.terminated and r_off.terminated
    assert r_on.total_score > r_off.total_score == 0
    assert off.bus.undelivered_captures() and not on.bus.undelivered_captures()


def test_report_outputs_deterministic(tmp_path):
    sc = load_scenario(resolve_scenario_path("three_box"))
    for d in ("a", "b"):
        sim = Simulation(sc)
        run(sc, 3000, sim=sim)
        sim.write_outputs(tmp_path / d)
    for f in ("report.json", "score_series.csv", "events.csv", "messages.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert 0.0 <= rep["coverage_fraction"] <= 1.0
    assert set(rep["distance_flown"]) == {m.name for m in sc.fleet}


def test_invariant_trap():
    sc = load_scenario(resolve_scenario_path("cube6"))
    sim = Simulation(sc)
    sim.agents["pgd1"].voxel = sim.agents["exd1"].voxel
    with pytest.raises(SimulationInvariantError):
        sim._check_invariants()
