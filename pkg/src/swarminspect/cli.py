"""Command-line entry point: run a scenario or sweep fleet sizes."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from .assignment import build_inspection_path
from .sim import MissionReport, Simulation, run
from .world import (EXD, PGD, FleetMember, Scenario, ScenarioError, load_scenario,
                    resolve_scenario_path, sample_defects, validate_scenario)

FLEET_RE = re.compile(r"^([0-9]+)E([0-9]+)P$")
EXIT_OK, EXIT_ERROR, EXIT_TIMEOUT = 0, 1, 2

log = logging.getLogger("swarminspect")


@dataclass(frozen=True)
class RunSpec:
    scenario: str
    seed: int | None = None
    max_ticks: int = 5000
    fleet: str | None = None
    out: str = "out"
    stride: int | None = None
    voxel_size: float | None = None

    def __post_init__(self):
        if self.fleet is not None:
            parse_fleet(self.fleet)


def parse_fleet(text: str) -> tuple[int, int]:
    m = FLEET_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad fleet string {text!r}; expected e.g. 2E3P")
    n_exd, n_pgd = int(m.group(1)), int(m.group(2))
    if n_exd < 1:
        raise ValueError("fleet: at least one EXD is required")
    return n_exd, n_pgd


def _team_sizes(n_exd: int, n_pgd: int) -> list[int]:
    return [n_pgd // n_exd + (1 if t < n_pgd % n_exd else 0) for t in range(n_exd)]


def with_fleet(sc: Scenario, fleet: str) -> Scenario:
    """Replace the fleet with ``fleet`` lined up beside the GCS.

    Slots run away from the first box along the dominant horizontal axis,
    two voxels apart. Each team occupies a block of slots with its EXD in the
    middle and one empty slot between blocks; bigger teams sit closer to the box.
    """
    n_exd, n_pgd = parse_fleet(fleet)
    vs = sc.config.voxel_size
    first = build_inspection_path(sc.boxes, sc.gcs)[0].enter
    away = [sc.gcs[0] - first[0], sc.gcs[1] - first[1]]
    axis = 0 if abs(away[0]) >= abs(away[1]) else 1
    sign = 1 if away[axis] >= 0 else -1
    base = [math.floor(c / vs) for c in sc.gcs]

    layout: list[str | None] = []
    for t, size in enumerate(_team_sizes(n_exd, n_pgd)):
        if t:
            layout.append(None)
        before = size // 2
        layout += [PGD] * before + [EXD] + [PGD] * (size - before)

    members = []
    counts = {EXD: 0, PGD: 0}
    for slot, role in enumerate(layout):
        if role is None:
            continue
        v = list(base)
        v[axis] += sign * 2 * (slot + 1)
        counts[role] += 1
        name = f"{role.lower()}{counts[role]}"
        start = tuple((c + 0.5) * vs for c in v)
        if sc.model.is_occupied_point(start):
            raise ScenarioError(f"fleet override: start slot for {name} is inside the structure")
        members.append(FleetMember(name, role, start))
    out = dataclasses.replace(sc, fleet=tuple(members))
    validate_scenario(out)
    return out


def prepare(spec: RunSpec) -> Scenario:
    sc = load_scenario(resolve_scenario_path(spec.scenario))
    cfg = sc.config
    if spec.stride is not None:
        cfg = dataclasses.replace(cfg, stride=spec.stride)
    if spec.voxel_size is not None:
        cfg = dataclasses.replace(cfg, voxel_size=spec.voxel_size)
    sc = dataclasses.replace(sc, config=cfg)
    if spec.seed is not None:
        n = len(sc.model.defects)
        model = dataclasses.replace(sc.model, defects=tuple(sample_defects(sc.model, n, spec.seed, sc.boxes)))
        sc = dataclasses.replace(sc, model=model)
    if spec.fleet is not None:
        sc = with_fleet(sc, spec.fleet)
    validate_scenario(sc)
    return sc


def execute(spec: RunSpec, out_dir: Path) -> MissionReport:
    sc = prepare(spec)
    sim = Simulation(sc)
    report = run(sc, spec.max_ticks, sim=sim)
    sim.write_outputs(out_dir, report)
    return report


def cmd_run(spec: RunSpec) -> int:
    report = execute(spec, Path(spec.out))
    status = "terminated" if report.terminated else "timed out"
    print(f"{report.scenario}: {status} at tick {report.ticks}, score {report.total_score:.3f}, "
          f"coverage {report.coverage_fraction:.3f}")
    return EXIT_OK if report.terminated else EXIT_TIMEOUT


def cmd_sweep(scenario: str, fleets: list[str], seeds: list[int | None], max_ticks: int,
              out: str, stride: int | None = None, voxel_size: float | None = None) -> int:
    if not fleets:
        raise ValueError("sweep needs at least one fleet")
    for f in fleets:
        parse_fleet(f)
    root = Path(out)
    rows = []
    all_done = True
    for fleet in fleets:
        for seed in seeds:
            spec = RunSpec(scenario, seed, max_ticks, fleet, out, stride, voxel_size)
            tag = f"{fleet}_seed{'default' if seed is None else seed}"
            report = execute(spec, root / tag)
            all_done &= report.terminated
            tick = report.completion_tick if report.terminated else ""
            rows.append([fleet, "" if seed is None else seed, f"{report.total_score:.6f}", tick])
            print(f"{fleet} seed={seed}: tick {report.ticks}, score {report.total_score:.3f}")
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fleet", "seed", "score", "completion_tick"])
        w.writerows(rows)
    return EXIT_OK if all_done else EXIT_TIMEOUT


def _csv_list(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swarminspect", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario_pos", nargs="?", metavar="SCENARIO",
                       help="scenario file or bundled scenario name")
        p.add_argument("--scenario", help="same as the positional argument")
        p.add_argument("--max-ticks", type=int, default=5000)
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--stride", type=int, default=None, help="inspection layer stride (default 3)")
        p.add_argument("--voxel-size", type=float, default=None)
        p.add_argument("-v", "--verbose", action="store_true")

    p_run = sub.add_parser("run", help="run one mission")
    common(p_run)
    p_run.add_argument("--fleet", help="fleet override such as 2E3P")
    p_run.add_argument("--seed", type=int, default=None, help="resample defects with this seed")

    p_sweep = sub.add_parser("sweep", help="run every fleet/seed combination")
    common(p_sweep)
    p_sweep.add_argument("--fleet", required=True, help="comma-separated fleets, e.g. 1E0P,1E1P")
    p_sweep.add_argument("--seed", default=None, help="comma-separated seeds")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    scenario = args.scenario or args.scenario_pos
    try:
        if scenario is None:
            raise ValueError("no scenario given")
        if args.max_ticks < 0:
            raise ValueError("--max-ticks must be >= 0")
        if args.command == "run":
            spec = RunSpec(scenario, args.seed, args.max_ticks, args.fleet, args.out,
                           args.stride, args.voxel_size)
            return cmd_run(spec)
        seeds = [int(s) for s in _csv_list(args.seed)] if args.seed else [None]
        return cmd_sweep(scenario, _csv_list(args.fleet), seeds, args.max_ticks, args.out,
                         args.stride, args.voxel_size)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
