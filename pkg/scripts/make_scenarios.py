"""Regenerate the bundled scenario files under src/swarminspect/scenarios/."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "swarminspect" / "scenarios"


def box(i, lo, hi):
    center = [(a + b) / 2 for a, b in zip(lo, hi)]
    half = [(b - a) / 2 for a, b in zip(lo, hi)]
    return {"id": i, "center": center, "half_extents": half}


def block(lo, hi):
    return {"min": lo, "max": hi}


SCENARIOS = {
    "cube6.scn": {
        "name": "cube6",
        "boxes": [box(0, [40, 40, 0], [64, 64, 24])],
        "model": {"resolution": 4.0, "blocks": [block([48, 48, 0], [56, 56, 12])]},
        "defect_count": 40, "seed": 1,
        "gcs": [10, 52, 2],
        "fleet": [{"name": "exd1", "role": "EXD", "start": [18, 50, 2]},
                  {"name": "pgd1", "role": "PGD", "start": [18, 58, 2]}],
        "config": {},
    },
    "block12.scn": {
        "name": "block12",
        "boxes": [box(0, [40, 40, 0], [88, 88, 32])],
        "model": {"resolution": 4.0, "blocks": [
            block([52, 52, 0], [68, 60, 20]),
            block([52, 60, 0], [60, 76, 20]),
            block([52, 52, 20], [60, 60, 28]),
        ]},
        "defect_count": 80, "seed": 1,
        "gcs": [10, 64, 2],
        "fleet": [{"name": "exd1", "role": "EXD", "start": [18, 62, 2]},
                  {"name": "pgd1", "role": "PGD", "start": [18, 70, 2]}],
        "config": {},
    },
    "mbs_like.scn": {
        # three towers carrying a long sky deck, inside a 130 x 70 x 60 m box
        "name": "mbs_like",
        "boxes": [box(0, [20, 20, 0], [150, 90, 60])],
        "model": {"resolution": 4.0, "blocks": [
            block([44, 44, 0], [56, 64, 48]),
            block([80, 44, 0], [92, 64, 48]),
            block([116, 44, 0], [128, 64, 48]),
            block([36, 48, 48], [136, 60, 52]),
        ]},
        "defect_count": 200, "seed": 1,
        "gcs": [8, 56, 2],
        "fleet": [{"name": "exd1", "role": "EXD", "start": [2, 54, 2]},
                  {"name": "pgd1", "role": "PGD", "start": [-6, 54, 2]}],
        "config": {},
    },
    "occluded_gcs.scn": {
        # a tall wall hides the inspection box from the ground station
        "name": "occluded_gcs",
        "boxes": [box(0, [40, 8, 0], [64, 48, 24])],
        "model": {"resolution": 4.0, "blocks": [
            block([16, 0, 0], [20, 64, 32]),
            block([48, 20, 0], [56, 36, 16]),
        ]},
        "defect_count": 40, "seed": 3,
        "gcs": [6, 30, 2],
        "fleet": [{"name": "exd1", "role": "EXD", "start": [6, 22, 2]}],
        "config": {},
    },
    "three_box.scn": {
        "name": "three_box",
        "boxes": [
            box(0, [40, 0, 0], [64, 32, 16]),
            box(1, [80, 0, 0], [104, 24, 16]),
            box(2, [40, 56, 0], [72, 80, 16]),
        ],
        "model": {"resolution": 4.0, "blocks": [
            block([48, 12, 0], [56, 20, 8]),
            block([88, 8, 0], [96, 16, 12]),
            block([52, 64, 0], [60, 72, 8]),
        ]},
        "defect_count": 60, "seed": 2,
        "gcs": [8, 40, 2],
        "fleet": [
            {"name": "exd1", "role": "EXD", "start": [14, 30, 2]},
            {"name": "exd2", "role": "EXD", "start": [14, 50, 2]},
            {"name": "pgd1", "role": "PGD", "start": [6, 26, 2]},
            {"name": "pgd2", "role": "PGD", "start": [6, 34, 2]},
            {"name": "pgd3", "role": "PGD", "start": [6, 54, 2]},
        ],
        "config": {},
    },
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, data in SCENARIOS.items():
        (OUT / name).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
        print("wrote", OUT / name)


if __name__ == "__main__":
    main()
