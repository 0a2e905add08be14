import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from swarminspect.world import scenario_from_dict  # noqa: E402


def scene_dict(blocks=(), box_lo=(40, 40, 0), box_hi=(64, 64, 24), fleet=None, gcs=(10, 52, 2),
               defect_count=0, seed=1, config=None, name="test"):
    """Small single-box scenario description in the bundled file format."""
    center = [(a + b) / 2 for a, b in zip(box_lo, box_hi)]
    half = [(b - a) / 2 for a, b in zip(box_lo, box_hi)]
    if fleet is None:
        fleet = [{"name": "exd1", "role": "EXD", "start": [18, 50, 2]}]
    return {
        "name": name,
        "boxes": [{"id": 0, "center": center, "half_extents": half}],
        "model": {"resolution": 4.0, "blocks": [{"min": list(lo), "max": list(hi)} for lo, hi in blocks]},
        "defect_count": defect_count,
        "seed": seed,
        "gcs": list(gcs),
        "fleet": fleet,
        "config": dict(config or {}),
    }


def make_scene(**kw):
    return scenario_from_dict(scene_dict(**kw))


@pytest.fixture
def open_scene():
    return make_scene()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
