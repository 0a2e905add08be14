"""Heterogeneous UAV swarm inspection: voxel mapping, team/task assignment,
explore-inspect state machines under line-of-sight comms, and a deterministic simulator."""

from .world import Scenario, load_scenario
from .sim import MissionReport, Simulation, run

__all__ = ["Scenario", "load_scenario", "Simulation", "MissionReport", "run"]
__version__ = "0.1.0"
