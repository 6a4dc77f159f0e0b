"""Dwell-time UAV tour planning: Dubins roadmaps over visibility regions solved as GTSPs."""
from .dubins import Configuration, DubinsPath, dubins_shortest_path
from .mission import Mission, TargetSpec, UavParams, load_mission, parse_mission
from .planner import DiscreteInfeasible, MissionInfeasible, PlanResult, greedy_plan, plan
from .sampling import PRESETS, SpacingParams

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "DubinsPath",
    "dubins_shortest_path",
    "Mission",
    "TargetSpec",
    "UavParams",
    "load_mission",
    "parse_mission",
    "DiscreteInfeasible",
    "MissionInfeasible",
    "PlanResult",
    "greedy_plan",
    "plan",
    "PRESETS",
    "SpacingParams",
]
