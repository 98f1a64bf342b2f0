"""Risk-based driving warning engine.

Fuses a graph-structured local map with vehicle states, probes longitudinal
velocity profiles and lateral lane-change paths, scores each candidate with
a survival-analysis cost (collision and curve risk minus utility and
comfort), and emits hysteresis-filtered driver advice: a target velocity and
a left / straight / right path choice.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .costs import BenefitParams, CostBreakdown, RiskParams, UncertaintyParams
from .geo import BodyPoint, GeoPoint, ProjectionConfig, WorldPoint, body_to_world, geodetic_to_world
from .motion import BlendSpec, ProbeConfig, TrajectorySample, VelocityProfile, blend_paths, roll_out, sample_profiles
from .planner import (
    Direction,
    HysteresisState,
    PlannerOutput,
    PlannerParams,
    SpeedAdvice,
    Warning,
    plan_cycle,
)
from .rldm import EntityState, MapGraph, Node, NodeLabel, Path, RelationLabel, load_map
from .sim import Scenario, World, load_scenario, make_gap_scenario, make_no_gap_scenario

__version__ = "0.1.0"

__all__ = [
    "BenefitParams",
    "BlendSpec",
    "BodyPoint",
    "CostBreakdown",
    "Direction",
    "EntityState",
    "GeoPoint",
    "HysteresisState",
    "KERNEL_BACKEND",
    "MapGraph",
    "Node",
    "NodeLabel",
    "Path",
    "PlannerOutput",
    "PlannerParams",
    "ProbeConfig",
    "ProjectionConfig",
    "RelationLabel",
    "RiskParams",
    "Scenario",
    "SpeedAdvice",
    "TrajectorySample",
    "UncertaintyParams",
    "VelocityProfile",
    "Warning",
    "World",
    "WorldPoint",
    "blend_paths",
    "body_to_world",
    "geodetic_to_world",
    "load_map",
    "load_scenario",
    "make_gap_scenario",
    "make_no_gap_scenario",
    "plan_cycle",
    "roll_out",
    "sample_profiles",
]
