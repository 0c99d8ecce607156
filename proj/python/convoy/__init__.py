import json

from ._core import (
    ActionTargets,
    ControlWeights,
    ConvoyError,
    DecisionAction,
    HighwayConfig,
    NeighborSet,
    Task,
    VehicleState,
    assign_escort_slots,
    compute_neighbors,
    cosine_similarity,
    decode_action,
    decode_decision,
    formation_velocity_command,
    pool_sizes,
    position_error,
)
from ._core import _run_scenario_json


def run_scenario(scenario, seed=0, density=None, max_sim_time=None):
    """Run one scenario with the oracle backend and return its summary as a dict."""
    return json.loads(_run_scenario_json(scenario, seed, density, max_sim_time))


__all__ = [
    "ActionTargets",
    "ControlWeights",
    "ConvoyError",
    "DecisionAction",
    "HighwayConfig",
    "NeighborSet",
    "Task",
    "VehicleState",
    "assign_escort_slots",
    "compute_neighbors",
    "cosine_similarity",
    "decode_action",
    "decode_decision",
    "formation_velocity_command",
    "pool_sizes",
    "position_error",
    "run_scenario",
]
