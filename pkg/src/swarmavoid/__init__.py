"""Vision-cone collision avoidance for 3D swarms.

Agents perceive partners through encounter prediction (time and distance of
closest approach) filtered by a vision cone, and react with gyroscopic
turning forces that steer without changing speed, combined with target
attraction, friction, optional velocity noise, and spherical obstacles. An
ensemble-averaged force field provides an independent oracle for the
pairwise sum.
"""

from .avoidance import (
    AvoidanceParams,
    PairInteraction,
    a_squared_growth_check,
    closest_visible_point,
    obstacle_force,
    pair_interaction,
    self_force,
)
from .dynamics import (
    AgentState,
    DiagnosticsRecord,
    ObstacleSpec,
    SimParams,
    SimulationAbort,
    TrajectoryLog,
    World,
    diagnostics_record,
    energy,
    rhs,
    run,
    step,
)
from .external import DampingNoise, PotentialSpec, external_force, potential_gradient, potential_value
from .geometry import AngleRates, LocalFrame, RelativePose, angle_rates, local_frame_of, relative_pose
from .meanfield import EmpiricalEnsemble, force_equivalence_report, omega_empirical
from .perception import (
    Encounter,
    InteractionSet,
    PerceptionParams,
    encounter,
    in_vision_cone,
    interaction_set,
)
from .scenarios import (
    ScenarioSpec,
    build_scenario,
    default_params,
    load_scenario,
    resolve_params,
    save_scenario,
    scenario_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "AngleRates",
    "AvoidanceParams",
    "DampingNoise",
    "DiagnosticsRecord",
    "EmpiricalEnsemble",
    "Encounter",
    "InteractionSet",
    "LocalFrame",
    "ObstacleSpec",
    "PairInteraction",
    "PerceptionParams",
    "PotentialSpec",
    "RelativePose",
    "ScenarioSpec",
    "SimParams",
    "SimulationAbort",
    "TrajectoryLog",
    "World",
    "a_squared_growth_check",
    "angle_rates",
    "build_scenario",
    "closest_visible_point",
    "default_params",
    "diagnostics_record",
    "encounter",
    "energy",
    "external_force",
    "force_equivalence_report",
    "in_vision_cone",
    "interaction_set",
    "load_scenario",
    "local_frame_of",
    "obstacle_force",
    "omega_empirical",
    "pair_interaction",
    "potential_gradient",
    "potential_value",
    "relative_pose",
    "resolve_params",
    "rhs",
    "run",
    "save_scenario",
    "scenario_to_json",
    "self_force",
    "step",
]
