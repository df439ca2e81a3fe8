"""Oscillatory feedback synthesis for bracket-generating control systems.

The package builds time-periodic feedback laws that stabilize a designated
block of coordinates for control-affine systems whose missing directions are
recovered by first-order Lie brackets.  It simulates the resulting closed
loop under sample-and-hold semantics, reports empirical decay rates, and
ships a leader-following specialization for driftless agents.
"""

from .errors import (
    BracketSteerError,
    DivergenceError,
    InvalidInputError,
    NonFiniteError,
    NumericError,
    RankDegeneracyError,
    ScenarioFormatError,
    SelectionShapeError,
    UnknownScenarioError,
)
from .formation import (
    FollowerAgent,
    FormationTrajectory,
    GainConditionRow,
    LeaderModel,
    follower_controller,
    follower_steering,
    formation_error,
    gain_condition_report,
    simulate_formation,
    simulate_leader,
)
from .library import (
    ROLLING_DISC,
    UNICYCLE,
    available_leader_fields,
    available_systems,
    leader_field,
    register_leader_field,
    register_system,
    system,
)
from .model import (
    PartitionedSystem,
    as_state,
    eval_field,
    finite_diff_jacobian,
    jacobian,
    lie_bracket,
)
from .scenarios import (
    ScenarioBundle,
    builtin_names,
    builtin_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_bundle,
)
from .simulate import (
    DecayReport,
    SampledTrajectory,
    SimConfig,
    averaged_reference,
    decay_report,
    default_substeps,
    default_t_final,
    epsilon_sweep,
    simulate_pi_epsilon,
)
from .synthesis import (
    BracketSelection,
    ControllerGains,
    RankCertificate,
    check_selection,
    control_value,
    extension_matrix,
    held_control,
    steering_coefficients,
    validate_selection,
)

__version__ = "0.1.0"

__all__ = [
    "BracketSteerError",
    "InvalidInputError",
    "SelectionShapeError",
    "ScenarioFormatError",
    "UnknownScenarioError",
    "NumericError",
    "NonFiniteError",
    "RankDegeneracyError",
    "DivergenceError",
    "PartitionedSystem",
    "as_state",
    "eval_field",
    "jacobian",
    "lie_bracket",
    "finite_diff_jacobian",
    "BracketSelection",
    "ControllerGains",
    "RankCertificate",
    "check_selection",
    "extension_matrix",
    "steering_coefficients",
    "control_value",
    "held_control",
    "validate_selection",
    "SimConfig",
    "SampledTrajectory",
    "DecayReport",
    "simulate_pi_epsilon",
    "averaged_reference",
    "decay_report",
    "epsilon_sweep",
    "default_t_final",
    "default_substeps",
    "FollowerAgent",
    "LeaderModel",
    "FormationTrajectory",
    "GainConditionRow",
    "follower_steering",
    "follower_controller",
    "simulate_formation",
    "simulate_leader",
    "formation_error",
    "gain_condition_report",
    "ROLLING_DISC",
    "UNICYCLE",
    "system",
    "register_system",
    "available_systems",
    "leader_field",
    "register_leader_field",
    "available_leader_fields",
    "ScenarioBundle",
    "builtin_scenario",
    "builtin_names",
    "load_scenario",
    "save_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
    "validate_bundle",
]
