"""Differentiable two-ball contact simulation and optimal control."""

from .adjoint import DiffValue, GradientMap, Tape, backward, lift, square, sqrt, value_of
from .errors import (
    ConfigError,
    DegeneracyError,
    DiffBounceError,
    NonFiniteError,
    UsageError,
)
from .objective import (
    LearningCurve,
    ObjectiveConfig,
    OptimizeResult,
    OptimizerConfig,
    objective,
    objective_gradient,
    objective_value_and_gradient,
    objective_with_trajectory,
    optimize,
    running_cost,
    terminal_cost,
)
from .scenarios import (
    ANALYTICAL_LOSS,
    analytical_loss_for,
    load_scenario,
    scenario_multi,
    scenario_single,
)
from .sim import (
    MODEL_COMPLIANT,
    MODEL_DIRECT,
    MODEL_PBD,
    PAIR_BALL1_WALL,
    PAIR_BALL2_WALL,
    PAIR_BALL_BALL,
    ContactConfig,
    ContactEvent,
    ScenarioConfig,
    SystemState,
    Trajectory,
    Vec2,
    Wall,
    collision_state,
    compute_toi,
    detect_penetration,
    integrate_candidate,
    resolve_elastic,
    rollout,
    step,
)

__version__ = "0.1.0"
