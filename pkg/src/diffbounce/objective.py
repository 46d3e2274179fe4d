"""Discrete optimal-control objective and first-order optimizer.

The objective is the terminal squared distance of Ball 2 from the target
plus a control-effort penalty accumulated with the left-endpoint rule:

    J(u) = ||p2(T) - target||^2 + sum_i eps * ||u_i||^2 * dt

Gradients come from the adjoint engine: the controls are lifted onto a
fresh tape, the rollout and cost are evaluated in tracked arithmetic, and
one reverse sweep yields dJ/du for every entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import adjoint as ad
from .adjoint import square, value_of
from .errors import ConfigError, NonFiniteError
from .sim import ContactConfig, ScenarioConfig, SystemState, Trajectory, Vec2, rollout


@dataclass(frozen=True)
class ObjectiveConfig:
    """Running-cost weight and terminal target.

    `eps` of None defers to the scenario's running-cost weight.
    """

    eps: float | None = None
    target: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.eps is not None and self.eps < 0:
            raise ConfigError("running-cost weight must be >= 0")

    def effective_eps(self, scenario: ScenarioConfig) -> float:
        return scenario.running_cost_weight if self.eps is None else self.eps


@dataclass(frozen=True)
class OptimizerConfig:
    """First-order method settings; defaults are the frozen repo config."""

    method: str = "gd"           # "gd" | "momentum"
    learning_rate: float = 50.0
    momentum: float = 0.9
    iterations: int = 1500
    grad_tol: float | None = None
    snapshot_every: int = 0      # 0: snapshot only the first and best iterate

    def __post_init__(self):
        if self.method not in ("gd", "momentum"):
            raise ConfigError(f"unknown optimizer method {self.method!r}")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be > 0")
        if self.iterations < 1:
            raise ConfigError("iteration budget must be >= 1")


@dataclass
class LearningCurve:
    """Per-iteration loss trace plus periodic control snapshots."""

    iterations: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    grad_max_norms: list[float] = field(default_factory=list)
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def record(self, iteration: int, loss: float, grad_max: float):
        if self.iterations and iteration <= self.iterations[-1]:
            raise ValueError("iteration indices must be strictly increasing")
        self.iterations.append(iteration)
        self.losses.append(loss)
        self.grad_max_norms.append(grad_max)


@dataclass
class OptimizeResult:
    controls: np.ndarray        # best-loss iterate
    loss: float
    iteration: int
    final_controls: np.ndarray
    final_loss: float
    curve: LearningCurve


def terminal_cost(state: SystemState, target=(0.0, 0.0)):
    """Squared distance of Ball 2 from the target point."""
    dx = state.p2.x - target[0]
    dy = state.p2.y - target[1]
    return square(dx) + square(dy)


def running_cost(u1: Vec2, eps: float):
    """Control-effort penalty eps * ||u||^2 for one step."""
    return (square(u1.x) + square(u1.y)) * eps


def _evaluate(scenario, contact, control_vecs, eps, target):
    """Shared tracked/untracked objective evaluation."""
    traj = rollout(scenario, contact, control_vecs)
    dt = scenario.dt
    acc = 0.0
    for u in control_vecs:
        acc = acc + running_cost(u, eps) * dt
    return acc + terminal_cost(traj.states[-1], target), traj


def objective(scenario: ScenarioConfig, contact: ContactConfig, controls,
              config: ObjectiveConfig | None = None) -> float:
    """Objective value in plain float arithmetic."""
    cfg = config or ObjectiveConfig()
    vecs = [Vec2(float(x), float(y)) for x, y in np.asarray(controls, dtype=float)]
    loss, _ = _evaluate(scenario, contact, vecs, cfg.effective_eps(scenario), cfg.target)
    return float(loss)


def objective_with_trajectory(scenario, contact, controls,
                              config: ObjectiveConfig | None = None) -> tuple[float, Trajectory]:
    cfg = config or ObjectiveConfig()
    vecs = [Vec2(float(x), float(y)) for x, y in np.asarray(controls, dtype=float)]
    loss, traj = _evaluate(scenario, contact, vecs, cfg.effective_eps(scenario), cfg.target)
    return float(loss), traj


def objective_value_and_gradient(scenario: ScenarioConfig, contact: ContactConfig,
                                 controls, config: ObjectiveConfig | None = None
                                 ) -> tuple[float, np.ndarray]:
    """Objective and its gradient w.r.t. every control entry, via one tape."""
    cfg = config or ObjectiveConfig()
    arr = np.asarray(controls, dtype=float)
    tape = ad.Tape()
    lifted = [Vec2(ad.lift(tape, x), ad.lift(tape, y)) for x, y in arr]
    loss, _ = _evaluate(scenario, contact, lifted, cfg.effective_eps(scenario), cfg.target)
    grads = ad.backward(tape, loss)
    out = np.empty_like(arr)
    for i, u in enumerate(lifted):
        out[i, 0] = grads[u.x]
        out[i, 1] = grads[u.y]
    return value_of(loss), out


def objective_gradient(scenario: ScenarioConfig, contact: ContactConfig, controls,
                       config: ObjectiveConfig | None = None) -> np.ndarray:
    """Gradient of the objective w.r.t. the (N, 2) control array."""
    _, grad = objective_value_and_gradient(scenario, contact, controls, config)
    return grad


def optimize(scenario: ScenarioConfig, contact: ContactConfig,
             objective_cfg: ObjectiveConfig | None = None,
             optimizer_cfg: OptimizerConfig | None = None,
             controls0: np.ndarray | None = None) -> OptimizeResult:
    """Gradient descent on the control sequence; returns the best iterate.

    The learning curve records the loss and gradient max-norm at every
    iterate, including the final one, so it has `iterations + 1` rows
    (fewer if the gradient-norm stop triggers).
    """
    obj_cfg = objective_cfg or ObjectiveConfig()
    opt_cfg = optimizer_cfg or OptimizerConfig()
    u = np.array(controls0 if controls0 is not None else scenario.initial_controls,
                 dtype=float, copy=True)
    if u.shape != (scenario.steps, 2):
        raise ConfigError(f"controls must have shape ({scenario.steps}, 2), got {u.shape}")

    curve = LearningCurve()
    velocity = np.zeros_like(u)
    best_loss = np.inf
    best_controls = u.copy()
    best_iteration = 0
    snap_every = opt_cfg.snapshot_every

    for k in range(opt_cfg.iterations + 1):
        loss, grad = objective_value_and_gradient(scenario, contact, u, obj_cfg)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"non-finite loss or gradient at iteration {k}", k)
        gmax = float(np.abs(grad).max())
        curve.record(k, loss, gmax)
        if snap_every and k % snap_every == 0:
            curve.snapshots.append((k, u.copy()))
        elif k == 0:
            curve.snapshots.append((0, u.copy()))
        if loss < best_loss:
            best_loss = loss
            best_controls = u.copy()
            best_iteration = k
        if k == opt_cfg.iterations or (opt_cfg.grad_tol is not None and gmax < opt_cfg.grad_tol):
            final_loss = loss
            break
        if opt_cfg.method == "momentum":
            velocity = opt_cfg.momentum * velocity + grad
            u = u - opt_cfg.learning_rate * velocity
        else:
            u = u - opt_cfg.learning_rate * grad

    curve.snapshots.append((best_iteration, best_controls.copy()))
    return OptimizeResult(
        controls=best_controls, loss=best_loss, iteration=best_iteration,
        final_controls=u, final_loss=final_loss, curve=curve,
    )
