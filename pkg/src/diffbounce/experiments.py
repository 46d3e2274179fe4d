"""The four experiment entry points behind the CLI subcommands.

Each runner loads a scenario, executes its experiment, writes the delimited
tables plus one metadata document into the output directory, and returns an
`OutputBundle` with the in-memory results for tests and callers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import gradcheck as gc
from . import outputs as out
from .errors import ConfigError, DegeneracyError, DiffBounceError, NonFiniteError
from .objective import (
    ObjectiveConfig,
    OptimizerConfig,
    OptimizeResult,
    objective_with_trajectory,
    optimize,
)
from .scenarios import analytical_loss_for, load_scenario
from .sim import MODEL_DIRECT, ContactConfig, ScenarioConfig, Trajectory, rollout


@dataclass
class ExperimentSpec:
    """Everything one CLI invocation needs."""

    scenario: str | Path = "single"
    contact: ContactConfig = field(default_factory=ContactConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    out_dir: Path = Path("runs")
    seed: int = 0

    def load(self) -> ScenarioConfig:
        return load_scenario(self.scenario)


@dataclass
class OutputBundle:
    """Written files plus the in-memory objects they were rendered from."""

    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)
    scenario: ScenarioConfig | None = None
    trajectory: Trajectory | None = None
    result: OptimizeResult | None = None
    ablation: list[dict] = field(default_factory=list)
    probes: list = field(default_factory=list)
    probes_nocontact: list = field(default_factory=list)
    sweeps: dict = field(default_factory=dict)
    metadata: out.RunMetadata | None = None


def _finish(bundle: OutputBundle, meta: out.RunMetadata, started: float) -> OutputBundle:
    meta.wall_clock_seconds = time.perf_counter() - started
    meta.files = {k: str(v) for k, v in bundle.files.items()}
    bundle.files["metadata"] = out.write_metadata(bundle.out_dir / "run_metadata.json", meta)
    bundle.metadata = meta
    return bundle


def run_simulate(spec: ExperimentSpec) -> OutputBundle:
    """Roll out the scenario's initial controls and emit the state table."""
    started = time.perf_counter()
    scenario = spec.load()
    traj = rollout(scenario, spec.contact, scenario.initial_controls)
    bundle = OutputBundle(out_dir=Path(spec.out_dir), scenario=scenario, trajectory=traj)
    bundle.files["trajectory"] = out.write_trajectory(
        bundle.out_dir / "trajectory.csv", scenario, traj)
    meta = out.RunMetadata(
        subcommand="simulate", scenario=scenario, contact=spec.contact,
        objective=spec.objective, optimizer=None, seed=spec.seed,
        results={"events": [[e.step, e.pair, e.time] for e in traj.events]},
    )
    return _finish(bundle, meta, started)


def run_optimize(spec: ExperimentSpec) -> OutputBundle:
    """Optimize the control sequence and emit curve, controls, trajectory."""
    started = time.perf_counter()
    scenario = spec.load()
    result = optimize(scenario, spec.contact, spec.objective, spec.optimizer)
    _, traj = objective_with_trajectory(scenario, spec.contact, result.controls,
                                        spec.objective)
    bundle = OutputBundle(out_dir=Path(spec.out_dir), scenario=scenario,
                          trajectory=traj, result=result)
    d = bundle.out_dir
    bundle.files["learning_curve"] = out.write_learning_curve(
        d / "learning_curve.csv", result.curve)
    bundle.files["controls"] = out.write_controls(d / "controls.csv", scenario,
                                                  result.controls)
    bundle.files["snapshots"] = out.write_snapshots(d / "controls_snapshots.csv",
                                                    result.curve.snapshots)
    bundle.files["trajectory"] = out.write_trajectory(d / "trajectory.csv", scenario, traj)
    meta = out.RunMetadata(
        subcommand="optimize", scenario=scenario, contact=spec.contact,
        objective=spec.objective, optimizer=spec.optimizer, seed=spec.seed,
        results={
            "best_loss": result.loss,
            "best_iteration": result.iteration,
            "final_loss": result.final_loss,
            "analytical_loss": analytical_loss_for(scenario),
            "events_at_best": [[e.step, e.pair, e.time] for e in traj.events],
        },
    )
    return _finish(bundle, meta, started)


def run_ablation(spec: ExperimentSpec) -> OutputBundle:
    """2x2 TOI-flag grid under one optimizer config, direct model only."""
    started = time.perf_counter()
    if spec.contact.model != MODEL_DIRECT:
        raise ConfigError("the ablation grid applies to the direct impulse model")
    scenario = spec.load()
    analytical = analytical_loss_for(scenario)
    bundle = OutputBundle(out_dir=Path(spec.out_dir), scenario=scenario)
    rows = []
    for tp in (False, True):
        for tv in (False, True):
            cell = replace(spec.contact, toi_position=tp, toi_velocity=tv)
            cell_dir = bundle.out_dir / f"toi_position_{int(tp)}_toi_velocity_{int(tv)}"
            row = {"toi_position": int(tp), "toi_velocity": int(tv),
                   "final_loss": float("nan"), "best_iteration": -1,
                   "status": "ok",
                   "analytical_loss": analytical if analytical is not None else float("nan")}
            try:
                result = optimize(scenario, cell, spec.objective, spec.optimizer)
                row["final_loss"] = result.loss
                row["best_iteration"] = result.iteration
                out.write_learning_curve(cell_dir / "learning_curve.csv", result.curve)
                out.write_controls(cell_dir / "controls.csv", scenario, result.controls)
            except DegeneracyError as err:
                row["status"] = f"degenerate@step{err.step_index}"
            except NonFiniteError as err:
                row["status"] = f"non-finite@iter{err.iteration}"
            rows.append(row)
    bundle.ablation = rows
    bundle.files["ablation"] = out.write_ablation(bundle.out_dir / "ablation.csv", rows)
    meta = out.RunMetadata(
        subcommand="ablate", scenario=scenario, contact=spec.contact,
        objective=spec.objective, optimizer=spec.optimizer, seed=spec.seed,
        results={"table": rows},
    )
    return _finish(bundle, meta, started)


def no_contact_controls(scenario: ScenarioConfig, contact: ContactConfig,
                        seed: int = 0) -> np.ndarray:
    """Random controls whose rollout provably encounters no contact.

    Draws mild noise biased away from the other ball (and the wall) and
    shrinks it until the rollout is event-free.
    """
    rng = np.random.default_rng(seed)
    p1, p2 = scenario.initial_state.p1, scenario.initial_state.p2
    toward = np.array([p2.x - p1.x, p2.y - p1.y])
    toward /= max(float(np.hypot(*toward)), 1e-12)
    controls = rng.normal(0.0, 0.3, size=(scenario.steps, 2)) - 0.5 * toward
    for _ in range(6):
        traj = rollout(scenario, contact, controls)
        if not traj.events:
            return controls
        controls = controls * 0.5
    raise DiffBounceError("could not construct a contact-free control sequence")


def run_gradcheck(spec: ExperimentSpec, n_probes: int = 20,
                  fd_step: float = 1e-5) -> OutputBundle:
    """Adjoint-vs-FD probe tables plus the contact-continuity sweeps."""
    started = time.perf_counter()
    if spec.contact.model != MODEL_DIRECT:
        raise ConfigError("gradient checks run against the direct impulse model")
    scenario = spec.load()
    bundle = OutputBundle(out_dir=Path(spec.out_dir), scenario=scenario)
    d = bundle.out_dir

    probes = gc.probe_gradient(scenario, spec.contact, scenario.initial_controls,
                               n_probes=n_probes, h=fd_step, seed=spec.seed,
                               config=spec.objective)
    bundle.probes = probes
    bundle.files["gradcheck"] = out.write_gradcheck(d / "gradcheck.csv", probes)

    # No-contact regime: only the running cost depends on the controls, so
    # aim the terminal target at Ball 2's start to cancel the constant
    # terminal term; otherwise it dominates the loss and drowns the tiny
    # per-entry gradients in finite-difference roundoff.
    quiet = no_contact_controls(scenario, spec.contact, seed=spec.seed)
    quiet_objective = ObjectiveConfig(
        eps=spec.objective.eps,
        target=scenario.initial_state.p2.values(),
    )
    probes_nc = gc.probe_gradient(scenario, spec.contact, quiet,
                                  n_probes=n_probes, h=fd_step, seed=spec.seed,
                                  config=quiet_objective)
    bundle.probes_nocontact = probes_nc
    bundle.files["gradcheck_nocontact"] = out.write_gradcheck(
        d / "gradcheck_nocontact.csv", probes_nc)

    base, direction = gc.default_sweep_family(scenario)
    coarse = gc.continuity_sweep(scenario, spec.contact, base, direction, spacing=1e-4)
    center = coarse.flip_center()
    fine = gc.continuity_sweep(scenario, spec.contact, base, direction,
                               spacing=1e-5, center=center)
    bundle.sweeps = {"coarse": coarse, "fine": fine}
    bundle.files["continuity_coarse"] = out.write_continuity(
        d / "continuity_coarse.csv", coarse)
    bundle.files["continuity_fine"] = out.write_continuity(
        d / "continuity_fine.csv", fine)

    clean = [p.rel_error for p in probes if not p.branch_flip]
    clean_nc = [p.rel_error for p in probes_nc if not p.branch_flip]
    meta = out.RunMetadata(
        subcommand="gradcheck", scenario=scenario, contact=spec.contact,
        objective=spec.objective, optimizer=None, seed=spec.seed,
        results={
            "max_rel_error_contact": max(clean) if clean else None,
            "max_rel_error_nocontact": max(clean_nc) if clean_nc else None,
            "flagged_probes": sum(p.branch_flip for p in probes),
            "off_jump_coarse": coarse.off_jump(),
            "on_max_adjacent_coarse": coarse.on_max_adjacent(),
            "on_max_adjacent_fine": fine.on_max_adjacent(),
        },
    )
    return _finish(bundle, meta, started)
