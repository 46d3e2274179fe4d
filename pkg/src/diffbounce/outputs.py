"""Delimited output tables and the run-metadata document.

Every table is comma-separated with a single header line; schemas are part
of the public interface (the plotting component consumes them) and are
documented in the README.  The metadata document is JSON and embeds the
full run configuration, so a run can be reproduced from it alone.
"""

from __future__ import annotations

import csv
import json
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .gradcheck import ContinuitySweep, ProbeResult
from .objective import LearningCurve, ObjectiveConfig, OptimizerConfig
from .sim import ContactConfig, ScenarioConfig, Trajectory

TRAJECTORY_COLUMNS = ["step", "time", "p1x", "p1y", "v1x", "v1y",
                      "p2x", "p2y", "v2x", "v2y", "events"]
LEARNING_CURVE_COLUMNS = ["iteration", "loss", "grad_max_norm"]
CONTROLS_COLUMNS = ["step", "time", "ux", "uy"]
SNAPSHOT_COLUMNS = ["iteration", "step", "ux", "uy"]
ABLATION_COLUMNS = ["toi_position", "toi_velocity", "final_loss",
                    "best_iteration", "status", "analytical_loss"]
GRADCHECK_COLUMNS = ["step", "component", "adjoint", "fd", "rel_error", "branch_flip"]
CONTINUITY_COLUMNS = ["alpha", "step_on", "v2x_on", "v2y_on",
                      "step_off", "v2x_off", "v2y_off"]


def _fmt(x) -> str:
    """Full-precision decimal for floats; plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_rows(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_trajectory(path: Path, scenario: ScenarioConfig, traj: Trajectory) -> Path:
    """State table; row k is the state after step k-1, annotated with the
    contact events resolved during that step."""
    by_step: dict[int, list[str]] = {}
    for ev in traj.events:
        by_step.setdefault(ev.step, []).append(ev.pair)
    dt = scenario.dt
    rows = []
    for k, state in enumerate(traj.states):
        (p1, p2, v1, v2) = state.values()
        marks = ";".join(by_step.get(k - 1, []))
        rows.append([k, k * dt, p1[0], p1[1], v1[0], v1[1],
                     p2[0], p2[1], v2[0], v2[1], marks])
    return _write_rows(path, TRAJECTORY_COLUMNS, rows)


def write_learning_curve(path: Path, curve: LearningCurve) -> Path:
    rows = zip(curve.iterations, curve.losses, curve.grad_max_norms)
    return _write_rows(path, LEARNING_CURVE_COLUMNS, rows)


def write_controls(path: Path, scenario: ScenarioConfig, controls: np.ndarray) -> Path:
    dt = scenario.dt
    rows = [[i, i * dt, u[0], u[1]] for i, u in enumerate(np.asarray(controls))]
    return _write_rows(path, CONTROLS_COLUMNS, rows)


def write_snapshots(path: Path, snapshots: list[tuple[int, np.ndarray]]) -> Path:
    rows = []
    for iteration, controls in snapshots:
        for i, u in enumerate(np.asarray(controls)):
            rows.append([iteration, i, u[0], u[1]])
    return _write_rows(path, SNAPSHOT_COLUMNS, rows)


def write_ablation(path: Path, rows: list[dict]) -> Path:
    table = [[r["toi_position"], r["toi_velocity"], r["final_loss"],
              r["best_iteration"], r["status"], r["analytical_loss"]]
             for r in rows]
    return _write_rows(path, ABLATION_COLUMNS, table)


def write_gradcheck(path: Path, probes: list[ProbeResult]) -> Path:
    rows = [[p.step, p.component, p.adjoint, p.fd, p.rel_error, int(p.branch_flip)]
            for p in probes]
    return _write_rows(path, GRADCHECK_COLUMNS, rows)


def write_continuity(path: Path, sweep: ContinuitySweep) -> Path:
    rows = []
    for alpha, on, off in zip(sweep.alphas, sweep.on, sweep.off):
        rows.append([float(alpha), on.contact_step, on.v2[0], on.v2[1],
                     off.contact_step, off.v2[0], off.v2[1]])
    return _write_rows(path, CONTINUITY_COLUMNS, rows)


# ---------------------------------------------------------------------------
# Metadata
# ---------------------------------------------------------------------------

def scenario_to_mapping(scenario: ScenarioConfig) -> dict:
    s = scenario.initial_state
    controls = np.asarray(scenario.initial_controls)
    if controls.size and np.all(controls == controls[0]):
        control_doc = [float(controls[0, 0]), float(controls[0, 1])]
    else:
        control_doc = [[float(x), float(y)] for x, y in controls]
    doc = {
        "name": scenario.name,
        "radius": scenario.radius,
        "horizon": scenario.horizon,
        "steps": scenario.steps,
        "running_cost_weight": scenario.running_cost_weight,
        "wall": None if scenario.wall is None else {"level": scenario.wall.level},
        "initial": {
            "p1": list(s.p1.values()), "p2": list(s.p2.values()),
            "v1": list(s.v1.values()), "v2": list(s.v2.values()),
        },
        "initial_control": control_doc,
    }
    return doc


def contact_to_mapping(contact: ContactConfig) -> dict:
    return {
        "model": contact.model,
        "toi_position": contact.toi_position,
        "toi_velocity": contact.toi_velocity,
        "stiffness": contact.stiffness,
        "damping": contact.damping,
        "penetration_tol": contact.penetration_tol,
        "approach_tol": contact.approach_tol,
    }


@dataclass
class RunMetadata:
    subcommand: str
    scenario: ScenarioConfig
    contact: ContactConfig
    objective: ObjectiveConfig
    optimizer: OptimizerConfig | None = None
    seed: int = 0
    wall_clock_seconds: float = 0.0
    results: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def to_mapping(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "versions": {
                "diffbounce": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
            "argv": sys.argv,
            "seed": self.seed,
            "wall_clock_seconds": self.wall_clock_seconds,
            "scenario": scenario_to_mapping(self.scenario),
            "contact": contact_to_mapping(self.contact),
            "objective": {
                "eps": self.objective.eps,
                "target": list(self.objective.target),
            },
            "optimizer": None if self.optimizer is None else {
                "method": self.optimizer.method,
                "learning_rate": self.optimizer.learning_rate,
                "momentum": self.optimizer.momentum,
                "iterations": self.optimizer.iterations,
                "grad_tol": self.optimizer.grad_tol,
                "snapshot_every": self.optimizer.snapshot_every,
            },
            "results": self.results,
            "files": self.files,
        }


def write_metadata(path: Path, meta: RunMetadata) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(meta.to_mapping(), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path
