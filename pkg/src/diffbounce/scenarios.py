"""Built-in experiment scenarios and scenario-file loading."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .sim import ScenarioConfig, SystemState, Vec2, Wall

BUILTIN_NAMES = ("single", "multi")

# Optimal losses of the continuous-time problems, used as plot overlays and
# convergence targets for the two built-in scenarios.
ANALYTICAL_LOSS = {"single": 0.3115, "multi": 0.3737}


def _constant_controls(steps: int, u: tuple[float, float]) -> np.ndarray:
    return np.tile(np.asarray(u, dtype=float), (steps, 1))


def scenario_single() -> ScenarioConfig:
    """One ball-ball strike: push Ball 1 up into Ball 2."""
    return ScenarioConfig(
        radius=0.2,
        initial_state=SystemState(
            p1=Vec2(-1.0, -2.0), p2=Vec2(-1.0, -1.0),
            v1=Vec2(0.0, 0.0), v2=Vec2(0.0, 0.0),
        ),
        horizon=1.0,
        steps=480,
        running_cost_weight=0.01,
        wall=None,
        initial_controls=_constant_controls(480, (0.0, 3.0)),
        name="single",
    )


def scenario_multi() -> ScenarioConfig:
    """Multiple collisions, including a bounce off the wall at y = 1."""
    return ScenarioConfig(
        radius=0.2,
        initial_state=SystemState(
            p1=Vec2(0.25, -0.3), p2=Vec2(-0.5, 0.6),
            v1=Vec2(0.0, 0.0), v2=Vec2(0.0, 0.0),
        ),
        horizon=1.0,
        steps=480,
        running_cost_weight=0.01,
        wall=Wall(level=1.0),
        initial_controls=_constant_controls(480, (-3.5, 3.0)),
        name="multi",
    )


def _field(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required field {key!r}")
    return mapping[key]


def _pair(value, context: str) -> tuple[float, float]:
    try:
        x, y = value
        return float(x), float(y)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{context}: expected a pair of numbers, got {value!r}") from err


def scenario_from_mapping(doc: dict, name: str = "custom") -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed key/value document."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a mapping")
    if "scenario" in doc and isinstance(doc["scenario"], dict):
        doc = doc["scenario"]  # accept run-metadata documents directly
    if isinstance(doc.get("name"), str):
        name = doc["name"]

    initial = _field(doc, "initial", "scenario")
    if not isinstance(initial, dict):
        raise ConfigError("scenario.initial: expected a mapping")
    state = SystemState(
        p1=Vec2(*_pair(_field(initial, "p1", "scenario.initial"), "scenario.initial.p1")),
        p2=Vec2(*_pair(_field(initial, "p2", "scenario.initial"), "scenario.initial.p2")),
        v1=Vec2(*_pair(initial.get("v1", (0.0, 0.0)), "scenario.initial.v1")),
        v2=Vec2(*_pair(initial.get("v2", (0.0, 0.0)), "scenario.initial.v2")),
    )

    wall = None
    if doc.get("wall") is not None:
        wdoc = doc["wall"]
        if isinstance(wdoc, dict):
            wall = Wall(level=float(_field(wdoc, "level", "scenario.wall")))
        else:
            try:
                wall = Wall(level=float(wdoc))
            except (TypeError, ValueError) as err:
                raise ConfigError("scenario.wall: expected a level") from err

    try:
        steps = int(_field(doc, "steps", "scenario"))
        horizon = float(_field(doc, "horizon", "scenario"))
        radius = float(_field(doc, "radius", "scenario"))
        eps = float(doc.get("running_cost_weight", 0.0))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"scenario: malformed numeric field ({err})") from err

    raw_u = doc.get("initial_control", (0.0, 0.0))
    arr = np.asarray(raw_u, dtype=float)
    if arr.ndim == 1:
        controls = _constant_controls(max(steps, 1), _pair(raw_u, "scenario.initial_control"))
    elif arr.ndim == 2 and arr.shape[1] == 2:
        controls = arr
    else:
        raise ConfigError("scenario.initial_control: expected [x, y] or a list of N pairs")

    return ScenarioConfig(
        radius=radius, initial_state=state, horizon=horizon, steps=steps,
        running_cost_weight=eps, wall=wall, initial_controls=controls, name=name,
    )


def load_scenario(name_or_path: str | Path) -> ScenarioConfig:
    """Resolve a built-in scenario name or parse a scenario config file.

    Files are YAML (JSON is a YAML subset); a run-metadata document is
    accepted and unwrapped via its `scenario` block.
    """
    text = str(name_or_path)
    if text == "single":
        return scenario_single()
    if text == "multi":
        return scenario_multi()
    path = Path(name_or_path)
    if not path.exists():
        raise ConfigError(
            f"unknown scenario {text!r}: not a built-in name ({', '.join(BUILTIN_NAMES)}) "
            "and no such file"
        )
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: parse error: {err}") from err
    return scenario_from_mapping(doc, name=path.stem)


def analytical_loss_for(scenario: ScenarioConfig) -> float | None:
    return ANALYTICAL_LOSS.get(scenario.name)
