"""Scenario builders, config-file parsing, and validation."""

import numpy as np
import pytest
import yaml

import diffbounce as db
from diffbounce.errors import ConfigError
from diffbounce.outputs import scenario_to_mapping
from diffbounce.scenarios import scenario_from_mapping
from diffbounce.sim import Vec2


class TestBuiltins:
    def test_single_values(self):
        sc = db.load_scenario("single")
        assert sc.radius == 0.2
        assert sc.initial_state.p1 == Vec2(-1.0, -2.0)
        assert sc.initial_state.p2 == Vec2(-1.0, -1.0)
        assert sc.initial_state.v1 == Vec2(0.0, 0.0)
        assert sc.wall is None
        assert (sc.horizon, sc.steps, sc.running_cost_weight) == (1.0, 480, 0.01)
        assert sc.dt == pytest.approx(1.0 / 480)
        assert np.all(sc.initial_controls == [0.0, 3.0])

    def test_multi_values(self):
        sc = db.load_scenario("multi")
        assert sc.initial_state.p1 == Vec2(0.25, -0.3)
        assert sc.initial_state.p2 == Vec2(-0.5, 0.6)
        assert sc.wall == db.Wall(level=1.0)
        assert (sc.horizon, sc.steps, sc.running_cost_weight) == (1.0, 480, 0.01)
        assert np.all(sc.initial_controls == [-3.5, 3.0])

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            db.load_scenario("nonexistent")


class TestFiles:
    def test_round_trip_through_mapping(self, tmp_path):
        for name in ("single", "multi"):
            sc = db.load_scenario(name)
            path = tmp_path / f"{name}.yaml"
            path.write_text(yaml.safe_dump(scenario_to_mapping(sc)))
            back = db.load_scenario(path)
            assert back.initial_state == sc.initial_state
            assert back.wall == sc.wall
            assert (back.radius, back.horizon, back.steps) == (sc.radius, sc.horizon, sc.steps)
            assert np.array_equal(back.initial_controls, sc.initial_controls)

    def test_zero_steps_rejected(self, tmp_path):
        doc = scenario_to_mapping(db.load_scenario("single"))
        doc["steps"] = 0
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ConfigError):
            db.load_scenario(path)

    def test_malformed_yaml_reports_location(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("scenario: [unclosed\n  radius: 0.2\n")
        with pytest.raises(ConfigError) as err:
            db.load_scenario(path)
        assert "line" in str(err.value)

    def test_missing_field_is_named(self, tmp_path):
        path = tmp_path / "missing.yaml"
        path.write_text(yaml.safe_dump({"radius": 0.2, "horizon": 1.0, "steps": 4}))
        with pytest.raises(ConfigError) as err:
            db.load_scenario(path)
        assert "initial" in str(err.value)

    def test_metadata_document_is_accepted(self):
        sc = db.load_scenario("multi")
        wrapped = {"subcommand": "optimize", "scenario": scenario_to_mapping(sc)}
        back = scenario_from_mapping(wrapped)
        assert back.initial_state == sc.initial_state
        assert back.name == "multi"

    def test_per_step_control_table(self, tmp_path):
        doc = scenario_to_mapping(db.load_scenario("single"))
        doc["steps"] = 3
        doc["initial_control"] = [[0.0, 1.0], [0.5, 2.0], [1.0, 3.0]]
        path = tmp_path / "table.yaml"
        path.write_text(yaml.safe_dump(doc))
        sc = db.load_scenario(path)
        assert sc.initial_controls.shape == (3, 2)
        assert sc.initial_controls[2, 1] == 3.0


class TestValidation:
    def test_initial_penetration_rejected(self):
        with pytest.raises(ConfigError):
            db.ScenarioConfig(
                radius=0.2,
                initial_state=db.SystemState(Vec2(0.0, 0.0), Vec2(0.1, 0.0),
                                             Vec2(0.0, 0.0), Vec2(0.0, 0.0)),
                horizon=1.0, steps=4, running_cost_weight=0.0,
            )

    def test_wall_penetration_rejected(self):
        with pytest.raises(ConfigError):
            db.ScenarioConfig(
                radius=0.2,
                initial_state=db.SystemState(Vec2(0.0, 0.95), Vec2(5.0, 0.0),
                                             Vec2(0.0, 0.0), Vec2(0.0, 0.0)),
                horizon=1.0, steps=4, running_cost_weight=0.0,
                wall=db.Wall(1.0),
            )

    def test_control_shape_checked(self):
        with pytest.raises(ConfigError):
            db.ScenarioConfig(
                radius=0.2,
                initial_state=db.SystemState(Vec2(0.0, 0.0), Vec2(5.0, 0.0),
                                             Vec2(0.0, 0.0), Vec2(0.0, 0.0)),
                horizon=1.0, steps=4, running_cost_weight=0.0,
                initial_controls=np.zeros((3, 2)),
            )

    def test_contact_model_name_checked(self):
        with pytest.raises(ConfigError):
            db.ContactConfig(model="lcp")
