"""Objective, gradient fidelity, and optimizer behavior."""

import numpy as np
import pytest

import diffbounce as db
from diffbounce.errors import ConfigError, NonFiniteError
from diffbounce.gradcheck import probe_gradient
from diffbounce.objective import LearningCurve
from diffbounce.sim import Vec2


def full_direct():
    return db.ContactConfig(model="direct", toi_position=True, toi_velocity=True)


def mini_scenario(steps=48, p1=(-1.0, -2.0), p2=(-1.0, -1.0), eps=0.01,
                  controls=(0.0, 3.0)):
    return db.ScenarioConfig(
        radius=0.2,
        initial_state=db.SystemState(Vec2(*p1), Vec2(*p2), Vec2(0.0, 0.0), Vec2(0.0, 0.0)),
        horizon=1.0, steps=steps, running_cost_weight=eps,
        initial_controls=np.tile(controls, (steps, 1)),
    )


class TestCosts:
    def test_terminal_cost_values(self):
        def state_with_p2(x, y):
            return db.SystemState(Vec2(0.0, 0.0), Vec2(x, y), Vec2(0.0, 0.0), Vec2(0.0, 0.0))
        assert db.terminal_cost(state_with_p2(0.0, 0.0)) == 0.0
        assert db.terminal_cost(state_with_p2(1.0, 0.0)) == 1.0
        assert db.terminal_cost(state_with_p2(-0.3, 0.4)) == pytest.approx(0.25, rel=1e-12)

    def test_running_cost_values(self):
        assert db.running_cost(Vec2(0.0, 0.0), 0.01) == 0.0
        assert db.running_cost(Vec2(0.0, 3.0), 0.01) == pytest.approx(0.09, rel=1e-12)

    def test_constant_control_contributes_closed_form_sum(self):
        # eps*||u||^2 summed over T=1 at u=(0,3): 0.01*9 = 0.09; Ball 2 sits
        # at the origin and nothing ever touches it.
        scenario = mini_scenario(steps=480, p1=(5.0, 5.0), p2=(0.0, 0.0))
        loss = db.objective(scenario, full_direct(), scenario.initial_controls)
        assert loss == pytest.approx(0.09, abs=1e-12)

    def test_zero_control_ball2_at_origin(self):
        scenario = mini_scenario(p1=(5.0, 5.0), p2=(0.0, 0.0), controls=(0.0, 0.0))
        assert db.objective(scenario, full_direct(), scenario.initial_controls) == 0.0


class TestObjective:
    def test_tracked_and_plain_agree_bitwise(self):
        scenario = db.scenario_single()
        contact = full_direct()
        plain = db.objective(scenario, contact, scenario.initial_controls)
        tracked, grad = db.objective_value_and_gradient(scenario, contact,
                                                        scenario.initial_controls)
        assert tracked == plain
        assert grad.shape == (480, 2)

    def test_gradient_is_exactly_zero_without_a_path(self):
        # eps = 0 and no contact: no control entry can reach the loss.
        scenario = mini_scenario(p1=(5.0, 5.0), p2=(0.0, 0.0), eps=0.0)
        grad = db.objective_gradient(scenario, full_direct(), scenario.initial_controls)
        assert np.all(grad == 0.0)

    def test_no_contact_gradient_matches_fd(self):
        # Without contact only the running cost reaches the loss; target
        # Ball 2's resting point so the constant terminal term cannot
        # swamp the finite differences.
        scenario = db.scenario_single()
        contact = full_direct()
        cfg = db.ObjectiveConfig(target=(-1.0, -1.0))
        rng = np.random.default_rng(3)
        controls = rng.normal(0.0, 0.3, size=(480, 2)) - [0.0, 0.5]
        assert db.rollout(scenario, contact, controls).events == []
        probes = probe_gradient(scenario, contact, controls, n_probes=5, h=1e-5,
                                seed=1, config=cfg)
        assert all(not p.branch_flip for p in probes)
        assert max(p.rel_error for p in probes) < 1e-6

    def test_contact_gradient_matches_fd_away_from_branch_flips(self):
        scenario = db.scenario_single()
        contact = full_direct()
        probes = probe_gradient(scenario, contact, scenario.initial_controls,
                                n_probes=8, h=1e-5, seed=2)
        clean = [p for p in probes if not p.branch_flip]
        assert clean
        assert max(p.rel_error for p in clean) < 1e-4


class TestOptimize:
    def test_best_iterate_is_returned(self):
        scenario = mini_scenario(steps=24)
        cfg = db.OptimizerConfig(learning_rate=5.0, iterations=12)
        res = db.optimize(scenario, full_direct(), None, cfg)
        assert res.loss == min(res.curve.losses)
        assert res.curve.losses[res.iteration] == res.loss
        assert len(res.curve.iterations) == 13

    def test_descent_from_converged_point_never_jumps(self):
        # With both TOI corrections and a small learning rate, restarting
        # from a converged iterate must not produce loss spikes.
        scenario = mini_scenario(steps=48)
        contact = full_direct()
        warm = db.optimize(scenario, contact, None,
                           db.OptimizerConfig(learning_rate=20.0, iterations=150))
        res = db.optimize(scenario, contact, None,
                          db.OptimizerConfig(learning_rate=1.0, iterations=30),
                          controls0=warm.controls)
        increases = np.diff(res.curve.losses)
        assert increases.max(initial=0.0) <= 1e-8

    def test_determinism(self):
        scenario = mini_scenario(steps=24)
        cfg = db.OptimizerConfig(learning_rate=5.0, iterations=10)
        r1 = db.optimize(scenario, full_direct(), None, cfg)
        r2 = db.optimize(scenario, full_direct(), None, cfg)
        assert r1.curve.losses == r2.curve.losses
        assert np.array_equal(r1.controls, r2.controls)

    def test_momentum_variant_descends(self):
        scenario = mini_scenario(steps=24)
        cfg = db.OptimizerConfig(method="momentum", learning_rate=2.0,
                                 momentum=0.9, iterations=40)
        res = db.optimize(scenario, full_direct(), None, cfg)
        assert res.loss < res.curve.losses[0]

    def test_non_finite_abort_carries_iteration(self):
        scenario = mini_scenario(steps=24)
        cfg = db.OptimizerConfig(learning_rate=1e200, iterations=5)
        with pytest.raises(NonFiniteError) as err:
            db.optimize(scenario, full_direct(), None, cfg)
        assert err.value.iteration >= 1

    def test_grad_tol_stops_early(self):
        scenario = mini_scenario(steps=24, p1=(5.0, 5.0), p2=(0.0, 0.0),
                                 controls=(0.0, 0.0))
        cfg = db.OptimizerConfig(learning_rate=1.0, iterations=50, grad_tol=1e-12)
        res = db.optimize(scenario, full_direct(), None, cfg)
        assert len(res.curve.iterations) == 1

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            db.OptimizerConfig(learning_rate=0.0)
        with pytest.raises(ConfigError):
            db.OptimizerConfig(iterations=0)
        with pytest.raises(ConfigError):
            db.OptimizerConfig(method="adam")
        with pytest.raises(ConfigError):
            db.ObjectiveConfig(eps=-1.0)

    def test_curve_iterations_strictly_increase(self):
        curve = LearningCurve()
        curve.record(0, 1.0, 0.1)
        curve.record(1, 0.9, 0.1)
        with pytest.raises(ValueError):
            curve.record(1, 0.8, 0.1)
