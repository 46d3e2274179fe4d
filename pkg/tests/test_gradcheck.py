"""Finite-difference harness and continuity sweep mechanics."""

import numpy as np
import pytest

import diffbounce as db
from diffbounce import gradcheck as gc
from diffbounce.experiments import no_contact_controls


def full_direct():
    return db.ContactConfig(model="direct", toi_position=True, toi_velocity=True)


class TestBranchSignatures:
    def test_signature_tracks_resolved_events(self):
        sc = db.scenario_multi()
        traj = db.rollout(sc, full_direct(), sc.initial_controls)
        sig = gc.branch_signature(traj)
        assert len(sig) == 3
        assert sig[0][1] == "ball-ball"

    def test_probe_near_shift_is_flagged(self):
        # Position the base controls right at a contact-timestep shift: the
        # +-h stencil then lands in different branches and must be flagged.
        sc = db.scenario_single()
        contact = full_direct()
        base, direction = gc.default_sweep_family(sc)
        center = gc.find_contact_shift(sc, contact, base, direction)
        controls = base + center * direction
        flagged = []
        for step in (100, 200, 300):
            _, flipped = gc.fd_entry(sc, contact, controls, step, 1, h=2e-3)
            flagged.append(flipped)
        assert any(flagged)

    def test_far_from_shift_not_flagged(self):
        sc = db.scenario_single()
        _, flipped = gc.fd_entry(sc, full_direct(), sc.initial_controls, 10, 0, h=1e-5)
        assert not flipped


class TestProbeGradient:
    def test_probe_count_and_determinism(self):
        sc = db.scenario_single()
        p1 = gc.probe_gradient(sc, full_direct(), sc.initial_controls, n_probes=6, seed=5)
        p2 = gc.probe_gradient(sc, full_direct(), sc.initial_controls, n_probes=6, seed=5)
        assert len(p1) == 6
        assert p1 == p2

    def test_no_contact_controls_are_event_free(self):
        for name in ("single", "multi"):
            sc = db.load_scenario(name)
            controls = no_contact_controls(sc, full_direct(), seed=0)
            assert db.rollout(sc, full_direct(), controls).events == []


@pytest.fixture(scope="module")
def sweep():
    sc = db.scenario_single()
    return gc.continuity_sweep(sc, full_direct(), spacing=1e-4, half_width=8)


class TestContinuitySweep:

    def test_window_straddles_exactly_one_shift(self, sweep):
        steps = [p.contact_step for p in sweep.off]
        changes = sum(a != b for a, b in zip(steps, steps[1:]))
        assert changes == 1
        assert all(s >= 0 for s in steps)

    def test_off_jumps_on_does_not(self, sweep):
        assert sweep.off_jump() >= 10 * sweep.on_max_adjacent()

    def test_flip_center_is_inside_window(self, sweep):
        center = sweep.flip_center()
        assert sweep.alphas[0] < center < sweep.alphas[-1]

    def test_on_and_off_flip_at_same_alpha(self, sweep):
        on_steps = [p.contact_step for p in sweep.on]
        off_steps = [p.contact_step for p in sweep.off]
        assert on_steps == off_steps
