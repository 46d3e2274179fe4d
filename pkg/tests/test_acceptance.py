"""Acceptance suite: one pass/fail line per criterion.

Runs the full experiments under the frozen optimizer configuration; the
heavyweight optimization runs are shared through the session run cache.
Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
"""

import numpy as np
import pytest

import diffbounce as db
from diffbounce import gradcheck as gc
from diffbounce.experiments import no_contact_controls
from diffbounce.scenarios import ANALYTICAL_LOSS

FULL = dict(model="direct", toi_position=True, toi_velocity=True)


def check(tag: str, ok: bool, detail: str):
    print(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{tag}: {detail}"


def full_contact():
    return db.ContactConfig(**FULL)


class TestA1SingleCollisionConvergence:
    def test_a1(self, run_cache):
        result, seconds = run_cache.get("single", **FULL)
        ok = result.loss <= 0.325 and seconds < 120.0
        check("A1", ok,
              f"single-collision final loss {result.loss:.4f} <= 0.325 "
              f"(analytical 0.3115, paper 0.3151) in {seconds:.0f}s < 120s")


class TestA2MultiCollisionConvergence:
    def test_a2(self, run_cache):
        result, seconds = run_cache.get("multi", **FULL)
        ok = result.loss <= 0.39 and seconds < 180.0
        check("A2", ok,
              f"multiple-collision final loss {result.loss:.4f} <= 0.39 "
              f"(analytical 0.3737, paper 0.3785) in {seconds:.0f}s < 180s")


class TestA3AblationOrdering:
    def test_a3(self, run_cache):
        details = []
        ok = True
        for name in ("single", "multi"):
            losses = {}
            for tp in (False, True):
                for tv in (False, True):
                    result, _ = run_cache.get(name, "direct", tp, tv)
                    losses[(tp, tv)] = result.loss
            full = losses[(True, True)]
            others = {k: v for k, v in losses.items() if k != (True, True)}
            ok &= all(v >= 1.05 * full for v in others.values())
            ok &= full == min(losses.values())
            analytical = ANALYTICAL_LOSS[name]
            ok &= full <= 1.05 * analytical
            ok &= all(v >= 1.05 * analytical for v in others.values())
            cells = ", ".join(f"({int(tp)},{int(tv)})={v:.4f}"
                              for (tp, tv), v in sorted(losses.items()))
            details.append(f"{name}: {cells}")
        check("A3", ok, "(1,1) strictly smallest, every other cell >= 5% above "
              "it and the analytical loss; " + "; ".join(details))


class TestA4GradientFidelity:
    def test_a4(self):
        scenario = db.scenario_single()
        contact = full_contact()

        quiet = no_contact_controls(scenario, contact, seed=0)
        quiet_cfg = db.ObjectiveConfig(target=scenario.initial_state.p2.values())
        probes_nc = gc.probe_gradient(scenario, contact, quiet, n_probes=20,
                                      h=1e-5, seed=0, config=quiet_cfg)
        worst_nc = max(p.rel_error for p in probes_nc)

        probes_c = gc.probe_gradient(scenario, contact, scenario.initial_controls,
                                     n_probes=20, h=1e-5, seed=0)
        clean = [p for p in probes_c if not p.branch_flip]
        worst_c = max(p.rel_error for p in clean)

        ok = (len(probes_nc) >= 20 and worst_nc < 1e-6
              and len(clean) >= 10 and worst_c < 1e-4)
        check("A4", ok,
              f"no-contact: {len(probes_nc)} probes, max rel err {worst_nc:.2e} < 1e-6; "
              f"contact: {len(clean)}/{len(probes_c)} non-flipping probes, "
              f"max rel err {worst_c:.2e} < 1e-4")


class TestA5ContinuityOfTheFix:
    def test_a5(self):
        scenario = db.scenario_single()
        contact = full_contact()
        base, direction = gc.default_sweep_family(scenario)
        coarse = gc.continuity_sweep(scenario, contact, base, direction, spacing=1e-4)
        fine = gc.continuity_sweep(scenario, contact, base, direction,
                                   spacing=1e-5, center=coarse.flip_center())
        off_jump = coarse.off_jump()
        on_coarse = coarse.on_max_adjacent()
        on_fine = fine.on_max_adjacent()
        ok = off_jump >= 10.0 * on_coarse and on_fine <= 0.2 * on_coarse
        check("A5", ok,
              f"off jump {off_jump:.2e} >= 10x on max-adjacent {on_coarse:.2e} "
              f"at da=1e-4; 10x refinement shrinks it to {on_fine:.2e} "
              f"({on_fine / on_coarse:.2f}x)")


class TestA6PhysicsInvariants:
    def test_a6(self, run_cache):
        worst_p = worst_ke = worst_speed = worst_rewind = 0.0
        n_events = 0
        for name in ("single", "multi"):
            scenario = db.load_scenario(name)
            controls = [scenario.initial_controls,
                        run_cache.get(name, **FULL)[0].controls]
            for u in controls:
                traj = db.rollout(scenario, full_contact(), u)
                for ev in traj.events:
                    n_events += 1
                    if ev.pair == "ball-ball":
                        (a1, a2), (b1, b2) = ev.v_before, ev.v_after
                        dp = max(abs(a1[0] + a2[0] - b1[0] - b2[0]),
                                 abs(a1[1] + a2[1] - b1[1] - b2[1]))
                        scale = max(np.hypot(*a1), np.hypot(*a2), 1e-30)
                        worst_p = max(worst_p, dp / scale)
                        ke_in = np.dot(a1, a1) + np.dot(a2, a2)
                        ke_out = np.dot(b1, b1) + np.dot(b2, b2)
                        worst_ke = max(worst_ke, abs(ke_out - ke_in) / ke_in)
                    else:
                        (a1, _), (b1, _) = ev.v_before, ev.v_after
                        worst_speed = max(worst_speed,
                                          abs(np.hypot(*b1) - np.hypot(*a1)) / np.hypot(*a1))
                    if ev.rewind_gap is not None:
                        worst_rewind = max(worst_rewind, ev.rewind_gap)
        ok = (n_events >= 4 and worst_p <= 1e-12 and worst_ke <= 1e-12
              and worst_speed <= 1e-12 and worst_rewind <= 1e-9)
        check("A6", ok,
              f"{n_events} resolved events: momentum {worst_p:.1e}, "
              f"energy {worst_ke:.1e}, wall speed {worst_speed:.1e} (<= 1e-12); "
              f"TOI rewind gap {worst_rewind:.1e} <= 1e-9")


class TestA7BaselineFailure:
    def test_a7(self, run_cache):
        ok = True
        details = []
        for name in ("single", "multi"):
            analytical = ANALYTICAL_LOSS[name]
            for label, key in (
                ("direct-no-flags", ("direct", False, False)),
                ("compliant", ("compliant", False, False)),
                ("pbd", ("pbd", False, False)),
            ):
                result, _ = run_cache.get(name, *key)
                above = result.loss / analytical - 1.0
                ok &= result.loss >= 1.05 * analytical
                details.append(f"{name}/{label}={result.loss:.4f} (+{above:.0%})")
        check("A7", ok, "all baselines terminate >= 5% above analytical: "
              + ", ".join(details))
