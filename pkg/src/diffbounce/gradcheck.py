"""Finite-difference gradient probes and the contact-continuity sweep.

Central differences are the independent oracle for the adjoint engine.  A
probe is only meaningful when both displaced rollouts take the same contact
branches as the base rollout, so every probe records whether its stencil
flipped a branch (contact step, contact set, approach guard or TOI clamp).

The continuity sweep drives a one-parameter family of control sequences
across a contact-timestep shift and records Ball 2's post-collision
velocity: with the rewound-velocity correction the curve stays continuous
across the shift, without it the velocity jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DiffBounceError
from .objective import ObjectiveConfig, objective, objective_value_and_gradient
from .sim import PAIR_BALL_BALL, ContactConfig, ScenarioConfig, Trajectory, rollout


def branch_signature(traj: Trajectory) -> tuple:
    """Which contacts were resolved, when, and whether their TOI clamped."""
    return tuple((e.step, e.pair, e.clamped) for e in traj.events)


@dataclass(frozen=True)
class ProbeResult:
    step: int            # control entry index
    component: int       # 0 = x, 1 = y
    adjoint: float
    fd: float
    rel_error: float
    branch_flip: bool


def fd_entry(scenario: ScenarioConfig, contact: ContactConfig, controls: np.ndarray,
             step: int, component: int, h: float = 1e-5,
             config: ObjectiveConfig | None = None) -> tuple[float, bool]:
    """Central difference at one control entry plus a branch-flip flag."""
    base_sig = branch_signature(rollout(scenario, contact, controls))
    shifted = controls.copy()
    shifted[step, component] += h
    plus = objective(scenario, contact, shifted, config)
    sig_plus = branch_signature(rollout(scenario, contact, shifted))
    shifted[step, component] -= 2 * h
    minus = objective(scenario, contact, shifted, config)
    sig_minus = branch_signature(rollout(scenario, contact, shifted))
    flipped = not (base_sig == sig_plus == sig_minus)
    return (plus - minus) / (2.0 * h), flipped


def probe_gradient(scenario: ScenarioConfig, contact: ContactConfig, controls: np.ndarray,
                   n_probes: int = 20, h: float = 1e-5, seed: int = 0,
                   config: ObjectiveConfig | None = None) -> list[ProbeResult]:
    """Compare the adjoint gradient against central differences.

    Samples `n_probes` distinct control entries with the given seed.
    Relative error is measured against max(|fd|, 1e-12).
    """
    controls = np.asarray(controls, dtype=float)
    n = controls.shape[0]
    rng = np.random.default_rng(seed)
    picks = rng.choice(2 * n, size=min(n_probes, 2 * n), replace=False)
    _, grad = objective_value_and_gradient(scenario, contact, controls, config)
    results = []
    for flat in sorted(int(p) for p in picks):
        i, j = divmod(flat, 2)
        fd, flipped = fd_entry(scenario, contact, controls, i, j, h, config)
        adj = float(grad[i, j])
        rel = abs(adj - fd) / max(abs(fd), 1e-12)
        results.append(ProbeResult(step=i, component=j, adjoint=adj, fd=fd,
                                   rel_error=rel, branch_flip=flipped))
    return results


# ---------------------------------------------------------------------------
# Continuity sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    contact_step: int       # step index of the first ball-ball event (-1: none)
    v2: tuple[float, float]  # Ball 2 velocity right after that event


@dataclass
class ContinuitySweep:
    """Paired ON/OFF sweeps of Ball 2's post-collision velocity over alpha."""

    spacing: float
    alphas: np.ndarray
    on: list[SweepPoint]
    off: list[SweepPoint]

    def off_jump(self) -> float:
        """Velocity jump across the contact-step boundary, OFF configuration."""
        jump = 0.0
        for a, b in zip(self.off, self.off[1:]):
            if a.contact_step != b.contact_step:
                jump = max(jump, float(np.hypot(b.v2[0] - a.v2[0], b.v2[1] - a.v2[1])))
        return jump

    def on_max_adjacent(self) -> float:
        """Largest adjacent velocity difference, ON configuration."""
        worst = 0.0
        for a, b in zip(self.on, self.on[1:]):
            worst = max(worst, float(np.hypot(b.v2[0] - a.v2[0], b.v2[1] - a.v2[1])))
        return worst

    def flip_center(self) -> float | None:
        """Midpoint alpha of the contact-step boundary inside this sweep."""
        for a, b in zip(self.off, self.off[1:]):
            if a.contact_step != b.contact_step:
                return 0.5 * (a.alpha + b.alpha)
        return None


def _first_ball_ball(traj: Trajectory):
    for ev in traj.events:
        if ev.pair == PAIR_BALL_BALL:
            return ev
    return None


def _sweep_one(scenario, contact, base, direction, alphas) -> list[SweepPoint]:
    points = []
    for a in alphas:
        traj = rollout(scenario, contact, base + a * direction)
        ev = _first_ball_ball(traj)
        if ev is None:
            points.append(SweepPoint(alpha=float(a), contact_step=-1, v2=(np.nan, np.nan)))
        else:
            points.append(SweepPoint(alpha=float(a), contact_step=ev.step, v2=ev.v_after[1]))
    return points


def default_sweep_family(scenario: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """A control family that shifts the first contact across step boundaries.

    A constant sideways force makes the strike oblique (so the penetration
    direction genuinely changes when the contact step shifts) and alpha
    modulates the drive toward the other ball.
    """
    base = np.asarray(scenario.initial_controls, dtype=float).copy()
    if base.size == 0:
        raise DiffBounceError("scenario has no initial controls to sweep around")
    direction = np.zeros_like(base)
    p1, p2 = scenario.initial_state.p1, scenario.initial_state.p2
    toward = np.array([p2.x - p1.x, p2.y - p1.y], dtype=float)
    toward /= max(np.hypot(*toward), 1e-12)
    sideways = np.array([-toward[1], toward[0]])
    base += 0.5 * sideways        # constant oblique component
    direction[:] = toward          # alpha scales the approach drive
    return base, direction


def find_contact_shift(scenario: ScenarioConfig, contact: ContactConfig,
                       base: np.ndarray, direction: np.ndarray,
                       alpha_max: float = 0.05, scan_step: float = 2e-3,
                       tol: float = 1e-10) -> float:
    """Locate an alpha where the first contact's step index shifts.

    Scans coarsely for a bracket, then bisects it down to `tol` so callers
    can center arbitrarily narrow sweep windows on the shift.
    """
    grid = np.arange(0.0, alpha_max + scan_step, scan_step)
    pts = _sweep_one(scenario, contact, base, direction, grid)
    for a, b in zip(pts, pts[1:]):
        if a.contact_step != b.contact_step and a.contact_step >= 0 and b.contact_step >= 0:
            lo, lo_step = a.alpha, a.contact_step
            hi = b.alpha
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                (pt,) = _sweep_one(scenario, contact, base, direction, [mid])
                if pt.contact_step == lo_step:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    raise DiffBounceError(
        "no contact-timestep shift found in the sweep range; "
        "widen alpha_max or adjust the control family"
    )


def continuity_sweep(scenario: ScenarioConfig, contact: ContactConfig,
                     base: np.ndarray | None = None,
                     direction: np.ndarray | None = None,
                     spacing: float = 1e-4, half_width: int = 20,
                     center: float | None = None) -> ContinuitySweep:
    """Sweep Ball 2's post-collision velocity across a contact-step shift.

    Runs the same alpha grid with the rewound-velocity correction on and
    off (the position flag does not affect the recorded velocity).
    """
    if base is None or direction is None:
        base, direction = default_sweep_family(scenario)
    probe_contact = replace(contact, toi_position=True, toi_velocity=True)
    if center is None:
        center = find_contact_shift(scenario, probe_contact, base, direction)
    alphas = center + np.arange(-half_width, half_width + 1) * spacing
    on = _sweep_one(scenario, replace(probe_contact, toi_velocity=True), base, direction, alphas)
    off = _sweep_one(scenario, replace(probe_contact, toi_velocity=False), base, direction, alphas)
    return ContinuitySweep(spacing=spacing, alphas=alphas, on=on, off=off)
