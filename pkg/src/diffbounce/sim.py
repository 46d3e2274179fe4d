"""Frictionless, perfectly elastic two-ball physics in 2D.

Symplectic Euler integration with three contact models:

* direct velocity impulse, with independently toggleable time-of-impact
  corrections (``toi_position`` rewinds and replays the position across the
  contact instant; ``toi_velocity`` resolves the impulse from the state and
  normal evaluated at the rewound instant instead of the penetrated ones);
* a compliant (penalty-force) model;
* position-based dynamics (projection).

All transition functions are pure and generic over the scalar type: plain
floats for simulation, `DiffValue`s for differentiation.  Branch decisions
(penetration tests, approach guards, TOI clamping) are always made on plain
forward values, so tracked and untracked rollouts take identical branches
and produce bit-identical trajectories.

Both balls have unit mass; only Ball 1 is actuated, so control forces are
accelerations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from . import adjoint as ad
from .adjoint import value_of
from .errors import ConfigError, DegeneracyError

COINCIDENT_TOL = 1e-12

PAIR_BALL_BALL = "ball-ball"
PAIR_BALL1_WALL = "ball1-wall"
PAIR_BALL2_WALL = "ball2-wall"

MODEL_DIRECT = "direct"
MODEL_COMPLIANT = "compliant"
MODEL_PBD = "pbd"


class Vec2(NamedTuple):
    """2D vector whose components are floats or tracked scalars."""

    x: Any
    y: Any

    def __add__(self, other):
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def __mul__(self, s):
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def dot(self, other):
        return self.x * other.x + self.y * other.y

    def values(self) -> tuple[float, float]:
        return (value_of(self.x), value_of(self.y))


class SystemState(NamedTuple):
    """Positions and velocities of the two balls at one time step."""

    p1: Vec2
    p2: Vec2
    v1: Vec2
    v2: Vec2

    def values(self) -> tuple:
        return tuple(v.values() for v in self)


@dataclass(frozen=True)
class Wall:
    """Infinite horizontal wall; balls live below `level`."""

    level: float

    def __post_init__(self):
        if not np.isfinite(self.level):
            raise ConfigError("wall level must be finite")


@dataclass(frozen=True)
class ContactConfig:
    """Contact model selector plus independent TOI correction flags."""

    model: str = MODEL_DIRECT
    toi_position: bool = False
    toi_velocity: bool = False
    stiffness: float = 1e5   # compliant spring constant, N/m
    damping: float = 0.0     # compliant damping, N*s/m
    penetration_tol: float = 1e-12
    approach_tol: float = 1e-9

    def __post_init__(self):
        if self.model not in (MODEL_DIRECT, MODEL_COMPLIANT, MODEL_PBD):
            raise ConfigError(f"unknown contact model {self.model!r}")
        if self.model != MODEL_DIRECT and (self.toi_position or self.toi_velocity):
            raise ConfigError("TOI flags are only meaningful for the direct impulse model")
        if self.model == MODEL_COMPLIANT:
            if self.stiffness <= 0:
                raise ConfigError("compliant stiffness must be > 0")
            if self.damping < 0:
                raise ConfigError("compliant damping must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, horizon and initial conditions of one experiment."""

    radius: float
    initial_state: SystemState
    horizon: float
    steps: int
    running_cost_weight: float
    wall: Optional[Wall] = None
    initial_controls: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    name: str = "custom"

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError("radius must be > 0")
        if self.steps < 1:
            raise ConfigError("step count must be >= 1")
        if self.horizon <= 0:
            raise ConfigError("horizon must be > 0")
        if self.running_cost_weight < 0:
            raise ConfigError("running-cost weight must be >= 0")
        flat = [c for v in self.initial_state for c in v]
        if not all(np.isfinite(c) for c in flat):
            raise ConfigError("initial state must be finite")
        p1, p2 = self.initial_state.p1, self.initial_state.p2
        gap = float(np.hypot(p2.x - p1.x, p2.y - p1.y)) - 2.0 * self.radius
        if gap < -COINCIDENT_TOL:
            raise ConfigError("initial balls must not penetrate")
        if self.wall is not None:
            for p in (p1, p2):
                if self.wall.level - p.y - self.radius < -COINCIDENT_TOL:
                    raise ConfigError("initial balls must not penetrate the wall")
        controls = np.asarray(self.initial_controls, dtype=float)
        if controls.size and controls.shape != (self.steps, 2):
            raise ConfigError(
                f"initial controls must have shape ({self.steps}, 2), got {controls.shape}"
            )
        object.__setattr__(self, "initial_controls", controls)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps


@dataclass(frozen=True)
class ContactEvent:
    """One resolved (or, for baselines, detected) contact, in plain floats."""

    step: int
    pair: str
    time: float                      # absolute time of the estimated contact instant
    depth: float                     # penetration depth, <= 0
    normal: tuple[float, float]      # penetration direction n-hat
    toi: Optional[float] = None      # None for compliant/PBD
    clamped: bool = False
    collision_normal: Optional[tuple[float, float]] = None
    v_before: Optional[tuple] = None  # velocities given to the elastic resolve
    v_after: Optional[tuple] = None   # velocities it returned
    rewind_gap: Optional[float] = None  # | surface distance at rewound positions |


@dataclass
class Trajectory:
    """Rollout result: N+1 states plus the contact events encountered."""

    states: list[SystemState]
    events: list[ContactEvent]

    def states_array(self) -> np.ndarray:
        """(N+1, 8) array of [p1x, p1y, p2x, p2y, v1x, v1y, v2x, v2y]."""
        rows = []
        for s in self.states:
            (p1, p2, v1, v2) = s.values()
            rows.append([*p1, *p2, *v1, *v2])
        return np.asarray(rows)


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------

def integrate_candidate(state: SystemState, u1: Vec2, dt) -> tuple[Vec2, Vec2, Vec2, Vec2]:
    """Symplectic Euler candidates: velocity first, then position.

    Only Ball 1 is actuated; Ball 2 integrates force-free.
    Returns (v1_hat, v2_hat, p1_hat, p2_hat).
    """
    v1h = state.v1 + u1 * dt
    v2h = state.v2
    p1h = state.p1 + v1h * dt
    p2h = state.p2 + v2h * dt
    return v1h, v2h, p1h, p2h


def detect_penetration(p1: Vec2, p2: Vec2, radius: float,
                       wall: Optional[Wall] = None,
                       tol: float = 1e-12) -> list[tuple[str, float, tuple[float, float]]]:
    """Discrete penetration test on plain values.

    Returns one (pair, depth, normal) triple per penetrating pair, depth < 0,
    in the fixed scan order ball-ball, ball1-wall, ball2-wall.
    """
    x1, y1 = value_of(p1.x), value_of(p1.y)
    x2, y2 = value_of(p2.x), value_of(p2.y)
    out = []
    dx, dy = x2 - x1, y2 - y1
    dist = np.sqrt(dx * dx + dy * dy)
    if dist < COINCIDENT_TOL:
        raise DegeneracyError("ball centers coincide; contact direction undefined")
    d = dist - 2.0 * radius
    if d < -tol:
        out.append((PAIR_BALL_BALL, d, (dx / dist, dy / dist)))
    if wall is not None:
        for pair, y in ((PAIR_BALL1_WALL, y1), (PAIR_BALL2_WALL, y2)):
            dw = wall.level - y - radius
            if dw < -tol:
                out.append((pair, dw, (0.0, -1.0)))
    return out


def compute_toi(depth, closing, dt):
    """Time of impact: time already spent inside, clamped to [0, dt].

    `depth` is negative (penetrating) and `closing` negative (approaching),
    so the ratio is positive.  This first-order estimate is exact whenever
    the gap changes linearly in time (wall contacts, head-on strikes); the
    ball-ball step path uses the exact quadratic rewind instead.  Clamping
    decisions are branch predicates on plain values; a clamped TOI is
    returned as a plain constant.
    """
    toi = depth / closing
    return _clamp_toi(toi, dt)


def _clamp_toi(toi, dt):
    t = value_of(toi)
    if t < 0.0:
        return 0.0, True
    if t > dt:
        return dt, True
    return toi, False


def _ball_ball_toi(p1h: Vec2, p2h: Vec2, v1h: Vec2, v2h: Vec2, radius: float, dt):
    """Exact time since the surfaces touched, for linear within-step motion.

    Solves || dp - dv*s || = 2r for the positive root s, so the rewound
    positions satisfy the touching condition to roundoff.  Uses the
    cancellation-free root form (the penetrated gap is usually shallow).
    """
    dp = p2h - p1h
    dv = v2h - v1h
    pv = dp.dot(dv)
    a = dv.dot(dv)
    c = dp.dot(dp) - (2.0 * radius) * (2.0 * radius)
    disc = ad.square(pv) - a * c
    toi = c / (pv - ad.sqrt(disc))
    return _clamp_toi(toi, dt)


def collision_state(state: SystemState, u1: Vec2, v1h: Vec2, v2h: Vec2, dt, toi,
                    pair: str = PAIR_BALL_BALL,
                    wall_normal: Optional[Vec2] = None):
    """Rewind to the estimated contact instant within the step.

    Velocities are interpolated as if the control force acted continuously,
    positions are rewound along the candidate velocities, and the collision
    direction is re-evaluated at the rewound positions (a wall's normal is
    fixed).  Returns (v1_bar, v2_bar, p1_bar, p2_bar, n_bar).
    """
    tau = dt - toi
    v1b = state.v1 + u1 * tau
    v2b = state.v2
    p1b = state.p1 + v1h * tau
    p2b = state.p2 + v2h * tau
    if pair == PAIR_BALL_BALL:
        _, nbar = _ball_ball_geometry(p1b, p2b, 0.0)
    else:
        nbar = wall_normal if wall_normal is not None else Vec2(0.0, -1.0)
    return v1b, v2b, p1b, p2b, nbar


def resolve_elastic(v1: Vec2, v2: Vec2, n: Vec2, pair: str = PAIR_BALL_BALL) -> tuple[Vec2, Vec2]:
    """Perfectly elastic, frictionless impulse for unit-mass bodies.

    Ball-ball contacts exchange the normal velocity components; wall
    contacts reflect the ball's normal component (`v1` is the ball, `v2`
    is ignored and passed through).
    """
    if pair == PAIR_BALL_BALL:
        j = (v2 - v1).dot(n)
        return v1 + n * j, v2 - n * j
    return v1 - n * (2.0 * v1.dot(n)), v2


def _ball_ball_geometry(p1: Vec2, p2: Vec2, two_r):
    """Tracked penetration depth and unit direction between ball centers."""
    dx = p2.x - p1.x
    dy = p2.y - p1.y
    dist = ad.sqrt(ad.square(dx) + ad.square(dy))
    if value_of(dist) < COINCIDENT_TOL:
        raise DegeneracyError("ball centers coincide; contact direction undefined")
    return dist - two_r, Vec2(dx / dist, dy / dist)


def _wall_geometry(p: Vec2, radius: float, wall: Wall):
    depth = (wall.level - p.y) - radius
    return depth, Vec2(0.0, -1.0)


# ---------------------------------------------------------------------------
# Per-step transition
# ---------------------------------------------------------------------------

def step(state: SystemState, u1: Vec2, dt, scenario: ScenarioConfig,
         contact: ContactConfig) -> tuple[SystemState, list[ContactEvent]]:
    """One transition s -> s' under the configured contact model.

    Returned events carry step-relative contact instants via `time`;
    `rollout` rebases them to absolute time.
    """
    if contact.model == MODEL_DIRECT:
        return _step_direct(state, u1, dt, scenario, contact)
    if contact.model == MODEL_COMPLIANT:
        return _step_compliant(state, u1, dt, scenario, contact)
    return _step_pbd(state, u1, dt, scenario, contact)


def _step_direct(state, u1, dt, scenario, contact):
    r = scenario.radius
    v1h, v2h, p1h, p2h = integrate_candidate(state, u1, dt)
    detections = detect_penetration(p1h, p2h, r, scenario.wall, contact.penetration_tol)
    if not detections:
        return SystemState(p1h, p2h, v1h, v2h), []

    vel = [v1h, v2h]
    pos_hat = [p1h, p2h]

    # Tracked geometry and TOI for every approaching detection.
    cands = []
    for pair, _df, _nf in detections:
        if pair == PAIR_BALL_BALL:
            depth, nhat = _ball_ball_geometry(p1h, p2h, 2.0 * r)
            closing = (vel[1] - vel[0]).dot(nhat)
        else:
            i = 0 if pair == PAIR_BALL1_WALL else 1
            depth, nhat = _wall_geometry(pos_hat[i], r, scenario.wall)
            closing = vel[i].dot(nhat)
        if value_of(closing) >= -contact.approach_tol:
            continue  # grazing or separating: pass through this step
        if pair == PAIR_BALL_BALL:
            toi, clamped = _ball_ball_toi(p1h, p2h, vel[0], vel[1], r, dt)
        else:
            toi, clamped = compute_toi(depth, closing, dt)
        cands.append((dt - value_of(toi), pair, depth, nhat, toi, clamped))
    if not cands:
        return SystemState(p1h, p2h, v1h, v2h), []
    cands.sort(key=lambda c: c[0])

    # Sequential resolution in ascending order of contact instant.
    pos_seg = [state.p1, state.p2]   # position replayed up to tau_seg
    tau_seg: list[Any] = [0.0, 0.0]
    touched = [False, False]
    events = []
    for inst_f, pair, depth, nhat, toi, clamped in cands:
        balls = (0, 1) if pair == PAIR_BALL_BALL else ((0,) if pair == PAIR_BALL1_WALL else (1,))
        # Re-check the approach guard when an earlier resolution this step
        # changed a participant's velocity.
        if any(touched[i] for i in balls):
            if pair == PAIR_BALL_BALL:
                closing_now = (vel[1] - vel[0]).dot(nhat)
            else:
                closing_now = vel[balls[0]].dot(nhat)
            if value_of(closing_now) >= -contact.approach_tol:
                continue

        tau = dt - toi
        rewind_gap = None
        if contact.toi_velocity:
            # Collision velocities, positions and direction at the rewound
            # instant; a ball already resolved this step keeps its current
            # velocity and replays from its last event.
            vbar = {}
            pbar = {}
            for i in balls:
                if touched[i]:
                    vbar[i] = vel[i]
                else:
                    vbar[i] = state.v1 + u1 * tau if i == 0 else state.v2
                pbar[i] = pos_seg[i] + vel[i] * (tau - tau_seg[i])
            if pair == PAIR_BALL_BALL:
                _, nres = _ball_ball_geometry(pbar[0], pbar[1], 2.0 * r)
                if not clamped:
                    gx, gy = (pbar[1] - pbar[0]).values()
                    rewind_gap = abs(float(np.hypot(gx, gy)) - 2.0 * r)
            else:
                nres = nhat
                if not clamped:
                    _, py = pbar[balls[0]].values()
                    rewind_gap = abs(scenario.wall.level - py - r)
            vres = vbar
        else:
            nres = nhat
            vres = {i: vel[i] for i in balls}
            pbar = None

        if pair == PAIR_BALL_BALL:
            new1, new2 = resolve_elastic(vres[0], vres[1], nres, pair)
            resolved = {0: new1, 1: new2}
            v_before = (vres[0].values(), vres[1].values())
            v_after = (new1.values(), new2.values())
        else:
            i = balls[0]
            newv, _ = resolve_elastic(vres[i], Vec2(0.0, 0.0), nres, pair)
            resolved = {i: newv}
            v_before = (vres[i].values(), None)
            v_after = (newv.values(), None)

        for i, newv in resolved.items():
            if contact.toi_position:
                pos_seg[i] = pbar[i] if pbar is not None else \
                    pos_seg[i] + vel[i] * (tau - tau_seg[i])
                tau_seg[i] = tau
            vel[i] = newv
            touched[i] = True

        events.append(ContactEvent(
            step=-1, pair=pair, time=inst_f,
            depth=value_of(depth), normal=nhat.values(),
            toi=value_of(toi), clamped=clamped,
            collision_normal=nres.values() if contact.toi_velocity else None,
            v_before=v_before, v_after=v_after, rewind_gap=rewind_gap,
        ))

    if not events:
        return SystemState(p1h, p2h, v1h, v2h), []

    new_pos = [p1h, p2h]
    for i in (0, 1):
        if not touched[i]:
            continue
        if contact.toi_position:
            new_pos[i] = pos_seg[i] + vel[i] * (dt - tau_seg[i])
        else:
            new_pos[i] = (state.p1, state.p2)[i] + vel[i] * dt
    return SystemState(new_pos[0], new_pos[1], vel[0], vel[1]), events


def _step_compliant(state, u1, dt, scenario, contact):
    """Penalty forces from the current state, then plain integration."""
    r = scenario.radius
    k, c = contact.stiffness, contact.damping
    f1 = Vec2(0.0, 0.0)
    f2 = Vec2(0.0, 0.0)
    events = []
    detections = detect_penetration(state.p1, state.p2, r, scenario.wall,
                                    contact.penetration_tol)
    for pair, _df, _nf in detections:
        if pair == PAIR_BALL_BALL:
            depth, nhat = _ball_ball_geometry(state.p1, state.p2, 2.0 * r)
            closing = (state.v2 - state.v1).dot(nhat)
            mag = (-k) * depth - c * closing   # > 0: pushes the pair apart
            f2 = f2 + nhat * mag
            f1 = f1 - nhat * mag
        else:
            i = 0 if pair == PAIR_BALL1_WALL else 1
            p, v = (state.p1, state.p2)[i], (state.v1, state.v2)[i]
            depth, nhat = _wall_geometry(p, r, scenario.wall)
            closing = v.dot(nhat)
            mag = (-k) * depth - c * closing
            if i == 0:
                f1 = f1 + nhat * mag
            else:
                f2 = f2 + nhat * mag
        events.append(ContactEvent(
            step=-1, pair=pair, time=0.0,
            depth=value_of(depth), normal=nhat.values(),
        ))
    v1n = state.v1 + (u1 + f1) * dt
    v2n = state.v2 + f2 * dt
    p1n = state.p1 + v1n * dt
    p2n = state.p2 + v2n * dt
    return SystemState(p1n, p2n, v1n, v2n), events


def _step_pbd(state, u1, dt, scenario, contact):
    """Integrate, project penetrating positions, refit velocities."""
    r = scenario.radius
    v1h, v2h, p1h, p2h = integrate_candidate(state, u1, dt)
    pos = [p1h, p2h]
    corrected = [False, False]
    events = []
    detections = detect_penetration(p1h, p2h, r, scenario.wall, contact.penetration_tol)
    for pair, _df, _nf in detections:
        if pair == PAIR_BALL_BALL:
            depth, nhat = _ball_ball_geometry(pos[0], pos[1], 2.0 * r)
            half = depth * 0.5
            pos[0] = pos[0] + nhat * half          # depth < 0: moves ball 1 against n
            pos[1] = pos[1] - nhat * half
            corrected[0] = corrected[1] = True
        else:
            i = 0 if pair == PAIR_BALL1_WALL else 1
            depth, nhat = _wall_geometry(pos[i], r, scenario.wall)
            pos[i] = pos[i] - nhat * depth         # pushes the ball back below the wall
            corrected[i] = True
        events.append(ContactEvent(
            step=-1, pair=pair, time=dt,
            depth=value_of(depth), normal=nhat.values(),
        ))
    vel = [v1h, v2h]
    for i in (0, 1):
        if corrected[i]:
            delta = pos[i] - (state.p1, state.p2)[i]
            vel[i] = Vec2(delta.x / dt, delta.y / dt)
    return SystemState(pos[0], pos[1], vel[0], vel[1]), events


# ---------------------------------------------------------------------------
# Rollout
# ---------------------------------------------------------------------------

def as_control_vecs(controls) -> list[Vec2]:
    """Normalize an (N, 2) array or sequence of pairs into Vec2 entries."""
    if isinstance(controls, np.ndarray):
        return [Vec2(float(x), float(y)) for x, y in controls]
    return [u if isinstance(u, Vec2) else Vec2(u[0], u[1]) for u in controls]


def rollout(scenario: ScenarioConfig, contact: ContactConfig,
            controls: Sequence) -> Trajectory:
    """Roll the transition over the whole horizon.

    `controls` must supply one force per step; entries may be tracked.
    Degeneracy errors are annotated with the failing step index.
    """
    us = as_control_vecs(controls)
    if len(us) != scenario.steps:
        raise ConfigError(f"expected {scenario.steps} control entries, got {len(us)}")
    dt = scenario.dt
    states = [scenario.initial_state]
    events: list[ContactEvent] = []
    cur = scenario.initial_state
    for n, u in enumerate(us):
        try:
            cur, evs = step(cur, u, dt, scenario, contact)
        except DegeneracyError as err:
            if err.step_index is None:
                err.step_index = n
            raise
        states.append(cur)
        for ev in evs:
            events.append(ContactEvent(
                step=n, pair=ev.pair, time=n * dt + ev.time,
                depth=ev.depth, normal=ev.normal, toi=ev.toi,
                clamped=ev.clamped, collision_normal=ev.collision_normal,
                v_before=ev.v_before, v_after=ev.v_after,
                rewind_gap=ev.rewind_gap,
            ))
    return Trajectory(states=states, events=events)
