"""Sampling-based MPC: policy rollout, path-integral features, selection.

Policies are open-loop control sequences (4 steering + 4 acceleration
segments) rolled out through a kinematic bicycle model.  Each policy gets a
15-dimensional vector of discounted path-integral features; a reward-weight
vector theta scores policies as V = -theta . f.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, EmptyPolicySet, OutOfBounds

N_FEATURES = 15
N_CONTROL_SEGMENTS = 4
N_ACTIONS = 2 * N_CONTROL_SEGMENTS
STEER_MAX = 0.5
ACCEL_MIN = -3.0
ACCEL_MAX = 2.0
STOP_RADIUS = 10.0
PROGRESS_FLOOR = 1.0  # m/s reference speed when starting from rest
REPLAN_S = 1.0

FEATURE_NAMES = (
    "lon_accel", "lon_jerk", "lon_velocity", "lat_accel", "lat_jerk",
    "centerline", "direction", "proximity", "curbs", "lat_overshoot",
    "lane_change_delay", "state_class", "maneuver_space", "end_direction",
    "min_progress",
)


@dataclass
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float
    time: float

    def as_array(self):
        return np.array([self.x, self.y, self.heading, self.speed, self.time])


@dataclass
class ControlSequence:
    steer: np.ndarray   # (4,) rad
    accel: np.ndarray   # (4,) m/s^2
    horizon_s: float

    def __post_init__(self):
        self.steer = np.asarray(self.steer, dtype=np.float64)
        self.accel = np.asarray(self.accel, dtype=np.float64)
        if self.steer.shape != (N_CONTROL_SEGMENTS,) or self.accel.shape != (N_CONTROL_SEGMENTS,):
            raise DimensionMismatch("control sequences carry 4 steer + 4 accel values")

    def as_action_vector(self):
        return np.concatenate([self.steer, self.accel])


@dataclass
class Policy:
    id: int
    controls: ControlSequence
    states: np.ndarray          # (T+1, 5) or None when loaded from a buffer
    pi_features: np.ndarray     # (15,)
    value: float = math.nan


@dataclass
class PlannerConfig:
    policy_count: int = 128
    horizon_s: float = 6.0
    dt: float = 0.1
    gamma_per_s: float = 0.95
    wheelbase_m: float = 2.8
    lat_accel_max: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.policy_count < 2:
            raise ValueError("policy_count must be >= 2")
        steps = self.horizon_s / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("horizon_s must be an integer multiple of dt")
        if not 0.0 < self.gamma_per_s <= 1.0:
            raise ValueError("gamma_per_s must lie in (0, 1]")

    @property
    def n_steps(self):
        return int(round(self.horizon_s / self.dt))

    @property
    def steps_per_segment(self):
        return self.n_steps // N_CONTROL_SEGMENTS

    def discounts(self):
        """Per-state discount gamma^(k*dt) for k = 0..n_steps."""
        t = self.dt * np.arange(self.n_steps + 1)
        return np.power(self.gamma_per_s, t)


@dataclass
class PlanningCycle:
    cycle_id: int
    segment_label: int
    start_state: VehicleState
    policies: list
    demo_index: int
    demo_pi_features: np.ndarray
    gen_weights: np.ndarray
    sample_seed: list = field(default_factory=list)

    def features_matrix(self):
        return np.stack([p.pi_features for p in self.policies])

    def actions_matrix(self):
        return np.stack([p.controls.as_action_vector() for p in self.policies])


def step_transition(s: VehicleState, steer: float, accel: float, dt: float,
                    wheelbase: float = 2.8) -> VehicleState:
    """One Euler step of the kinematic bicycle model."""
    x = s.x + s.speed * math.cos(s.heading) * dt
    y = s.y + s.speed * math.sin(s.heading) * dt
    heading = float(_kernels.wrap_angle(s.heading + (s.speed / wheelbase) * math.tan(steer) * dt))
    speed = max(0.0, s.speed + accel * dt)
    return VehicleState(x=x, y=y, heading=heading, speed=speed, time=s.time + dt)


def _steer_bounds(v0, accel, seg_duration, lat_accel_max, wheelbase):
    """Per-segment steering bound from the lateral-acceleration cap.

    Uses the predicted speed at each segment start under the drawn
    accelerations, floored at 1 m/s.
    """
    P, S = accel.shape
    bounds = np.empty((P, S))
    v = np.full(P, float(v0))
    for j in range(S):
        vref = np.maximum(v, 1.0)
        bounds[:, j] = np.minimum(STEER_MAX, np.arctan(lat_accel_max * wheelbase / (vref * vref)))
        v = np.maximum(0.0, v + accel[:, j] * seg_duration)
    return bounds


def rollout_controls(env, start: VehicleState, steer, accel, cfg: PlannerConfig):
    """Roll out explicit control matrices; returns (states, clamped)."""
    xmin, xmax, ymin, ymax = env.bounds
    return _kernels.rollout_policies(
        start.as_array(), steer, accel, cfg.dt, cfg.steps_per_segment,
        cfg.wheelbase_m, xmin, xmax, ymin, ymax)


def features_for_rollouts(env, states, clamped, steer, accel, cfg: PlannerConfig):
    """Path-integral features (P, 15) for already rolled-out policies."""
    return _kernels.integrate_features(
        states, clamped, steer, accel, cfg.steps_per_segment, cfg.dt,
        cfg.discounts(), *env.grid_args(),
        env.lane_half_width, env.speed_limit_mps,
        env.stop_points, STOP_RADIUS, cfg.wheelbase_m, PROGRESS_FLOOR)


def sample_policy_set(env, s0: VehicleState, cfg: PlannerConfig, seed) -> list:
    """Sample exactly cfg.policy_count policies from the start state.

    Deterministic for fixed (seed, s0, cfg).  Rollouts leaving the grid are
    frozen at the boundary with saturated curb penalty, never an error.
    """
    if not env.contains(s0.x, s0.y):
        raise OutOfBounds(f"start state ({s0.x:.2f}, {s0.y:.2f}) outside track bounds")
    P = cfg.policy_count
    rng = np.random.default_rng(seed)
    accel = rng.uniform(ACCEL_MIN, ACCEL_MAX, size=(P, N_CONTROL_SEGMENTS))
    seg_duration = cfg.horizon_s / N_CONTROL_SEGMENTS
    bounds = _steer_bounds(s0.speed, accel, seg_duration, cfg.lat_accel_max, cfg.wheelbase_m)
    steer = rng.uniform(-1.0, 1.0, size=(P, N_CONTROL_SEGMENTS)) * bounds

    states, clamped = rollout_controls(env, s0, steer, accel, cfg)
    feats = features_for_rollouts(env, states, clamped, steer, accel, cfg)

    policies = []
    for i in range(P):
        controls = ControlSequence(steer=steer[i].copy(), accel=accel[i].copy(),
                                   horizon_s=cfg.horizon_s)
        policies.append(Policy(id=i, controls=controls, states=states[i],
                               pi_features=feats[i]))
    return policies


def integrate_pi_features(policy: Policy, env, cfg: PlannerConfig):
    """Features for a single rolled-out policy (batch-of-one kernel call)."""
    states = policy.states[None, :, :]
    clamped = np.zeros((1, states.shape[1]), dtype=np.uint8)
    feats = features_for_rollouts(env, states, clamped,
                                  policy.controls.steer[None, :],
                                  policy.controls.accel[None, :], cfg)
    return feats[0]


def policy_value(pi_features, theta) -> float:
    """V = -theta . f  (features are penalties, higher theta = stronger aversion)."""
    f = np.asarray(pi_features, dtype=np.float64)
    th = np.asarray(theta, dtype=np.float64)
    if f.shape != (N_FEATURES,) or th.shape != (N_FEATURES,):
        raise DimensionMismatch(f"expected {N_FEATURES}-dim features and weights")
    return float(-(th @ f))


def values_for(policies, theta):
    """Fill and return the value of every policy under theta."""
    th = np.asarray(theta, dtype=np.float64)
    feats = np.stack([p.pi_features for p in policies])
    vals = -(feats @ th)
    for p, v in zip(policies, vals):
        p.value = float(v)
    return vals


def optimal_policy(policies, theta) -> int:
    """Index of the highest-value policy; ties go to the lowest id."""
    if len(policies) == 0:
        raise EmptyPolicySet("optimal_policy needs at least one policy")
    vals = values_for(policies, theta)
    return int(np.argmax(vals))


def run_mpc(env, theta_provider, n_cycles: int, cfg: PlannerConfig, *,
            mode: str = "closed_loop", start_state: VehicleState = None,
            expert=None, segment_label: int = 0, replan_s: float = REPLAN_S,
            demo_projector=None, stop_condition=None) -> list:
    """Run the MPC loop for up to n_cycles planning cycles.

    theta_provider is called with the previous cycle (None for the first)
    and returns the 15 weights used for the upcoming cycle, so predictions
    always lag the data by one cycle.

    mode "closed_loop" advances along the selected policy for one replan
    interval; mode "replay" resets the vehicle onto the expert odometry
    (expert.samples, one row per dt) at t = k * replan_s instead.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    replan_steps = int(round(replan_s / cfg.dt))
    if mode == "replay":
        if expert is None:
            raise ValueError("replay mode needs expert odometry")
    elif mode == "closed_loop":
        if start_state is None:
            raise ValueError("closed_loop mode needs a start state")
    else:
        raise ValueError(f"unknown mode {mode!r}")

    state = start_state
    cycles = []
    prev = None
    for k in range(n_cycles):
        if mode == "replay":
            row = expert.samples[k * replan_steps]
            state = VehicleState(*[float(v) for v in row])
        if stop_condition is not None and stop_condition(state):
            break
        theta = np.asarray(theta_provider(prev), dtype=np.float64).copy()
        seed = [int(cfg.seed), int(segment_label), int(k)]
        policies = sample_policy_set(env, state, cfg, seed)
        opt = optimal_policy(policies, theta)

        demo_index = -1
        demo_feats = np.zeros(N_FEATURES)
        if demo_projector is not None:
            demo_index = demo_projector(k, policies)
            demo_feats = policies[demo_index].pi_features.copy()

        cycle = PlanningCycle(
            cycle_id=k, segment_label=segment_label, start_state=state,
            policies=policies, demo_index=demo_index,
            demo_pi_features=demo_feats, gen_weights=theta, sample_seed=seed)
        cycles.append(cycle)
        prev = cycle

        if mode == "closed_loop":
            state = VehicleState(*[float(v) for v in policies[opt].states[replan_steps]])
    return cycles


class FixedWeights:
    """theta provider that always returns the same weights."""

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=np.float64)

    def __call__(self, prev_cycle):
        return self.theta
