"""Expert odometry synthesis and training-buffer collection.

Experts are produced by running the planner closed-loop under a known
ground-truth weight vector with a high-resolution policy set.  Collection
replays the expert: each cycle resets onto the odometry, samples a policy
set under the collection weights theta0, and projects the odometry into the
set to obtain the in-set demonstration.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import planner, serialize
from .errors import EmptyPolicySet, InvalidSpec
from .planner import (FixedWeights, PlannerConfig, PlanningCycle, Policy,
                      VehicleState, ControlSequence, N_FEATURES, REPLAN_S)
from .track_env import Archetype, TrackSpec, build_track
from ._kernels import wrap_angle

PROJECTION_WEIGHTS = (1.0, 2.0, 1.0)  # longitudinal, lateral, yaw
DEFAULT_GATE = 2.0
EXPERT_POLICY_COUNT = 1024
TRACK_END_MARGIN = 8.0


@dataclass
class Trajectory:
    samples: np.ndarray  # (N, 5): x, y, heading, speed, time at constant dt
    dt: float = 0.1

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] != 5:
            raise ValueError("trajectory samples must be (N, 5)")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trajectory contains non-finite values")
        t = self.samples[:, 4]
        if len(t) > 1 and not np.allclose(np.diff(t), self.dt, atol=1e-9):
            raise ValueError("trajectory times must advance by a constant dt")

    def __len__(self):
        return len(self.samples)

    def state_at_index(self, i) -> VehicleState:
        return VehicleState(*[float(v) for v in self.samples[i]])


@dataclass
class CycleBuffer:
    cycles: list
    meta: dict

    def __post_init__(self):
        ids = [c.cycle_id for c in self.cycles]
        if len(set(ids)) != len(ids):
            raise ValueError("cycle ids must be unique")

    def __len__(self):
        return len(self.cycles)

    def theta_star_for(self, segment_label):
        for seg in self.meta.get("segments", []):
            if seg["label"] == segment_label and seg.get("theta_star") is not None:
                return np.asarray(seg["theta_star"], dtype=np.float64)
        return None

    def planner_config(self) -> PlannerConfig:
        p = self.meta["planner"]
        return PlannerConfig(**p)


def _subseed(*entropy):
    """Deterministic derived 63-bit seed from a list of integers."""
    words = np.random.SeedSequence(list(entropy)).generate_state(2, dtype=np.uint32)
    return int((int(words[0]) << 31) ^ int(words[1]))


def generate_expert_odometry(env, theta_star, cfg: PlannerConfig, seed,
                             expert_policy_count=EXPERT_POLICY_COUNT,
                             max_cycles=400) -> Trajectory:
    """Drive the track closed-loop under theta_star; concatenate the
    executed 1 s segments into one odometry record."""
    theta_star = np.asarray(theta_star, dtype=np.float64)
    if not np.all(np.isfinite(theta_star)):
        raise ValueError("theta_star must be finite")
    ecfg = replace(cfg, policy_count=expert_policy_count, seed=int(seed))
    x0, y0, psi0, _ = env.start_state_tuple()
    start = VehicleState(x=x0, y=y0, heading=psi0, speed=env.speed_limit_mps, time=0.0)
    end_arc = env.spec.length_m - TRACK_END_MARGIN

    def reached_end(state):
        xa = np.asarray([state.x])
        ya = np.asarray([state.y])
        from ._kernels import _pyimpl
        s_arc = float(_pyimpl.bilinear(env.arc_pos, xa, ya, *env.origin, env.cell)[0])
        return s_arc >= end_arc

    cycles = planner.run_mpc(env, FixedWeights(theta_star), max_cycles, ecfg,
                             mode="closed_loop", start_state=start,
                             segment_label=env.spec.segment_label,
                             stop_condition=reached_end)
    replan_steps = int(round(REPLAN_S / cfg.dt))
    chunks = []
    for i, cyc in enumerate(cycles):
        chosen = cyc.policies[planner.optimal_policy(cyc.policies, theta_star)]
        if i < len(cycles) - 1:
            chunks.append(chosen.states[:replan_steps])
        else:
            chunks.append(chosen.states)  # keep the full final horizon
    return Trajectory(samples=np.vstack(chunks), dt=cfg.dt)


def projection_distances(policies, traj: Trajectory, window):
    """Weighted squared-error distance of every policy to the odometry.

    window = (i0, i1) indexes traj.samples; the policies' state traces must
    have i1 - i0 rows.  Errors are expressed in the odometry's local frame
    and integrated by the trapezoid rule.
    """
    if len(policies) == 0:
        raise EmptyPolicySet("projection needs at least one policy")
    i0, i1 = window
    if i0 < 0 or i1 > len(traj):
        raise ValueError(f"window {window} not covered by the odometry (len {len(traj)})")
    ref = traj.samples[i0:i1]
    n = i1 - i0
    w_lon, w_lat, w_yaw = PROJECTION_WEIGHTS

    states = np.stack([p.states for p in policies])  # (P, n, 5)
    if states.shape[1] != n:
        raise ValueError("policy traces and window length differ")
    dx = states[:, :, 0] - ref[None, :, 0]
    dy = states[:, :, 1] - ref[None, :, 1]
    c = np.cos(ref[:, 2])[None, :]
    s = np.sin(ref[:, 2])[None, :]
    dlon = c * dx + s * dy
    dlat = -s * dx + c * dy
    dpsi = wrap_angle(states[:, :, 2] - ref[None, :, 2])
    g = w_lon * dlon ** 2 + w_lat * dlat ** 2 + w_yaw * dpsi ** 2
    return ((g[:, :-1] + g[:, 1:]) * (0.5 * traj.dt)).sum(axis=1)


def project_demonstration(policies, traj: Trajectory, window) -> int:
    """Index of the in-set policy closest to the odometry over the window."""
    return int(np.argmin(projection_distances(policies, traj, window)))


def _verify_projection(cycles, traj, n_steps, replan_steps, rng):
    """Re-check the arg-min on a few random cycles with plain loops."""
    if not cycles:
        return
    picks = rng.choice(len(cycles), size=min(10, len(cycles)), replace=False)
    w_lon, w_lat, w_yaw = PROJECTION_WEIGHTS
    for ci in picks:
        cyc = cycles[ci]
        i0 = cyc.cycle_id * replan_steps
        best, best_d = -1, math.inf
        for p in cyc.policies:
            d = 0.0
            prev = None
            for j in range(n_steps + 1):
                ref = traj.samples[i0 + j]
                ddx = p.states[j, 0] - ref[0]
                ddy = p.states[j, 1] - ref[1]
                lon = math.cos(ref[2]) * ddx + math.sin(ref[2]) * ddy
                lat = -math.sin(ref[2]) * ddx + math.cos(ref[2]) * ddy
                dps = float(wrap_angle(p.states[j, 2] - ref[2]))
                g = w_lon * lon * lon + w_lat * lat * lat + w_yaw * dps * dps
                if prev is not None:
                    d += (prev + g) * (0.5 * traj.dt)
                prev = g
            if d < best_d:
                best_d = d
                best = p.id
        if best != cyc.demo_index:
            raise AssertionError(
                f"projection self-check failed on cycle {cyc.cycle_id}: "
                f"{best} vs {cyc.demo_index}")


def _collect_segment(spec: TrackSpec, theta_star, theta0, cfg, seed, seg_index,
                     gate, expert_policy_count):
    env = build_track(spec)
    expert_seed = _subseed(seed, seg_index, 0)
    collect_seed = _subseed(seed, seg_index, 1)
    expert = generate_expert_odometry(env, theta_star, cfg, expert_seed,
                                      expert_policy_count=expert_policy_count)
    replan_steps = int(round(REPLAN_S / cfg.dt))
    n_cycles = (len(expert) - 1 - cfg.n_steps) // replan_steps + 1
    if n_cycles < 1:
        raise InvalidSpec(f"track {spec.archetype.name} too short for one planning cycle")

    distances = {}

    def projector(k, policies):
        window = (k * replan_steps, k * replan_steps + cfg.n_steps + 1)
        d = projection_distances(policies, expert, window)
        idx = int(np.argmin(d))
        distances[k] = float(d[idx])
        return idx

    ccfg = replace(cfg, seed=collect_seed)
    cycles = planner.run_mpc(env, FixedWeights(theta0), n_cycles, ccfg,
                             mode="replay", expert=expert,
                             segment_label=spec.segment_label,
                             demo_projector=projector)
    _verify_projection(cycles, expert, cfg.n_steps, replan_steps,
                       np.random.default_rng([collect_seed, 7]))
    kept = [c for c in cycles if distances[c.cycle_id] <= gate]
    n_dropped = len(cycles) - len(kept)
    seg_meta = {
        "label": spec.segment_label,
        "track": track_spec_to_dict(spec),
        "theta_star": [float(v) for v in theta_star],
        "expert_seed": expert_seed,
        "collect_seed": collect_seed,
        "expert_policy_count": int(expert_policy_count),
        "n_cycles": len(kept),
        "n_dropped": n_dropped,
    }
    return kept, seg_meta, expert


def _worker_cap():
    raw = os.environ.get("PI_IRL_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        cap = os.cpu_count() or 1
    return cap


def collect_cycle_buffer(track_specs, theta0, cfg: PlannerConfig, seed,
                         theta_stars, gate=DEFAULT_GATE,
                         expert_policy_count=EXPERT_POLICY_COUNT) -> CycleBuffer:
    """Collect a training buffer over the given tracks.

    theta_stars maps segment label -> ground-truth weights used to drive the
    synthetic expert.  Cycles whose projected demonstration misses the gate
    distance are dropped and counted.  Deterministic for fixed seeds; tracks
    are processed concurrently (cap with PI_IRL_THREADS) but assembled in
    order.
    """
    theta0 = np.asarray(theta0, dtype=np.float64)
    jobs = []
    workers = min(max(1, _worker_cap()), max(1, len(track_specs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, spec in enumerate(track_specs):
            theta_star = np.asarray(theta_stars[spec.segment_label], dtype=np.float64)
            jobs.append(pool.submit(_collect_segment, spec, theta_star, theta0,
                                    cfg, seed, i, gate, expert_policy_count))
        results = [j.result() for j in jobs]

    all_cycles = []
    seg_metas = []
    next_id = 0
    for kept, seg_meta, _expert in results:
        seg_metas.append(seg_meta)
        all_cycles.extend(kept)

    for cyc in all_cycles:
        cyc.cycle_id = next_id
        next_id += 1

    meta = {
        "version": serialize.FORMAT_VERSION,
        "kind": "cycle_buffer",
        "planner": {
            "policy_count": cfg.policy_count, "horizon_s": cfg.horizon_s,
            "dt": cfg.dt, "gamma_per_s": cfg.gamma_per_s,
            "wheelbase_m": cfg.wheelbase_m, "lat_accel_max": cfg.lat_accel_max,
            "seed": cfg.seed,
        },
        "replan_s": REPLAN_S,
        "gate": float(gate),
        "theta0": [float(v) for v in theta0],
        "segments": seg_metas,
    }
    return CycleBuffer(cycles=all_cycles, meta=meta)


def track_spec_to_dict(spec: TrackSpec) -> dict:
    return {
        "archetype": spec.archetype.name,
        "length_m": float(spec.length_m),
        "lane_width_m": float(spec.lane_width_m),
        "curvature_profile": [[float(s), float(k)] for s, k in spec.curvature_profile],
        "stop_points": [float(s) for s in spec.stop_points],
        "speed_limit_mps": float(spec.speed_limit_mps),
        "seed": int(spec.seed),
        "obstacles": [[float(a), float(b), float(r)] for a, b, r in spec.obstacles],
    }


def track_spec_from_dict(d: dict) -> TrackSpec:
    return TrackSpec(
        archetype=Archetype[d["archetype"]],
        length_m=d["length_m"],
        lane_width_m=d["lane_width_m"],
        curvature_profile=tuple((s, k) for s, k in d["curvature_profile"]),
        stop_points=tuple(d["stop_points"]),
        speed_limit_mps=d["speed_limit_mps"],
        seed=d["seed"],
        obstacles=tuple((a, b, r) for a, b, r in d.get("obstacles", [])),
    )


def _cycle_record(cyc: PlanningCycle) -> dict:
    return {
        "version": serialize.FORMAT_VERSION,
        "cycle_id": cyc.cycle_id,
        "segment_label": cyc.segment_label,
        "start_state": [cyc.start_state.x, cyc.start_state.y, cyc.start_state.heading,
                        cyc.start_state.speed, cyc.start_state.time],
        "gen_weights": cyc.gen_weights,
        "demo_index": cyc.demo_index,
        "sample_seed": [int(v) for v in cyc.sample_seed],
        "policies": [
            {"id": p.id, "steer": p.controls.steer, "accel": p.controls.accel,
             "pi_features": p.pi_features}
            for p in cyc.policies
        ],
    }


def buffer_to_lines(buf: CycleBuffer):
    lines = [serialize.encode(buf.meta)]
    for cyc in buf.cycles:
        lines.append(serialize.encode(_cycle_record(cyc)))
    return lines


def save_cycle_buffer(buf: CycleBuffer, path):
    serialize.write_lines(path, buffer_to_lines(buf))


def load_cycle_buffer(path) -> CycleBuffer:
    lines = serialize.read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty buffer file")
    meta = serialize.decode(lines[0])
    serialize.check_header(meta, "cycle_buffer", path)
    horizon_s = meta["planner"]["horizon_s"]
    cycles = []
    for line in lines[1:]:
        if not line:
            continue
        rec = serialize.decode(line)
        if rec.get("version") != serialize.FORMAT_VERSION:
            raise ValueError(f"{path}: cycle record with bad version")
        policies = []
        for p in rec["policies"]:
            controls = ControlSequence(steer=np.array(p["steer"]),
                                       accel=np.array(p["accel"]),
                                       horizon_s=horizon_s)
            policies.append(Policy(id=int(p["id"]), controls=controls, states=None,
                                   pi_features=np.array(p["pi_features"])))
        demo_index = int(rec["demo_index"])
        if not 0 <= demo_index < len(policies):
            raise ValueError(f"{path}: demo_index out of range in cycle {rec['cycle_id']}")
        ss = rec["start_state"]
        cycles.append(PlanningCycle(
            cycle_id=int(rec["cycle_id"]),
            segment_label=int(rec["segment_label"]),
            start_state=VehicleState(x=ss[0], y=ss[1], heading=ss[2], speed=ss[3], time=ss[4]),
            policies=policies,
            demo_index=demo_index,
            demo_pi_features=policies[demo_index].pi_features.copy(),
            gen_weights=np.array(rec["gen_weights"]),
            sample_seed=[int(v) for v in rec["sample_seed"]],
        ))
    return CycleBuffer(cycles=cycles, meta=meta)
