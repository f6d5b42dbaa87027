"""Default synthetic experiment setup: track factories and expert weights.

Each archetype gets a procedurally jittered track (seeded) and a hand-set
ground-truth weight vector whose driving style matches the situation:
curvy segments tolerate centerline deviation but punish lateral dynamics,
stop segments weight the speed target heavily, lane following weights
centerline tracking heavily.
"""

import numpy as np

from .planner import N_FEATURES
from .track_env import Archetype, TrackSpec

# calibrated for the open-loop sampler; the projection gate drops only
# pathological cycles (see demo_gen.DEFAULT_GATE for the strict default)
PRESET_GATE = 200.0


def theta_star_for(label: int) -> np.ndarray:
    """Ground-truth reward weights per segment label (1-4)."""
    th = np.zeros(N_FEATURES)
    #      a_lon jerk  speed a_lat jerkL cline direc prox  curb  over  delay
    base = [0.30, 0.05, 5.0, 0.50, 0.05, 3.00, 2.00, 1.00, 1.00, 1.00, 0.50,
            5.00, 0.50, 1.00, 2.00]
    th[:] = base
    if label == Archetype.SHARP_TURN.value:
        th[3] = 2.0   # strong lateral-comfort preference
        th[4] = 0.2
        th[5] = 1.0   # allow cutting the curve
        th[6] = 3.0
    elif label == Archetype.STOP_START_TURN.value:
        th[2] = 9.0
        th[3] = 1.2
        th[5] = 1.5
        th[14] = 4.0  # progress must beat the in-zone speed penalty or the
        th[0] = 0.15  # expert parks at the stop forever
    elif label == Archetype.STOP_START.value:
        th[2] = 12.0
        th[5] = 4.0
        th[14] = 5.0
        th[0] = 0.15
    elif label == Archetype.LANE_FOLLOW.value:
        th[5] = 6.0
        th[6] = 4.0
        th[2] = 4.0
        th[0] = 0.50
    else:
        raise ValueError(f"unknown segment label {label}")
    return th


def make_track_spec(archetype: Archetype, seed: int, length_m=None) -> TrackSpec:
    """Procedural track for an archetype; deterministic in the seed."""
    rng = np.random.default_rng([int(seed), archetype.value])
    if archetype is Archetype.SHARP_TURN:
        length = length_m or 200.0
        kappa = float(rng.uniform(0.040, 0.055)) * (1 if rng.uniform() < 0.5 else -1)
        turn_start = float(rng.uniform(50.0, 70.0))
        turn_len = float(rng.uniform(40.0, 50.0))
        profile = ((0.0, 0.0), (turn_start, 0.0), (turn_start + 6.0, kappa),
                   (turn_start + turn_len, kappa), (turn_start + turn_len + 6.0, 0.0),
                   (length, 0.0))
        return TrackSpec(archetype=archetype, length_m=length, lane_width_m=3.5,
                         curvature_profile=profile, stop_points=(),
                         speed_limit_mps=9.0, seed=int(seed))
    if archetype is Archetype.STOP_START_TURN:
        length = length_m or 220.0
        stop1 = float(rng.uniform(60.0, 75.0))
        kappa = float(rng.uniform(0.020, 0.030)) * (1 if rng.uniform() < 0.5 else -1)
        turn_start = stop1 + 25.0
        profile = ((0.0, 0.0), (turn_start, 0.0), (turn_start + 8.0, kappa),
                   (turn_start + 45.0, kappa), (turn_start + 53.0, 0.0),
                   (length, 0.0))
        return TrackSpec(archetype=archetype, length_m=length, lane_width_m=3.5,
                         curvature_profile=profile, stop_points=(stop1,),
                         speed_limit_mps=9.0, seed=int(seed))
    if archetype is Archetype.STOP_START:
        length = length_m or 220.0
        stop1 = float(rng.uniform(60.0, 75.0))
        stop2 = stop1 + float(rng.uniform(70.0, 85.0))
        return TrackSpec(archetype=archetype, length_m=length, lane_width_m=3.5,
                         curvature_profile=((0.0, 0.0), (length, 0.0)),
                         stop_points=(stop1, stop2),
                         speed_limit_mps=9.0, seed=int(seed))
    if archetype is Archetype.LANE_FOLLOW:
        length = length_m or 220.0
        # gentle alternating wiggle
        n_w = 4
        xs = np.linspace(20.0, length - 20.0, n_w)
        profile = [(0.0, 0.0)]
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        for i, s in enumerate(xs):
            k = float(rng.uniform(0.004, 0.008)) * sign * (-1.0) ** i
            profile.append((float(s), k))
        profile.append((length, 0.0))
        return TrackSpec(archetype=archetype, length_m=length, lane_width_m=3.5,
                         curvature_profile=tuple(profile), stop_points=(),
                         speed_limit_mps=12.0, seed=int(seed))
    raise ValueError(f"unknown archetype {archetype}")


def default_track_specs(seed: int, labels=(1, 2, 3, 4), tracks_per_label=1):
    """The standard 4-situation experiment layout."""
    specs = []
    for label in labels:
        arch = Archetype(label)
        for j in range(tracks_per_label):
            specs.append(make_track_spec(arch, seed + 1000 * j))
    return specs


def default_theta_stars(labels=(1, 2, 3, 4)):
    return {label: theta_star_for(label) for label in labels}
