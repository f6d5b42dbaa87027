"""Synthetic 2D road environments with static feature grids.

A track is defined by an arc-length curvature profile; the environment
rasterizes centerline distance, curb distance, obstacle proximity, lane
direction, signed lateral offset and arc position onto a regular grid that
both the scalar query API and the planner kernels interpolate bilinearly.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidSpec, OutOfBounds
from ._kernels import _pyimpl

CENTERLINE_SPACING = 0.5
GRID_CELL = 0.25
GRID_MARGIN = 8.0
PROXIMITY_SCALE = 2.0


class Archetype(enum.Enum):
    SHARP_TURN = 1
    STOP_START_TURN = 2
    STOP_START = 3
    LANE_FOLLOW = 4

    @property
    def label(self):
        return self.value


@dataclass(frozen=True)
class TrackSpec:
    archetype: Archetype
    length_m: float
    lane_width_m: float
    curvature_profile: tuple  # ((arc_pos_m, curvature_1pm), ...)
    stop_points: tuple        # arc positions, strictly increasing
    speed_limit_mps: float
    seed: int
    obstacles: tuple = ()     # ((x_m, y_m, radius_m), ...) static discs

    def __post_init__(self):
        if not self.length_m >= 50.0:
            raise InvalidSpec(f"length_m must be >= 50, got {self.length_m}")
        if not 2.5 <= self.lane_width_m <= 5.0:
            raise InvalidSpec(f"lane_width_m must be in [2.5, 5], got {self.lane_width_m}")
        if not self.speed_limit_mps > 0:
            raise InvalidSpec("speed_limit_mps must be > 0")
        if len(self.curvature_profile) < 1:
            raise InvalidSpec("curvature_profile must have at least one point")
        positions = [s for s, _ in self.curvature_profile]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise InvalidSpec("curvature_profile arc positions must be strictly increasing")
        if any(abs(k) > 0.2 for _, k in self.curvature_profile):
            raise InvalidSpec("|curvature| must be <= 0.2 everywhere")
        if any(b <= a for a, b in zip(self.stop_points, self.stop_points[1:])):
            raise InvalidSpec("stop_points must be strictly increasing")
        if any(not 0.0 <= s <= self.length_m for s in self.stop_points):
            raise InvalidSpec("stop_points must lie within [0, length_m]")
        if any(r <= 0 for _, _, r in self.obstacles):
            raise InvalidSpec("obstacle radii must be > 0")

    @property
    def segment_label(self):
        return self.archetype.label


@dataclass
class StaticFeatureSample:
    centerline_dist: float
    direction_err: float
    proximity: float
    curb_dist_penalty: float


@dataclass
class TrackEnvironment:
    """Immutable after construction; safe for concurrent readers."""

    spec: TrackSpec
    centerline: np.ndarray  # (N, 4): x, y, heading, arc position
    cl_dist: np.ndarray     # grids, all (ny, nx) float64
    b_dist: np.ndarray
    prox: np.ndarray
    dir_cos: np.ndarray
    dir_sin: np.ndarray
    lat_off: np.ndarray
    arc_pos: np.ndarray
    origin: tuple           # (ox, oy)
    cell: float
    bounds: tuple = field(default=None)  # (xmin, xmax, ymin, ymax), grid node extent

    def __post_init__(self):
        ny, nx = self.cl_dist.shape
        ox, oy = self.origin
        self.bounds = (ox, ox + (nx - 1) * self.cell, oy, oy + (ny - 1) * self.cell)

    @property
    def lane_direction(self):
        return np.arctan2(self.dir_sin, self.dir_cos)

    @property
    def stop_points(self):
        return np.asarray(self.spec.stop_points, dtype=np.float64)

    @property
    def speed_limit_mps(self):
        return self.spec.speed_limit_mps

    @property
    def lane_half_width(self):
        return 0.5 * self.spec.lane_width_m

    def contains(self, x, y):
        xmin, xmax, ymin, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def grid_args(self):
        """Grid arrays and geometry in the order the kernels expect."""
        return (self.cl_dist, self.b_dist, self.prox, self.dir_cos,
                self.dir_sin, self.lat_off, self.arc_pos,
                self.origin[0], self.origin[1], self.cell)

    def start_state_tuple(self):
        """(x, y, heading, arc) of the first centerline sample."""
        return tuple(self.centerline[0, :4])


def _curvature_at(spec, s):
    pts = np.asarray(spec.curvature_profile, dtype=np.float64)
    return np.interp(s, pts[:, 0], pts[:, 1])


def _integrate_centerline(spec):
    """Sample the centerline every 0.5 m by integrating the curvature profile.

    Heading uses the trapezoid rule (exact for the piecewise-linear profile);
    positions advance in 0.1 m sub-steps with midpoint headings.
    """
    n = int(math.floor(spec.length_m / CENTERLINE_SPACING + 1e-9)) + 1
    out = np.empty((n, 4), dtype=np.float64)
    sub = 5
    h = CENTERLINE_SPACING / sub
    x, y, psi = 0.0, 0.0, 0.0
    s = 0.0
    out[0] = (x, y, psi, s)
    for i in range(1, n):
        for _ in range(sub):
            k0 = float(_curvature_at(spec, s))
            k1 = float(_curvature_at(spec, s + h))
            km = float(_curvature_at(spec, s + 0.5 * h))
            psi_mid = psi + (k0 + km) * (0.25 * h)
            x += h * math.cos(psi_mid)
            y += h * math.sin(psi_mid)
            psi += (k0 + k1) * (0.5 * h)
            s += h
        s = i * CENTERLINE_SPACING  # avoid drift of the arc coordinate
        out[i] = (x, y, _pyimpl.wrap_angle(psi), s)
    return out


def build_track(spec: TrackSpec) -> TrackEnvironment:
    """Rasterize the static feature grids for a track spec.

    Pure function of the spec: identical specs produce bit-identical grids.
    """
    if not isinstance(spec, TrackSpec):
        raise InvalidSpec("build_track expects a TrackSpec")
    centerline = _integrate_centerline(spec)
    pts = centerline[:, 0:2]
    headings = centerline[:, 2]

    ox = math.floor((pts[:, 0].min() - GRID_MARGIN) / GRID_CELL) * GRID_CELL
    oy = math.floor((pts[:, 1].min() - GRID_MARGIN) / GRID_CELL) * GRID_CELL
    nx = int(math.ceil((pts[:, 0].max() + GRID_MARGIN - ox) / GRID_CELL)) + 1
    ny = int(math.ceil((pts[:, 1].max() + GRID_MARGIN - oy) / GRID_CELL)) + 1

    gx = ox + GRID_CELL * np.arange(nx)
    gy = oy + GRID_CELL * np.arange(ny)
    qx, qy = np.meshgrid(gx, gy)  # (ny, nx)
    queries = np.column_stack([qx.ravel(), qy.ravel()])

    tree = cKDTree(pts)
    dist, idx = tree.query(queries)
    cl_dist = dist.reshape(ny, nx)
    near_heading = headings[idx]
    dir_cos = np.cos(near_heading).reshape(ny, nx)
    dir_sin = np.sin(near_heading).reshape(ny, nx)
    arc_pos = centerline[idx, 3].reshape(ny, nx)

    # signed lateral offset: projection onto the left normal of the
    # nearest sample (positive = left of centerline)
    dx = queries[:, 0] - pts[idx, 0]
    dy = queries[:, 1] - pts[idx, 1]
    lat = (-np.sin(near_heading)) * dx + np.cos(near_heading) * dy
    lat_off = lat.reshape(ny, nx)

    half = 0.5 * spec.lane_width_m
    nvec = np.column_stack([-np.sin(headings), np.cos(headings)])
    curbs = np.vstack([pts + half * nvec, pts - half * nvec])
    b_dist = cKDTree(curbs).query(queries)[0].reshape(ny, nx)

    if spec.obstacles:
        obs = np.asarray(spec.obstacles, dtype=np.float64)
        d = np.full(queries.shape[0], np.inf)
        for cxo, cyo, r in obs:
            d = np.minimum(d, np.hypot(queries[:, 0] - cxo, queries[:, 1] - cyo) - r)
        prox = np.exp(-np.maximum(d, 0.0) / PROXIMITY_SCALE).reshape(ny, nx)
    else:
        prox = np.zeros((ny, nx), dtype=np.float64)

    return TrackEnvironment(
        spec=spec,
        centerline=centerline,
        cl_dist=np.ascontiguousarray(cl_dist),
        b_dist=np.ascontiguousarray(b_dist),
        prox=np.ascontiguousarray(prox),
        dir_cos=np.ascontiguousarray(dir_cos),
        dir_sin=np.ascontiguousarray(dir_sin),
        lat_off=np.ascontiguousarray(lat_off),
        arc_pos=np.ascontiguousarray(arc_pos),
        origin=(ox, oy),
        cell=GRID_CELL,
    )


def query_static(env: TrackEnvironment, x: float, y: float, heading: float) -> StaticFeatureSample:
    """Interpolate the static features at a pose.

    Raises OutOfBounds outside the grid extent.
    """
    if not env.contains(x, y):
        raise OutOfBounds(f"query ({x:.2f}, {y:.2f}) outside bounds {env.bounds}")
    ox, oy = env.origin
    xa = np.asarray([float(x)])
    ya = np.asarray([float(y)])
    cd = float(_pyimpl.bilinear(env.cl_dist, xa, ya, ox, oy, env.cell)[0])
    bd = float(_pyimpl.bilinear(env.b_dist, xa, ya, ox, oy, env.cell)[0])
    px = float(_pyimpl.bilinear(env.prox, xa, ya, ox, oy, env.cell)[0])
    dc = float(_pyimpl.bilinear(env.dir_cos, xa, ya, ox, oy, env.cell)[0])
    ds = float(_pyimpl.bilinear(env.dir_sin, xa, ya, ox, oy, env.cell)[0])
    derr = float(_pyimpl.wrap_angle(heading - math.atan2(ds, dc))) ** 2
    return StaticFeatureSample(
        centerline_dist=cd,
        direction_err=derr,
        proximity=px,
        curb_dist_penalty=max(0.0, 1.0 - bd / env.lane_half_width),
    )
