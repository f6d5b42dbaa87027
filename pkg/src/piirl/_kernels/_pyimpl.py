"""NumPy fallback for the hot planner kernels.

Mirrors the arithmetic of the compiled core (`_core.pyx`) operation for
operation: vectorized across policies, sequential over time steps, so both
backends agree to floating-point roundoff.  Keep the two files in sync.
"""

import numpy as np

BACKEND_NAME = "python"

_TWO_PI = 2.0 * np.pi


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    return a - _TWO_PI * np.ceil((a - np.pi) / _TWO_PI)


def rollout_policies(start, steer, accel, dt, steps_per_segment, wheelbase,
                     xmin, xmax, ymin, ymax):
    """Euler rollout of piecewise-constant controls for P policies.

    start: (5,) [x, y, heading, speed, time]; steer/accel: (P, S).
    Returns (states, clamped): states (P, T+1, 5) with T = S*steps_per_segment,
    clamped (P, T+1) uint8.  A policy leaving the bounds is frozen at the
    clamped position with zero speed for the remaining steps.
    """
    steer = np.ascontiguousarray(steer, dtype=np.float64)
    accel = np.ascontiguousarray(accel, dtype=np.float64)
    P, S = steer.shape
    T = S * steps_per_segment
    t0 = float(start[4])

    states = np.empty((P, T + 1, 5), dtype=np.float64)
    clamped = np.zeros((P, T + 1), dtype=np.uint8)

    x = np.full(P, float(start[0]))
    y = np.full(P, float(start[1]))
    psi = np.full(P, float(start[2]))
    v = np.full(P, float(start[3]))
    frozen = np.zeros(P, dtype=bool)

    states[:, 0, 0] = x
    states[:, 0, 1] = y
    states[:, 0, 2] = psi
    states[:, 0, 3] = v
    states[:, 0, 4] = t0

    for k in range(T):
        seg = k // steps_per_segment
        st = steer[:, seg]
        ac = accel[:, seg]

        cx = x + v * np.cos(psi) * dt
        cy = y + v * np.sin(psi) * dt
        cpsi = wrap_angle(psi + (v / wheelbase) * np.tan(st) * dt)
        cv = np.maximum(0.0, v + ac * dt)

        out = (cx < xmin) | (cx > xmax) | (cy < ymin) | (cy > ymax)
        cx = np.clip(cx, xmin, xmax)
        cy = np.clip(cy, ymin, ymax)
        cv = np.where(out, 0.0, cv)

        active = ~frozen
        x = np.where(active, cx, x)
        y = np.where(active, cy, y)
        psi = np.where(active, cpsi, psi)
        v = np.where(active, cv, v)
        frozen = frozen | (active & out)

        states[:, k + 1, 0] = x
        states[:, k + 1, 1] = y
        states[:, k + 1, 2] = psi
        states[:, k + 1, 3] = v
        states[:, k + 1, 4] = t0 + (k + 1) * dt
        clamped[:, k + 1] = frozen

    return states, clamped


def bilinear(field, x, y, ox, oy, cell):
    """Bilinear interpolation of a (ny, nx) field at world points (x, y)."""
    ny, nx = field.shape
    gx = (x - ox) / cell
    gy = (y - oy) / cell
    ix = np.clip(np.floor(gx).astype(np.int64), 0, nx - 2)
    iy = np.clip(np.floor(gy).astype(np.int64), 0, ny - 2)
    tx = np.clip(gx - ix, 0.0, 1.0)
    ty = np.clip(gy - iy, 0.0, 1.0)
    f00 = field[iy, ix]
    f01 = field[iy, ix + 1]
    f10 = field[iy + 1, ix]
    f11 = field[iy + 1, ix + 1]
    return (1.0 - ty) * ((1.0 - tx) * f00 + tx * f01) + ty * ((1.0 - tx) * f10 + tx * f11)


def integrate_features(states, clamped, steer, accel, steps_per_segment, dt,
                       discounts,
                       cl_dist, b_dist, prox, dir_cos, dir_sin, lat_off, arc_pos,
                       ox, oy, cell,
                       lane_half_width, speed_limit,
                       stop_points, stop_radius, wheelbase, progress_floor):
    """Discounted path-integral features (P, 15) for rolled-out policies.

    Per-state running costs (indices 0-8) are integrated by the trapezoid
    rule with the per-state discount; indices 9-14 are event/terminal terms
    weighted by the discount at their event step.
    """
    states = np.asarray(states, dtype=np.float64)
    P, T1, _ = states.shape
    T = T1 - 1
    x = states[:, :, 0]
    y = states[:, :, 1]
    psi = states[:, :, 2]
    v = states[:, :, 3]
    clamped = np.asarray(clamped, dtype=bool)
    disc = np.asarray(discounts, dtype=np.float64)

    # control value active at each state (terminal state keeps the last one)
    kidx = np.minimum(np.arange(T1), T - 1) // steps_per_segment
    st = np.asarray(steer, dtype=np.float64)[:, kidx]

    cd = bilinear(cl_dist, x, y, ox, oy, cell)
    bd = bilinear(b_dist, x, y, ox, oy, cell)
    px = bilinear(prox, x, y, ox, oy, cell)
    dc = bilinear(dir_cos, x, y, ox, oy, cell)
    dsn = bilinear(dir_sin, x, y, ox, oy, cell)
    lat = bilinear(lat_off, x, y, ox, oy, cell)
    sarc = bilinear(arc_pos, x, y, ox, oy, cell)

    a_lon = np.empty((P, T1))
    a_lon[:, :T] = (v[:, 1:] - v[:, :-1]) / dt
    a_lon[:, T] = a_lon[:, T - 1]
    jerk_lon = np.empty((P, T1))
    jerk_lon[:, :T] = (a_lon[:, 1:] - a_lon[:, :-1]) / dt
    jerk_lon[:, T] = jerk_lon[:, T - 1]

    a_lat = v * v * np.abs(np.tan(st)) / wheelbase
    jerk_lat = np.empty((P, T1))
    jerk_lat[:, :T] = (a_lat[:, 1:] - a_lat[:, :-1]) / dt
    jerk_lat[:, T] = jerk_lat[:, T - 1]

    stops = np.asarray(stop_points, dtype=np.float64)
    if stops.size:
        near_stop = (np.abs(sarc[:, :, None] - stops[None, None, :])
                     <= stop_radius).any(axis=2)
    else:
        near_stop = np.zeros((P, T1), dtype=bool)
    v_tgt = np.where(near_stop, 0.0, speed_limit)
    f_speed = ((v - v_tgt) / speed_limit) ** 2

    dir_err = wrap_angle(psi - np.arctan2(dsn, dc)) ** 2
    curb = np.where(clamped, 1.0, np.maximum(0.0, 1.0 - bd / lane_half_width))
    off_area = (cd > lane_half_width) | clamped

    def trapz(f):
        g = disc[None, :] * f
        return ((g[:, :-1] + g[:, 1:]) * (0.5 * dt)).sum(axis=1)

    out = np.empty((P, 15), dtype=np.float64)
    out[:, 0] = trapz(np.abs(a_lon))
    out[:, 1] = trapz(np.abs(jerk_lon))
    out[:, 2] = trapz(f_speed)
    out[:, 3] = trapz(a_lat)
    out[:, 4] = trapz(np.abs(jerk_lat))
    out[:, 5] = trapz(cd)
    out[:, 6] = trapz(dir_err)
    out[:, 7] = trapz(px)
    out[:, 8] = trapz(curb)

    # 9: centerline-distance growth after the lateral offset changes sign
    cross = lat[:, :-1] * lat[:, 1:] < 0.0
    crossed = np.cumsum(cross, axis=1) > 0
    inc = np.maximum(0.0, cd[:, 1:] - cd[:, :-1])
    out[:, 9] = (disc[None, 1:] * inc * crossed).sum(axis=1)

    # 10: delay until |lateral offset| first drops below 0.2 m
    inside = np.abs(lat) < 0.2
    has_in = inside.any(axis=1)
    first_in = np.argmax(inside, axis=1)
    idx10 = np.where(has_in, first_in, T)
    delay = idx10 * dt
    out[:, 10] = disc[idx10] * delay

    # 11: first step off the drivable area
    has_off = off_area.any(axis=1)
    first_off = np.argmax(off_area, axis=1)
    out[:, 11] = np.where(has_off, disc[first_off], 0.0)

    # 12: tightest boundary clearance along the trace
    kmin = np.argmin(bd, axis=1)
    min_clear = bd[np.arange(P), kmin]
    out[:, 12] = disc[kmin] * np.maximum(0.0, 1.0 - min_clear)

    # 13: terminal heading error
    out[:, 13] = disc[T] * dir_err[:, T]

    # 14: shortfall of arc progress vs the start-speed reference
    progress = sarc[:, T] - sarc[:, 0]
    denom = np.maximum(v[:, 0], progress_floor) * (T * dt)
    out[:, 14] = disc[T] * np.maximum(0.0, 1.0 - progress / denom)

    return out
