# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled planner kernels.

Same arithmetic as `_pyimpl.py`, written as per-policy C loops.  Any change
here must be mirrored there (the test suite compares both backends).
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport atan2, ceil, cos, fabs, floor, sin, tan

cnp.import_array()

BACKEND_NAME = "ext"

cdef double TWO_PI = 2.0 * np.pi
cdef double PI = np.pi


cdef inline double _wrap(double a) nogil:
    return a - TWO_PI * ceil((a - PI) / TWO_PI)


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    arr = np.asarray(a, dtype=np.float64)
    return arr - TWO_PI * np.ceil((arr - PI) / TWO_PI)


def rollout_policies(start, steer, accel, double dt, int steps_per_segment,
                     double wheelbase, double xmin, double xmax,
                     double ymin, double ymax):
    """Euler rollout of piecewise-constant controls for P policies."""
    cdef double[:, ::1] st_v = np.ascontiguousarray(steer, dtype=np.float64)
    cdef double[:, ::1] ac_v = np.ascontiguousarray(accel, dtype=np.float64)
    cdef Py_ssize_t P = st_v.shape[0]
    cdef Py_ssize_t S = st_v.shape[1]
    cdef Py_ssize_t T = S * steps_per_segment

    states_arr = np.empty((P, T + 1, 5), dtype=np.float64)
    clamped_arr = np.zeros((P, T + 1), dtype=np.uint8)
    cdef double[:, :, ::1] states = states_arr
    cdef unsigned char[:, ::1] clamped = clamped_arr

    cdef double x0 = start[0], y0 = start[1], psi0 = start[2]
    cdef double v0 = start[3], t0 = start[4]

    cdef Py_ssize_t p, k, seg
    cdef double x, y, psi, v, cx, cy, cpsi, cv
    cdef bint frozen, out

    with nogil:
        for p in range(P):
            x = x0; y = y0; psi = psi0; v = v0
            frozen = False
            states[p, 0, 0] = x
            states[p, 0, 1] = y
            states[p, 0, 2] = psi
            states[p, 0, 3] = v
            states[p, 0, 4] = t0
            for k in range(T):
                if not frozen:
                    seg = k // steps_per_segment
                    cx = x + v * cos(psi) * dt
                    cy = y + v * sin(psi) * dt
                    cpsi = _wrap(psi + (v / wheelbase) * tan(st_v[p, seg]) * dt)
                    cv = v + ac_v[p, seg] * dt
                    if cv < 0.0:
                        cv = 0.0
                    out = cx < xmin or cx > xmax or cy < ymin or cy > ymax
                    if cx < xmin:
                        cx = xmin
                    elif cx > xmax:
                        cx = xmax
                    if cy < ymin:
                        cy = ymin
                    elif cy > ymax:
                        cy = ymax
                    if out:
                        cv = 0.0
                        frozen = True
                    x = cx; y = cy; psi = cpsi; v = cv
                states[p, k + 1, 0] = x
                states[p, k + 1, 1] = y
                states[p, k + 1, 2] = psi
                states[p, k + 1, 3] = v
                states[p, k + 1, 4] = t0 + (k + 1) * dt
                clamped[p, k + 1] = 1 if frozen else 0

    return states_arr, clamped_arr


cdef inline double _bilin(const double[:, ::1] f, double x, double y,
                          double ox, double oy, double cell,
                          Py_ssize_t ny, Py_ssize_t nx) nogil:
    cdef double gx = (x - ox) / cell
    cdef double gy = (y - oy) / cell
    cdef Py_ssize_t ix = <Py_ssize_t>floor(gx)
    cdef Py_ssize_t iy = <Py_ssize_t>floor(gy)
    cdef double tx, ty
    if ix < 0:
        ix = 0
    elif ix > nx - 2:
        ix = nx - 2
    if iy < 0:
        iy = 0
    elif iy > ny - 2:
        iy = ny - 2
    tx = gx - ix
    ty = gy - iy
    if tx < 0.0:
        tx = 0.0
    elif tx > 1.0:
        tx = 1.0
    if ty < 0.0:
        ty = 0.0
    elif ty > 1.0:
        ty = 1.0
    return ((1.0 - ty) * ((1.0 - tx) * f[iy, ix] + tx * f[iy, ix + 1])
            + ty * ((1.0 - tx) * f[iy + 1, ix] + tx * f[iy + 1, ix + 1]))


def integrate_features(states, clamped, steer, accel, int steps_per_segment,
                       double dt, discounts,
                       cl_dist, b_dist, prox, dir_cos, dir_sin, lat_off, arc_pos,
                       double ox, double oy, double cell,
                       double lane_half_width, double speed_limit,
                       stop_points, double stop_radius, double wheelbase,
                       double progress_floor):
    """Discounted path-integral features (P, 15) for rolled-out policies."""
    cdef double[:, :, ::1] stt = np.ascontiguousarray(states, dtype=np.float64)
    cdef unsigned char[:, ::1] clm = np.ascontiguousarray(clamped, dtype=np.uint8)
    cdef double[:, ::1] st_v = np.ascontiguousarray(steer, dtype=np.float64)
    cdef double[::1] disc = np.ascontiguousarray(discounts, dtype=np.float64)
    cdef const double[:, ::1] g_cd = cl_dist
    cdef const double[:, ::1] g_bd = b_dist
    cdef const double[:, ::1] g_px = prox
    cdef const double[:, ::1] g_dc = dir_cos
    cdef const double[:, ::1] g_ds = dir_sin
    cdef const double[:, ::1] g_lat = lat_off
    cdef const double[:, ::1] g_arc = arc_pos
    cdef double[::1] stops = np.ascontiguousarray(stop_points, dtype=np.float64)

    cdef Py_ssize_t P = stt.shape[0]
    cdef Py_ssize_t T1 = stt.shape[1]
    cdef Py_ssize_t T = T1 - 1
    cdef Py_ssize_t ny = g_cd.shape[0]
    cdef Py_ssize_t nx = g_cd.shape[1]
    cdef Py_ssize_t n_stops = stops.shape[0]

    out_arr = np.empty((P, 15), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    # work rows: 0 a_lon, 1 a_lat, 2 cd, 3 bd, 4 lat, 5 dir_err, 6 curb,
    #            7 f_speed, 8 px, 9 jerk_lon, 10 jerk_lat
    work_arr = np.empty((11, T1), dtype=np.float64)
    cdef double[:, ::1] w = work_arr

    cdef Py_ssize_t p, k, j, seg, idx10, first_off, kmin
    cdef double x, y, psi, v, sarc0, sarcT, ld, de
    cdef double acc, half_dt, sarc, vt, bdv, cdv, latv, prev_lat
    cdef double min_clear, progress, denom, val
    cdef bint near, has_off, crossed, is_cl

    half_dt = 0.5 * dt
    sarc0 = 0.0
    sarcT = 0.0

    with nogil:
        for p in range(P):
            for k in range(T1):
                x = stt[p, k, 0]
                y = stt[p, k, 1]
                psi = stt[p, k, 2]
                v = stt[p, k, 3]
                j = k if k < T else T - 1
                seg = j // steps_per_segment
                is_cl = clm[p, k] != 0

                cdv = _bilin(g_cd, x, y, ox, oy, cell, ny, nx)
                bdv = _bilin(g_bd, x, y, ox, oy, cell, ny, nx)
                latv = _bilin(g_lat, x, y, ox, oy, cell, ny, nx)
                sarc = _bilin(g_arc, x, y, ox, oy, cell, ny, nx)
                ld = atan2(_bilin(g_ds, x, y, ox, oy, cell, ny, nx),
                           _bilin(g_dc, x, y, ox, oy, cell, ny, nx))
                de = _wrap(psi - ld)

                near = False
                for j in range(n_stops):
                    if fabs(sarc - stops[j]) <= stop_radius:
                        near = True
                        break
                vt = 0.0 if near else speed_limit

                w[1, k] = v * v * fabs(tan(st_v[p, seg])) / wheelbase
                w[2, k] = cdv
                w[3, k] = bdv
                w[4, k] = latv
                w[5, k] = de * de
                val = 1.0 - bdv / lane_half_width
                w[6, k] = 1.0 if is_cl else (val if val > 0.0 else 0.0)
                w[7, k] = ((v - vt) / speed_limit) ** 2
                w[8, k] = _bilin(g_px, x, y, ox, oy, cell, ny, nx)
                if k == 0:
                    sarc0 = sarc
                if k == T:
                    sarcT = sarc

            for k in range(T):
                w[0, k] = (stt[p, k + 1, 3] - stt[p, k, 3]) / dt
            w[0, T] = w[0, T - 1]
            for k in range(T):
                w[9, k] = (w[0, k + 1] - w[0, k]) / dt
                w[10, k] = (w[1, k + 1] - w[1, k]) / dt
            w[9, T] = w[9, T - 1]
            w[10, T] = w[10, T - 1]

            acc = 0.0
            for k in range(T):
                acc += (disc[k] * fabs(w[0, k]) + disc[k + 1] * fabs(w[0, k + 1])) * half_dt
            out[p, 0] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * fabs(w[9, k]) + disc[k + 1] * fabs(w[9, k + 1])) * half_dt
            out[p, 1] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * w[7, k] + disc[k + 1] * w[7, k + 1]) * half_dt
            out[p, 2] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * w[1, k] + disc[k + 1] * w[1, k + 1]) * half_dt
            out[p, 3] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * fabs(w[10, k]) + disc[k + 1] * fabs(w[10, k + 1])) * half_dt
            out[p, 4] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * w[2, k] + disc[k + 1] * w[2, k + 1]) * half_dt
            out[p, 5] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * w[5, k] + disc[k + 1] * w[5, k + 1]) * half_dt
            out[p, 6] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * w[8, k] + disc[k + 1] * w[8, k + 1]) * half_dt
            out[p, 7] = acc
            acc = 0.0
            for k in range(T):
                acc += (disc[k] * w[6, k] + disc[k + 1] * w[6, k + 1]) * half_dt
            out[p, 8] = acc

            # 9: centerline-distance growth after the lateral offset changes sign
            acc = 0.0
            crossed = False
            prev_lat = w[4, 0]
            for k in range(1, T1):
                latv = w[4, k]
                if not crossed and prev_lat * latv < 0.0:
                    crossed = True
                if crossed:
                    val = w[2, k] - w[2, k - 1]
                    if val > 0.0:
                        acc += disc[k] * val
                prev_lat = latv
            out[p, 9] = acc

            # 10: delay until |lateral offset| first drops below 0.2 m
            idx10 = T
            for k in range(T1):
                if fabs(w[4, k]) < 0.2:
                    idx10 = k
                    break
            out[p, 10] = disc[idx10] * (idx10 * dt)

            # 11: first step off the drivable area
            has_off = False
            first_off = 0
            for k in range(T1):
                if w[2, k] > lane_half_width or clm[p, k] != 0:
                    has_off = True
                    first_off = k
                    break
            out[p, 11] = disc[first_off] if has_off else 0.0

            # 12: tightest boundary clearance along the trace
            kmin = 0
            min_clear = w[3, 0]
            for k in range(1, T1):
                if w[3, k] < min_clear:
                    min_clear = w[3, k]
                    kmin = k
            val = 1.0 - min_clear
            out[p, 12] = disc[kmin] * (val if val > 0.0 else 0.0)

            # 13: terminal heading error
            out[p, 13] = disc[T] * w[5, T]

            # 14: shortfall of arc progress vs the start-speed reference
            progress = sarcT - sarc0
            denom = stt[p, 0, 3]
            if denom < progress_floor:
                denom = progress_floor
            denom = denom * (T * dt)
            val = 1.0 - progress / denom
            out[p, 14] = disc[T] * (val if val > 0.0 else 0.0)

    return out_arr
