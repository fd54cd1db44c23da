# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirrors ``pure`` function-for-function with the same operation order;
see that module for semantics. Scalars run as straight C doubles, grid
kernels as typed-memoryview loops.
"""

from libc.math cimport atan2, cos, fabs, floor, fmod, sin, sqrt, NAN, M_PI

import numpy as np

cdef double TWO_PI = 2.0 * M_PI


cdef inline double _clamp(double x, double lo, double hi) noexcept nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


cdef inline double _wrap(double a) noexcept nogil:
    cdef double w = fmod(a + M_PI, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    return w - M_PI


def clamp(double x, double lo, double hi):
    return _clamp(x, lo, hi)


def wrap_angle(double a):
    """Normalize an angle to [-pi, pi)."""
    return _wrap(a)


def mix_thrust(double throttle, double steering):
    cdef double t = _clamp(throttle, -1.0, 1.0)
    cdef double s = _clamp(steering, -1.0, 1.0)
    return _clamp(t + s, -1.0, 1.0), _clamp(t - s, -1.0, 1.0)


def pid_step(double kp, double ki, double kd, double integral,
             double prev_error, bint initialized, double error, double dt,
             double integ_limit):
    cdef double deriv
    integral = _clamp(integral + error * dt, -integ_limit, integ_limit)
    if initialized:
        deriv = (error - prev_error) / dt
    else:
        deriv = 0.0
    cdef double out = kp * error + ki * integral + kd * deriv
    return out, integral


def slew_limit(double desired, double prev, double max_delta):
    cdef double d = desired - prev
    if d > max_delta:
        return prev + max_delta
    if d < -max_delta:
        return prev - max_delta
    return desired


cdef inline void _forces(double left, double right, double surge,
                         double yaw_rate, double max_thrust_n, double offset_m,
                         double dls, double dqs, double dly, double dqy,
                         double *force, double *moment) noexcept nogil:
    force[0] = (left + right) * max_thrust_n \
        - dls * surge - dqs * surge * fabs(surge)
    moment[0] = (left - right) * max_thrust_n * offset_m \
        - dly * yaw_rate - dqy * yaw_rate * fabs(yaw_rate)


def thruster_forces(double left, double right, double surge, double yaw_rate,
                    double max_thrust_n, double offset_m,
                    double drag_lin_surge, double drag_quad_surge,
                    double drag_lin_yaw, double drag_quad_yaw):
    cdef double force, moment
    _forces(left, right, surge, yaw_rate, max_thrust_n, offset_m,
            drag_lin_surge, drag_quad_surge, drag_lin_yaw, drag_quad_yaw,
            &force, &moment)
    return force, moment


def vessel_step(double x, double y, double heading, double surge,
                double yaw_rate, double t, double left, double right,
                double mass, double inertia, double max_thrust_n,
                double offset_m, double drag_lin_surge, double drag_quad_surge,
                double drag_lin_yaw, double drag_quad_yaw,
                double current_e, double current_n,
                double dist_force, double dist_moment, double dt):
    cdef double force, moment
    _forces(left, right, surge, yaw_rate, max_thrust_n, offset_m,
            drag_lin_surge, drag_quad_surge, drag_lin_yaw, drag_quad_yaw,
            &force, &moment)
    force += dist_force
    moment += dist_moment
    surge = surge + dt * force / mass
    yaw_rate = yaw_rate + dt * moment / inertia
    heading = _wrap(heading + dt * yaw_rate)
    x = x + dt * (surge * sin(heading) + current_e)
    y = y + dt * (surge * cos(heading) + current_n)
    return x, y, heading, surge, yaw_rate, t + dt


def mae(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            acc += fabs(a[i, j] - b[i, j])
    return acc / (a.shape[0] * a.shape[1])


def region_mae(double[:, ::1] pred, double[:, ::1] src_a,
               double[:, ::1] src_b, unsigned char[:, ::1] mask):
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            if mask[i, j]:
                acc += fabs(pred[i, j] - src_a[i, j])
            else:
                acc += fabs(pred[i, j] - src_b[i, j])
    return acc / (pred.shape[0] * pred.shape[1])


def hinge_cosine_mean(double[:, ::1] feats, double[:, ::1] pre_feats,
                      double alpha):
    cdef Py_ssize_t i, j
    cdef double dot, na, nb, hinge
    cdef double acc = 0.0
    for i in range(feats.shape[0]):
        dot = 0.0
        na = 0.0
        nb = 0.0
        for j in range(feats.shape[1]):
            dot += feats[i, j] * pre_feats[i, j]
            na += feats[i, j] * feats[i, j]
            nb += pre_feats[i, j] * pre_feats[i, j]
        hinge = alpha - dot / (sqrt(na) * sqrt(nb))
        if hinge > 0.0:
            acc += hinge
    return acc / feats.shape[0]


def minmax_unit(double[:, ::1] src):
    cdef Py_ssize_t i, j
    cdef double lo = src[0, 0]
    cdef double hi = src[0, 0]
    cdef double v, scale
    for i in range(src.shape[0]):
        for j in range(src.shape[1]):
            v = src[i, j]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
    out_arr = np.empty((src.shape[0], src.shape[1]), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    scale = hi - lo
    if scale == 0.0:
        for i in range(src.shape[0]):
            for j in range(src.shape[1]):
                out[i, j] = 0.0
        return out_arr
    for i in range(src.shape[0]):
        for j in range(src.shape[1]):
            out[i, j] = (src[i, j] - lo) / scale
    return out_arr


def bilinear_resize(double[:, ::1] src, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t in_h = src.shape[0]
    cdef Py_ssize_t in_w = src.shape[1]
    out_arr = np.empty((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, y0, y1, x0, x1
    cdef double ys, xs, y0f, x0f, wy, wx, top, bot
    cdef double sy = in_h / <double>out_h
    cdef double sx = in_w / <double>out_w
    for i in range(out_h):
        ys = (i + 0.5) * sy - 0.5
        y0f = floor(ys)
        wy = ys - y0f
        y0 = <Py_ssize_t>y0f
        y1 = y0 + 1
        if y0 < 0:
            y0 = 0
        if y0 > in_h - 1:
            y0 = in_h - 1
        if y1 < 0:
            y1 = 0
        if y1 > in_h - 1:
            y1 = in_h - 1
        for j in range(out_w):
            xs = (j + 0.5) * sx - 0.5
            x0f = floor(xs)
            wx = xs - x0f
            x0 = <Py_ssize_t>x0f
            x1 = x0 + 1
            if x0 < 0:
                x0 = 0
            if x0 > in_w - 1:
                x0 = in_w - 1
            if x1 < 0:
                x1 = 0
            if x1 > in_w - 1:
                x1 = in_w - 1
            top = (1.0 - wx) * src[y0, x0] + wx * src[y0, x1]
            bot = (1.0 - wx) * src[y1, x0] + wx * src[y1, x1]
            out[i, j] = (1.0 - wy) * top + wy * bot
    return out_arr


def affine_fit(double[:, ::1] pred, double[:, ::1] ref):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n = pred.shape[0] * pred.shape[1]
    cdef double psum = 0.0
    cdef double rsum = 0.0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            psum += pred[i, j]
            rsum += ref[i, j]
    cdef double pm = psum / n
    cdef double rm = rsum / n
    cdef double var = 0.0
    cdef double cov = 0.0
    cdef double dp
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            dp = pred[i, j] - pm
            var += dp * dp
            cov += dp * (ref[i, j] - rm)
    if var == 0.0:
        return NAN, NAN, 0.0
    cdef double scale = cov / var
    return scale, rm - scale * pm, var
