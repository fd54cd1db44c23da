"""Pure-Python kernel backend.

Scalar control/dynamics kernels use plain floats and ``math`` (cheap to
call once per tick); grid kernels use vectorized numpy. The compiled
backend mirrors these signatures and the order of arithmetic, so the
two agree to floating-point roundoff on every input.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------- scalars

def clamp(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


def wrap_angle(a):
    """Normalize an angle to [-pi, pi)."""
    w = math.fmod(a + math.pi, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    return w - math.pi


def mix_thrust(throttle, steering):
    """Map (throttle, steering) onto (left, right) normalized commands.

    Inputs are clamped to [-1, 1] before mixing and the outputs are
    clamped again. Positive steering speeds up the left thruster, so
    the boat turns right (clockwise); negative steering turns left.
    """
    t = clamp(throttle, -1.0, 1.0)
    s = clamp(steering, -1.0, 1.0)
    left = clamp(t + s, -1.0, 1.0)
    right = clamp(t - s, -1.0, 1.0)
    return left, right


def pid_step(kp, ki, kd, integral, prev_error, initialized, error, dt, integ_limit):
    """One discrete PID update.

    The integral advances first (clamped to +-integ_limit), then the
    output is formed; the derivative is suppressed on the first call.
    Returns (output, new_integral).
    """
    integral = clamp(integral + error * dt, -integ_limit, integ_limit)
    if initialized:
        deriv = (error - prev_error) / dt
    else:
        deriv = 0.0
    out = kp * error + ki * integral + kd * deriv
    return out, integral


def slew_limit(desired, prev, max_delta):
    """Move prev toward desired by at most max_delta."""
    d = desired - prev
    if d > max_delta:
        return prev + max_delta
    if d < -max_delta:
        return prev - max_delta
    return desired


def thruster_forces(left, right, surge, yaw_rate, max_thrust_n, offset_m,
                    drag_lin_surge, drag_quad_surge, drag_lin_yaw, drag_quad_yaw):
    """Net surge force (N) and yaw moment (N*m) before disturbances.

    Left-heavy thrust gives a positive (clockwise) yaw moment.
    """
    force = (left + right) * max_thrust_n \
        - drag_lin_surge * surge - drag_quad_surge * surge * abs(surge)
    moment = (left - right) * max_thrust_n * offset_m \
        - drag_lin_yaw * yaw_rate - drag_quad_yaw * yaw_rate * abs(yaw_rate)
    return force, moment


def vessel_step(x, y, heading, surge, yaw_rate, t,
                left, right, mass, inertia, max_thrust_n, offset_m,
                drag_lin_surge, drag_quad_surge, drag_lin_yaw, drag_quad_yaw,
                current_e, current_n, dist_force, dist_moment, dt):
    """Semi-implicit Euler step of the planar vessel model.

    Rates update from forces first; position then integrates the new
    surge along the new heading plus the ambient current. Returns the
    advanced (x, y, heading, surge, yaw_rate, t) tuple.
    """
    force, moment = thruster_forces(
        left, right, surge, yaw_rate, max_thrust_n, offset_m,
        drag_lin_surge, drag_quad_surge, drag_lin_yaw, drag_quad_yaw)
    force += dist_force
    moment += dist_moment
    surge = surge + dt * force / mass
    yaw_rate = yaw_rate + dt * moment / inertia
    heading = wrap_angle(heading + dt * yaw_rate)
    x = x + dt * (surge * math.sin(heading) + current_e)
    y = y + dt * (surge * math.cos(heading) + current_n)
    return x, y, heading, surge, yaw_rate, t + dt


# ------------------------------------------------------------ grid kernels

def mae(a, b):
    """Mean absolute difference over two equal-shape float64 grids."""
    return float(np.mean(np.abs(a - b)))


def region_mae(pred, src_a, src_b, mask):
    """Region-split mean absolute error.

    Pixels where mask != 0 compare against src_a, the rest against
    src_b; the sum is averaged over the full grid.
    """
    m = mask != 0
    total = np.abs(pred - src_a)[m].sum() + np.abs(pred - src_b)[~m].sum()
    return float(total / pred.size)


def hinge_cosine_mean(feats, pre_feats, alpha):
    """Mean of max(0, alpha - cos(f_i, g_i)) over paired feature rows."""
    dots = np.einsum("ij,ij->i", feats, pre_feats)
    norms = np.linalg.norm(feats, axis=1) * np.linalg.norm(pre_feats, axis=1)
    hinge = alpha - dots / norms
    np.maximum(hinge, 0.0, out=hinge)
    return float(hinge.mean())


def minmax_unit(src):
    """Min-max normalize a grid to [0, 1]; constant grids map to zeros."""
    lo = float(src.min())
    hi = float(src.max())
    scale = hi - lo
    if scale == 0.0:
        return np.zeros_like(src)
    return (src - lo) / scale


def bilinear_resize(src, out_h, out_w):
    """Bilinear resample with half-pixel centers and edge clamping."""
    in_h, in_w = src.shape
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (in_w / out_w) - 0.5
    y0f = np.floor(ys)
    x0f = np.floor(xs)
    wy = (ys - y0f)[:, None]
    wx = (xs - x0f)[None, :]
    y0 = np.clip(y0f.astype(np.int64), 0, in_h - 1)
    y1 = np.clip(y0f.astype(np.int64) + 1, 0, in_h - 1)
    x0 = np.clip(x0f.astype(np.int64), 0, in_w - 1)
    x1 = np.clip(x0f.astype(np.int64) + 1, 0, in_w - 1)
    a = src[np.ix_(y0, x0)]
    b = src[np.ix_(y0, x1)]
    c = src[np.ix_(y1, x0)]
    d = src[np.ix_(y1, x1)]
    top = (1.0 - wx) * a + wx * b
    bot = (1.0 - wx) * c + wx * d
    return (1.0 - wy) * top + wy * bot


def affine_fit(pred, ref):
    """Least-squares (scale, shift) mapping pred onto ref.

    Returns (scale, shift, pred_variance); callers must treat zero
    variance as undefined (scale/shift are nan in that case).
    """
    pm = float(pred.mean())
    rm = float(ref.mean())
    dp = pred - pm
    var = float((dp * dp).sum())
    if var == 0.0:
        return math.nan, math.nan, 0.0
    cov = float((dp * (ref - rm)).sum())
    scale = cov / var
    shift = rm - scale * pm
    return scale, shift, var
