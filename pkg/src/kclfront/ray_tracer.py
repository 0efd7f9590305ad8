"""Front propagation by rays: the characteristic ODEs of the eikonal equation.

A front is a polyline sampled uniformly in the parameter xi; each sample
carries the ray angle theta, so the unit normal is (cos theta, sin theta)
and the unit tangent is (-sin theta, cos theta). Points evolve by

    dx/dt = m cos(theta),  dy/dt = m sin(theta),
    dtheta/dt = -(-sin(theta) d/dx + cos(theta) d/dy) m,

i.e. the angle rate is minus the tangential derivative of the speed (rays
bend away from faster medium), matching theta_t = -m_xi/g in ray
coordinates. Integration is a classical 4th-order one-step method at fixed
dt. Rays are followed through crossings without pruning; multivalued
(folded) fronts are reported as-is.
"""

from dataclasses import dataclass, field

import numpy as np


def wrap_angle(theta):
    """Normalize angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)


@dataclass(frozen=True)
class SpeedField2:
    """Normal-speed field m(x, y) with its gradient supplier."""

    m_fn: callable
    grad_fn: callable

    def m(self, x, y):
        return self.m_fn(x, y)

    def grad_m(self, x, y):
        return self.grad_fn(x, y)

    def check_gradient(self, xs, ys, rtol=1e-5):
        """Verify grad_fn against central differences of m_fn."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        eps = 1e-5 * np.maximum(1.0, np.hypot(xs, ys))
        gx, gy = self.grad_fn(xs, ys)
        fdx = (self.m_fn(xs + eps, ys) - self.m_fn(xs - eps, ys)) / (2 * eps)
        fdy = (self.m_fn(xs, ys + eps) - self.m_fn(xs, ys - eps)) / (2 * eps)
        scale = np.maximum(1.0, np.abs(gx) + np.abs(gy))
        return bool(np.all(np.abs(gx - fdx) <= rtol * scale)
                    and np.all(np.abs(gy - fdy) <= rtol * scale))


def constant_field(m0=1.0):
    if m0 <= 0:
        raise ValueError("speed must be positive")
    return SpeedField2(
        m_fn=lambda x, y: np.full_like(np.asarray(x, dtype=float), m0),
        grad_fn=lambda x, y: (np.zeros_like(np.asarray(x, dtype=float)),
                              np.zeros_like(np.asarray(x, dtype=float))),
    )


def radial_field(eps, m0=1.0):
    """m = m0 + eps * r, radially varying about the origin."""

    def m_fn(x, y):
        return m0 + eps * np.hypot(x, y)

    def grad_fn(x, y):
        r = np.maximum(np.hypot(x, y), 1e-300)
        return eps * np.asarray(x) / r, eps * np.asarray(y) / r

    return SpeedField2(m_fn=m_fn, grad_fn=grad_fn)


@dataclass
class RayPoint:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        self.theta = float(wrap_angle(self.theta))


@dataclass
class Front2:
    """Ordered front samples, uniform in xi."""

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    xi_spacing: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.theta = wrap_angle(self.theta)
        if self.x.shape != self.y.shape or self.x.shape != self.theta.shape:
            raise ValueError("front coordinate arrays must share one shape")
        if self.x.size < 3:
            raise ValueError("front needs at least 3 points")
        if self.xi_spacing <= 0:
            raise ValueError("xi_spacing must be positive")

    @property
    def n_points(self):
        return self.x.size

    def point(self, i):
        return RayPoint(float(self.x[i]), float(self.y[i]), float(self.theta[i]))


def circle_front(r0, n, center=(0.0, 0.0), outward=True):
    """Circle of radius r0 with normals pointing outward (or inward)."""
    xi = 2.0 * np.pi * np.arange(n) / n
    x = center[0] + r0 * np.cos(xi)
    y = center[1] + r0 * np.sin(xi)
    theta = xi if outward else xi + np.pi
    return Front2(x, y, theta, xi_spacing=2.0 * np.pi / n)


def _deriv(x, y, theta, t_field):
    m = np.asarray(t_field.m(x, y), dtype=float)
    if np.any(m <= 0):
        raise RuntimeError("invalid speed along ray")
    gx, gy = t_field.grad_m(x, y)
    c, s = np.cos(theta), np.sin(theta)
    return m * c, m * s, s * np.asarray(gx) - c * np.asarray(gy)


def trace_rays(front0, field, t_end, dt):
    """Advance every front point along its ray; returns [(t, Front2), ...].

    Points with the same index across snapshots lie on one ray (xi = const).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = front0.x.copy()
    y = front0.y.copy()
    theta = front0.theta.astype(float).copy()
    out = [(0.0, Front2(x.copy(), y.copy(), theta.copy(), front0.xi_spacing))]
    t = 0.0
    tol = 1e-13 * max(1.0, abs(t_end))
    while t < t_end - tol:
        h = min(dt, t_end - t)
        k1 = _deriv(x, y, theta, field)
        k2 = _deriv(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], theta + 0.5 * h * k1[2], field)
        k3 = _deriv(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], theta + 0.5 * h * k2[2], field)
        k4 = _deriv(x + h * k3[0], y + h * k3[1], theta + h * k3[2], field)
        x = x + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y = y + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        theta = wrap_angle(theta + (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))
        t += h
        out.append((t, Front2(x.copy(), y.copy(), theta.copy(), front0.xi_spacing)))
    return out


def huygens_step(front, m_const, dt, corner_threshold=0.05):
    """Displace the front by m*dt along its normals, inserting circular arcs
    of radius m*dt at corners (adjacent-segment angle jump > threshold)."""
    if m_const <= 0 or dt <= 0:
        raise ValueError("m_const and dt must be positive")
    x, y, theta = front.x, front.y, front.theta
    n = x.size
    seg = np.arctan2(np.diff(y), np.diff(x))
    r = m_const * dt

    xs, ys, ths = [], [], []
    for k in range(n):
        is_corner = (
            0 < k < n - 1
            and abs(float(wrap_angle(seg[k] - seg[k - 1]))) > corner_threshold
        )
        if not is_corner:
            xs.append(x[k] + r * np.cos(theta[k]))
            ys.append(y[k] + r * np.sin(theta[k]))
            ths.append(theta[k])
            continue
        th_a = float(theta[k - 1])
        sweep = float(wrap_angle(theta[k + 1] - th_a))
        n_arc = max(3, int(np.ceil(abs(sweep) / 0.05)) + 1)
        for a in th_a + sweep * np.linspace(0.0, 1.0, n_arc):
            xs.append(x[k] + r * np.cos(a))
            ys.append(y[k] + r * np.sin(a))
            ths.append(a)
    return Front2(np.array(xs), np.array(ys), np.array(ths), front.xi_spacing)


@dataclass
class ConsistencyReport:
    """Residuals of the metric/angle evolution relations measured on a
    traced history: g_t = m*theta_xi and theta_t = -m_xi/g."""

    max_metric_residual: float
    max_angle_residual: float
    metric_residual: np.ndarray = field(repr=False, default=None)
    angle_residual: np.ndarray = field(repr=False, default=None)


def _unwrap_aligned(thetas):
    th = np.unwrap(thetas, axis=1)
    for k in range(1, th.shape[0]):
        off = np.round((th[k - 1, 0] - th[k, 0]) / (2 * np.pi))
        th[k] += 2 * np.pi * off
    return th


def check_ray_kcl_consistency(history, speed_field=None, g_floor_rel=1e-9):
    """Check a smooth traced history against the ray-coordinate relations.

    g is computed from g^2 = x_xi^2 + y_xi^2 by central differences. If no
    speed field is supplied, m along each ray is estimated from centered
    position differences in time. Residuals are reported over interior
    points and interior times.
    """
    if len(history) < 3:
        raise ValueError("need at least 3 snapshots")
    times = np.array([t for t, _ in history], dtype=float)
    X = np.stack([f.x for _, f in history])
    Y = np.stack([f.y for _, f in history])
    TH = _unwrap_aligned(np.stack([f.theta for _, f in history]))
    dxi = history[0][1].xi_spacing

    def d_xi(A):
        return (A[:, 2:] - A[:, :-2]) / (2.0 * dxi)

    def d_t(A):
        dt2 = (times[2:] - times[:-2])[:, None]
        return (A[2:] - A[:-2]) / dt2

    g = np.hypot(d_xi(X), d_xi(Y))
    if np.any(g <= g_floor_rel * np.max(g)):
        raise RuntimeError("front is singular, consistency undefined")

    # m at interior times, all xi columns
    if speed_field is not None:
        m = np.asarray(speed_field.m(X, Y), dtype=float)[1:-1]
    else:
        dt2 = (times[2:] - times[:-2])[:, None]
        m = np.hypot(X[2:] - X[:-2], Y[2:] - Y[:-2]) / dt2

    g_t = d_t(g)                       # interior times, interior xi
    th_xi = d_xi(TH)[1:-1]
    th_t = d_t(TH)[:, 1:-1]
    m_xi = d_xi(m)

    res_g = np.abs(g_t - m[:, 1:-1] * th_xi)
    res_th = np.abs(th_t + m_xi / g[1:-1])
    return ConsistencyReport(
        max_metric_residual=float(np.max(res_g)),
        max_angle_residual=float(np.max(res_th)),
        metric_residual=res_g,
        angle_residual=res_th,
    )
