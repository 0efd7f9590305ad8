"""Smooth-regime 3-D kinematical conservation laws on a (xi1, xi2) grid.

The conserved densities are the scaled tangent vectors U = g1*u and
V = g2*v of the two surface-coordinate families; both evolve with the ray
velocity m*n as flux:

    (g1 u)_t - (m n)_{xi1} = 0,    (g2 v)_t - (m n)_{xi2} = 0,

with n = u x v / |u x v|. Storing (U, V) keeps the update exactly
conservative and the recovered u, v unit by construction. The geometrical
solenoidal constraint (g2 v)_{xi1} - (g1 u)_{xi2} = 0 holds initially for
any parametrized surface and is preserved by the continuum equations; its
discrete drift is monitored, not enforced.

This module handles smooth evolution only: runs abort with a diagnostic
once neighboring normals bend more than 0.5 rad across up to 3 cells
(kink-line onset, outside this module's validity).
"""

from dataclasses import dataclass

import numpy as np

from .closure import init_closure_from_arrays, recover_field


def normal3(u, v):
    """Unit normal u x v / |u x v| of a tangent pair."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cr = np.cross(u, v)
    nrm = np.linalg.norm(cr)
    if nrm <= 1e-10 * max(np.linalg.norm(u) * np.linalg.norm(v), 1e-300):
        raise ValueError("degenerate tangent frame")
    return cr / nrm


@dataclass
class KclState3:
    """Surface state on a uniform (xi1, xi2) lattice.

    U = g1*u and V = g2*v are (n1, n2, 3); m is (n1, n2). boundary gives
    the treatment per axis ('periodic' or 'extrapolate').
    """

    d1: float
    d2: float
    U: np.ndarray
    V: np.ndarray
    m: np.ndarray
    boundary: tuple = ("periodic", "periodic")
    time: float = 0.0

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        self.m = np.asarray(self.m, dtype=float)
        if self.U.ndim != 3 or self.U.shape[2] != 3 or self.U.shape != self.V.shape:
            raise ValueError("U and V must have shape (n1, n2, 3)")
        if self.m.shape != self.U.shape[:2]:
            raise ValueError("m must have shape (n1, n2)")
        if self.d1 <= 0 or self.d2 <= 0:
            raise ValueError("grid spacings must be positive")
        for b in self.boundary:
            if b not in ("periodic", "extrapolate"):
                raise ValueError("boundary must be 'periodic' or 'extrapolate'")
        if np.any(self.g1 <= 0) or np.any(self.g2 <= 0):
            raise ValueError("tangent vectors must be nonzero")
        if np.any(self.m <= 0):
            raise ValueError("speed must be positive")
        sin_uv = self.tube_area / (self.g1 * self.g2)
        if np.any(sin_uv <= 1e-10):
            raise ValueError("degenerate tangent frame")

    @property
    def g1(self):
        return np.linalg.norm(self.U, axis=2)

    @property
    def g2(self):
        return np.linalg.norm(self.V, axis=2)

    @property
    def u(self):
        return self.U / self.g1[..., None]

    @property
    def v(self):
        return self.V / self.g2[..., None]

    @property
    def tube_area(self):
        """Ray-tube area |U x V| = g1*g2*|u x v| per cell."""
        return np.linalg.norm(np.cross(self.U, self.V), axis=2)

    @property
    def normals(self):
        cr = np.cross(self.U, self.V)
        return cr / np.linalg.norm(cr, axis=2)[..., None]

    def copy(self):
        return KclState3(self.d1, self.d2, self.U.copy(), self.V.copy(),
                         self.m.copy(), self.boundary, self.time)


def state_from_parametrization(xfun, dx1fun, dx2fun, xi1, xi2, m0, boundary=("periodic", "periodic")):
    """Sample an explicit surface x(xi1, xi2) with analytic partials."""
    X1, X2 = np.meshgrid(xi1, xi2, indexing="ij")
    U = np.stack(dx1fun(X1, X2), axis=-1).astype(float)
    V = np.stack(dx2fun(X1, X2), axis=-1).astype(float)
    m = np.full(X1.shape, float(m0))
    state = KclState3(d1=float(xi1[1] - xi1[0]), d2=float(xi2[1] - xi2[0]),
                      U=U, V=V, m=m, boundary=boundary)
    anchor = np.array(xfun(xi1[0], xi2[0]), dtype=float)
    return state, anchor


def init_closure3(kind, state0):
    """Closure with the ray-tube area as the geometric weight."""
    return init_closure_from_arrays(kind, state0.tube_area, state0.m)


def _pad_axis(a, axis, mode):
    if mode == "periodic":
        return np.concatenate((np.take(a, [-1], axis=axis), a,
                               np.take(a, [0], axis=axis)), axis=axis)
    return np.concatenate((np.take(a, [0], axis=axis), a,
                           np.take(a, [-1], axis=axis)), axis=axis)


def _flux3(U, V, closure, m_warm):
    """G = -m*n, the common flux of both conservation-law families."""
    cr = np.cross(U, V)
    area = np.linalg.norm(cr, axis=2)
    if np.any(area <= 0):
        raise RuntimeError("degenerate tangent frame")
    m = recover_field(closure, area, m_prev=m_warm)
    return -m[..., None] * cr / area[..., None], m


def _spectral_radius3(U, V, closure, m_warm, wrt):
    """Spectral radius per cell of the 3x3 Jacobian of G = -m*n with
    respect to U (wrt=0) or V (wrt=1), by central finite differences."""
    base = U if wrt == 0 else V
    scale = np.linalg.norm(base, axis=2)
    eps = 1e-2 * np.maximum(scale, 1e-8)    # speed bound: favor smoothness
    J = np.empty(base.shape[:2] + (3, 3))
    for k in range(3):
        dP = np.zeros_like(base)
        dP[..., k] = eps
        if wrt == 0:
            Gp, _ = _flux3(U + dP, V, closure, m_warm)
            Gm, _ = _flux3(U - dP, V, closure, m_warm)
        else:
            Gp, _ = _flux3(U, V + dP, closure, m_warm)
            Gm, _ = _flux3(U, V - dP, closure, m_warm)
        J[..., :, k] = (Gp - Gm) / (2.0 * eps[..., None])
    eig = np.linalg.eigvals(J.reshape(-1, 3, 3))
    return np.max(np.abs(eig), axis=1).reshape(base.shape[:2])


def step3(state, closure, cfl, dt_cap=None):
    """One conservative update of (U, V); smooth data contract, no kink
    capture. Dissipation per direction as in the 2-D scheme."""
    if not 0 < cfl < 1:
        raise ValueError("cfl must lie in (0, 1)")
    U, V, m = state.U, state.V, state.m
    G, _ = _flux3(U, V, closure, m)

    fluxes = []
    lam_over_dx = 0.0
    for axis, dxi in ((0, state.d1), (1, state.d2)):
        mode = state.boundary[axis]
        Up = _pad_axis(U, axis, mode)
        Vp = _pad_axis(V, axis, mode)
        mp = _pad_axis(m, axis, mode)
        Gp, _ = _flux3(Up, Vp, closure_padded(closure, axis, mode), mp)
        rho = _spectral_radius3(Up, Vp, closure_padded(closure, axis, mode), mp, wrt=axis)

        cons = Up if axis == 0 else Vp
        take = lambda a, sl: a[sl] if axis == 0 else a[:, sl]
        dq = take(cons, np.s_[1:]) - take(cons, np.s_[:-1])
        dG = take(Gp, np.s_[1:]) - take(Gp, np.s_[:-1])
        dq_norm = np.linalg.norm(dq, axis=2)
        qscale = np.linalg.norm(take(cons, np.s_[1:]), axis=2) \
            + np.linalg.norm(take(cons, np.s_[:-1]), axis=2)
        guard = dq_norm > 1e-12 * (1.0 + qscale)
        secant = np.where(guard, np.linalg.norm(dG, axis=2) / np.where(guard, dq_norm, 1.0), 0.0)
        rho_face = np.maximum(take(rho, np.s_[1:]), take(rho, np.s_[:-1]))
        alpha = np.maximum(rho_face, 0.25 * secant)
        lam = np.maximum(rho_face, secant)
        lam_over_dx += 1.2 * float(np.max(lam)) / dxi

        fhat = 0.5 * (take(Gp, np.s_[1:]) + take(Gp, np.s_[:-1])) - 0.5 * alpha[..., None] * dq
        fluxes.append(fhat)

    dt = cfl / max(lam_over_dx, 1e-12)
    if dt_cap is not None:
        dt = min(dt, dt_cap)

    f1, f2 = fluxes
    U_new = U - (dt / state.d1) * (f1[1:, :, :] - f1[:-1, :, :])
    V_new = V - (dt / state.d2) * (f2[:, 1:, :] - f2[:, :-1, :])

    if np.any(np.linalg.norm(U_new, axis=2) <= 0) or np.any(np.linalg.norm(V_new, axis=2) <= 0):
        raise RuntimeError("metric collapse")
    area = np.linalg.norm(np.cross(U_new, V_new), axis=2)
    if np.any(area <= 0):
        raise RuntimeError("degenerate tangent frame")
    m_new = recover_field(closure, area, m_prev=m)
    return KclState3(d1=state.d1, d2=state.d2, U=U_new, V=V_new, m=m_new,
                     boundary=state.boundary, time=state.time + dt)


def closure_padded(closure, axis, mode):
    """Closure whose per-cell invariant is padded to match ghosted arrays."""
    if closure.kind == "constant_m":
        return closure
    from .closure import Closure
    return Closure(kind="wnlrt", fval=_pad_axis(closure.fval, axis, mode))


def solenoidal_residual(state):
    """Central-difference (g2 v)_{xi1} - (g1 u)_{xi2} per cell and its
    max Euclidean norm."""
    def central(a, axis, dxi, mode):
        ap = _pad_axis(a, axis, mode)
        if axis == 0:
            return (ap[2:, :, :] - ap[:-2, :, :]) / (2.0 * dxi)
        return (ap[:, 2:, :] - ap[:, :-2, :]) / (2.0 * dxi)

    res = central(state.V, 0, state.d1, state.boundary[0]) \
        - central(state.U, 1, state.d2, state.boundary[1])
    return res, float(np.max(np.linalg.norm(res, axis=2)))


@dataclass
class SurfaceMesh:
    """Reconstructed surface points plus the path-order loop diagnostics."""

    points: np.ndarray           # (n1, n2, 3), row-then-column integration
    loop_defect: float           # max |row-first - column-first|
    defect_bound: float          # sum over cells of |discrete curl|*cell area


def reconstruct_surface(state, anchor):
    """Path-integrate dx = U dxi1 + V dxi2 from the anchor (trapezoid rule,
    row-then-column). The difference against column-then-row integration is
    the loop-closure defect, bounded by the accumulated discrete curl."""
    U, V = state.U, state.V
    n1, n2 = U.shape[:2]
    d1, d2 = state.d1, state.d2
    anchor = np.asarray(anchor, dtype=float)

    def cum0(q, axis, dxi):
        out = np.zeros_like(q)
        if axis == 0:
            out[1:] = np.cumsum(0.5 * (q[1:] + q[:-1]) * dxi, axis=0)
        else:
            out[:, 1:] = np.cumsum(0.5 * (q[:, 1:] + q[:, :-1]) * dxi, axis=1)
        return out

    # row-then-column: along xi1 at xi2=0, then along xi2 everywhere
    row = cum0(U[:, :1, :], 0, d1)
    pts_rc = anchor + row + cum0(V, 1, d2)
    # column-then-row
    col = cum0(V[:1, :, :], 1, d2)
    pts_cr = anchor + col + cum0(U, 0, d1)

    defect = float(np.max(np.linalg.norm(pts_rc - pts_cr, axis=2)))
    loop = 0.5 * d1 * (U[1:, :-1] + U[:-1, :-1]) \
        + 0.5 * d2 * (V[1:, 1:] + V[1:, :-1]) \
        - 0.5 * d1 * (U[1:, 1:] + U[:-1, 1:]) \
        - 0.5 * d2 * (V[:-1, 1:] + V[:-1, :-1])
    bound = float(np.sum(np.linalg.norm(loop, axis=2)))
    return SurfaceMesh(points=pts_rc, loop_defect=defect, defect_bound=bound)


def max_normal_bend(state, max_sep=3):
    """Largest angle between normals of cells up to max_sep apart."""
    n = state.normals
    worst = 0.0
    for axis in (0, 1):
        periodic = state.boundary[axis] == "periodic"
        for k in range(1, max_sep + 1):
            shifted = np.roll(n, -k, axis=axis)
            dots = np.clip(np.sum(n * shifted, axis=2), -1.0, 1.0)
            if not periodic:
                if axis == 0:
                    dots = dots[:-k, :]
                else:
                    dots = dots[:, :-k]
            worst = max(worst, float(np.max(np.arccos(dots))))
    return worst


@dataclass
class Evolution3:
    states: list
    anchors: list
    n_steps: int = 0


def evolve3(state0, closure, t_end, cfl=0.45, snap_every=0.25,
            anchor0=(0.0, 0.0, 0.0), kink_bend_limit=0.5):
    """Repeated step3 with snapshots; aborts with a diagnostic when the
    normal field bends beyond the smooth-regime limit."""
    if t_end <= state0.time:
        raise ValueError("t_end must exceed the initial time")
    state = state0.copy()
    anchor = np.asarray(anchor0, dtype=float).copy()
    tol = 1e-12 * max(1.0, abs(t_end))
    states = [state.copy()]
    anchors = [anchor.copy()]
    next_snap = state0.time + snap_every
    n_steps = 0

    while state.time < t_end - tol:
        target = min(next_snap, t_end)
        old = state
        state = step3(state, closure, cfl, dt_cap=target - state.time)
        n_steps += 1
        bend = max_normal_bend(state)
        if bend > kink_bend_limit:
            raise RuntimeError(
                "kink onset at t=%.6g (normal bend %.3f rad exceeds %.3f): "
                "smooth-regime contract violated" % (state.time, bend, kink_bend_limit))
        dt = state.time - old.time
        n0 = old.normals[0, 0]
        anchor = anchor + dt * old.m[0, 0] * n0
        if state.time >= target - tol:
            states.append(state.copy())
            anchors.append(anchor.copy())
            if abs(target - next_snap) < tol:
                next_snap += snap_every
    return Evolution3(states=states, anchors=anchors, n_steps=n_steps)


@dataclass(frozen=True)
class SpeedField3:
    """Speed field m(x) in space with its gradient supplier."""

    m_fn: callable
    grad_fn: callable


def constant_field3(m0=1.0):
    return SpeedField3(m_fn=lambda x: float(m0),
                       grad_fn=lambda x: np.zeros(3))


def linear_field3(eps, axis=0, m0=1.0):
    def grad(x):
        g = np.zeros(3)
        g[axis] = eps
        return g
    return SpeedField3(m_fn=lambda x: m0 + eps * float(np.asarray(x)[axis]),
                       grad_fn=grad)


def ray_step3(x, n, speed_field, dt):
    """One 4th-order step of dx/dt = m*n, dn/dt = -(grad m - n<n, grad m>);
    n is renormalized afterward. For constant m the normal is unchanged and
    the ray is straight."""
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)

    def deriv(xc, nc):
        m = speed_field.m_fn(xc)
        gm = np.asarray(speed_field.grad_fn(xc), dtype=float)
        tang = gm - nc * np.dot(nc, gm)
        return m * nc, -tang

    k1 = deriv(x, n)
    k2 = deriv(x + 0.5 * dt * k1[0], n + 0.5 * dt * k1[1])
    k3 = deriv(x + 0.5 * dt * k2[0], n + 0.5 * dt * k2[1])
    k4 = deriv(x + dt * k3[0], n + dt * k3[1])
    x_new = x + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    n_new = n + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return x_new, n_new / np.linalg.norm(n_new)
