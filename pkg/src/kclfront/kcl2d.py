"""Finite-volume solver for the 2-D kinematical conservation laws.

In ray coordinates (xi, t) the front geometry evolves by the pair of
conservation laws

    (g sin(theta))_t + (m cos(theta))_xi = 0,
    (g cos(theta))_t - (m sin(theta))_xi = 0,

for the metric g, ray angle theta and normal speed m, with m supplied by a
closure model. The conserved pair (h1, h2) = (g sin(theta), g cos(theta))
is updated with a local Lax-Friedrichs flux. Fronts with angle
discontinuities (kinks) are admissible weak solutions; kink jumps obey the
jump relations K*[g sin(theta)] = [m cos(theta)] and
K*[g cos(theta)] = -[m sin(theta)], where K is the kink's xi-speed.

Dissipation speed: the adjacent cells' numerical-Jacobian spectral radii
give the hyperbolic speed bound; the system loses strict hyperbolicity in
the rotational direction (the Roe secant there is skew with zero real
speed), which is regularized with a quarter of the secant magnitude. The
time step uses the full secant plus a 1.2 safety factor.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .closure import recover_field, response_deriv
from .ray_tracer import Front2, wrap_angle


@dataclass
class KclState2:
    """Front state (m, theta, g) on a uniform xi grid.

    theta is stored unwrapped along the grid (interior adjacent differences
    below pi); a closed front may wind, so the periodic seam is exempt.
    """

    xi_min: float
    xi_spacing: float
    m: np.ndarray
    theta: np.ndarray
    g: np.ndarray
    boundary: str = "periodic"
    time: float = 0.0

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if not (self.m.shape == self.theta.shape == self.g.shape):
            raise ValueError("m, theta, g must share one shape")
        if self.m.ndim != 1 or self.m.size < 3:
            raise ValueError("state needs at least 3 cells")
        if self.xi_spacing <= 0:
            raise ValueError("xi_spacing must be positive")
        if self.boundary not in ("periodic", "extrapolate"):
            raise ValueError("boundary must be 'periodic' or 'extrapolate'")
        if np.any(self.g <= 0):
            raise ValueError("metric must be positive in every cell")
        if np.any(self.m <= 0):
            raise ValueError("speed must be positive in every cell")
        if self.m.size > 1 and np.max(np.abs(np.diff(self.theta))) >= np.pi:
            raise ValueError("theta must be unwrapped (adjacent jumps below pi)")

    @property
    def n_cells(self):
        return self.m.size

    @property
    def xi(self):
        return self.xi_min + self.xi_spacing * np.arange(self.n_cells)

    @property
    def xi_extent(self):
        n = self.n_cells if self.boundary == "periodic" else self.n_cells - 1
        return n * self.xi_spacing

    def copy(self):
        return KclState2(self.xi_min, self.xi_spacing, self.m.copy(),
                         self.theta.copy(), self.g.copy(), self.boundary, self.time)


@dataclass
class ConservedPair:
    """h1 = g sin(theta), h2 = g cos(theta)."""

    h1: np.ndarray
    h2: np.ndarray


@dataclass
class KinkRecord:
    xi_location: float
    time: float
    theta_jump: float
    m_jump: float
    g_jump: float
    speed_K: float = math.nan


def to_conserved(state):
    return ConservedPair(h1=state.g * np.sin(state.theta),
                         h2=state.g * np.cos(state.theta))


def from_conserved(pair, m, xi_min=0.0, xi_spacing=1.0, boundary="periodic",
                   time=0.0, theta_ref=None):
    """Invert the conserved pair: g = |(h1, h2)|, theta = atan2(h1, h2).

    With theta_ref given, each cell's angle is taken on the branch nearest
    the reference (used by the time stepper to preserve winding); otherwise
    the atan2 values are unwrapped along the grid.
    """
    h1 = np.asarray(pair.h1, dtype=float)
    h2 = np.asarray(pair.h2, dtype=float)
    g = np.hypot(h1, h2)
    if np.any(g == 0):
        raise RuntimeError("metric collapse")
    theta = np.arctan2(h1, h2)
    if theta_ref is None:
        theta = np.unwrap(theta)
    else:
        theta = theta_ref + wrap_angle(theta - theta_ref)
    return KclState2(xi_min=xi_min, xi_spacing=xi_spacing, m=np.asarray(m, dtype=float),
                     theta=theta, g=g, boundary=boundary, time=time)


def kcl_flux(state):
    """Cellwise flux (f1, f2) = (m cos(theta), -m sin(theta))."""
    return state.m * np.cos(state.theta), -state.m * np.sin(state.theta)


def _pad(a, boundary, width=1):
    if boundary == "periodic":
        return np.concatenate((a[-width:], a, a[:width]))
    return np.concatenate((np.repeat(a[:1], width), a, np.repeat(a[-1:], width)))


def _spectral_radius(g, m, closure):
    """Spectral radius of the 2x2 flux Jacobian d(f1,f2)/d(h1,h2) per cell.

    The flux is equivariant under rotations of theta, so the Jacobian's
    eigenvalues depend only on (g, m, closure). Evaluated in the cell's own
    frame (theta = 0) it is [[0, dm/dg], [-m/g, 0]] exactly, with dm/dg the
    closure response; its spectral radius is sqrt(max(-m/g * dm/dg, 0)).
    This form is rotation-invariant to rounding, which a coordinate-frame
    finite-difference estimate is not."""
    dmdg = response_deriv(closure, g, m)
    return np.sqrt(np.maximum(-dmdg * m / g, 0.0))


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def step(state, closure, cfl, dt_cap=None, second_order=False):
    """One conservative finite-volume update; returns the advanced state.

    dt = cfl * dxi / lambda_max with lambda_max estimated per interface;
    dt_cap additionally bounds the step (used to land on snapshot times).
    """
    if not 0 < cfl < 1:
        raise ValueError("cfl must lie in (0, 1)")
    h1 = state.g * np.sin(state.theta)
    h2 = state.g * np.cos(state.theta)

    h1p = _pad(h1, state.boundary)
    h2p = _pad(h2, state.boundary)
    mp = _pad(state.m, state.boundary)
    gp = np.hypot(h1p, h2p)
    f1p = mp * h2p / gp
    f2p = -mp * h1p / gp

    rho = _spectral_radius(gp, mp, closure)

    dh1 = h1p[1:] - h1p[:-1]
    dh2 = h2p[1:] - h2p[:-1]
    df1 = f1p[1:] - f1p[:-1]
    df2 = f2p[1:] - f2p[:-1]
    dh_norm = np.hypot(dh1, dh2)
    guard = dh_norm > 1e-12 * (1.0 + np.abs(gp[1:]) + np.abs(gp[:-1]))
    secant = np.where(guard, np.hypot(df1, df2) / np.where(guard, dh_norm, 1.0), 0.0)

    rho_face = np.maximum(rho[1:], rho[:-1])
    alpha = np.maximum(rho_face, 0.25 * secant)
    lam = np.maximum(rho_face, secant)

    lam_raw = float(np.max(lam)) if lam.size else 0.0
    scale = max(np.max(np.abs(h1)), np.max(np.abs(h2)), np.max(state.m), 1.0)
    nontrivial = (np.ptp(h1) + np.ptp(h2) + np.ptp(state.m)) > 1e-10 * scale
    if lam_raw <= 1e-12 and nontrivial:
        raise RuntimeError("degenerate system")
    lam_max = max(1.2 * lam_raw, 1e-12)
    dt = cfl * state.xi_spacing / lam_max
    if dt_cap is not None:
        dt = min(dt, dt_cap)

    if second_order:
        h1p2 = _pad(h1, state.boundary, 2)
        h2p2 = _pad(h2, state.boundary, 2)
        mp2 = _pad(state.m, state.boundary, 2)

        def faces(q):
            s = _minmod(q[1:-1] - q[:-2], q[2:] - q[1:-1])
            left = q[1:-1] + 0.5 * s     # right-going value at cell's right face
            right = q[1:-1] - 0.5 * s    # left-going value at cell's left face
            return left[:-1], right[1:]

        h1L, h1R = faces(h1p2)
        h2L, h2R = faces(h2p2)
        mL, mR = faces(mp2)
        gL = np.hypot(h1L, h2L)
        gR = np.hypot(h1R, h2R)
        fl1, fl2 = mL * h2L / gL, -mL * h1L / gL
        fr1, fr2 = mR * h2R / gR, -mR * h1R / gR
        flux1 = 0.5 * (fl1 + fr1) - 0.5 * alpha * (h1R - h1L)
        flux2 = 0.5 * (fl2 + fr2) - 0.5 * alpha * (h2R - h2L)
    else:
        flux1 = 0.5 * (f1p[:-1] + f1p[1:]) - 0.5 * alpha * dh1
        flux2 = 0.5 * (f2p[:-1] + f2p[1:]) - 0.5 * alpha * dh2

    lam_dx = dt / state.xi_spacing
    h1n = h1 - lam_dx * (flux1[1:] - flux1[:-1])
    h2n = h2 - lam_dx * (flux2[1:] - flux2[:-1])

    g_new = np.hypot(h1n, h2n)
    if np.any(g_new <= 0):
        raise RuntimeError("metric collapse")
    m_new = recover_field(closure, g_new, m_prev=state.m)
    theta_new = state.theta + wrap_angle(np.arctan2(h1n, h2n) - state.theta)
    return KclState2(xi_min=state.xi_min, xi_spacing=state.xi_spacing,
                     m=m_new, theta=theta_new, g=g_new,
                     boundary=state.boundary, time=state.time + dt)


def conserved_integral(state, xi_l, xi_r):
    """(integral of h1, integral of h2) over [xi_l, xi_r], cells owned by
    nodes (midpoint rule), partial cells pro-rated linearly."""
    if not xi_l < xi_r:
        raise ValueError("empty integration range")
    lo_dom = state.xi_min
    hi_dom = state.xi_min + state.xi_extent
    if xi_l < lo_dom - 1e-12 or xi_r > hi_dom + 1e-12:
        raise ValueError("integration range outside the state domain")
    dxi = state.xi_spacing
    centers = state.xi
    c_lo = np.maximum(centers - 0.5 * dxi, lo_dom)
    c_hi = np.minimum(centers + 0.5 * dxi, hi_dom)
    overlap = np.clip(np.minimum(xi_r, c_hi) - np.maximum(xi_l, c_lo), 0.0, None)
    if state.boundary == "periodic":
        # the trailing half-cell of the domain belongs to the first node
        wrap_lo = max(xi_l, hi_dom - 0.5 * dxi)
        overlap[0] += max(0.0, min(xi_r, hi_dom) - wrap_lo)
    h1 = state.g * np.sin(state.theta)
    h2 = state.g * np.cos(state.theta)
    return float(np.sum(h1 * overlap)), float(np.sum(h2 * overlap))


def reconstruct_front(state, anchor):
    """Integrate x_xi = -g sin(theta), y_xi = g cos(theta) from the anchor
    (the physical point at xi = xi_min) by cumulative trapezoids."""
    h1 = state.g * np.sin(state.theta)
    h2 = state.g * np.cos(state.theta)
    dxi = state.xi_spacing

    def cumtrapz0(q):
        out = np.zeros_like(q)
        out[1:] = np.cumsum(0.5 * (q[1:] + q[:-1]) * dxi)
        return out

    x = anchor[0] + cumtrapz0(-h1)
    y = anchor[1] + cumtrapz0(h2)
    return Front2(x, y, state.theta.copy(), xi_spacing=dxi)


def rh_residual(K, left, right):
    """Norm of the unsatisfied remainder of the two jump relations for a
    candidate kink speed K; left/right are (m, theta, g) triples."""
    m_l, th_l, g_l = left
    m_r, th_r, g_r = right
    jh1 = g_l * np.sin(th_l) - g_r * np.sin(th_r)
    jh2 = g_l * np.cos(th_l) - g_r * np.cos(th_r)
    jf1 = m_l * np.cos(th_l) - m_r * np.cos(th_r)
    jf2 = -(m_l * np.sin(th_l) - m_r * np.sin(th_r))
    return float(np.hypot(K * jh1 - jf1, K * jh2 - jf2))


def kink_speed(left, right):
    """Least-squares kink speed from the two jump relations.

    Returns (K, residual); residual is 0 iff the pair is exactly
    jump-compatible. left/right are (m, theta, g) triples.
    """
    m_l, th_l, g_l = left
    m_r, th_r, g_r = right
    jh1 = g_l * np.sin(th_l) - g_r * np.sin(th_r)
    jh2 = g_l * np.cos(th_l) - g_r * np.cos(th_r)
    jf1 = m_l * np.cos(th_l) - m_r * np.cos(th_r)
    jf2 = -(m_l * np.sin(th_l) - m_r * np.sin(th_r))
    denom = jh1 ** 2 + jh2 ** 2
    if denom == 0.0:
        raise ValueError("no kink")
    K = (jh1 * jf1 + jh2 * jf2) / denom
    return float(K), float(np.hypot(K * jh1 - jf1, K * jh2 - jf2))


def detect_kinks(state, theta_threshold=0.05):
    """Flag angle discontinuities: interfaces where |d theta| across up to 3
    cells exceeds the threshold at a local maximum. Jumps are measured
    between plateau values 3 cells beyond the flagged group on each side.
    speed_K is NaN here; tracking across snapshots assigns it."""
    if theta_threshold <= 0:
        raise ValueError("theta_threshold must be positive")
    th = state.theta
    n = state.n_cells
    periodic = state.boundary == "periodic"

    def at(i):
        return int(i) % n if periodic else min(max(int(i), 0), n - 1)

    n_if = n if periodic else n - 1
    w = np.empty(n_if)
    for j in range(n_if):
        w[j] = th[at(j + 2)] - th[at(j - 1)]
    absw = np.abs(w)

    flagged = []
    for j in range(n_if):
        if absw[j] <= theta_threshold:
            continue
        prev_w = absw[(j - 1) % n_if] if (periodic or j > 0) else -np.inf
        next_w = absw[(j + 1) % n_if] if (periodic or j < n_if - 1) else -np.inf
        if absw[j] >= prev_w and absw[j] >= next_w:
            flagged.append(j)
    if not flagged:
        return []

    # group flagged interfaces within 2 of each other (periodic-aware)
    groups = [[flagged[0]]]
    for j in flagged[1:]:
        if j - groups[-1][-1] <= 2:
            groups[-1].append(j)
        else:
            groups.append([j])
    if periodic and len(groups) > 1 and (flagged[0] + n_if - flagged[-1]) <= 2:
        groups[0] = groups.pop() + groups[0]

    records = []
    dxi = state.xi_spacing
    for grp in groups:
        base = grp[-1] - n_if if (periodic and grp[0] > grp[-1]) else grp[0]
        jlo, jhi = base, base + len(grp) - 1
        window = range(jlo - 1, jhi + 2)
        weights = np.array([abs(th[at(j + 1)] - th[at(j)]) for j in window])
        pos = state.xi_min + dxi * (np.array(list(window), dtype=float) + 0.5)
        wsum = float(np.sum(weights))
        xi_loc = float(np.sum(weights * pos) / wsum) if wsum > 0 else float(pos[len(grp)])
        if periodic:
            xi_loc = state.xi_min + float(np.mod(xi_loc - state.xi_min, state.xi_extent))
        i_l, i_r = at(jlo - 3), at(jhi + 4)
        records.append(KinkRecord(
            xi_location=xi_loc,
            time=state.time,
            theta_jump=float(th[i_l] - th[i_r]),
            m_jump=float(state.m[i_l] - state.m[i_r]),
            g_jump=float(state.g[i_l] - state.g[i_r]),
        ))
    records.sort(key=lambda r: r.xi_location)
    return records


def track_kink_speeds(kink_snapshots, period=None, match_radius=None, min_points=3):
    """Group per-snapshot kink detections into tracks and fit each track's
    xi-speed by least squares; returns records of persistent tracks with
    speed_K filled in."""
    tracks = []
    for t, recs in kink_snapshots:
        for rec in recs:
            best, best_d = None, np.inf
            for tr in tracks:
                last = tr[-1]
                d = abs(rec.xi_location - last.xi_location)
                if period is not None:
                    d = min(d, period - d)
                if last.time < t and d < best_d:
                    best, best_d = tr, d
            if best is not None and (match_radius is None or best_d <= match_radius):
                best.append(rec)
            else:
                tracks.append([rec])

    out = []
    for tr in tracks:
        if len(tr) < min_points:
            continue
        ts = np.array([r.time for r in tr])
        xs = np.array([r.xi_location for r in tr])
        if period is not None:
            xs = xs.copy()
            for k in range(1, len(xs)):
                delta = xs[k] - xs[k - 1]
                xs[k] -= period * np.round(delta / period)
        # fit over the trailing half: robust to formation transients
        k0 = min(len(ts) - min_points, len(ts) // 2)
        speed = float(np.polyfit(ts[k0:], xs[k0:], 1)[0])
        for r in tr:
            r.speed_K = speed
        out.extend(tr)
    out.sort(key=lambda r: (r.time, r.xi_location))
    return out


@dataclass
class Evolution2:
    """Snapshots of an evolve() run: states, the physical anchor point per
    snapshot, and kink records (persistent tracks, speed-fitted)."""

    states: list
    anchors: list
    kinks: list
    kink_snapshots: list = field(repr=False, default_factory=list)
    n_steps: int = 0


def evolve(state0, closure, t_end, cfl=0.45, snap_every=0.1, anchor0=(0.0, 0.0),
           theta_threshold=0.05, second_order=False):
    """Repeated step() with snapshot capture and kink detection/tracking.

    The anchor (physical point of the xi = xi_min ray) is advanced with
    forward Euler, matching the interior scheme's time accuracy.
    """
    if t_end <= state0.time:
        raise ValueError("t_end must exceed the initial time")
    if snap_every <= 0:
        raise ValueError("snap_every must be positive")
    state = state0.copy()
    anchor = (float(anchor0[0]), float(anchor0[1]))
    tol = 1e-12 * max(1.0, abs(t_end))

    states = [state.copy()]
    anchors = [anchor]
    kink_snapshots = [(state.time, detect_kinks(state, theta_threshold))]
    next_snap = state0.time + snap_every
    n_steps = 0

    while state.time < t_end - tol:
        target = min(next_snap, t_end)
        old = state
        state = step(state, closure, cfl, dt_cap=target - state.time,
                     second_order=second_order)
        n_steps += 1
        dt = state.time - old.time
        anchor = (anchor[0] + dt * old.m[0] * np.cos(old.theta[0]),
                  anchor[1] + dt * old.m[0] * np.sin(old.theta[0]))
        if state.time >= target - tol:
            states.append(state.copy())
            anchors.append(anchor)
            kink_snapshots.append((state.time, detect_kinks(state, theta_threshold)))
            if abs(target - next_snap) < tol:
                next_snap += snap_every

    period = state0.xi_extent if state0.boundary == "periodic" else None
    radius = max(15.0 * state0.xi_spacing, 0.05 * state0.xi_extent)
    kinks = track_kink_speeds(kink_snapshots, period=period, match_radius=radius)
    return Evolution2(states=states, anchors=anchors, kinks=kinks,
                      kink_snapshots=kink_snapshots, n_steps=n_steps)
