"""1-D scalar conservation laws: weak solutions, jump speeds, admissibility.

The conserved density H(u) and flux F(u) are user-supplied callables that
must accept numpy arrays. Discontinuity speeds follow the jump relation
S*[H] = [F]; admissibility of a jump is the strict entropy inequality
a(u_r) < S < a(u_l) for the characteristic speed a = F'/H', valid when a
is monotone increasing between the two states (convex flux for H = u).
Admissibility for non-convex flux (Oleinik-type conditions) is out of
scope and not exposed.
"""

from dataclasses import dataclass

import numpy as np

from .rootfind import newton_bisection


@dataclass(frozen=True)
class ScalarClaw:
    """A scalar conservation law d/dt H(u) + d/dx F(u) = 0."""

    density_fn: callable
    flux_fn: callable
    density_deriv: callable
    flux_deriv: callable

    def char_speed(self, u):
        """Characteristic speed a(u) = F'(u) / H'(u)."""
        return self.flux_deriv(u) / self.density_deriv(u)

    def check_derivatives(self, u_samples, rtol=1e-6):
        """Verify the supplied derivatives against central differences."""
        u = np.asarray(u_samples, dtype=float)
        eps = 1e-6 * np.maximum(np.abs(u), 1.0)
        for fn, dfn in ((self.density_fn, self.density_deriv),
                        (self.flux_fn, self.flux_deriv)):
            fd = (fn(u + eps) - fn(u - eps)) / (2.0 * eps)
            exact = dfn(u)
            scale = np.maximum(np.abs(exact), 1.0)
            if np.any(np.abs(fd - exact) > rtol * scale):
                return False
        return True


@dataclass(frozen=True)
class Grid1:
    """Uniform 1-D cell grid on [x_min, x_max]."""

    x_min: float
    x_max: float
    n_cells: int
    boundary: str = "outflow"

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("grid requires x_min < x_max")
        if self.n_cells < 2:
            raise ValueError("grid requires n_cells >= 2")
        if self.boundary not in ("periodic", "outflow"):
            raise ValueError("boundary must be 'periodic' or 'outflow'")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self):
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


def burgers():
    """H = u, F = u^2/2."""
    return ScalarClaw(
        density_fn=lambda u: np.asarray(u, dtype=float),
        flux_fn=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
        density_deriv=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        flux_deriv=lambda u: np.asarray(u, dtype=float),
    )


def advection(c):
    """H = u, F = c*u."""
    return ScalarClaw(
        density_fn=lambda u: np.asarray(u, dtype=float),
        flux_fn=lambda u: c * np.asarray(u, dtype=float),
        density_deriv=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        flux_deriv=lambda u: np.full_like(np.asarray(u, dtype=float), c),
    )


def rh_speed(claw, u_l, u_r):
    """Jump speed S = [F]/[H] across a discontinuity between u_l and u_r."""
    h_l = float(claw.density_fn(u_l))
    h_r = float(claw.density_fn(u_r))
    if h_l == h_r:
        raise ValueError("no jump in conserved density")
    return (float(claw.flux_fn(u_l)) - float(claw.flux_fn(u_r))) / (h_l - h_r)


def lax_admissible(claw, u_l, u_r, S):
    """Strict entropy inequality a(u_r) < S < a(u_l).

    The caller asserts a(u) is monotone increasing between the states.
    """
    return bool(claw.char_speed(u_r) < S < claw.char_speed(u_l))


def euler_char_speeds(rho, q, p, gamma):
    """Characteristic speeds (q - a, q, q + a) of the 1-D polytropic gas,
    with sound speed a = sqrt(gamma*p/rho)."""
    if rho <= 0 or p <= 0 or gamma <= 0:
        raise ValueError("invalid thermodynamic state")
    a = np.sqrt(gamma * p / rho)
    return (q - a, q, q + a)


def _sonic_point(claw, u_lo, u_hi):
    """Zero of a(u) on [u_lo, u_hi] by bisection; None if a has one sign."""
    a_lo = float(claw.char_speed(u_lo))
    a_hi = float(claw.char_speed(u_hi))
    if a_lo >= 0 or a_hi <= 0:
        return None
    lo, hi = float(u_lo), float(u_hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(claw.char_speed(mid)) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def _is_identity_density(claw, u_lo, u_hi):
    us = np.linspace(u_lo, u_hi, 33)
    return np.allclose(claw.density_fn(us), us, rtol=0, atol=1e-12 * max(1.0, abs(u_lo), abs(u_hi)))


def _is_convex_flux(claw, u_lo, u_hi):
    us = np.linspace(u_lo, u_hi, 129)
    da = np.diff(claw.char_speed(us))
    return np.all(da >= -1e-10 * max(1.0, np.max(np.abs(da))))


def evolve_scalar(claw, grid, u0, t_end, cfl=0.45, scheme="auto", snap_stride=1):
    """Evolve cell states u0 to t_end with a first-order monotone scheme.

    Godunov flux (exact scalar Riemann solver) is used for convex flux with
    identity density; the local Lax-Friedrichs flux otherwise, applied to
    the conserved variable w = H(u) with u recovered by safeguarded Newton.
    The time step is cfl*dx/max|a| recomputed every step.

    Returns a list of (time, u_array) snapshots including the initial state;
    intermediate steps are kept every ``snap_stride`` steps plus the final.
    """
    if not 0 < cfl < 1:
        raise ValueError("cfl must lie in (0, 1)")
    u = np.asarray(u0, dtype=float).copy()
    if u.shape != (grid.n_cells,):
        raise ValueError("u0 must have one value per cell")
    if not np.all(np.isfinite(u)):
        raise ValueError("u0 must be finite")

    span = float(np.max(u) - np.min(u))
    pad = 0.1 * span + 1e-6
    u_lo, u_hi = float(np.min(u)) - pad, float(np.max(u)) + pad
    if scheme == "auto":
        godunov = _is_identity_density(claw, u_lo, u_hi) and _is_convex_flux(claw, u_lo, u_hi)
    elif scheme == "godunov":
        godunov = True
    elif scheme == "llf":
        godunov = False
    else:
        raise ValueError("scheme must be 'auto', 'godunov' or 'llf'")
    u_sonic = _sonic_point(claw, u_lo, u_hi) if godunov else None
    identity = _is_identity_density(claw, u_lo, u_hi)
    # bracket for density inversion; H is monotone (H' != 0), orient increasing
    increasing = float(claw.density_deriv(0.5 * (u_lo + u_hi))) > 0

    dx = grid.dx
    t = 0.0
    out = [(0.0, u.copy())]
    dt_floor = 1e-14 * max(1.0, abs(t_end))
    step = 0
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        amax = float(np.max(np.abs(claw.char_speed(u))))
        dt = (t_end - t) if amax == 0.0 else cfl * dx / amax
        dt = min(dt, t_end - t)
        if dt < dt_floor:
            raise RuntimeError("time step underflow")

        if grid.boundary == "periodic":
            ul = np.concatenate(([u[-1]], u))
            ur = np.concatenate((u, [u[0]]))
        else:
            ul = np.concatenate(([u[0]], u))
            ur = np.concatenate((u, [u[-1]]))

        if godunov:
            f_l, f_r = claw.flux_fn(ul), claw.flux_fn(ur)
            flux = np.where(ul > ur, np.maximum(f_l, f_r), np.minimum(f_l, f_r))
            if u_sonic is not None:
                f_s = float(claw.flux_fn(u_sonic))
                transonic = (ul <= ur) & (ul < u_sonic) & (ur > u_sonic)
                flux = np.where(transonic, f_s, flux)
        else:
            alpha = np.maximum(np.abs(claw.char_speed(ul)), np.abs(claw.char_speed(ur)))
            flux = 0.5 * (claw.flux_fn(ul) + claw.flux_fn(ur)) \
                - 0.5 * alpha * (claw.density_fn(ur) - claw.density_fn(ul))

        w_new = claw.density_fn(u) - (dt / dx) * (flux[1:] - flux[:-1])
        if identity:
            u = w_new
        else:
            lo = np.full_like(u, u_lo - 10.0 * (span + 1.0))
            hi = np.full_like(u, u_hi + 10.0 * (span + 1.0))
            if increasing:
                u = newton_bisection(claw.density_fn, claw.density_deriv, w_new, u, lo, hi)
            else:
                u = newton_bisection(lambda x: -claw.density_fn(x),
                                     lambda x: -claw.density_deriv(x),
                                     -w_new, u, lo, hi)
        t += dt
        step += 1
        if step % snap_stride == 0 or t >= t_end - dt_floor:
            out.append((t, u.copy()))
    return out


def locate_shock(grid, u):
    """Position of the steepest discrete gradient (interface coordinate)."""
    u = np.asarray(u, dtype=float)
    i = int(np.argmax(np.abs(np.diff(u))))
    return grid.x_min + (i + 1) * grid.dx


def fit_shock_speed(times, positions, tail=0.5):
    """Least-squares slope of position vs time over the trailing fraction."""
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    k = max(2, int(len(times) * (1.0 - tail)))
    return float(np.polyfit(times[k - 1:], positions[k - 1:], 1)[0])
