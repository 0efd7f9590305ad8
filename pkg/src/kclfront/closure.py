"""Closure models that complete the under-determined front-evolution system.

Two closures are provided. ``constant_m`` freezes a uniform normal speed and
reduces the system to linear ray theory. ``wnlrt`` is a weakly-nonlinear
closure for fronts moving slightly faster than the ambient sound speed
(m > 1): the quantity

    g * (m - 1)^2 * exp(2*(m - 1))

is held constant along each ray, with g the local ray-tube measure (the
2-D metric, or the tube area in 3-D). Since rays are xi = const lines in
ray coordinates, the invariant is frozen per cell and m is recovered from
the evolving g by inverting the monotone map G(m) = (m-1)^2 exp(2(m-1)).
"""

from dataclasses import dataclass

import numpy as np

from .rootfind import newton_bisection

_M_LO = 1.0 + 1e-14
_M_HI = 21.0


def growth_fn(m):
    """G(m) = (m-1)^2 * exp(2*(m-1)), strictly increasing for m > 1."""
    m = np.asarray(m, dtype=float)
    return (m - 1.0) ** 2 * np.exp(2.0 * (m - 1.0))


def growth_deriv(m):
    m = np.asarray(m, dtype=float)
    return 2.0 * (m - 1.0) * m * np.exp(2.0 * (m - 1.0))


@dataclass
class Closure:
    """Closure state: a fixed speed (constant_m) or per-cell frozen
    invariant values (wnlrt)."""

    kind: str
    m0: float = None
    fval: np.ndarray = None


def recover_m(g, fval, x0=None):
    """Unique m > 1 with g*G(m) = fval, by safeguarded Newton.

    Scalar or elementwise over arrays. The initial guess 1 + sqrt(fval/g)
    is exact when the exponential factor is ~1 (m near 1).
    """
    g_arr = np.asarray(g, dtype=float)
    f_arr = np.asarray(fval, dtype=float)
    if np.any(g_arr <= 0) or np.any(f_arr <= 0):
        raise ValueError("recover_m requires g > 0 and fval > 0")
    target = f_arr / g_arr
    guess = 1.0 + np.sqrt(target) if x0 is None else np.asarray(x0, dtype=float)
    guess = np.clip(guess, _M_LO, _M_HI)
    try:
        # tolerance well below the contract's 1e-12 so that closure rounding
        # never dominates conservation/equivariance budgets downstream
        m = newton_bisection(growth_fn, growth_deriv, target, guess, _M_LO, _M_HI,
                             rtol=1e-15)
    except RuntimeError as exc:
        raise RuntimeError("closure inversion failed") from exc
    # reject targets outside the bracket (residual stays O(1) there); the
    # loose factor covers ULP quantization of m near the m -> 1 endpoint
    if np.any(np.abs(growth_fn(m) - target) > 1e-6 * np.maximum(np.abs(target), 1e-300)):
        raise RuntimeError("closure inversion failed")
    if np.isscalar(g) and np.isscalar(fval):
        return float(m)
    return m


def init_closure_from_arrays(kind, weight, m):
    """Build a closure from per-cell geometric weight and speed arrays."""
    weight = np.asarray(weight, dtype=float)
    m = np.asarray(m, dtype=float)
    if kind == "constant_m":
        m0 = float(m.flat[0])
        if np.any(np.abs(m - m0) > 1e-12 * max(1.0, abs(m0))):
            raise ValueError("constant_m closure requires uniform initial m")
        if m0 <= 0:
            raise ValueError("constant_m closure requires m > 0")
        return Closure(kind="constant_m", m0=m0)
    if kind == "wnlrt":
        if np.any(m <= 1.0):
            raise ValueError("subsonic front: WNLRT closure undefined")
        return Closure(kind="wnlrt", fval=weight * growth_fn(m))
    raise ValueError("unknown closure kind: %r" % (kind,))


def init_closure(kind, state0):
    """Closure from a 2-D state (weight = metric g)."""
    return init_closure_from_arrays(kind, state0.g, state0.m)


def recover_field(closure, weight, m_prev=None):
    """Per-cell m for the given geometric weight array."""
    weight = np.asarray(weight, dtype=float)
    if closure.kind == "constant_m":
        return np.full(weight.shape, closure.m0)
    return recover_m(weight, closure.fval, x0=m_prev)


def update_m(closure, state):
    """Per-cell m for a 2-D state under this closure."""
    return recover_field(closure, state.g, m_prev=state.m)


def response_deriv(closure, weight, m):
    """dm/dweight along the closure relation (implicit differentiation of
    weight*G(m) = const); zero for the constant closure."""
    weight = np.asarray(weight, dtype=float)
    if closure.kind == "constant_m":
        return np.zeros(weight.shape)
    m = np.asarray(m, dtype=float)
    return -growth_fn(m) / (weight * growth_deriv(m))
