"""Safeguarded scalar root finding, vectorized over numpy arrays."""

import numpy as np


def newton_bisection(fn, dfn, target, x0, lo, hi, rtol=1e-12, max_iter=100):
    """Solve fn(x) = target for x in [lo, hi], elementwise.

    Newton iterations started from ``x0``, with every iterate clamped to a
    bracket that is maintained by sign; whenever a Newton step leaves the
    bracket or stalls, a bisection step is taken instead. ``fn`` must be
    monotone increasing on [lo, hi] and all arguments broadcast together.

    Returns the root array. Raises RuntimeError on non-convergence.
    """
    target = np.asarray(target, dtype=float)
    x = np.broadcast_to(np.asarray(x0, dtype=float), target.shape).copy()
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    x = np.clip(x, lo, hi)

    scale = np.maximum(np.abs(target), 1e-300)
    active = np.ones(target.shape, dtype=bool)
    for _ in range(max_iter):
        f = fn(x) - target
        # converged when the residual meets rtol, or the bracket has
        # collapsed to adjacent floats (monotone fn: root located exactly)
        collapsed = (hi - lo) <= 4e-16 * np.maximum(np.abs(lo) + np.abs(hi), 1e-300)
        done = (np.abs(f) <= rtol * scale) | collapsed
        active &= ~done
        if not active.any():
            return x
        # maintain bracket: fn increasing, so f > 0 means x is above the root
        hi = np.where(active & (f > 0), np.minimum(hi, x), hi)
        lo = np.where(active & (f < 0), np.maximum(lo, x), lo)
        df = dfn(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df != 0, f / np.where(df != 0, df, 1.0), np.inf)
        x_new = x - step
        bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
        x_new = np.where(bad, 0.5 * (lo + hi), x_new)
        x = np.where(active, x_new, x)
    f = fn(x) - target
    collapsed = (hi - lo) <= 4e-16 * np.maximum(np.abs(lo) + np.abs(hi), 1e-300)
    if np.all((np.abs(f) <= rtol * scale) | collapsed):
        return x
    raise RuntimeError("root finding failed to converge in %d iterations" % max_iter)
