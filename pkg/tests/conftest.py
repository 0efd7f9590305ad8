import numpy as np

from kclfront import KclState2
from kclfront.ray_tracer import Front2


def sinusoid_state(n, amp=0.2, period=4.0, m0=1.2):
    """Periodic sinusoidal front state: curve x = amp - amp*cos(2 pi y / period),
    parametrized by xi = y, moving toward +x."""
    dxi = period / n
    y = -period / 2.0 + dxi * np.arange(n)
    k = 2.0 * np.pi / period
    xp = amp * k * np.sin(k * y)
    state = KclState2(xi_min=-period / 2.0, xi_spacing=dxi,
                      m=np.full(n, m0), theta=-np.arctan(xp),
                      g=np.sqrt(1.0 + xp ** 2), boundary="periodic")
    x = amp - amp * np.cos(k * y)
    return state, (float(x[0]), float(y[0])), np.stack([x, y], axis=1)


def sinusoid_front(n, amp=0.2, period=4.0):
    state, _, pts = sinusoid_state(n, amp=amp, m0=1.0)
    return Front2(pts[:, 0], pts[:, 1], state.theta, state.xi_spacing)


def circle_state(n, r0=1.0, m0=1.0):
    dxi = 2.0 * np.pi / n
    xi = dxi * np.arange(n)
    state = KclState2(xi_min=0.0, xi_spacing=dxi, m=np.full(n, m0),
                      theta=xi.copy(), g=np.full(n, r0), boundary="periodic")
    return state, (r0, 0.0)
