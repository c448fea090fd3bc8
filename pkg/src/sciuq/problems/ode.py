"""Fixed-step RK4 and the reference solutions built on it."""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteState


def rk4_solve(rhs, y0, t_span, dt):
    """Classic four-stage Runge-Kutta; returns ``(t, y)`` at every step.

    The last step is shortened when ``dt`` does not divide the span.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    t0, t1 = map(float, t_span)
    n = int(np.ceil((t1 - t0) / dt - 1e-9))
    ts = np.minimum(t0 + dt * np.arange(n + 1), t1)
    y = np.array(y0, dtype=float)
    ys = np.empty((n + 1,) + y.shape)
    ys[0] = y
    for i in range(n):
        t, h = ts[i], ts[i + 1] - ts[i]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(y).all():
            raise NonFiniteState(f"state became non-finite at t={ts[i + 1]:g}")
        ys[i + 1] = y
    return ts, ys


def ko_rhs(a, b):
    def rhs(t, y):
        x1, x2, x3 = y
        return np.array([a * x2 * x3, b * x1 * x3, -(a + b) * x1 * x2])
    return rhs


KO_Y0 = (1.0, 1.0, 0.5)


def ko_reference(a=1.0, b=1.0, y0=KO_Y0, t_span=(0.0, 10.0), dt=1e-3):
    """Kraichnan-Orszag trajectories ``(t, y)`` with ``y`` of shape ``(n, 3)``."""
    return rk4_solve(ko_rhs(a, b), y0, t_span, dt)


def interpolate(ts, ys, t):
    """Componentwise linear interpolation of a trajectory at times ``t``."""
    t = np.asarray(t, dtype=float).ravel()
    return np.stack([np.interp(t, ts, ys[:, k]) for k in range(ys.shape[1])], axis=1)
