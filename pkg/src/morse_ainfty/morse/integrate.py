"""Classical RK4 with step-halving error control and cubic Hermite dense output.

Independent of the closed-form flows used by the solver; the tests use it to
cross-check that the conjugated endpoint maps really solve the perturbed ODE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .manifold import CritPoint, ModelManifold, wrap

Field = Callable[[float, np.ndarray], np.ndarray]


class NonConvergentEdgeError(RuntimeError):
    pass


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray

    def __call__(self, s: float) -> np.ndarray:
        """Cubic Hermite interpolation between accepted steps."""
        t = self.t
        if not (min(t[0], t[-1]) - 1e-12 <= s <= max(t[0], t[-1]) + 1e-12):
            raise ValueError(f"{s} outside the integrated interval")
        order = 1 if t[-1] >= t[0] else -1
        k = int(np.clip(np.searchsorted(t[::order], s) - 1, 0, len(t) - 2))
        if order < 0:
            k = len(t) - 2 - k
        h = t[k + 1] - t[k]
        u = (s - t[k]) / h
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        return h00 * self.y[k] + h10 * h * self.dy[k] + h01 * self.y[k + 1] + h11 * h * self.dy[k + 1]

    @property
    def end(self) -> np.ndarray:
        return self.y[-1]


def _rk4(F: Field, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = F(t, y)
    k2 = F(t + h / 2, y + h / 2 * k1)
    k3 = F(t + h / 2, y + h / 2 * k2)
    k4 = F(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_edge(
    F: Field,
    start: np.ndarray,
    t0: float,
    t1: float,
    step: float = 0.05,
    tol: float = 1e-10,
    min_step: float = 1e-6,
) -> Trajectory:
    """Integrate y' = F(t, y) from t0 to t1 (either direction)."""
    if step <= 0:
        raise ValueError("step must be positive")
    direction = 1.0 if t1 >= t0 else -1.0
    t, y = float(t0), np.array(start, dtype=float)
    ts, ys, dys = [t], [y.copy()], [F(t, y)]
    h = step
    while direction * (t1 - t) > 1e-14:
        h = min(h, abs(t1 - t))
        hs = direction * h
        full = _rk4(F, t, y, hs)
        half = _rk4(F, t + hs / 2, _rk4(F, t, y, hs / 2), hs / 2)
        err = np.max(np.abs(full - half))
        if err > tol and h > min_step:
            h /= 2
            continue
        # Richardson-extrapolated accepted step.
        y = half + (half - full) / 15
        t = t + hs
        ts.append(t)
        ys.append(y.copy())
        dys.append(F(t, y))
        if err < tol / 64:
            h = min(step, 2 * h)
    return Trajectory(np.array(ts), np.array(ys), np.array(dys))


def integrate_to_critical(
    manifold: ModelManifold,
    F: Field,
    start: np.ndarray,
    targets: list[CritPoint],
    t0: float = 0.0,
    direction: float = 1.0,
    r_lin: float = 1e-3,
    max_time: float = 60.0,
    chunk: float = 1.0,
    step: float = 0.05,
) -> tuple[CritPoint, Trajectory]:
    """Integrate until within r_lin of a critical point, then report it.

    Inside the linearization radius the flow is matched to the linear one, so
    the remaining infinite-time tail is not integrated.
    """
    y = np.array(start, dtype=float)
    t = t0
    pieces = []
    while abs(t - t0) < max_time:
        traj = integrate_edge(F, y, t, t + direction * chunk, step=step)
        pieces.append(traj)
        y, t = traj.end, t + direction * chunk
        for c in targets:
            if np.max(np.abs(wrap(y - c.position))) < r_lin:
                ts = np.concatenate([p.t[:-1] for p in pieces] + [pieces[-1].t[-1:]])
                ys = np.concatenate([p.y[:-1] for p in pieces] + [pieces[-1].y[-1:]])
                dys = np.concatenate([p.dy[:-1] for p in pieces] + [pieces[-1].dy[-1:]])
                return c, Trajectory(ts, ys, dys)
    raise NonConvergentEdgeError(f"no critical point within r_lin after time {max_time}")
