"""Flat tori with separable cosine Morse functions.

f(x) = sum_j a_j cos(2 pi m_j x_j) on R^n / Z^n with the flat metric
g = diag(kappa_j).  The default kappa_j = 4 pi^2 m_j^2 a_j makes every
Hessian eigenvalue (with respect to g) equal to +-1, so the negative gradient
flow contracts and expands at unit rate.  In each coordinate the flow is
explicit: with theta = pi m x, tan(theta) evolves as tan(theta_0) e^{r t}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class NotMorseError(ValueError):
    pass


def wrap(z: np.ndarray) -> np.ndarray:
    """Representative of z mod 1 in [-1/2, 1/2)."""
    return z - np.floor(z + 0.5)


@dataclass(frozen=True)
class CritPoint:
    name: str
    position: np.ndarray
    value: float
    index: int
    unstable: tuple[int, ...]
    stable: tuple[int, ...]
    u_sign: int = 1

    @property
    def unstable_frame(self) -> np.ndarray:
        n = len(self.position)
        frame = np.eye(n)[:, list(self.unstable)]
        if frame.shape[1]:
            frame[:, 0] *= self.u_sign
        return frame

    @property
    def stable_sign(self) -> int:
        """Sign making (stable frame, unstable frame) a positive basis."""
        n = len(self.position)
        E = np.eye(n)
        mat = np.concatenate([E[:, list(self.stable)], E[:, list(self.unstable)]], axis=1)
        return int(round(np.linalg.det(mat))) * self.u_sign

    @property
    def stable_frame(self) -> np.ndarray:
        n = len(self.position)
        frame = np.eye(n)[:, list(self.stable)]
        if frame.shape[1]:
            frame[:, 0] *= self.stable_sign
        return frame

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "position": [float(v) for v in self.position],
            "value": float(self.value),
            "index": self.index,
        }


@dataclass(frozen=True)
class ModelManifold:
    kind: str
    n: int
    freqs: tuple[int, ...]
    amps: tuple[float, ...]
    metric: tuple[float, ...]
    u_flips: frozenset = field(default_factory=frozenset)

    @classmethod
    def torus(cls, n: int = 2, freqs=None, amps=None, metric=None) -> "ModelManifold":
        freqs = tuple(int(m) for m in (freqs or [1] * n))
        amps = tuple(float(a) for a in (amps or [1.0] * n))
        if len(freqs) != n or len(amps) != n:
            raise ValueError("freqs and amps need one entry per coordinate")
        if any(m < 1 for m in freqs):
            raise ValueError("frequencies must be positive integers")
        if any(a < 0 for a in amps):
            raise ValueError("amplitudes must be non-negative")
        if metric is None:
            metric = tuple(4 * np.pi**2 * m * m * (a if a > 0 else 1.0) for m, a in zip(freqs, amps))
        metric = tuple(float(k) for k in metric)
        if len(metric) != n or any(k <= 0 for k in metric):
            raise ValueError("metric entries must be positive")
        return cls("torus" if n != 1 else "circle", n, freqs, amps, metric)

    @classmethod
    def circle(cls, freq: int = 1) -> "ModelManifold":
        return cls.torus(1, [freq])

    def with_flipped(self, *names: str) -> "ModelManifold":
        """Same manifold with reversed W^u orientation at the named points."""
        return ModelManifold(self.kind, self.n, self.freqs, self.amps, self.metric, frozenset(names))

    @cached_property
    def _m(self) -> np.ndarray:
        return np.array(self.freqs, dtype=float)

    @cached_property
    def rates(self) -> np.ndarray:
        """Hessian eigenvalue magnitudes with respect to g."""
        return 4 * np.pi**2 * self._m**2 * np.array(self.amps) / np.array(self.metric)

    def f(self, x: np.ndarray) -> np.ndarray:
        return np.sum(np.array(self.amps) * np.cos(2 * np.pi * self._m * x), axis=-1)

    def grad(self, x: np.ndarray) -> np.ndarray:
        """Metric gradient of f."""
        return -2 * np.pi * self._m * np.array(self.amps) * np.sin(2 * np.pi * self._m * x) / np.array(self.metric)

    def neg_grad(self, x: np.ndarray) -> np.ndarray:
        return -self.grad(x)

    def g_norm(self, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum(np.array(self.metric) * v * v, axis=-1))

    def flow(self, x: np.ndarray, t) -> np.ndarray:
        """Exact negative gradient flow phi_t(x), continuous in the lift."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)[..., None]
        theta = np.pi * self._m * x
        shift = np.floor(theta / np.pi + 0.5)
        phi = theta - shift * np.pi
        E = np.exp(self.rates * t / 2)
        new = np.arctan2(np.sin(phi) * E, np.cos(phi) / E)
        return (new + shift * np.pi) / (np.pi * self._m)

    def critical_points(self) -> list[CritPoint]:
        if any(a == 0 for a in self.amps):
            raise NotMorseError("a zero amplitude gives a degenerate Hessian")
        pts = []
        for ks in itertools.product(*(range(2 * m) for m in self.freqs)):
            pos = np.array([k / (2 * m) for k, m in zip(ks, self.freqs)])
            unstable = tuple(j for j, k in enumerate(ks) if k % 2 == 0)
            stable = tuple(j for j, k in enumerate(ks) if k % 2 == 1)
            name = "x" + "".join(str(k) for k in ks)
            pts.append(
                CritPoint(
                    name,
                    pos,
                    float(self.f(pos)),
                    len(unstable),
                    unstable,
                    stable,
                    -1 if name in self.u_flips else 1,
                )
            )
        pts.sort(key=lambda c: (-c.index, c.name))
        return pts

    def basin_halfwidth(self) -> np.ndarray:
        return 1.0 / (2 * self._m)

    def min_value_gap(self) -> float:
        vals = sorted({round(c.value, 12) for c in self.critical_points()})
        return min(b - a for a, b in zip(vals, vals[1:])) if len(vals) > 1 else 1.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "freqs": list(self.freqs),
            "amps": list(self.amps),
        }


def critical_points(manifold: ModelManifold) -> list[CritPoint]:
    return manifold.critical_points()
