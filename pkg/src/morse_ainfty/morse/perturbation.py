"""Perturbation data realized as time-dependent conjugations of the flow.

Each edge trajectory has the form gamma(t) = psi_t(phi_t(z)) where phi is the
unperturbed flow and psi_t is a composition of coordinate shears
S_j(x) = x + e_j h_j(x), with h_j independent of x_j (so every shear is
exactly invertible).  The corresponding perturbing vector field is

    Y(t, y) = -(d/dt psi_t + D psi_t V - V o psi_t)(psi_t^{-1} y),

with V = -grad f, in the convention gamma' + grad f(gamma) + Y = 0.

Only the endpoint maps of each edge enter the moduli problem:

    root:      gamma_0(0) = D_0(u),     u in W^u(x_0)
    leaf i:    gamma_i(0) = D_i(u),     u in W^s(x_i)
    internal:  gamma_e(l) = B(phi_l(A^{-1}(gamma_e(0))))

Support: psi_t = id for t <= -1 (root), t >= 1 (leaves) and for
t in [chi(l), l - chi(l)] on internal edges.

Universality and consistency come from blending random corolla fields
C[m][j] (arity m, position j, 0 = root) multilinearly in w(l_e), where w is
smooth, flat at 0 and equal to 1 for l >= 3.  Setting l_e = 0 reproduces the
data of T/e exactly; for l_e >= 3 the data restricted to either half of the
splitting along e equals the data of that half.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..trees import Edge, RibbonTree, collapse_set, edge_map
from .manifold import ModelManifold

N_MODES = 2


# ---------------------------------------------------------------- smooth profiles

def _psi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def transition(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    a = _psi(s)
    b = _psi(1.0 - np.asarray(s, dtype=float))
    return a / (a + b)


def length_weight(l):
    """w(l): flat at l = 0, identically 1 for l >= 3."""
    return transition(np.asarray(l, dtype=float) / 3.0)


CHI_DELTA = 0.1


def chi(l):
    """l/3 for l <= 3 - delta, 1 for l >= 3, quintic Hermite blend between."""
    l = np.asarray(l, dtype=float)
    a = 3.0 - CHI_DELTA
    s = np.clip((l - a) / CHI_DELTA, 0.0, 1.0)
    y0, y1 = a / 3.0, 1.0
    m0 = CHI_DELTA / 3.0  # slope 1/3 in the rescaled variable
    h10 = s - 6 * s**3 + 8 * s**4 - 3 * s**5
    h00 = 1 - 10 * s**3 + 15 * s**4 - 6 * s**5
    blend = y0 * h00 + y1 * (1 - h00) + m0 * h10
    return np.where(l <= a, l / 3.0, np.where(l >= 3.0, 1.0, blend))


def rho_root(s):
    """Root profile on s <= 0: 0 for s <= -1, 1 on [-1/2, 0]."""
    return transition(2.0 * (np.asarray(s, dtype=float) + 1.0))


def rho_leaf(s):
    """Leaf profile on s >= 0: 1 on [0, 1/2], 0 for s >= 1."""
    return transition(2.0 * (1.0 - np.asarray(s, dtype=float)))


# ---------------------------------------------------------------- shear fields

@dataclass(frozen=True)
class ShearField:
    """h_j(x) = c_j + sum_m A_jm sin(2 pi K_jm . x + P_jm), K_jm[j] = 0."""

    c: np.ndarray
    A: np.ndarray
    K: np.ndarray
    P: np.ndarray

    @property
    def n(self) -> int:
        return len(self.c)

    def h(self, j: int, x: np.ndarray) -> np.ndarray:
        out = np.full(x.shape[:-1], self.c[j])
        if self.A.shape[1]:
            arg = 2 * np.pi * (x @ self.K[j].T) + self.P[j]
            out = out + np.sin(arg) @ self.A[j]
        return out

    @classmethod
    def zero(cls, n: int) -> "ShearField":
        return cls(np.zeros(n), np.zeros((n, 0)), np.zeros((n, 0, n)), np.zeros((n, 0)))

    @classmethod
    def random(cls, rng: np.random.Generator, manifold: ModelManifold, eps: float) -> "ShearField":
        n = manifold.n
        bound = eps / np.sqrt(n * np.array(manifold.metric))
        modes = N_MODES if n > 1 else 0
        c = rng.uniform(-0.5, 0.5, n) * bound
        A = rng.uniform(-0.25, 0.25, (n, modes)) * bound[:, None]
        K = np.zeros((n, modes, n))
        for j in range(n):
            for m in range(modes):
                while True:
                    k = rng.integers(-1, 2, n)
                    k[j] = 0
                    if np.any(k):
                        break
                K[j, m] = k
        P = rng.uniform(0, 2 * np.pi, (n, modes))
        return cls(c, A, K, P)


# A combination is a list of (weight, field); weights broadcast over the
# leading batch axes of the point array.
Combo = list


def combo_h(combo: Combo, j: int, x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape[:-1])
    for wt, fld in combo:
        out = out + np.asarray(wt) * fld.h(j, x)
    return out


def shear(combo: Combo, x: np.ndarray, scale=1.0) -> np.ndarray:
    x = np.array(x, dtype=float, copy=True)
    for j in range(x.shape[-1]):
        x[..., j] += np.asarray(scale) * combo_h(combo, j, x)
    return x


def shear_inv(combo: Combo, x: np.ndarray, scale=1.0) -> np.ndarray:
    x = np.array(x, dtype=float, copy=True)
    for j in reversed(range(x.shape[-1])):
        x[..., j] -= np.asarray(scale) * combo_h(combo, j, x)
    return x


def combo_displacement(combo: Combo, x: np.ndarray) -> np.ndarray:
    """Vector (h_1(x), ..., h_n(x)) of the blended generator."""
    return np.stack([combo_h(combo, j, x) for j in range(x.shape[-1])], axis=-1)


# ---------------------------------------------------------------- tree data

@lru_cache(maxsize=None)
def _pieces(shape: tuple, S: frozenset) -> dict:
    """Corolla slot (arity, position) of every edge end after collapsing E\\S.

    Keys: ("root",), ("leaf", q), ("start", e), ("end", e) with e internal.
    """
    T = RibbonTree(shape)
    F = set(T.internal_edges) - set(S)
    Q = collapse_set(T, F)
    m = edge_map(T, F)

    def upper(a: Edge) -> tuple[int, int]:
        b = m[a]
        return len(Q.node(b[:-1])), b[-1] + 1

    out = {("root",): (len(Q.node(())), 0)}
    for q, leaf in enumerate(T.leaves, start=1):
        out[("leaf", q)] = upper(leaf)
    for e in S:
        out[("start", e)] = upper(e)
        out[("end", e)] = (len(Q.node(m[e])), 0)
    return out


@dataclass
class TreeData:
    """Endpoint combinations of one tree at given internal lengths."""

    root: Combo
    leaves: list[Combo]
    start: dict[Edge, Combo]
    end: dict[Edge, Combo]


@dataclass
class PerturbationDatum:
    manifold: ModelManifold
    seed: int
    d_max: int
    epsilon: float
    corolla: dict[tuple[int, int], ShearField] = field(default_factory=dict)

    def field_for(self, m: int, j: int) -> ShearField:
        if (m, j) not in self.corolla:
            raise KeyError(f"no corolla field for arity {m} (d_max={self.d_max})")
        return self.corolla[(m, j)]

    def tree_data(self, T: RibbonTree, lengths: dict[Edge, np.ndarray] | None = None) -> TreeData:
        lengths = lengths or {}
        edges = list(T.internal_edges)
        for e in edges:
            if e not in lengths:
                raise KeyError(f"length of edge {e} missing")
        w = {e: length_weight(lengths[e]) for e in edges}
        root: Combo = []
        leaves: list[Combo] = [[] for _ in range(T.d)]
        start: dict[Edge, Combo] = {e: [] for e in edges}
        end: dict[Edge, Combo] = {e: [] for e in edges}
        for bits in itertools.product((0, 1), repeat=len(edges)):
            S = frozenset(e for e, b in zip(edges, bits) if b)
            weight = 1.0
            for e, b in zip(edges, bits):
                weight = weight * (w[e] if b else 1.0 - w[e])
            slots = _pieces(T.shape, S)
            root.append((weight, self.field_for(*slots[("root",)])))
            for q in range(T.d):
                leaves[q].append((weight, self.field_for(*slots[("leaf", q + 1)])))
            for e in S:
                start[e].append((weight, self.field_for(*slots[("start", e)])))
                end[e].append((weight, self.field_for(*slots[("end", e)])))
        return TreeData(root, leaves, start, end)

    # -- vector fields, for integration checks --------------------------------

    def conjugation(self, T: RibbonTree, lengths: dict, kind: str, which=None):
        """psi(t, x) for one edge: kind in {"root", "leaf", "internal"}."""
        data = self.tree_data(T, lengths)
        if kind == "root":
            combo = data.root
            return lambda t, x: shear(combo, x, rho_root(t))
        if kind == "leaf":
            combo = data.leaves[which - 1]
            return lambda t, x: shear(combo, x, rho_leaf(t))
        if kind == "internal":
            l = float(lengths[which])
            A, B, c = data.start[which], data.end[which], float(chi(l))

            def psi(t, x):
                t = float(t)
                if t <= l / 2:
                    return shear(A, x, rho_leaf(t / c) if c > 0 else 0.0)
                return shear(B, x, rho_root((t - l) / c) if c > 0 else 0.0)

            return psi
        raise ValueError(kind)

    def conjugation_inverse(self, T: RibbonTree, lengths: dict, kind: str, which=None):
        data = self.tree_data(T, lengths)
        if kind == "root":
            return lambda t, x: shear_inv(data.root, x, rho_root(t))
        if kind == "leaf":
            return lambda t, x: shear_inv(data.leaves[which - 1], x, rho_leaf(t))
        l = float(lengths[which])
        A, B, c = data.start[which], data.end[which], float(chi(l))

        def inv(t, x):
            t = float(t)
            if t <= l / 2:
                return shear_inv(A, x, rho_leaf(t / c) if c > 0 else 0.0)
            return shear_inv(B, x, rho_root((t - l) / c) if c > 0 else 0.0)

        return inv

    def vector_field(self, T: RibbonTree, lengths: dict, kind: str, which=None, h: float = 1e-6):
        """Full velocity field V + (psi-induced part) on one edge.

        Returns F(t, y) with gamma' = F(t, gamma); the perturbation in the
        convention gamma' + grad f + Y = 0 is Y = -(F - V).
        """
        psi = self.conjugation(T, lengths, kind, which)
        inv = self.conjugation_inverse(T, lengths, kind, which)
        V = self.manifold.neg_grad

        def F(t, y):
            z = inv(t, y)
            v = V(z)
            dt = (psi(t + h, z) - psi(t - h, z)) / (2 * h)
            dz = (psi(t, z + h * v) - psi(t, z - h * v)) / (2 * h)
            return dt + dz

        return F

    def perturbation(self, T: RibbonTree, lengths: dict, kind: str, which=None):
        F = self.vector_field(T, lengths, kind, which)
        V = self.manifold.neg_grad
        return lambda t, y: -(F(t, y) - V(y))


def build_perturbation_datum(
    manifold: ModelManifold, seed: int, d_max: int, epsilon: float | None = None
) -> PerturbationDatum:
    if epsilon is None:
        epsilon = default_epsilon(manifold)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    datum = PerturbationDatum(manifold, int(seed), int(d_max), float(epsilon))
    for m in range(2, max(d_max, 2) + 1):
        for j in range(m + 1):
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), m, j])))
            datum.corolla[(m, j)] = (
                ShearField.random(rng, manifold, epsilon) if epsilon > 0 else ShearField.zero(manifold.n)
            )
    return datum


def default_epsilon(manifold: ModelManifold) -> float:
    return 0.05 * manifold.min_value_gap()
