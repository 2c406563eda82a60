"""Newton shooting for perturbed Morse ribbon trees and gradient trajectories.

Reduced formulation used for the global search: the unknowns are the
position P of the top vertex and rho_e = log l_e per internal edge.  Vertex
positions are propagated through the closed-form edge maps and the
equations are

    stable coordinates of D_0^{-1}(P) = those of x_0     (n - mu(x_0) eqs)
    unstable coordinates of D_i^{-1}(q_i) = those of x_i   (mu(x_i) eqs)

where q_i is the vertex carrying leaf i.  Every converged root is then
rebuilt in the full chart coordinates (unstable coordinates at x_0, (l_e,
gamma_e(0)) per edge, stable coordinates at each x_i), where the Delta_T
matching residual, the Jacobian condition number and the orientation sign
are evaluated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..trees import Edge, RibbonTree, canonical_ordering, edge_label, serialize
from .manifold import CritPoint, ModelManifold, wrap
from .perturbation import PerturbationDatum, shear, shear_inv

TOL_MATCH = 1e-10
TOL_DEDUP = 1e-6
TOL_DET = 1e-8
MAX_COND = 1e8
# Beyond this the datum is only defined through its l -> infinity limits.
MAX_LENGTH = 3.0
GRID = 33
LENGTH_GRID = (0.05, 0.15, 0.35, 0.7, 1.2, 2.0, 3.2, 5.0, 8.0)
RHO_BOUNDS = (np.log(1e-4), np.log(60.0))


class RegularityError(RuntimeError):
    """A solution failed a regularity check; the perturbation should be reseeded."""


class IndeterminateSignError(RegularityError):
    pass


class LengthBoundError(RegularityError):
    """A solved internal length reached the region where the datum is split."""


@dataclass
class SolverConfig:
    grid: int = GRID
    length_grid: tuple[float, ...] = LENGTH_GRID
    tol_match: float = TOL_MATCH
    tol_dedup: float = TOL_DEDUP
    tol_det: float = TOL_DET
    max_cond: float = MAX_COND
    max_length: float = MAX_LENGTH
    max_iter: int = 60
    basin_margin: float = 1e-9

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "length_grid": list(self.length_grid),
            "tol_match": self.tol_match,
            "tol_dedup": self.tol_dedup,
            "tol_det": self.tol_det,
            "max_cond": self.max_cond,
            "max_length": self.max_length,
        }


@dataclass
class FlowTreeSolution:
    tree: RibbonTree
    x0: str
    xs: tuple[str, ...]
    lengths: dict[Edge, float]
    vertex: np.ndarray
    chart: np.ndarray
    residual: float
    condition: float
    det: float
    sign: int
    order: list[Edge] = field(default_factory=list)

    @property
    def max_length(self) -> float:
        return max(self.lengths.values(), default=0.0)

    def to_dict(self) -> dict:
        return {
            "tree": serialize(self.tree),
            "tuple": [self.x0, *self.xs],
            "lengths": {edge_label(self.tree, e): round(float(self.lengths[e]), 9) for e in self.order},
            "vertex": [round(float(v), 9) for v in self.vertex],
            "residual": float(f"{self.residual:.3e}"),
            "condition": float(f"{self.condition:.3e}"),
            "sign": self.sign,
        }


# ---------------------------------------------------------------- batched Newton

def fd_jacobian(fun: Callable, z: np.ndarray, h: float = 1e-6, r0: np.ndarray | None = None) -> np.ndarray:
    """Central differences, or forward differences when r0 = fun(z) is given."""
    S, N = z.shape
    steps = np.eye(N) * h
    plus = (z[None, :, :] + steps[:, None, :]).reshape(N * S, N)
    fp = fun(plus).reshape(N, S, -1)
    if r0 is not None:
        return np.transpose((fp - r0[None]) / h, (1, 2, 0))
    minus = (z[None, :, :] - steps[:, None, :]).reshape(N * S, N)
    fm = fun(minus).reshape(N, S, -1)
    return np.transpose((fp - fm) / (2 * h), (1, 2, 0))


def _newton_step(J: np.ndarray, r: np.ndarray) -> np.ndarray:
    if J.shape[1] == J.shape[2]:
        try:
            return -np.linalg.solve(J, r[..., None])[..., 0]
        except np.linalg.LinAlgError:
            pass
    return -np.einsum("sij,sj->si", np.linalg.pinv(J, rcond=1e-13), r)


def batched_newton(
    fun: Callable,
    z0: np.ndarray,
    max_step: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 60,
    valid: Callable | None = None,
    merge_below: float = 1e-7,
) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton on many starts at once; returns (z, converged).

    Starts that have already reached the same root (residual below merge_below
    and coordinates equal to 1e-6) are merged, keeping one representative.
    """
    z = np.array(z0, dtype=float)
    alive = np.ones(len(z), dtype=bool)
    done = np.zeros(len(z), dtype=bool)
    r = fun(z)
    norm = np.max(np.abs(r), axis=1)
    for _ in range(max_iter):
        done |= alive & (norm < tol)
        near = np.flatnonzero(alive & (norm < merge_below))
        if near.size > 1:
            _, first = np.unique(np.round(z[near] * 1e6), axis=0, return_index=True)
            drop = np.ones(near.size, dtype=bool)
            drop[first] = False
            alive[near[drop]] = False
            done[near[drop]] = False
        act = np.flatnonzero(alive & ~done)
        if act.size == 0:
            break
        za, ra = z[act], r[act]
        # forward differences far from a root, central ones for the final digits
        far = norm[act] > 1e-5
        J = np.empty((act.size, ra.shape[1], z.shape[1]))
        if far.any():
            J[far] = fd_jacobian(fun, za[far], 1e-7, ra[far])
        if (~far).any():
            J[~far] = fd_jacobian(fun, za[~far])
        step = _newton_step(J, ra)
        scale = np.max(np.abs(step) / max_step, axis=1)
        step = step / np.maximum(scale, 1.0)[:, None]
        pending = np.arange(act.size)
        alpha = 1.0
        while pending.size and alpha > 0.02:
            trial = za[pending] + alpha * step[pending]
            rt = fun(trial)
            nt = np.max(np.abs(rt), axis=1)
            better = nt < norm[act[pending]]
            idx = act[pending[better]]
            z[idx], r[idx], norm[idx] = trial[better], rt[better], nt[better]
            pending = pending[~better]
            alpha /= 2
        alive[act[pending]] = False
        if valid is not None:
            ok = valid(z[act])
            alive[act[~ok]] = False
    done |= alive & (norm < tol)
    return z, done


def _dedup(points: np.ndarray, periodic: np.ndarray, tol: float) -> list[int]:
    keep: list[int] = []
    for a in range(len(points)):
        for b in keep:
            diff = points[a] - points[b]
            diff = np.where(periodic, wrap(diff), diff)
            if np.max(np.abs(diff)) < tol:
                break
        else:
            keep.append(a)
    return keep


# ---------------------------------------------------------------- flow trees

class TreeProblem:
    def __init__(
        self,
        manifold: ModelManifold,
        datum: PerturbationDatum,
        T: RibbonTree,
        x0: CritPoint,
        xs: list[CritPoint],
        config: SolverConfig | None = None,
    ):
        if not T.is_binary:
            raise ValueError("flow trees are solved on binary trees")
        if len(xs) != T.d:
            raise ValueError("need one critical point per leaf")
        self.M, self.Y, self.T = manifold, datum, T
        self.x0, self.xs = x0, list(xs)
        self.cfg = config or SolverConfig()
        self.n = manifold.n
        self.order = canonical_ordering(T)
        self.pre = list(T.internal_edges)
        self.k = T.k
        self.dim = x0.index - sum(x.index for x in xs) + self.k

    # -- reduced system ---------------------------------------------------

    def _lengths(self, rho: np.ndarray) -> dict[Edge, np.ndarray]:
        return {e: np.exp(rho[:, j]) for j, e in enumerate(self.order)}

    def _positions(self, P: np.ndarray, lengths: dict, data) -> dict[Edge, np.ndarray]:
        pos = {(): P}
        for e in self.pre:
            z = shear_inv(data.start[e], pos[e[:-1]])
            z = self.M.flow(z, lengths[e])
            pos[e] = shear(data.end[e], z)
        return pos

    def _leaf_preimages(self, pos: dict, data) -> list[np.ndarray]:
        return [shear_inv(data.leaves[q], pos[leaf[:-1]]) for q, leaf in enumerate(self.T.leaves)]

    def reduced_residual(self, z: np.ndarray) -> np.ndarray:
        n = self.n
        P, rho = z[:, :n], z[:, n:]
        lengths = self._lengths(rho)
        data = self.Y.tree_data(self.T, lengths)
        pos = self._positions(P, lengths, data)
        parts = []
        u0 = shear_inv(data.root, P)
        s0 = list(self.x0.stable)
        parts.append(wrap(u0[:, s0] - self.x0.position[s0]))
        for x, u in zip(self.xs, self._leaf_preimages(pos, data)):
            us = list(x.unstable)
            parts.append(wrap(u[:, us] - x.position[us]))
        return np.concatenate(parts, axis=1)

    def _basin_ok(self, z: np.ndarray, margin: float = 0.0) -> np.ndarray:
        n = self.n
        P, rho = z[:, :n], z[:, n:]
        lengths = self._lengths(rho)
        data = self.Y.tree_data(self.T, lengths)
        pos = self._positions(P, lengths, data)
        half = self.M.basin_halfwidth()
        ok = np.ones(len(z), dtype=bool)
        u0 = shear_inv(data.root, P)
        us = list(self.x0.unstable)
        ok &= np.all(np.abs(wrap(u0[:, us] - self.x0.position[us])) < half[us] - margin, axis=1)
        for x, u in zip(self.xs, self._leaf_preimages(pos, data)):
            ss = list(x.stable)
            ok &= np.all(np.abs(wrap(u[:, ss] - x.position[ss])) < half[ss] - margin, axis=1)
        return ok

    def seeds(self) -> np.ndarray:
        g = self.cfg.grid
        axis = (np.arange(g) + 0.5) / g
        P = np.array(list(itertools.product(axis, repeat=self.n)))
        if self.k == 0:
            return P
        rhos = np.array(list(itertools.product(np.log(self.cfg.length_grid), repeat=self.k)))
        return np.concatenate(
            [np.repeat(P, len(rhos), axis=0), np.tile(rhos, (len(P), 1))], axis=1
        )

    # -- full chart ---------------------------------------------------------

    @property
    def chart_dim(self) -> int:
        return self.x0.index + self.k * (self.n + 1) + sum(self.n - x.index for x in self.xs)

    def chart_from_reduced(self, z: np.ndarray) -> np.ndarray:
        n = self.n
        P, rho = z[None, :n], z[None, n:]
        lengths = self._lengths(rho)
        data = self.Y.tree_data(self.T, lengths)
        pos = self._positions(P, lengths, data)
        parts = [wrap(shear_inv(data.root, P) - self.x0.position)[0, list(self.x0.unstable)]]
        for j, e in enumerate(self.order):
            parts.append(np.array([np.exp(rho[0, j])]))
            parts.append(pos[e[:-1]][0])
        for x, u in zip(self.xs, self._leaf_preimages(pos, data)):
            parts.append(wrap(u - x.position)[0, list(x.stable)])
        return np.concatenate(parts)

    def _unpack(self, c: np.ndarray):
        n, at = self.n, 0
        mu0 = self.x0.index
        u0 = c[:, at : at + mu0]
        at += mu0
        lam, start = {}, {}
        for e in self.order:
            lam[e] = c[:, at]
            start[e] = c[:, at + 1 : at + 1 + n]
            at += n + 1
        vs = []
        for x in self.xs:
            w = n - x.index
            vs.append(c[:, at : at + w])
            at += w
        return u0, lam, start, vs

    def evaluation(self, c: np.ndarray) -> np.ndarray:
        """E: chart -> M^{1+2k+d}, blocks (g0(0), (ge(0), ge(l))_e, g1(0)..gd(0))."""
        u0, lam, start, vs = self._unpack(c)
        data = self.Y.tree_data(self.T, lam)
        S = len(c)
        p0 = np.tile(self.x0.position, (S, 1))
        p0[:, list(self.x0.unstable)] += u0
        blocks = [shear(data.root, p0)]
        for e in self.order:
            z = shear_inv(data.start[e], start[e])
            blocks.append(start[e])
            blocks.append(shear(data.end[e], self.M.flow(z, lam[e])))
        for x, v, comb in zip(self.xs, vs, data.leaves):
            p = np.tile(x.position, (S, 1))
            p[:, list(x.stable)] += v
            blocks.append(shear(comb, p))
        return np.concatenate(blocks, axis=1)

    def _vertex_block(self, addr: Edge) -> int:
        """Block index in E holding the position of the vertex at addr."""
        if addr == ():
            return 0
        return 2 + 2 * self.order.index(addr)

    def full_residual(self, c: np.ndarray) -> np.ndarray:
        n = self.n
        Ev = self.evaluation(c)
        blk = lambda b: Ev[:, b * n : (b + 1) * n]
        parts = []
        for j, e in enumerate(self.order):
            parts.append(wrap(blk(1 + 2 * j) - blk(self._vertex_block(e[:-1]))))
        base = 1 + 2 * self.k
        for q, leaf in enumerate(self.T.leaves):
            parts.append(wrap(blk(base + q) - blk(self._vertex_block(leaf[:-1]))))
        return np.concatenate(parts, axis=1)

    def delta_basis(self) -> np.ndarray:
        """Positive basis of Delta_T: image of M^{1+k} (x_top, (x_e)_e)."""
        n, k, d = self.n, self.k, self.T.d
        B = np.zeros(((1 + 2 * k + d) * n, (1 + k) * n))
        var = {(): 0}
        var.update({e: 1 + j for j, e in enumerate(self.order)})

        def put(block: int, vertex: Edge) -> None:
            B[block * n : (block + 1) * n, var[vertex] * n : (var[vertex] + 1) * n] = np.eye(n)

        put(0, ())
        for j, e in enumerate(self.order):
            put(1 + 2 * j, e[:-1])
            put(2 + 2 * j, e)
        for q, leaf in enumerate(self.T.leaves):
            put(1 + 2 * k + q, leaf[:-1])
        return B

    def chart_sign(self) -> int:
        sign = self.x0.u_sign * ((-1) ** ((self.n + 1) * self.k))
        for x in self.xs:
            sign *= x.stable_sign
        return sign

    def _polish(self, c: np.ndarray, iters: int = 4) -> np.ndarray:
        for _ in range(iters):
            r = self.full_residual(c[None])[0]
            if np.max(np.abs(r)) < 1e-14:
                break
            J = fd_jacobian(self.full_residual, c[None], h=1e-7)[0]
            c = c - np.linalg.solve(J, r)
        return c

    def assess(self, z: np.ndarray) -> FlowTreeSolution:
        c = self._polish(self.chart_from_reduced(z))
        res = float(np.max(np.abs(self.full_residual(c[None])[0]))) if self.chart_dim else 0.0
        if res >= self.cfg.tol_match:
            raise RegularityError(f"matching residual {res:.2e} above tolerance on {serialize(self.T)}")
        J = fd_jacobian(self.full_residual, c[None], h=1e-7)[0]
        cond = float(np.linalg.cond(J))
        if not np.isfinite(cond) or cond > self.cfg.max_cond:
            raise RegularityError(f"Jacobian condition {cond:.2e} on {serialize(self.T)}: reseed")
        DE = fd_jacobian(self.evaluation, c[None], h=1e-7)[0]
        mat = np.concatenate([DE, self.delta_basis()], axis=1)
        mat = mat / np.linalg.norm(mat, axis=0)
        det = float(np.linalg.det(mat))
        if abs(det) < self.cfg.tol_det:
            raise IndeterminateSignError(f"|det| = {abs(det):.2e} below tol_det")
        sign = int(np.sign(det)) * self.chart_sign()
        _, lam, _, _ = self._unpack(c[None])
        longest = max((float(lam[e][0]) for e in self.order), default=0.0)
        if longest >= self.cfg.max_length:
            raise LengthBoundError(
                f"internal length {longest:.3f} >= {self.cfg.max_length} on {serialize(self.T)}: reseed"
            )
        return FlowTreeSolution(
            self.T,
            self.x0.name,
            tuple(x.name for x in self.xs),
            {e: float(lam[e][0]) for e in self.order},
            z[: self.n] % 1.0,
            c,
            res,
            cond,
            det,
            sign,
            list(self.order),
        )

    def solve(self) -> list[FlowTreeSolution]:
        if self.dim != 0:
            raise ValueError(f"expected dimension {self.dim}, need 0")
        n, k = self.n, self.k
        z0 = self.seeds()
        max_step = np.array([0.08] * n + [0.7] * k)

        def valid(z):
            return np.all((z[:, n:] > RHO_BOUNDS[0]) & (z[:, n:] < RHO_BOUNDS[1]), axis=1)

        z, ok = batched_newton(self.reduced_residual, z0, max_step, max_iter=self.cfg.max_iter, valid=valid)
        z = z[ok & valid(z)]
        if len(z) == 0:
            return []
        z[:, :n] %= 1.0
        periodic = np.array([True] * n + [False] * k)
        uniq = z[_dedup(z, periodic, self.cfg.tol_dedup)]
        # Distinct roots closer than this are an ambiguous collapse.
        close = _dedup(uniq, periodic, 100 * self.cfg.tol_dedup)
        if len(close) != len(uniq):
            raise RegularityError("distinct solutions within 100 tol_dedup: ambiguous deduplication")
        inside = self._basin_ok(uniq, 0.0)
        strict = self._basin_ok(uniq, self.cfg.basin_margin)
        if np.any(inside & ~strict):
            raise RegularityError("solution on the boundary of a stable/unstable manifold (near-broken)")
        sols = [self.assess(zz) for zz in uniq[inside]]
        sols.sort(key=lambda s: (tuple(np.round(s.vertex, 6)), tuple(s.lengths.values())))
        return sols


def solve_flow_trees(manifold, datum, T, x0, xs, config=None) -> list[FlowTreeSolution]:
    return TreeProblem(manifold, datum, T, x0, xs, config).solve()


def orientation_sign(problem: TreeProblem, solution: FlowTreeSolution) -> int:
    return problem.assess(np.concatenate([solution.vertex, np.log(list(solution.lengths.values()))])).sign


# ---------------------------------------------------------------- trajectories

@dataclass
class TrajectorySolution:
    x: str
    y: str
    point: np.ndarray
    sign: int
    residual: float


def trajectories(
    manifold: ModelManifold, x: CritPoint, y: CritPoint, config: SolverConfig | None = None
) -> list[TrajectorySolution]:
    """Unparametrized flow lines x -> y, gauge-fixed at the mid level set."""
    cfg = config or SolverConfig()
    if x.index != y.index + 1:
        raise ValueError("trajectory counting needs mu(x) = mu(y) + 1")
    n = manifold.n
    level = 0.5 * (x.value + y.value)
    sx, uy = list(x.stable), list(y.unstable)

    def fun(p):
        return np.concatenate(
            [
                wrap(p[:, sx] - x.position[sx]),
                wrap(p[:, uy] - y.position[uy]),
                (manifold.f(p) - level)[:, None],
            ],
            axis=1,
        )

    axis = (np.arange(cfg.grid) + 0.5) / cfg.grid
    p0 = np.array(list(itertools.product(axis, repeat=n)))
    p, ok = batched_newton(fun, p0, np.full(n, 0.08), max_iter=cfg.max_iter)
    p = p[ok] % 1.0
    if len(p) == 0:
        return []
    p = p[_dedup(p, np.ones(n, dtype=bool), cfg.tol_dedup)]
    half = manifold.basin_halfwidth()
    ux, sy = list(x.unstable), list(y.stable)
    out = []
    for q in p:
        in_x = np.abs(wrap(q[ux] - x.position[ux])) < half[ux]
        in_y = np.abs(wrap(q[sy] - y.position[sy])) < half[sy]
        if not (np.all(in_x) and np.all(in_y)):
            continue
        res = float(np.max(np.abs(fun(q[None]))))
        J = fd_jacobian(fun, q[None], h=1e-7)[0]
        if np.linalg.cond(J) > cfg.max_cond:
            raise RegularityError(f"degenerate trajectory {x.name} -> {y.name}")
        out.append(TrajectorySolution(x.name, y.name, q, _trajectory_sign(manifold, x, y, q), res))
    out.sort(key=lambda s: tuple(np.round(s.point, 6)))
    return out


def _trajectory_sign(manifold: ModelManifold, x: CritPoint, y: CritPoint, p: np.ndarray) -> int:
    # 0 -> T M(x,y) -> T W^u(x) + T W^s(y) -> T M -> 0 with i(v) = (v, -v),
    # p(a, b) = a + b; the flow direction is positive for the point of M^(x,y).
    Fu, Fs = x.unstable_frame, y.stable_frame
    xi = manifold.neg_grad(p[None])[0]
    cu = np.linalg.lstsq(Fu, xi, rcond=None)[0]
    cs = np.linalg.lstsq(Fs, xi, rcond=None)[0]
    iv = np.concatenate([cu, -cs])
    Pm = np.concatenate([Fu, Fs], axis=1)
    W = np.linalg.pinv(Pm)
    det = np.linalg.det(np.concatenate([iv[:, None], W], axis=1))
    return int(np.sign(det))
