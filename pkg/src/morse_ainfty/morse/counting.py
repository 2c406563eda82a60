from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..algebra import CoefficientSystem, GradedBasis, admissible
from ..signs import coefficient_twist, to_sign
from ..trees import (
    RibbonTree,
    canonical_ordering,
    collapse_edge,
    edge_label,
    edge_type,
    enumerate_binary_trees,
    serialize,
    split,
)
from .manifold import CritPoint, ModelManifold
from .perturbation import PerturbationDatum
from .solver import FlowTreeSolution, SolverConfig, TreeProblem, trajectories


def expected_dimension(T: RibbonTree, mus) -> int:
    """mu(x0) - sum mu(x_i) + k(T) for mus = (mu0, mu1, ..., mud)."""
    return mus[0] - sum(mus[1:]) + T.k


def basis_of(manifold: ModelManifold) -> GradedBasis:
    return GradedBasis.from_pairs([(c.name, c.index) for c in manifold.critical_points()], manifold.n)


@dataclass
class CountResult:
    coefficients: CoefficientSystem
    solutions: list[FlowTreeSolution] = field(default_factory=list)
    trajectories: list = field(default_factory=list)

    @property
    def max_length(self) -> float:
        return max((s.max_length for s in self.solutions), default=0.0)

    def traces(self) -> list[dict]:
        out = [
            {"tree": "1", "tuple": [t.x, t.y], "point": [round(float(v), 9) for v in t.point],
             "residual": float(f"{t.residual:.3e}"), "sign": t.sign}
            for t in self.trajectories
        ]
        return out + [s.to_dict() for s in self.solutions]


def count_coefficients(
    manifold: ModelManifold,
    datum: PerturbationDatum,
    d_max: int,
    config: SolverConfig | None = None,
) -> CountResult:
    crit = manifold.critical_points()
    by_name = {c.name: c for c in crit}
    basis = basis_of(manifold)
    n = manifold.n
    cs = CoefficientSystem(basis)
    result = CountResult(cs)

    for x0, x1 in itertools.product(crit, repeat=2):
        if x0.index != x1.index + 1:
            continue
        trajs = trajectories(manifold, x0, x1, config)
        result.trajectories += trajs
        cs.set(1, x0.name, (x1.name,), to_sign(n + 1) * sum(t.sign for t in trajs))
    cs.fill_zero(1)

    for d in range(2, d_max + 1):
        trees = enumerate_binary_trees(d)
        for xs in itertools.product(crit, repeat=d):
            for x0 in crit:
                if not admissible(basis, x0.name, [x.name for x in xs]):
                    continue
                mus = [x0.index] + [x.index for x in xs]
                total = 0
                for T in trees:
                    sols = TreeProblem(manifold, datum, T, x0, list(xs), config).solve()
                    result.solutions += sols
                    total += coefficient_twist(n, mus, T) * sum(s.sign for s in sols)
                cs.set(d, x0.name, [x.name for x in xs], total)
        cs.fill_zero(d)
    return result


# ---------------------------------------------------------------- strata

def boundary_strata(T: RibbonTree, crit: list[CritPoint], x0: str, xs: list[str]) -> list[dict]:
    """Symbolic catalogue of the boundary of a 1-dimensional moduli space."""
    by = {c.name: c for c in crit}
    mus = [by[x0].index] + [by[x].index for x in xs]
    if not T.is_binary:
        raise ValueError("strata are catalogued for binary trees")
    if len(xs) != T.d:
        raise ValueError("need one critical point per leaf")
    dim = expected_dimension(T, mus)
    if dim != 1:
        raise ValueError(f"expected dimension {dim}, need 1")
    out: list[dict] = []
    tree = serialize(T)
    for e in canonical_ordering(T):
        out.append({"kind": "collapse", "tree": tree, "edge": edge_label(T, e),
                    "quotient": serialize(collapse_edge(T, e))})
    for y in crit:
        if y.index == mus[0] - 1:
            out.append({"kind": "root-break", "tree": tree, "y": y.name})
    for i, x in enumerate(xs, start=1):
        for y in crit:
            if y.index == by[x].index + 1:
                out.append({"kind": "leaf-break", "tree": tree, "leaf": i, "y": y.name})
    for e in canonical_ordering(T):
        t = edge_type(T, e)
        T1, T2 = split(T, e)
        want = sum(mus[t.i : t.i + t.l + 1]) + 1 - t.l
        for y in crit:
            if y.index == want:
                out.append({"kind": "edge-break", "tree": tree, "edge": edge_label(T, e),
                            "type": [t.i, t.l], "y": y.name,
                            "upper": serialize(T1), "lower": serialize(T2)})
    return out
