"""Hand-built coefficient systems with known A-infinity behaviour.

With ||x|| = |x| - 1, a graded associative algebra with differential delta
satisfying Leibniz gives an A-infinity structure via mu_1 = delta and
mu_2(a, b) = (-1)^{|a|} ab.
"""

from __future__ import annotations

from .algebra import CoefficientSystem, GradedBasis


def exterior_torus(unital: bool = True) -> CoefficientSystem:
    """Cohomology ring of T^2 with generators 1, a, b (degree 1) and t = top."""
    basis = GradedBasis.from_pairs([("t", 2), ("a", 1), ("b", 1), ("1", 0)], n=2)
    cs = CoefficientSystem(basis)
    cs.set(2, "t", ("a", "b"), 1)
    cs.set(2, "t", ("b", "a"), -1)
    if unital:
        for x, deg in basis.generators:
            cs.set(2, x, ("1", x), 1)
            cs.set(2, x, (x, "1"), (-1) ** deg)
    for d in (1, 2, 3):
        cs.fill_zero(d)
    return cs


def interval_dga() -> CoefficientSystem:
    """1, p in degree 0 and q in degree 1 with pp = p, pq = q, delta p = q."""
    basis = GradedBasis.from_pairs([("1", 0), ("p", 0), ("q", 1)], n=1)
    cs = CoefficientSystem(basis)
    cs.set(1, "q", ("p",), 1)
    products = {("p", "p"): "p", ("p", "q"): "q"}
    for x, deg in basis.generators:
        products[("1", x)] = x
        products[(x, "1")] = x
    for (x, y), z in products.items():
        cs.set(2, z, (x, y), (-1) ** basis.degree(x))
    for d in (1, 2, 3):
        cs.fill_zero(d)
    return cs


def non_complex() -> CoefficientSystem:
    """A chain of two arrows x -> y -> z, so delta^2 != 0."""
    basis = GradedBasis.from_pairs([("x", 0), ("y", 1), ("z", 2)], n=2)
    cs = CoefficientSystem(basis)
    cs.set(1, "y", ("x",), 1)
    cs.set(1, "z", ("y",), 1)
    cs.fill_zero(1)
    return cs


def acyclic_pair() -> CoefficientSystem:
    basis = GradedBasis.from_pairs([("x", 0), ("y", 1)], n=1)
    cs = CoefficientSystem(basis)
    cs.set(1, "y", ("x",), 1)
    cs.fill_zero(1)
    return cs
