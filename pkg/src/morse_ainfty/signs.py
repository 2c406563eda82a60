"""Parity and sign formulas for the Morse A-infinity coefficients.

Every function returns either a parity in {0, 1} (exponent of -1) or a sign
in {+1, -1}.  Arithmetic is exact integer arithmetic mod 2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .trees import (
    LEFT,
    RIGHT,
    Edge,
    RibbonTree,
    canonical_ordering,
    dexterity,
    edge_type,
    enumerate_binary_trees,
    handedness,
    serialize,
    edge_label,
    split,
)

DEGREE_SHIFTS = ("mu-1", "mu")
DEFAULT_SHIFT = "mu-1"


def parity(x: int) -> int:
    return x % 2


def to_sign(p: int) -> int:
    return -1 if p % 2 else 1


def _check_shift(degree_shift: str) -> None:
    if degree_shift not in DEGREE_SHIFTS:
        raise ValueError(f"degree_shift must be one of {DEGREE_SHIFTS}, got {degree_shift!r}")


def shifted_degree(mu: int, degree_shift: str = DEFAULT_SHIFT) -> int:
    """||x||: mu - 1 under the default convention, mu under the alternative."""
    _check_shift(degree_shift)
    return mu - 1 if degree_shift == "mu-1" else mu


def sigma(n: int, mus: Sequence[int]) -> int:
    """Parity of (n+1)(mu_0 + sum_i (d+1-i) mu_i) for mus = (mu_0, ..., mu_d)."""
    d = len(mus) - 1
    if d < 1:
        raise ValueError("sigma needs d >= 1")
    total = mus[0] + sum((d + 1 - i) * mus[i] for i in range(1, d + 1))
    return parity((n + 1) * total)


def maltese(mus: Sequence[int], i: int, degree_shift: str = DEFAULT_SHIFT) -> int:
    """Parity of sum_{q<i} ||x_q|| for mus = (mu_1, ..., mu_d)."""
    if not 1 <= i <= len(mus) + 1:
        raise ValueError(f"i={i} outside 1..{len(mus) + 1}")
    return parity(sum(shifted_degree(m, degree_shift) for m in mus[: i - 1]))


# ---------------------------------------------------------------- tau_e

def _permutation_sign(p: Sequence[int]) -> int:
    p = list(p)
    sign = 1
    for a in range(len(p)):
        while p[a] != a:
            b = p[a]
            p[a], p[b] = p[b], p[a]
            sign = -sign
    return sign


def tau_sign(T: RibbonTree, e: Edge) -> int:
    if not T.is_binary:
        raise ValueError("tau_sign needs a binary tree")
    t = edge_type(T, e)
    exponent = (T.d - t.i) * t.l + T.d
    if handedness(T, e) == LEFT:
        exponent -= 1
    return to_sign(exponent)


def tau_sign_bruteforce(T: RibbonTree, e: Edge) -> int:
    """Sign of {e} x E_int(T1) x E_int(T2) -> E_int(T) under canonical orders."""
    T1, T2 = split(T, e)
    # Edges of T1 keep their addresses in T; those of T2 sit below e.
    domain = [e] + canonical_ordering(T1) + [e + a for a in canonical_ordering(T2)]
    pos = {g: j for j, g in enumerate(canonical_ordering(T))}
    return _permutation_sign([pos[g] for g in domain])


# ---------------------------------------------------------------- gluing parities

def sign_gluing_root(mu_x0: int) -> int:
    """0 iff product and boundary orientation agree for a root break."""
    return parity(mu_x0 + 1)


def sign_gluing_leaf(
    n: int, d: int, i: int, mus: Sequence[int], mu_x0: int, degree_shift: str = DEFAULT_SHIFT
) -> int:
    if not 1 <= i <= d:
        raise ValueError("leaf index out of range")
    return parity(mu_x0 + 1 + (d - i) * (n + 1) + maltese(mus, i, degree_shift))


def sign_gluing_permute(n: int, d: int, i: int, l: int, malt: int, mu_x0: int, hand: str) -> int:
    extra = 1 if hand == LEFT else 0
    return parity(mu_x0 + malt + (n + 1) * (l * malt + d * l + i + l + d + extra))


def sign_delta_perm(n: int, d: int, i: int, l: int, hand: str) -> tuple[int, int]:
    """(parity of the Delta_T restriction, parity of the ambient permutation)."""
    ambient = parity(n * (d - i - 1) * l)
    if hand == LEFT:
        return parity(n * ((d - i - 1) * l + 1)), ambient
    return ambient, ambient


def sign_gluing_internal(
    n: int, d: int, i: int, l: int, malt: int, mu_x0: int, hand: str, r_T: int, r_T1: int, r_T2: int
) -> int:
    if hand not in (LEFT, RIGHT):
        raise ValueError("handedness must be 'left' or 'right'")
    return parity(
        r_T1 + r_T2 + r_T + mu_x0 + 1 + malt + (n + 1) * (l * malt + d * l + i + l + d)
    )


def coefficient_twist(n: int, mus: Sequence[int], T: RibbonTree) -> int:
    return to_sign(sigma(n, mus) + dexterity(T))


# ---------------------------------------------------------------- sigma identities

@dataclass
class SigmaReport:
    n: int
    d_max: int
    degree_shift: str
    checked: dict[int, int] = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d_max": self.d_max,
            "degree_shift": self.degree_shift,
            "checked": {str(k): v for k, v in self.checked.items()},
            "violations": self.violations[:20],
            "n_violations": len(self.violations),
            "pass": self.passed,
        }


def _in_range(mu: int, n: int) -> bool:
    return 0 <= mu <= n


def admissible_tuples(n: int, d: int, offset: int) -> list[tuple[int, ...]]:
    """(mu_0, ..., mu_d) in [0,n] with mu_0 = sum mu_i + offset - d."""
    out = []
    for xs in itertools.product(range(n + 1), repeat=d):
        mu0 = sum(xs) + offset - d
        if _in_range(mu0, n):
            out.append((mu0,) + xs)
    return out


def check_sigma_identities(
    n: int, d_max: int, degree_shift: str = DEFAULT_SHIFT, d_min: int = 1
) -> SigmaReport:
    """Exhaustive check of the three sigma congruences for 1-dimensional tuples."""
    rep = SigmaReport(n, d_max, degree_shift)
    for d in range(d_min, d_max + 1):
        for mus in admissible_tuples(n, d, 3):
            mu0, xs = mus[0], list(mus[1:])
            base = sigma(n, mus)
            for i in range(1, d + 1):
                malt = maltese(xs, i, degree_shift)
                for l in range(0, d - i + 1):
                    mu_y = sum(xs[i - 1 : i + l]) + 1 - l
                    if not _in_range(mu_y, n):
                        continue
                    outer = [mu0] + xs[: i - 1] + [mu_y] + xs[i + l :]
                    inner = [mu_y] + xs[i - 1 : i + l]
                    lhs = parity(base + sigma(n, outer) + sigma(n, inner))
                    rhs = parity((n + 1) * (l * malt + d * l + d + l + i))
                    rep.checked[1] += 1
                    if lhs != rhs:
                        rep.violations.append(
                            {"identity": 1, "mus": list(mus), "i": i, "l": l, "mu_y": mu_y}
                        )
            mu_y0 = mu0 - 1
            if _in_range(mu_y0, n):
                lhs = parity(sigma(n, [mu0, mu_y0]) + sigma(n, [mu_y0] + xs))
                rep.checked[2] += 1
                if lhs != base:
                    rep.violations.append({"identity": 2, "mus": list(mus)})
            for i in range(1, d + 1):
                mu_yi = xs[i - 1] + 1
                if not _in_range(mu_yi, n):
                    continue
                ys = xs[: i - 1] + [mu_yi] + xs[i:]
                lhs = parity(sigma(n, [mu0] + ys) + sigma(n, [mu_yi, xs[i - 1]]) + base)
                rep.checked[3] += 1
                if lhs != parity((n + 1) * (d - i)):
                    rep.violations.append({"identity": 3, "mus": list(mus), "i": i})
    return rep


# ---------------------------------------------------------------- tables

def sign_table(d: int) -> list[dict]:
    """tau_e closed form, brute force and dexterity for every binary (T, e)."""
    rows = []
    if d < 3:
        return rows
    for T in enumerate_binary_trees(d):
        order = canonical_ordering(T)
        r = dexterity(T)
        for pos, e in enumerate(order, start=1):
            t = edge_type(T, e)
            rows.append(
                {
                    "tree": serialize(T),
                    "edge": edge_label(T, e),
                    "position": pos,
                    "type": [t.i, t.l],
                    "handedness": handedness(T, e),
                    "tau_closed": tau_sign(T, e),
                    "tau_brute": tau_sign_bruteforce(T, e),
                    "dexterity": r,
                }
            )
    return rows
