"""Graded modules, coefficient systems and A-infinity checkers over the integers."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .signs import DEFAULT_SHIFT, maltese, to_sign


class MissingCoefficientError(KeyError):
    """An admissible coefficient was needed but never computed."""


class NotAComplexError(ValueError):
    pass


@dataclass(frozen=True)
class GradedBasis:
    generators: tuple[tuple[str, int], ...]
    n: int

    def __post_init__(self) -> None:
        ids = [g for g, _ in self.generators]
        if len(set(ids)) != len(ids):
            raise ValueError("generator ids must be unique")
        for g, deg in self.generators:
            if not 0 <= deg <= self.n:
                raise ValueError(f"degree of {g} outside [0, {self.n}]")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, int]], n: int) -> "GradedBasis":
        return cls(tuple((str(g), int(deg)) for g, deg in pairs), n)

    @property
    def ids(self) -> list[str]:
        return [g for g, _ in self.generators]

    def degree(self, g: str) -> int:
        for h, deg in self.generators:
            if h == g:
                return deg
        raise KeyError(g)

    def of_degree(self, deg: int) -> list[str]:
        return [g for g, k in self.generators if k == deg]

    def to_dict(self) -> dict:
        return {"n": self.n, "generators": [[g, k] for g, k in self.generators]}


def admissible(basis: GradedBasis, x0: str, xs: Sequence[str]) -> bool:
    """Degree condition for a possibly nonzero a^d(x0; xs): mu0 = sum mu + 2 - d."""
    return basis.degree(x0) == sum(basis.degree(x) for x in xs) + 2 - len(xs)


Key = tuple[int, str, tuple[str, ...]]


@dataclass
class CoefficientSystem:
    """Sparse integer coefficients a^d(x0; x1..xd).

    A stored value of 0 means "computed and zero".  An admissible tuple with
    no stored value is missing and reading it raises.  Inadmissible tuples are
    zero by degree reasons and are never stored.
    """

    basis: GradedBasis
    entries: dict[Key, int] = field(default_factory=dict)

    def set(self, d: int, x0: str, xs: Sequence[str], value: int) -> None:
        xs = tuple(xs)
        if len(xs) != d:
            raise ValueError("arity mismatch")
        if not admissible(self.basis, x0, xs):
            if value != 0:
                raise ValueError(f"nonzero a^{d}({x0}; {xs}) violates the degree condition")
            return
        self.entries[(d, x0, xs)] = int(value)

    def get(self, d: int, x0: str, xs: Sequence[str]) -> int:
        xs = tuple(xs)
        if not admissible(self.basis, x0, xs):
            return 0
        try:
            return self.entries[(d, x0, xs)]
        except KeyError:
            raise MissingCoefficientError(f"a^{d}({x0}; {', '.join(xs)}) not computed") from None

    def admissible_keys(self, d: int) -> list[Key]:
        ids = self.basis.ids
        return [
            (d, x0, xs)
            for xs in itertools.product(ids, repeat=d)
            for x0 in ids
            if admissible(self.basis, x0, xs)
        ]

    def fill_zero(self, d: int) -> None:
        """Mark every admissible arity-d tuple without a value as computed-zero."""
        for key in self.admissible_keys(d):
            self.entries.setdefault(key, 0)

    def arities(self) -> list[int]:
        return sorted({k[0] for k in self.entries})

    def nonzero(self) -> dict[Key, int]:
        return {k: v for k, v in self.entries.items() if v}

    def to_records(self) -> list[dict]:
        order = {g: j for j, g in enumerate(self.basis.ids)}
        keys = sorted(self.entries, key=lambda k: (k[0], order[k[1]], [order[x] for x in k[2]]))
        return [{"d": d, "x0": x0, "xs": list(xs), "value": self.entries[(d, x0, xs)]} for d, x0, xs in keys]

    @classmethod
    def from_records(cls, basis: GradedBasis, records: Iterable[dict]) -> "CoefficientSystem":
        cs = cls(basis)
        for rec in records:
            try:
                d, x0, xs, value = int(rec["d"]), str(rec["x0"]), [str(x) for x in rec["xs"]], rec["value"]
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"malformed coefficient record {rec!r}") from exc
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"coefficient value must be an integer: {rec!r}")
            cs.set(d, x0, xs, value)
        return cs


# ---------------------------------------------------------------- graded maps

Vector = dict[str, int]


@dataclass
class GradedMap:
    arity: int
    basis: GradedBasis
    table: dict[tuple[str, ...], Vector] = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return 2 - self.arity

    def on_basis(self, xs: Sequence[str]) -> Vector:
        return self.table.get(tuple(xs), {})

    def apply(self, vectors: Sequence[Vector]) -> Vector:
        """Multilinear extension to a tuple of vectors."""
        out: Vector = {}
        for combo in itertools.product(*(list(v.items()) for v in vectors)):
            coeff = 1
            for _, c in combo:
                coeff *= c
            if not coeff:
                continue
            for y, c in self.on_basis([g for g, _ in combo]).items():
                out[y] = out.get(y, 0) + coeff * c
        return {k: v for k, v in out.items() if v}

    def degree_violations(self) -> list[tuple[tuple[str, ...], str]]:
        bad = []
        for xs, vec in self.table.items():
            want = sum(self.basis.degree(x) for x in xs) + self.degree
            bad += [(xs, y) for y, c in vec.items() if c and self.basis.degree(y) != want]
        return bad


def build_mu(coeffs: CoefficientSystem, d: int) -> GradedMap:
    basis = coeffs.basis
    m = GradedMap(d, basis)
    for xs in itertools.product(basis.ids, repeat=d):
        vec = {}
        for x0 in basis.ids:
            if admissible(basis, x0, xs):
                c = coeffs.get(d, x0, xs)
                if c:
                    vec[x0] = c
        if vec:
            m.table[xs] = vec
    return m


# ---------------------------------------------------------------- relations

def check_coefficient_relation(
    coeffs: CoefficientSystem,
    n: int,
    x0: str,
    xs: Sequence[str],
    degree_shift: str = DEFAULT_SHIFT,
) -> int:
    """sum_{i,l,y} (-1)^{malt_1^{i-1}} a^{d-l}(x0; .., y, ..) a^{l+1}(y; x_i..x_{i+l})."""
    basis = coeffs.basis
    xs = list(xs)
    d = len(xs)
    mus = [basis.degree(x) for x in xs]
    if d < 1 or basis.degree(x0) != sum(mus) + 3 - d:
        raise ValueError(f"({x0}; {xs}) violates mu(x0) = sum mu + 3 - d")
    total = 0
    for i in range(1, d + 1):
        sign = to_sign(maltese(mus, i, degree_shift))
        for l in range(0, d - i + 1):
            mu_y = sum(mus[i - 1 : i + l]) + 1 - l
            if not 0 <= mu_y <= n:
                continue
            inner_in = xs[i - 1 : i + l]
            for y in basis.of_degree(mu_y):
                inner = coeffs.get(l + 1, y, inner_in)
                if not inner:
                    continue
                outer = coeffs.get(d - l, x0, xs[: i - 1] + [y] + xs[i + l :])
                total += sign * outer * inner
    return total


def relation_tuples(basis: GradedBasis, d: int) -> list[tuple[str, tuple[str, ...]]]:
    """All (x0, xs) of arity d with mu(x0) = sum mu + 3 - d."""
    out = []
    for xs in itertools.product(basis.ids, repeat=d):
        want = sum(basis.degree(x) for x in xs) + 3 - d
        out += [(x0, xs) for x0 in basis.of_degree(want)] if 0 <= want <= basis.n else []
    return out


def check_all_relations(
    coeffs: CoefficientSystem, d_max: int, degree_shift: str = DEFAULT_SHIFT
) -> list[dict]:
    """Report records {tuple, lhs_sum, pass} for every 1-dimensional tuple."""
    n = coeffs.basis.n
    out = []
    for d in range(1, d_max + 1):
        for x0, xs in relation_tuples(coeffs.basis, d):
            s = check_coefficient_relation(coeffs, n, x0, xs, degree_shift)
            out.append({"tuple": [x0, *xs], "lhs_sum": s, "pass": s == 0})
    return out


@dataclass
class AinftyReport:
    checked: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"checked": self.checked, "violations": self.violations, "pass": self.passed}


def check_ainfty(
    mus: dict[int, GradedMap] | Sequence[GradedMap],
    basis: GradedBasis,
    degree_shift: str = DEFAULT_SHIFT,
    d_max: int | None = None,
) -> AinftyReport:
    """Evaluate the A-infinity equation on every basis tuple of arity <= D."""
    if not isinstance(mus, dict):
        mus = {m.arity: m for m in mus}
    top = max(mus) if d_max is None else d_max
    missing = [k for k in range(1, top + 1) if k not in mus]
    if missing:
        raise ValueError(f"maps missing for arities {missing}")
    rep = AinftyReport()
    for d in range(1, top + 1):
        for xs in itertools.product(basis.ids, repeat=d):
            degs = [basis.degree(x) for x in xs]
            total: Vector = {}
            for l in range(0, d):
                for i in range(1, d - l + 1):
                    sign = to_sign(maltese(degs, i, degree_shift))
                    inner = mus[l + 1].on_basis(xs[i - 1 : i + l])
                    if not inner:
                        continue
                    args = [{x: 1} for x in xs[: i - 1]] + [inner] + [{x: 1} for x in xs[i + l :]]
                    for y, c in mus[d - l].apply(args).items():
                        total[y] = total.get(y, 0) + sign * c
            rep.checked += 1
            bad = {y: c for y, c in total.items() if c}
            if bad:
                rep.violations.append({"inputs": list(xs), "value": dict(sorted(bad.items()))})
    return rep


# ---------------------------------------------------------------- cohomology

def _smith_diagonal(rows: list[list[int]]) -> list[int]:
    """Nonzero invariant factors of an integer matrix."""
    A = [r[:] for r in rows]
    m = len(A)
    ncols = len(A[0]) if m else 0
    diag = []
    t = 0
    while t < m and t < ncols:
        pivot = None
        for a in range(t, m):
            for b in range(t, ncols):
                if A[a][b] and (pivot is None or abs(A[a][b]) < abs(A[pivot[0]][pivot[1]])):
                    pivot = (a, b)
        if pivot is None:
            break
        a, b = pivot
        A[t], A[a] = A[a], A[t]
        for r in A:
            r[t], r[b] = r[b], r[t]
        while True:
            p = A[t][t]
            dirty = False
            for a in range(t + 1, m):
                q = A[a][t] // p
                if q:
                    A[a] = [x - q * y for x, y in zip(A[a], A[t])]
                if A[a][t]:
                    dirty = True
            for b in range(t + 1, ncols):
                q = A[t][b] // p
                if q:
                    for r in A:
                        r[b] -= q * r[t]
                if A[t][b]:
                    dirty = True
            if not dirty:
                # Divisibility of the remaining block by p.
                bad = [(a, b) for a in range(t + 1, m) for b in range(t + 1, ncols) if A[a][b] % p]
                if not bad:
                    break
                a, _ = bad[0]
                A[t] = [x + y for x, y in zip(A[t], A[a])]
                continue
            # Move the smallest nonzero entry of row/column t to the pivot.
            cands = [(abs(A[a][t]), a, t) for a in range(t, m) if A[a][t]]
            cands += [(abs(A[t][b]), t, b) for b in range(t, ncols) if A[t][b]]
            _, a, b = min(cands)
            A[t], A[a] = A[a], A[t]
            for r in A:
                r[t], r[b] = r[b], r[t]
        diag.append(abs(A[t][t]))
        t += 1
    return diag


def differential_matrix(mu1: GradedMap, basis: GradedBasis, k: int) -> list[list[int]]:
    src, dst = basis.of_degree(k), basis.of_degree(k + 1)
    return [[mu1.on_basis((x,)).get(y, 0) for x in src] for y in dst]


def cohomology(mu1: GradedMap, basis: GradedBasis) -> dict:
    """Betti numbers and torsion coefficients per degree."""
    ids = basis.ids
    for x in ids:
        if mu1.apply([mu1.on_basis((x,))]):
            raise NotAComplexError(f"mu_1 squared is nonzero on {x}")
    invariants = {}
    for k in range(-1, basis.n + 1):
        mat = differential_matrix(mu1, basis, k) if 0 <= k < basis.n else []
        invariants[k] = _smith_diagonal(mat) if mat and mat[0] else []
    ranks, torsion = [], []
    for k in range(basis.n + 1):
        dim = len(basis.of_degree(k))
        ranks.append(dim - len(invariants[k]) - len(invariants[k - 1]))
        torsion.append([q for q in invariants[k - 1] if q > 1])
    return {"ranks": ranks, "torsion": torsion}


def cohomology_ranks(mu1: GradedMap, basis: GradedBasis) -> list[int]:
    return cohomology(mu1, basis)["ranks"]
