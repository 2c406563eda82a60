"""Ribbon trees: enumeration, collapse, splitting, canonical edge ordering.

A tree is stored as a nested tuple ``shape``.  A leaf is the empty tuple and
an internal vertex is the tuple of its child subtrees in planar order, so
isomorphism is plain structural equality.  The single-edge tree (d = 1) has
``shape == ()``.

Edges are identified with their outgoing vertex, addressed by the path of
child indices from the top internal vertex.  The root edge e0 is ``()``, leaf
edges are the addresses of leaves and every other address is internal.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

Shape = tuple
Edge = tuple[int, ...]

LEFT = "left"
RIGHT = "right"


class TreeError(ValueError):
    """Invalid argument to a tree operation."""


@dataclass(frozen=True)
class EdgeType:
    i: int
    l: int


@dataclass(frozen=True)
class RibbonTree:
    shape: Shape
    _leaves: tuple[Edge, ...] = field(init=False, repr=False, compare=False)
    _internal: tuple[Edge, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        leaves: list[Edge] = []
        internal: list[Edge] = []

        def walk(node: Shape, addr: Edge) -> None:
            if node == ():
                leaves.append(addr)
                return
            if len(node) < 2:
                raise TreeError("internal vertices need at least two children")
            if addr:
                internal.append(addr)
            for j, child in enumerate(node):
                walk(child, addr + (j,))

        walk(self.shape, ())
        object.__setattr__(self, "_leaves", tuple(leaves))
        object.__setattr__(self, "_internal", tuple(internal))

    # basic data
    @property
    def d(self) -> int:
        return len(self._leaves)

    @property
    def k(self) -> int:
        return len(self._internal)

    @property
    def leaves(self) -> tuple[Edge, ...]:
        """Leaf edges e_1..e_d in planar order."""
        return self._leaves

    @property
    def internal_edges(self) -> tuple[Edge, ...]:
        """Internal edges in preorder (not the canonical ordering)."""
        return self._internal

    @property
    def is_binary(self) -> bool:
        return self.k == self.d - 2

    def node(self, addr: Edge) -> Shape:
        node = self.shape
        for j in addr:
            node = node[j]
        return node

    def is_internal(self, e: Edge) -> bool:
        return len(e) > 0 and self._has(e) and self.node(e) != ()

    def is_leaf(self, e: Edge) -> bool:
        return self._has(e) and self.node(e) == () and self.d > 1

    def _has(self, e: Edge) -> bool:
        node = self.shape
        for j in e:
            if not isinstance(node, tuple) or j < 0 or j >= len(node):
                return False
            node = node[j]
        return True

    def leaf_index(self, e: Edge) -> int:
        """1-based index of a leaf edge."""
        return self._leaves.index(e) + 1

    def edge_kind(self, e: Edge) -> int | str:
        """External index 0..d or the string ``"internal"``."""
        if not self._has(e):
            raise TreeError(f"no edge {e} in {self}")
        if e == ():
            return 0
        if self.node(e) == ():
            return self.leaf_index(e)
        return "internal"

    def leaves_below(self, e: Edge) -> list[int]:
        return [q + 1 for q, leaf in enumerate(self._leaves) if leaf[: len(e)] == e]

    def __str__(self) -> str:
        return serialize(self)


def _require_internal(T: RibbonTree, e: Edge) -> None:
    if not T.is_internal(e):
        raise TreeError(f"{e} is not an internal edge of {T}")


# ---------------------------------------------------------------- serialization

def serialize(T: RibbonTree) -> str:
    counter = itertools.count(1)

    def rec(node: Shape) -> str:
        if node == ():
            return str(next(counter))
        return "(" + " ".join(rec(c) for c in node) + ")"

    return rec(T.shape)


def parse(text: str) -> RibbonTree:
    """Inverse of :func:`serialize`; leaf labels must read 1..d in order."""
    tokens = re.findall(r"\(|\)|\d+", text)
    if "".join(tokens) != re.sub(r"\s+", "", text):
        raise TreeError(f"unexpected characters in {text!r}")
    pos = 0
    labels: list[int] = []

    def rec() -> Shape:
        nonlocal pos
        if pos >= len(tokens):
            raise TreeError(f"truncated tree {text!r}")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            kids = []
            while pos < len(tokens) and tokens[pos] != ")":
                kids.append(rec())
            if pos >= len(tokens):
                raise TreeError(f"unbalanced parentheses in {text!r}")
            pos += 1
            return tuple(kids)
        if tok == ")":
            raise TreeError(f"unbalanced parentheses in {text!r}")
        labels.append(int(tok))
        return ()

    shape = rec()
    if pos != len(tokens):
        raise TreeError(f"trailing tokens in {text!r}")
    if labels != list(range(1, len(labels) + 1)):
        raise TreeError(f"leaves must be labelled 1..d in planar order: {text!r}")
    return RibbonTree(shape)


def canonical_key(T: RibbonTree) -> tuple[int, ...]:
    """Preorder sequence of child arities (leaves contribute 0)."""
    out: list[int] = []

    def rec(node: Shape) -> None:
        out.append(len(node))
        for c in node:
            rec(c)

    rec(T.shape)
    return tuple(out)


# ---------------------------------------------------------------- enumeration

def _compositions(d: int, parts_min: int) -> Iterator[tuple[int, ...]]:
    def rec(rest: int) -> Iterator[tuple[int, ...]]:
        if rest == 0:
            yield ()
            return
        for first in range(1, rest + 1):
            for tail in rec(rest - first):
                yield (first,) + tail

    for comp in rec(d):
        if len(comp) >= parts_min:
            yield comp


@lru_cache(maxsize=None)
def _shapes(d: int, binary: bool) -> tuple[Shape, ...]:
    if d == 1:
        return ((),)
    out: list[Shape] = []
    for comp in _compositions(d, 2):
        if binary and len(comp) != 2:
            continue
        for kids in itertools.product(*(_shapes(c, binary) for c in comp)):
            out.append(tuple(kids))
    out.sort(key=lambda s: canonical_key(RibbonTree(s)))
    return tuple(out)


def enumerate_ribbon_trees(d: int) -> list[RibbonTree]:
    if not isinstance(d, int) or d < 1:
        raise TreeError("d must be a positive integer")
    return [RibbonTree(s) for s in _shapes(d, False)]


def enumerate_binary_trees(d: int) -> list[RibbonTree]:
    if not isinstance(d, int) or d < 2:
        raise TreeError("binary trees need d >= 2")
    return [RibbonTree(s) for s in _shapes(d, True)]


def corolla(d: int) -> RibbonTree:
    if d < 2:
        raise TreeError("a corolla needs d >= 2")
    return RibbonTree(((),) * d)


# ---------------------------------------------------------------- collapse

def collapse_set(T: RibbonTree, F) -> RibbonTree:
    F = set(F)
    for e in F:
        _require_internal(T, e)

    def items(node: Shape, addr: Edge) -> list[Shape]:
        if node == ():
            return [()]
        kids: list[Shape] = []
        for j, c in enumerate(node):
            kids.extend(items(c, addr + (j,)))
        if addr in F:
            return kids
        return [tuple(kids)]

    (shape,) = items(T.shape, ())
    return RibbonTree(shape)


def collapse_edge(T: RibbonTree, e: Edge) -> RibbonTree:
    _require_internal(T, e)
    return collapse_set(T, {e})


def edge_map(T: RibbonTree, F) -> dict[Edge, Edge]:
    """Address in T/F of every edge of T not in F (root included)."""
    F = set(F)
    for e in F:
        _require_internal(T, e)
    out: dict[Edge, Edge] = {}

    def rec(node: Shape, addr: Edge, new_parent: Edge, start: int) -> int:
        # Returns the number of slots this subtree occupies in the parent list.
        if addr in F:
            slot = start
            for j, c in enumerate(node):
                slot += rec(c, addr + (j,), new_parent, slot)
            return slot - start
        new = new_parent + (start,) if addr else ()
        out[addr] = new
        slot = 0
        for j, c in enumerate(node):
            slot += rec(c, addr + (j,), new, slot)
        return 1

    rec(T.shape, (), (), 0)
    return out


# ---------------------------------------------------------------- types, splitting

def edge_type(T: RibbonTree, e: Edge) -> EdgeType:
    _require_internal(T, e)
    below = T.leaves_below(e)
    return EdgeType(below[0], len(below) - 1)


def handedness(T: RibbonTree, e: Edge) -> str:
    if e == ():
        raise TreeError("the root edge has no handedness")
    if not T._has(e):
        raise TreeError(f"no edge {e} in {T}")
    return LEFT if e[-1] == 0 else RIGHT


def _replace(shape: Shape, addr: Edge, new: Shape) -> Shape:
    if not addr:
        return new
    j = addr[0]
    return shape[:j] + (_replace(shape[j], addr[1:], new),) + shape[j + 1 :]


def split(T: RibbonTree, e: Edge) -> tuple[RibbonTree, RibbonTree]:
    _require_internal(T, e)
    return RibbonTree(_replace(T.shape, e, ())), RibbonTree(T.node(e))


def compose(T1: RibbonTree, T2: RibbonTree, i: int) -> tuple[RibbonTree, Edge]:
    if not 1 <= i <= T1.d:
        raise TreeError(f"graft index {i} out of range 1..{T1.d}")
    if T2.d < 2:
        raise TreeError("grafted tree needs at least two leaves")
    e = T1.leaves[i - 1]
    return RibbonTree(_replace(T1.shape, e, T2.shape)), e


def binary_parents(T: RibbonTree) -> list[tuple[RibbonTree, Edge]]:
    """The two binary trees collapsing onto T, sorted by serialization key."""
    if T.d < 3 or T.k != T.d - 3:
        raise TreeError("binary_parents needs k(T) = d - 3")
    (v,) = [a for a in [()] + list(T.internal_edges) if len(T.node(a)) == 3]
    a, b, c = T.node(v)
    out = [
        (RibbonTree(_replace(T.shape, v, ((a, b), c))), v + (0,)),
        (RibbonTree(_replace(T.shape, v, (a, (b, c)))), v + (1,)),
    ]
    out.sort(key=lambda p: canonical_key(p[0]))
    return out


# ---------------------------------------------------------------- canonical ordering

def _binary_ordering(T: RibbonTree) -> list[Edge]:
    # Depth-first: a left-handed internal edge follows the internal edges of
    # its subtree, a right-handed one precedes them.  This is the unique order
    # with the splitting block property (checked exhaustively in the tests).
    def rec(addr: Edge) -> list[Edge]:
        node = T.node(addr)
        if node == ():
            return []
        left, right = addr + (0,), addr + (1,)
        out = rec(left)
        if T.node(left) != ():
            out.append(left)
        if T.node(right) != ():
            out.append(right)
        return out + rec(right)

    return rec(())


def _resolutions(shape: Shape) -> Iterator[tuple[Shape, frozenset]]:
    """All binary resolutions of a shape with the set F of added edges."""
    if shape == ():
        yield (), frozenset()
        return

    def groupings(kids: tuple[Shape, ...]) -> Iterator[tuple[Shape, list[Edge]]]:
        # Binary bracketings of an ordered list; returns added-edge addresses
        # relative to this vertex.
        if len(kids) == 1:
            yield kids[0], []
            return
        for cut in range(1, len(kids)):
            for left, fl in groupings(kids[:cut]):
                for right, fr in groupings(kids[cut:]):
                    new: list[Edge] = []
                    if cut > 1:
                        new.append((0,))
                    if len(kids) - cut > 1:
                        new.append((1,))
                    new += [(0,) + a for a in fl] + [(1,) + a for a in fr]
                    yield (left, right), new

    kid_options = [list(_resolutions(c)) for c in shape]
    for bracket, added in groupings(tuple(range(len(shape)))):
        for choice in itertools.product(*kid_options):
            # Substitute resolved children into the bracketing.
            extra: set[Edge] = set(added)

            def fill(b, addr: Edge):
                if isinstance(b, int):
                    sub, Fsub = choice[b]
                    extra.update(addr + a for a in Fsub)
                    return sub
                return (fill(b[0], addr + (0,)), fill(b[1], addr + (1,)))

            yield fill(bracket, ()), frozenset(extra)


def binary_resolutions(T: RibbonTree) -> list[tuple[RibbonTree, frozenset]]:
    """Every binary (T~, F) with T~/F == T, sorted by serialization key."""
    out = [(RibbonTree(s), F) for s, F in _resolutions(T.shape)]
    out.sort(key=lambda p: (canonical_key(p[0]), sorted(p[1])))
    return out


def ordering_via(Tb: RibbonTree, F) -> list[Edge]:
    """Ordering of E_int(Tb/F) induced from the binary tree Tb."""
    m = edge_map(Tb, F)
    return [m[e] for e in _binary_ordering(Tb) if e not in F]


@lru_cache(maxsize=None)
def _canonical_ordering(shape: Shape) -> tuple[Edge, ...]:
    T = RibbonTree(shape)
    if T.is_binary or T.d < 3:
        return tuple(_binary_ordering(T)) if T.d >= 2 else ()
    Tb, F = binary_resolutions(T)[0]
    return tuple(ordering_via(Tb, F))


def canonical_ordering(T: RibbonTree) -> list[Edge]:
    return list(_canonical_ordering(T.shape))


def dexterity(T: RibbonTree) -> int:
    if not T.is_binary:
        raise TreeError("dexterity is defined for binary trees only")
    return sum(1 for e in T.internal_edges if e[-1] == 1)


def edge_label(T: RibbonTree, e: Edge) -> str:
    """Human-readable label ``i:l`` of an edge (leaf span is injective)."""
    below = T.leaves_below(e)
    return f"{below[0]}:{len(below) - 1}"
