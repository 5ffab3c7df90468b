"""Finite complete lattices of labels."""

import itertools
import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from types import MappingProxyType

import networkx as nx

from pbpoplus.errors import (
    NotALattice,
    NotAPartialOrder,
    ReservedName,
    UnknownElement,
)

logger = logging.getLogger(__name__)

BOTTOM = "bot"
TOP = "top"


@dataclass(frozen=True)
class Lattice:
    """A finite complete lattice.

    `order` holds every pair (x, y) with x <= y, i.e. the reflexive
    transitive closure of whatever order the lattice was built from.
    Construction raises NotALattice if a pair of elements has no meet or
    no join, which for a finite poset is enough to make it complete.
    """

    elements: tuple[str, ...]
    order: frozenset[tuple[str, str]]
    bottom: str = field(init=False)
    top: str = field(init=False)
    _meets: MappingProxyType = field(
        init=False, repr=False, compare=False, hash=False
    )
    _joins: MappingProxyType = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self):
        if not self.elements:
            raise NotALattice((), "join")
        meets, joins = _bound_tables(self.elements, self.order)
        object.__setattr__(self, "_meets", MappingProxyType(meets))
        object.__setattr__(self, "_joins", MappingProxyType(joins))
        first = self.elements[0]
        bottom = first
        top = first
        for x in self.elements:
            bottom = meets[(bottom, x)]
            top = joins[(top, x)]
        object.__setattr__(self, "bottom", bottom)
        object.__setattr__(self, "top", top)

    def __contains__(self, x: object) -> bool:
        return x in self.elements

    def check(self, x: str) -> str:
        """Return x unchanged, raising UnknownElement if it is foreign."""
        if x not in self.elements:
            raise UnknownElement(x)
        return x

    def leq(self, x: str, y: str) -> bool:
        """Test x <= y."""
        self.check(x)
        self.check(y)
        return (x, y) in self.order

    def meet(self, xs: Iterable[str]) -> str:
        """Greatest lower bound; the meet of nothing is top."""
        result = self.top
        for x in xs:
            result = self._meets[(result, self.check(x))]
        return result

    def join(self, xs: Iterable[str]) -> str:
        """Least upper bound; the join of nothing is bottom."""
        result = self.bottom
        for x in xs:
            result = self._joins[(result, self.check(x))]
        return result

    @property
    def is_flat(self) -> bool:
        """True if all elements besides bottom and top are incomparable."""
        if self.bottom == self.top:
            return False
        return not any(
            (x, y) in self.order for x in self.base for y in self.base
            if x != y
        )

    @property
    def base(self) -> tuple[str, ...]:
        """Elements other than bottom and top."""
        return tuple(
            x for x in self.elements if x not in (self.bottom, self.top)
        )


@dataclass(frozen=True)
class FlatLatticeSpec:
    """Base labels of a flat lattice."""

    base: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "base", frozenset(self.base))
        for name in (BOTTOM, TOP):
            if name in self.base:
                raise ReservedName(name)


def _bound_tables(
    elements: tuple[str, ...], order: frozenset[tuple[str, str]]
) -> tuple[dict, dict]:
    below = {x: {y for y in elements if (y, x) in order} for x in elements}
    above = {x: {y for y in elements if (x, y) in order} for x in elements}
    meets = {}
    joins = {}
    for x, y in itertools.product(elements, repeat=2):
        lower = below[x] & below[y]
        greatest = [z for z in lower if lower <= below[z]]
        if len(greatest) != 1:
            raise NotALattice(tuple(sorted({x, y})), "meet")
        upper = above[x] & above[y]
        least = [z for z in upper if upper <= above[z]]
        if len(least) != 1:
            raise NotALattice(tuple(sorted({x, y})), "join")
        meets[(x, y)] = greatest[0]
        joins[(x, y)] = least[0]
    return meets, joins


def build_poset_lattice(
    elements: Iterable[str], covers: Iterable[tuple[str, str]]
) -> Lattice:
    """Build a lattice from its elements and a generating order.

    The order is the reflexive transitive closure of `covers`. Raises
    NotAPartialOrder on a cycle and NotALattice if some pair has no meet
    or no join.
    """
    names = tuple(sorted(set(elements)))
    order_graph = nx.DiGraph()
    order_graph.add_nodes_from(names)
    for lo, hi in covers:
        for x in (lo, hi):
            if x not in order_graph:
                raise UnknownElement(x)
        if lo != hi:
            order_graph.add_edge(lo, hi)
    try:
        cycle = nx.find_cycle(order_graph)
    except nx.NetworkXNoCycle:
        pass
    else:
        raise NotAPartialOrder([lo for lo, _ in cycle] + [cycle[0][0]])

    closure = nx.transitive_closure(order_graph, reflexive=True)
    lattice = Lattice(names, frozenset(closure.edges))
    logger.debug("built lattice with %d elements", len(names))
    return lattice


def build_flat_lattice(spec: FlatLatticeSpec) -> Lattice:
    """Adjoin bottom and top to a set of pairwise incomparable labels."""
    base = sorted(spec.base)
    covers = [(BOTTOM, x) for x in base] + [(x, TOP) for x in base]
    if not base:
        covers = [(BOTTOM, TOP)]
    return build_poset_lattice([BOTTOM, TOP, *base], covers)


def singleton_lattice() -> Lattice:
    """The one-element lattice used for unlabeled graphs."""
    return build_poset_lattice([BOTTOM], [])
