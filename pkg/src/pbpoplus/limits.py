"""Pullbacks and pushouts in Graph^(L,<=).

The graph structure is the usual one from Graph. Labels of elements that a
cospan identifies become the meet of the identified labels, and labels of
elements that a span glues together become their join.
"""

import itertools
import logging
from collections import defaultdict
from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping
from dataclasses import dataclass
from types import MappingProxyType

import networkx as nx

from pbpoplus.errors import NotComposable, NotCommuting, Truncated
from pbpoplus.graph import (
    LGraph,
    Morphism,
    compose,
    inclusion,
    is_iso,
)

logger = logging.getLogger(__name__)

DEFAULT_COMPLEMENT_CAP = 12

Namer = Callable[[str, str], str]


@dataclass(frozen=True)
class Span:
    """Two morphisms out of a shared apex."""

    apex: LGraph
    left: Morphism
    right: Morphism

    def __post_init__(self):
        if self.left.source is not self.apex:
            raise NotComposable("left leg does not start at the apex")
        if self.right.source is not self.apex:
            raise NotComposable("right leg does not start at the apex")

    @classmethod
    def of(cls, left: Morphism, right: Morphism) -> "Span":
        return cls(left.source, left, right)


@dataclass(frozen=True)
class Cospan:
    """Two morphisms into a shared target."""

    target: LGraph
    left: Morphism
    right: Morphism

    def __post_init__(self):
        if self.left.target is not self.target:
            raise NotComposable("left leg does not end at the target")
        if self.right.target is not self.target:
            raise NotComposable("right leg does not end at the target")

    @classmethod
    def of(cls, left: Morphism, right: Morphism) -> "Cospan":
        return cls(left.target, left, right)


@dataclass(frozen=True)
class Pullback:
    """A pullback object with its projections.

    `vindex`/`eindex` map each pair (b, c) of identified elements of the
    two feet to its identifier in `obj`.
    """

    cospan: Cospan
    obj: LGraph
    left: Morphism
    right: Morphism
    vindex: Mapping[tuple[str, str], str]
    eindex: Mapping[tuple[str, str], str]


@dataclass(frozen=True)
class Pushout:
    """A pushout object with its injections.

    `vindex`/`eindex` map (0, b) for elements of the left foot and (1, c)
    for elements of the right foot to their class in `obj`.
    """

    span: Span
    obj: LGraph
    left: Morphism
    right: Morphism
    vindex: Mapping[tuple[int, str], str]
    eindex: Mapping[tuple[int, str], str]


def pair_name(b: str, c: str) -> str:
    return f"⟨{b},{c}⟩"


def unique_names(
    wanted: Iterable[tuple[Hashable, str]],
) -> dict[Hashable, str]:
    """Give each key its wanted name, priming later duplicates."""
    taken: set[str] = set()
    names = {}
    for key, name in wanted:
        while name in taken:
            name += "'"
        taken.add(name)
        names[key] = name
    return names


def pullback(cospan: Cospan, namer: Namer = pair_name) -> Pullback:
    """Pull back a cospan B -f-> D <-g- C.

    Elements of the result are the pairs (b, c) with f(b) = g(c), labeled
    with the meet of the pair's labels. `namer` picks an identifier for
    each pair; clashes are resolved by priming.
    """
    f, g = cospan.left, cospan.right
    b, c = f.source, g.source
    lattice = cospan.target.lattice

    def pairs(kind: str) -> list[tuple[str, str]]:
        fibres = defaultdict(list)
        for y in c.elements(kind):
            fibres[g.image(kind, y)].append(y)
        return [
            (x, y)
            for x in b.elements(kind)
            for y in fibres.get(f.image(kind, x), ())
        ]

    vpairs = pairs("v")
    epairs = pairs("e")
    vnames = unique_names((p, namer(*p)) for p in vpairs)
    enames = unique_names((p, namer(*p)) for p in epairs)
    obj = LGraph(
        lattice,
        {
            vnames[p]: lattice.meet((b.vlabel[p[0]], c.vlabel[p[1]]))
            for p in vpairs
        },
        {enames[p]: vnames[(b.src[p[0]], c.src[p[1]])] for p in epairs},
        {enames[p]: vnames[(b.tgt[p[0]], c.tgt[p[1]])] for p in epairs},
        {
            enames[p]: lattice.meet((b.elabel[p[0]], c.elabel[p[1]]))
            for p in epairs
        },
    )
    left = Morphism(
        obj,
        b,
        {vnames[p]: p[0] for p in vpairs},
        {enames[p]: p[0] for p in epairs},
    )
    right = Morphism(
        obj,
        c,
        {vnames[p]: p[1] for p in vpairs},
        {enames[p]: p[1] for p in epairs},
    )
    logger.debug(
        "pullback has %d vertices and %d edges", len(vpairs), len(epairs)
    )
    return Pullback(
        cospan,
        obj,
        left,
        right,
        MappingProxyType(vnames),
        MappingProxyType(enames),
    )


def _commutes(f: Morphism, p: Morphism, g: Morphism, q: Morphism) -> bool:
    """Elementwise test of f after p == g after q."""
    return all(
        f.vmap[p.vmap[x]] == g.vmap[q.vmap[x]] for x in p.vmap
    ) and all(f.emap[p.emap[x]] == g.emap[q.emap[x]] for x in p.emap)


def pullback_mediator(
    pb: Pullback, left: Morphism, right: Morphism
) -> Morphism:
    """The unique morphism X -> P through which (left, right) factor."""
    f, g = pb.cospan.left, pb.cospan.right
    if left.source is not right.source:
        raise NotCommuting("candidate legs have different sources")
    if left.target is not f.source or right.target is not g.source:
        raise NotCommuting("candidate legs do not end at the feet")
    if not _commutes(f, left, g, right):
        raise NotCommuting("candidate legs disagree over the cospan")
    return Morphism(
        left.source,
        pb.obj,
        {x: pb.vindex[(left.vmap[x], right.vmap[x])] for x in left.vmap},
        {x: pb.eindex[(left.emap[x], right.emap[x])] for x in left.emap},
    )


def _class_name(members: list[tuple[int, str]]) -> str:
    # the left foot's identifiers win so hosts keep their names
    left = sorted({name for side, name in members if side == 0})
    right = sorted({name for side, name in members if side == 1})
    return "+".join(left or right)


def pushout(span: Span) -> Pushout:
    """Push out a span B <-f- A -g-> C.

    The result is the disjoint union of B and C, quotiented by the
    equivalence generated by f(a) ~ g(a). Each class is labeled with the
    join of its members' labels.
    """
    f, g = span.left, span.right
    b, c = f.target, g.target
    lattice = span.apex.lattice

    def classes(kind: str) -> dict[tuple[int, str], str]:
        elements = [(0, x) for x in b.elements(kind)] + [
            (1, y) for y in c.elements(kind)
        ]
        partition = nx.utils.UnionFind(elements)
        for a in span.apex.elements(kind):
            partition.union((0, f.image(kind, a)), (1, g.image(kind, a)))
        groups = sorted(sorted(group) for group in partition.to_sets())
        names = unique_names(
            (i, _class_name(group)) for i, group in enumerate(groups)
        )
        return {
            member: names[i]
            for i, group in enumerate(groups)
            for member in group
        }

    vindex = classes("v")
    eindex = classes("e")
    feet = (b, c)
    vmembers = defaultdict(list)
    for (side, x), name in vindex.items():
        vmembers[name].append(feet[side].vlabel[x])
    emembers = defaultdict(list)
    src, tgt = {}, {}
    for (side, x), name in eindex.items():
        foot = feet[side]
        emembers[name].append(foot.elabel[x])
        src[name] = vindex[(side, foot.src[x])]
        tgt[name] = vindex[(side, foot.tgt[x])]
    obj = LGraph(
        lattice,
        {name: lattice.join(labels) for name, labels in vmembers.items()},
        src,
        tgt,
        {name: lattice.join(labels) for name, labels in emembers.items()},
    )
    left = Morphism(
        b,
        obj,
        {x: vindex[(0, x)] for x in b.vlabel},
        {x: eindex[(0, x)] for x in b.elabel},
    )
    right = Morphism(
        c,
        obj,
        {y: vindex[(1, y)] for y in c.vlabel},
        {y: eindex[(1, y)] for y in c.elabel},
    )
    logger.debug(
        "pushout has %d vertices and %d edges", len(vmembers), len(emembers)
    )
    return Pushout(
        span,
        obj,
        left,
        right,
        MappingProxyType(vindex),
        MappingProxyType(eindex),
    )


def pushout_mediator(
    po: Pushout, left: Morphism, right: Morphism
) -> Morphism:
    """The unique morphism Q -> X through which (left, right) factor."""
    f, g = po.span.left, po.span.right
    if left.target is not right.target:
        raise NotCommuting("candidate legs have different targets")
    if left.source is not f.target or right.source is not g.target:
        raise NotCommuting("candidate legs do not start at the feet")
    if not _commutes(left, f, right, g):
        raise NotCommuting("candidate legs disagree over the span")
    legs = (left, right)
    vmap = {
        name: legs[side].vmap[x] for (side, x), name in po.vindex.items()
    }
    emap = {
        name: legs[side].emap[x] for (side, x), name in po.eindex.items()
    }
    return Morphism(po.obj, left.target, vmap, emap)


def is_pullback_square(
    f: Morphism, g: Morphism, p: Morphism, q: Morphism
) -> bool:
    """Test whether A -p-> B, A -q-> C is a pullback of B -f-> D <-g- C."""
    if not (
        f.target is g.target
        and p.target is f.source
        and q.target is g.source
        and p.source is q.source
    ):
        logger.debug("square is not well-typed")
        return False
    if not _commutes(f, p, g, q):
        logger.debug("square does not commute")
        return False
    pb = pullback(Cospan(f.target, f, g))
    mediator = pullback_mediator(pb, p, q)
    if not is_iso(mediator):
        logger.debug("mediator into the pullback is not an isomorphism")
        return False
    return True


def is_pushout_square(
    f: Morphism, g: Morphism, p: Morphism, q: Morphism
) -> bool:
    """Test whether B -p-> D <-q- C is a pushout of B <-f- A -g-> C."""
    if not (
        f.source is g.source
        and p.source is f.target
        and q.source is g.target
        and p.target is q.target
    ):
        logger.debug("square is not well-typed")
        return False
    if not _commutes(p, f, q, g):
        logger.debug("square does not commute")
        return False
    po = pushout(Span(f.source, f, g))
    mediator = pushout_mediator(po, p, q)
    if not is_iso(mediator):
        logger.debug("mediator out of the pushout is not an isomorphism")
        return False
    return True


@dataclass(frozen=True)
class PushoutComplement:
    """An object C with A -left-> C -right-> D completing a pushout."""

    obj: LGraph
    left: Morphism
    right: Morphism


def _label_choices(d: LGraph, kind: str, x: str, floor: str) -> list[str]:
    lattice = d.lattice
    return [
        y
        for y in lattice.elements
        if lattice.leq(floor, y) and lattice.leq(y, d.label(kind, x))
    ]


def enumerate_pushout_complements(
    f: Morphism, g: Morphism, cap: int = DEFAULT_COMPLEMENT_CAP
) -> Iterator[PushoutComplement]:
    """Enumerate complements of A -f-> B -g-> D among subgraphs of D.

    Every candidate C is a subgraph of D with labels bounded by D's labels,
    included into D; the arrow A -> C is forced. Raises Truncated when D
    has more than `cap` elements.
    """
    d = g.target
    if d.size > cap:
        raise Truncated(d.size, cap)
    gf = compose(g, f)
    a = f.source
    lattice = d.lattice
    vfloor = defaultdict(list)
    for x, y in gf.vmap.items():
        vfloor[y].append(a.vlabel[x])
    efloor = defaultdict(list)
    for x, y in gf.emap.items():
        efloor[y].append(a.elabel[x])
    required_vertices = set(vfloor)
    required_edges = set(efloor)
    optional_vertices = [v for v in d.vertices if v not in vfloor]

    choices = (False, True)
    for keep in itertools.product(choices, repeat=len(optional_vertices)):
        vertices = required_vertices | {
            v for v, k in zip(optional_vertices, keep, strict=True) if k
        }
        optional_edges = [
            e
            for e in d.edges
            if e not in required_edges
            and d.src[e] in vertices
            and d.tgt[e] in vertices
        ]
        for ekeep in itertools.product(choices, repeat=len(optional_edges)):
            edges = sorted(
                required_edges
                | {
                    e
                    for e, k in zip(optional_edges, ekeep, strict=True)
                    if k
                }
            )
            vs = sorted(vertices)
            vchoices = [
                _label_choices(d, "v", v, lattice.join(vfloor.get(v, ())))
                for v in vs
            ]
            echoices = [
                _label_choices(d, "e", e, lattice.join(efloor.get(e, ())))
                for e in edges
            ]
            for vlabels in itertools.product(*vchoices):
                for elabels in itertools.product(*echoices):
                    obj = LGraph(
                        lattice,
                        dict(zip(vs, vlabels, strict=True)),
                        {e: d.src[e] for e in edges},
                        {e: d.tgt[e] for e in edges},
                        dict(zip(edges, elabels, strict=True)),
                    )
                    k = inclusion(obj, d)
                    h = Morphism(a, obj, gf.vmap, gf.emap)
                    if is_pushout_square(f, h, g, k):
                        yield PushoutComplement(obj, h, k)
