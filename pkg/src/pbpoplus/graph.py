"""Lattice-labeled multigraphs and the morphisms between them.

Graphs compare by identity: two separately built graphs with the same
content are different objects, and morphisms only compose when the middle
graph is literally shared. Use `are_isomorphic` to compare content.
"""

import logging
from collections import defaultdict
from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

import networkx as nx
from networkx.algorithms import isomorphism

from pbpoplus.errors import (
    DanglingEdge,
    LabelDecrease,
    LatticeMismatch,
    NotAPremorphism,
    NotComposable,
    UnknownLabel,
)
from pbpoplus.lattice import Lattice

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LGraph:
    """A finite directed multigraph with labels on vertices and edges."""

    lattice: Lattice
    vlabel: Mapping[str, str]
    src: Mapping[str, str]
    tgt: Mapping[str, str]
    elabel: Mapping[str, str]

    def __post_init__(self):
        for name in ("vlabel", "src", "tgt", "elabel"):
            frozen = MappingProxyType(dict(getattr(self, name)))
            object.__setattr__(self, name, frozen)
        validate_graph(self)

    @classmethod
    def of(
        cls,
        lattice: Lattice,
        vertices: Mapping[str, str] | Iterable[str],
        edges: Iterable[tuple[str, ...]] = (),
    ) -> "LGraph":
        """Build a graph, defaulting missing labels to bottom.

        `vertices` is either a label mapping or a plain collection of
        identifiers. Each edge is `(id, src, tgt)` or
        `(id, src, tgt, label)`.
        """
        if isinstance(vertices, Mapping):
            vlabel = dict(vertices)
        else:
            vlabel = {v: lattice.bottom for v in vertices}
        src, tgt, elabel = {}, {}, {}
        for edge in edges:
            name, s, t, *rest = edge
            src[name] = s
            tgt[name] = t
            elabel[name] = rest[0] if rest else lattice.bottom
        return cls(lattice, vlabel, src, tgt, elabel)

    @cached_property
    def vertices(self) -> tuple[str, ...]:
        return tuple(sorted(self.vlabel))

    @cached_property
    def edges(self) -> tuple[str, ...]:
        return tuple(sorted(self.elabel))

    @cached_property
    def edges_between(self) -> Mapping[tuple[str, str], tuple[str, ...]]:
        """Edges indexed by their (source, target) pair, sorted."""
        index = defaultdict(list)
        for e in self.edges:
            index[(self.src[e], self.tgt[e])].append(e)
        return MappingProxyType({k: tuple(v) for k, v in index.items()})

    def elements(self, kind: str) -> tuple[str, ...]:
        """Sorted vertices (kind "v") or edges (kind "e")."""
        return self.vertices if kind == "v" else self.edges

    def label(self, kind: str, x: str) -> str:
        """Label of vertex (kind "v") or edge (kind "e") x."""
        return self.vlabel[x] if kind == "v" else self.elabel[x]

    @property
    def size(self) -> int:
        return len(self.vlabel) + len(self.elabel)

    def __repr__(self):
        vs = ", ".join(f"{v}:{self.vlabel[v]}" for v in self.vertices)
        es = ", ".join(
            f"{e}:{self.src[e]}->{self.tgt[e]}:{self.elabel[e]}"
            for e in self.edges
        )
        return f"LGraph({{{vs}}}, {{{es}}})"


def validate_graph(g: LGraph) -> None:
    """Raise if an edge dangles or a label lies outside the lattice."""
    if not (set(g.src) == set(g.tgt) == set(g.elabel)):
        raise ValueError("src, tgt and elabel must share their keys")
    for e in g.elabel:
        for end in (g.src[e], g.tgt[e]):
            if end not in g.vlabel:
                raise DanglingEdge(e, end)
    for labels in (g.vlabel, g.elabel):
        for x, label in labels.items():
            if label not in g.lattice:
                raise UnknownLabel(x, label)


@dataclass(frozen=True)
class Morphism:
    """A label-non-decreasing premorphism between two graphs."""

    source: LGraph
    target: LGraph
    vmap: Mapping[str, str] = field(hash=False)
    emap: Mapping[str, str] = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "vmap", MappingProxyType(dict(self.vmap)))
        object.__setattr__(self, "emap", MappingProxyType(dict(self.emap)))
        validate_morphism(self)

    def v(self, x: str) -> str:
        return self.vmap[x]

    def e(self, x: str) -> str:
        return self.emap[x]

    def image(self, kind: str, x: str) -> str:
        return self.vmap[x] if kind == "v" else self.emap[x]

    def same_maps(self, other: "Morphism") -> bool:
        """Compare the component maps only, ignoring endpoint identity."""
        return self.vmap == other.vmap and self.emap == other.emap

    def __repr__(self):
        pairs = [f"{x}->{y}" for x, y in sorted(self.vmap.items())]
        pairs += [f"{x}->{y}" for x, y in sorted(self.emap.items())]
        return f"Morphism({'; '.join(pairs)})"


def validate_morphism(f: Morphism) -> None:
    """Raise on the first violated square or label pair."""
    a, b = f.source, f.target
    if a.lattice != b.lattice:
        raise LatticeMismatch("morphism endpoints use different lattices")
    for x in sorted(set(a.vlabel) ^ set(f.vmap)):
        raise NotAPremorphism(x, "vertex map must cover exactly the source")
    for x in sorted(set(a.elabel) ^ set(f.emap)):
        raise NotAPremorphism(x, "edge map must cover exactly the source")
    for v, w in f.vmap.items():
        if w not in b.vlabel:
            raise NotAPremorphism(v, f"unknown target vertex '{w}'")
    for e, d in f.emap.items():
        if d not in b.elabel:
            raise NotAPremorphism(e, f"unknown target edge '{d}'")
        if b.src[d] != f.vmap[a.src[e]]:
            raise NotAPremorphism(e, "source square")
        if b.tgt[d] != f.vmap[a.tgt[e]]:
            raise NotAPremorphism(e, "target square")
    lattice = a.lattice
    for x, y in f.vmap.items():
        if not lattice.leq(a.vlabel[x], b.vlabel[y]):
            raise LabelDecrease(x, y, (a.vlabel[x], b.vlabel[y]))
    for x, y in f.emap.items():
        if not lattice.leq(a.elabel[x], b.elabel[y]):
            raise LabelDecrease(x, y, (a.elabel[x], b.elabel[y]))


def is_label_preserving(f: Morphism) -> bool:
    """True if f is a homomorphism in the classic, label-equal sense."""
    a, b = f.source, f.target
    return all(
        a.vlabel[x] == b.vlabel[y] for x, y in f.vmap.items()
    ) and all(a.elabel[x] == b.elabel[y] for x, y in f.emap.items())


def identity(g: LGraph) -> Morphism:
    return Morphism(
        g, g, {v: v for v in g.vlabel}, {e: e for e in g.elabel}
    )


def compose(g: Morphism, f: Morphism) -> Morphism:
    """Return g after f."""
    if f.target is not g.source:
        raise NotComposable(
            "target of the first morphism is not the source of the second"
        )
    return Morphism(
        f.source,
        g.target,
        {x: g.vmap[y] for x, y in f.vmap.items()},
        {x: g.emap[y] for x, y in f.emap.items()},
    )


def is_mono(f: Morphism) -> bool:
    return len(set(f.vmap.values())) == len(f.vmap) and len(
        set(f.emap.values())
    ) == len(f.emap)


def is_epi(f: Morphism) -> bool:
    return set(f.vmap.values()) == set(f.target.vlabel) and set(
        f.emap.values()
    ) == set(f.target.elabel)


def is_iso(f: Morphism) -> bool:
    """Bijective and label-preserving, i.e. invertible in Graph^(L,<=)."""
    return is_mono(f) and is_epi(f) and is_label_preserving(f)


def subgraph(
    g: LGraph,
    vertices: Iterable[str],
    edges: Iterable[str],
    vlabel: Mapping[str, str] | None = None,
    elabel: Mapping[str, str] | None = None,
) -> LGraph:
    """Sub-graph of g, keeping g's labels unless overridden."""
    vs = set(vertices)
    es = set(edges)
    vlabel = vlabel or {}
    elabel = elabel or {}
    return LGraph(
        g.lattice,
        {v: vlabel.get(v, g.vlabel[v]) for v in vs},
        {e: g.src[e] for e in es},
        {e: g.tgt[e] for e in es},
        {e: elabel.get(e, g.elabel[e]) for e in es},
    )


def inclusion(sub: LGraph, sup: LGraph) -> Morphism:
    """The identity-on-names morphism from a subgraph into its host."""
    return Morphism(
        sub, sup, {v: v for v in sub.vlabel}, {e: e for e in sub.elabel}
    )


def epi_mono_factorize(f: Morphism) -> tuple[Morphism, Morphism]:
    """Split f into an epi onto its image followed by the image inclusion.

    Image labels are the join of the labels of their preimages, which makes
    the epi canonical in Graph^(L,<=).
    """
    a, b = f.source, f.target
    lattice = a.lattice
    vpre = defaultdict(list)
    for x, y in f.vmap.items():
        vpre[y].append(a.vlabel[x])
    epre = defaultdict(list)
    for x, y in f.emap.items():
        epre[y].append(a.elabel[x])
    image = subgraph(
        b,
        vpre,
        epre,
        {y: lattice.join(labels) for y, labels in vpre.items()},
        {y: lattice.join(labels) for y, labels in epre.items()},
    )
    e = Morphism(a, image, f.vmap, f.emap)
    m = inclusion(image, b)
    return e, m


@dataclass(frozen=True)
class PatchDecomposition:
    """Match graph, context graph and the patch edges between them."""

    match_graph: LGraph
    context_graph: LGraph
    patch_edges: frozenset[str]


def patch_decomposition(x: Morphism) -> PatchDecomposition:
    g = x.target
    match_vertices = set(x.vmap.values())
    match_edges = set(x.emap.values())
    context_vertices = set(g.vlabel) - match_vertices
    context_edges = {
        e
        for e in g.elabel
        if e not in match_edges
        and g.src[e] in context_vertices
        and g.tgt[e] in context_vertices
    }
    patch = frozenset(set(g.elabel) - match_edges - context_edges)
    return PatchDecomposition(
        subgraph(g, match_vertices, match_edges),
        subgraph(g, context_vertices, context_edges),
        patch,
    )


Allowed = Callable[[str, str], bool]


def enumerate_morphisms(
    a: LGraph,
    b: LGraph,
    monic_only: bool = False,
    vfixed: Mapping[str, str] | None = None,
    efixed: Mapping[str, str] | None = None,
    vallowed: Allowed | None = None,
    eallowed: Allowed | None = None,
) -> Iterator[Morphism]:
    """Yield every morphism a -> b in lexicographic order.

    Vertices are assigned first in sorted order, then edges; candidates are
    tried in sorted order too. `vfixed`/`efixed` pin some images in
    advance and `vallowed`/`eallowed` veto individual (element, image)
    pairs; both only prune the search.
    """
    if a.lattice != b.lattice:
        raise LatticeMismatch("graphs use different lattices")
    lattice = a.lattice
    vfixed = vfixed or {}
    efixed = efixed or {}

    def vcandidates(v: str) -> list[str]:
        if v in vfixed:
            pool = [vfixed[v]] if vfixed[v] in b.vlabel else []
        else:
            pool = list(b.vertices)
        return [
            w
            for w in pool
            if lattice.leq(a.vlabel[v], b.vlabel[w])
            and (vallowed is None or v in vfixed or vallowed(v, w))
        ]

    def ecandidates(e: str, vmap: Mapping[str, str]) -> list[str]:
        ends = (vmap[a.src[e]], vmap[a.tgt[e]])
        pool = b.edges_between.get(ends, ())
        if e in efixed:
            pool = [d for d in pool if d == efixed[e]]
        return [
            d
            for d in pool
            if lattice.leq(a.elabel[e], b.elabel[d])
            and (eallowed is None or e in efixed or eallowed(e, d))
        ]

    vorder = a.vertices
    vpool = {v: vcandidates(v) for v in vorder}
    if any(not pool for pool in vpool.values()):
        return
    # edges become checkable once both endpoints are assigned
    ready = defaultdict(list)
    position = {v: i for i, v in enumerate(vorder)}
    for e in a.edges:
        last = max(position[a.src[e]], position[a.tgt[e]])
        ready[last].append(e)

    vmap: dict[str, str] = {}
    emap: dict[str, str] = {}

    def assign_edges(i: int, used: set[str]) -> Iterator[Morphism]:
        if i == len(a.edges):
            yield Morphism(a, b, vmap, emap)
            return
        e = a.edges[i]
        for d in ecandidates(e, vmap):
            if monic_only and d in used:
                continue
            emap[e] = d
            used.add(d)
            yield from assign_edges(i + 1, used)
            used.discard(d)
        emap.pop(e, None)

    def assign_vertices(i: int, used: set[str]) -> Iterator[Morphism]:
        if i == len(vorder):
            yield from assign_edges(0, set())
            return
        v = vorder[i]
        for w in vpool[v]:
            if monic_only and w in used:
                continue
            vmap[v] = w
            if all(ecandidates(e, vmap) for e in ready[i]):
                used.add(w)
                yield from assign_vertices(i + 1, used)
                used.discard(w)
        vmap.pop(v, None)

    yield from assign_vertices(0, set())


def _to_networkx(g: LGraph) -> nx.MultiDiGraph:
    view = nx.MultiDiGraph()
    for v in g.vertices:
        view.add_node(v, label=g.vlabel[v])
    for e in g.edges:
        view.add_edge(g.src[e], g.tgt[e], key=e, label=g.elabel[e])
    return view


def _same_parallel_labels(d1: Mapping, d2: Mapping) -> bool:
    return sorted(attr["label"] for attr in d1.values()) == sorted(
        attr["label"] for attr in d2.values()
    )


def find_isomorphism(a: LGraph, b: LGraph) -> Morphism | None:
    """Return a label-preserving isomorphism a -> b, or None."""
    if a.lattice != b.lattice:
        return None
    if len(a.vlabel) != len(b.vlabel) or len(a.elabel) != len(b.elabel):
        return None
    if sorted(a.vlabel.values()) != sorted(b.vlabel.values()):
        return None
    if sorted(a.elabel.values()) != sorted(b.elabel.values()):
        return None
    matcher = isomorphism.MultiDiGraphMatcher(
        _to_networkx(a),
        _to_networkx(b),
        node_match=lambda n1, n2: n1["label"] == n2["label"],
        edge_match=_same_parallel_labels,
    )
    if not matcher.is_isomorphic():
        return None
    vmap = dict(matcher.mapping)
    emap = {}
    # parallel edges pair up by label, ties broken by identifier
    for (s, t), group in a.edges_between.items():
        ordered = sorted(group, key=lambda e: (a.elabel[e], e))
        images = sorted(
            b.edges_between[(vmap[s], vmap[t])],
            key=lambda d: (b.elabel[d], d),
        )
        emap.update(zip(ordered, images, strict=True))
    return Morphism(a, b, vmap, emap)


def are_isomorphic(a: LGraph, b: LGraph) -> bool:
    return find_isomorphism(a, b) is not None
