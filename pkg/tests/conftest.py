import itertools
import random
from collections.abc import Iterator, Mapping
from dataclasses import replace
from pathlib import Path

import pytest

from pbpoplus.graph import LGraph, Morphism
from pbpoplus.lattice import (
    FlatLatticeSpec,
    Lattice,
    build_flat_lattice,
    build_poset_lattice,
    singleton_lattice,
)
from pbpoplus.limits import Cospan, pullback
from pbpoplus.matching import MatchCandidate
from pbpoplus.rewrite import PbpoRule, Rule
from pbpoplus.textformat import Workspace, parse_files

FIXTURES = Path(__file__).parent / "fixtures"


def load(name: str) -> Workspace:
    return parse_files([FIXTURES / f"{name}.pbpo"])


@pytest.fixture
def one() -> Lattice:
    return singleton_lattice()


@pytest.fixture
def abc() -> Lattice:
    return build_flat_lattice(FlatLatticeSpec(frozenset({"a", "b", "c"})))


def random_lattice(rng: random.Random) -> Lattice:
    match rng.randrange(3):
        case 0:
            return singleton_lattice()
        case 1:
            base = rng.sample(["a", "b", "c"], rng.randint(1, 3))
            return build_flat_lattice(FlatLatticeSpec(frozenset(base)))
        case _:
            chain = ["bot", "lo", "hi", "top"]
            return build_poset_lattice(chain, zip(chain, chain[1:]))


def below(rng: random.Random, lattice: Lattice, x: str) -> str:
    return rng.choice([y for y in lattice.elements if lattice.leq(y, x)])


def above(rng: random.Random, lattice: Lattice, x: str) -> str:
    return rng.choice([y for y in lattice.elements if lattice.leq(x, y)])


def between(rng: random.Random, lattice: Lattice, lo: str, hi: str) -> str:
    return rng.choice(
        [
            y
            for y in lattice.elements
            if lattice.leq(lo, y) and lattice.leq(y, hi)
        ]
    )


def random_graph(
    rng: random.Random,
    lattice: Lattice,
    max_vertices: int = 3,
    max_edges: int = 3,
    prefix: str = "v",
) -> LGraph:
    names = [f"{prefix}{i}" for i in range(rng.randint(1, max_vertices))]
    edges = [
        (
            f"{prefix}e{i}",
            rng.choice(names),
            rng.choice(names),
            rng.choice(lattice.elements),
        )
        for i in range(rng.randint(0, max_edges))
    ]
    return LGraph.of(
        lattice, {v: rng.choice(lattice.elements) for v in names}, edges
    )


def random_cover(
    rng: random.Random,
    base: LGraph,
    fixed: Mapping[tuple[str, str], str] | None = None,
    copies: int = 2,
) -> Morphism:
    """A random graph G with a morphism G -> base.

    Elements named in `fixed` (keyed by kind and identifier) get exactly
    one preimage, with the same identifier and the given label. Fixed
    edges must have fixed endpoints.
    """
    fixed = fixed or {}
    lattice = base.lattice
    vcopies: dict[str, list[str]] = {}
    vlabel, vmap = {}, {}
    for v in base.vertices:
        if ("v", v) in fixed:
            vcopies[v] = [v]
            vlabel[v] = fixed[("v", v)]
        else:
            vcopies[v] = [f"{v}_{i}" for i in range(rng.randint(0, copies))]
            for w in vcopies[v]:
                vlabel[w] = below(rng, lattice, base.vlabel[v])
        vmap.update({w: v for w in vcopies[v]})
    edges, emap = [], {}
    for d in base.edges:
        if ("e", d) in fixed:
            edges.append((d, base.src[d], base.tgt[d], fixed[("e", d)]))
            emap[d] = d
            continue
        for s in vcopies[base.src[d]]:
            for t in vcopies[base.tgt[d]]:
                if rng.random() < 0.5:
                    name = f"{d}_{len(emap)}"
                    label = below(rng, lattice, base.elabel[d])
                    edges.append((name, s, t, label))
                    emap[name] = d
    graph = LGraph.of(lattice, vlabel, edges)
    return Morphism(graph, base, vmap, emap)


def random_typing(rng: random.Random, type_graph: LGraph) -> Morphism:
    """A random subgraph L of the type graph with lowered labels."""
    lattice = type_graph.lattice
    vertices = [v for v in type_graph.vertices if rng.random() < 0.6]
    edges = [
        (e, type_graph.src[e], type_graph.tgt[e], type_graph.elabel[e])
        for e in type_graph.edges
        if type_graph.src[e] in vertices
        and type_graph.tgt[e] in vertices
        and rng.random() < 0.6
    ]
    lhs = LGraph.of(
        lattice,
        {v: below(rng, lattice, type_graph.vlabel[v]) for v in vertices},
        [(e, s, t, below(rng, lattice, label)) for e, s, t, label in edges],
    )
    return Morphism(
        lhs,
        type_graph,
        {v: v for v in lhs.vertices},
        {e: e for e in lhs.edges},
    )


def random_extension(rng: random.Random, source: LGraph) -> Morphism:
    """A random morphism that merges vertices, adds elements and raises
    labels."""
    lattice = source.lattice
    blocks: list[list[str]] = []
    for v in source.vertices:
        if blocks and rng.random() < 0.25:
            rng.choice(blocks).append(v)
        else:
            blocks.append([v])
    block_name = {v: "+".join(b) for b in blocks for v in b}
    vlabel = {
        "+".join(b): above(
            rng, lattice, lattice.join(source.vlabel[v] for v in b)
        )
        for b in blocks
    }
    if rng.random() < 0.4 or not vlabel:
        vlabel["new"] = rng.choice(lattice.elements)
    edges = [
        (
            e,
            block_name[source.src[e]],
            block_name[source.tgt[e]],
            above(rng, lattice, source.elabel[e]),
        )
        for e in source.edges
    ]
    if rng.random() < 0.4:
        ends = sorted(vlabel)
        edges.append(
            (
                "fresh",
                rng.choice(ends),
                rng.choice(ends),
                rng.choice(lattice.elements),
            )
        )
    target = LGraph.of(lattice, vlabel, edges)
    return Morphism(
        source, target, block_name, {e: e for e in source.edges}
    )


def random_rule(rng: random.Random, lattice: Lattice | None = None) -> Rule:
    """A random PBPO+ rule; its left square is a pullback by construction."""
    lattice = lattice or random_lattice(rng)
    type_graph = random_graph(rng, lattice, prefix="t")
    t_l = random_typing(rng, type_graph)
    lp = random_cover(rng, type_graph)
    pb = pullback(Cospan(type_graph, t_l, lp))
    right = random_extension(rng, pb.obj)
    return Rule(
        L=t_l.source,
        K=pb.obj,
        R=right.target,
        Lp=type_graph,
        Kp=lp.source,
        left=pb.left,
        right=right,
        tL=t_l,
        tK=pb.right,
        lp=lp,
    )


def random_strong_match(
    rng: random.Random, rule: Rule
) -> MatchCandidate:
    """A host graph around L with a strong match into it."""
    t_l = rule.tL
    lhs, lattice = rule.L, rule.L.lattice
    fixed = {}
    for kind in ("v", "e"):
        for x in lhs.elements(kind):
            typed = t_l.image(kind, x)
            fixed[(kind, typed)] = between(
                rng,
                lattice,
                lhs.label(kind, x),
                rule.Lp.label(kind, typed),
            )
    alpha = random_cover(rng, rule.Lp, fixed)
    m = Morphism(lhs, alpha.source, t_l.vmap, t_l.emap)
    return MatchCandidate(m, alpha)


def skewed_loop_deletion() -> PbpoRule:
    """Loop deletion with a spare vertex in R', so the right square is not
    a pushout."""
    full = load("loopdel").rule("loopdel").as_pbpo()
    bigger = LGraph(
        full.Rp.lattice,
        {**full.Rp.vlabel, "spare": full.Rp.lattice.bottom},
        full.Rp.src,
        full.Rp.tgt,
        full.Rp.elabel,
    )
    return replace(
        full,
        Rp=bigger,
        rp=Morphism(full.Kp, bigger, full.rp.vmap, full.rp.emap),
        tR=Morphism(full.R, bigger, full.tR.vmap, full.tR.emap),
    )


def enumerate_extensions(
    lhs: LGraph, type_graph: LGraph, max_vertices: int, max_edges: int
) -> Iterator[LGraph]:
    """Every graph made of a copy of L plus fresh vertices and edges.

    There are at most `max_vertices` vertices in all and `max_edges` fresh
    edges. Fresh labels are the bottom and the labels of the type graph.
    """
    lattice = lhs.lattice
    vlabels = sorted({lattice.bottom, *type_graph.vlabel.values()})
    elabels = sorted({lattice.bottom, *type_graph.elabel.values()})
    kept = [(e, lhs.src[e], lhs.tgt[e], lhs.elabel[e]) for e in lhs.edges]
    for n in range(max(max_vertices - len(lhs.vertices), 0) + 1):
        fresh = [f"c{i}" for i in range(n)]
        names = [*lhs.vertices, *fresh]
        slots = [
            (s, t, label)
            for s in names
            for t in names
            for label in elabels
        ]
        for labels in itertools.combinations_with_replacement(vlabels, n):
            vlabel = dict(lhs.vlabel) | dict(zip(fresh, labels, strict=True))
            for k in range(max_edges + 1):
                for chosen in itertools.combinations_with_replacement(
                    slots, k
                ):
                    edges = kept + [
                        (f"ce{i}", *slot) for i, slot in enumerate(chosen)
                    ]
                    yield LGraph.of(lattice, vlabel, edges)
