"""Translating PBPO rules into sets of PBPO+ rules.

A PBPO rule matched through an arbitrary m is split into one compacted rule
per epi factorization of its typing, so that only monic matches remain.
Each compacted rule is then made monic by factoring its typing through a
materialization L >-> L'' -> L', after which it is a PBPO+ rule. The
relation helpers at the bottom compare rewrite relations extensionally on
small hosts.
"""

import itertools
import logging
from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, fields

from pbpoplus.errors import NotCanonical, NotCommuting, NotEpi, NotFlatLattice
from pbpoplus.graph import (
    LGraph,
    Morphism,
    are_isomorphic,
    compose,
    enumerate_morphisms,
    inclusion,
    is_epi,
    is_mono,
)
from pbpoplus.lattice import Lattice
from pbpoplus.limits import (
    Cospan,
    Span,
    pullback,
    pullback_mediator,
    pushout,
    pushout_mediator,
    unique_names,
)
from pbpoplus.matching import (
    MatchCandidate,
    MatchPolicy,
    enumerate_match_candidates,
    is_pbpo_match,
    is_strong_match,
)
from pbpoplus.rewrite import (
    PbpoRule,
    Rule,
    Semantics,
    apply_step,
    rewrite_all,
)

logger = logging.getLogger(__name__)

Relation = dict[LGraph, list[LGraph]]


@dataclass(frozen=True)
class Factorization:
    """A morphism split as `second` after `first`, through `through`."""

    through: LGraph
    first: Morphism
    second: Morphism

    def __post_init__(self):
        if self.first.target is not self.through:
            raise ValueError("first does not end at the middle object")
        if self.second.source is not self.through:
            raise ValueError("second does not start at the middle object")


@dataclass(frozen=True)
class AmendabilityWitness:
    """A factorization L >-tLprime-> L'' -beta-> L' of a typing."""

    tLprime: Morphism
    beta: Morphism
    strong: bool = True

    def __post_init__(self):
        if not is_mono(self.tLprime):
            raise ValueError("tLprime must be monic")
        if self.tLprime.target is not self.beta.source:
            raise ValueError("tLprime and beta do not compose")

    @property
    def typing(self) -> Morphism:
        return compose(self.beta, self.tLprime)


@dataclass(frozen=True)
class AmendabilityReport:
    failures: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures


def _set_partitions(items: Sequence[str]) -> Iterator[list[list[str]]]:
    # the all-singletons partition comes first
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in _set_partitions(rest):
        yield [[first], *partition]
        for i in range(len(partition)):
            yield [
                *partition[:i],
                [first, *partition[i]],
                *partition[i + 1 :],
            ]


def _fibre_partitions(
    groups: Mapping[object, list[str]],
) -> Iterator[list[list[str]]]:
    keys = sorted(groups, key=repr)
    per_group = [list(_set_partitions(groups[k])) for k in keys]
    for choice in itertools.product(*per_group):
        yield [sorted(block) for partition in choice for block in partition]


def _quotient(
    t_l: Morphism,
    vblocks: list[list[str]],
    eblocks: list[list[str]],
) -> Factorization:
    lhs = t_l.source
    lattice = lhs.lattice
    vnames = unique_names((i, "+".join(b)) for i, b in enumerate(vblocks))
    enames = unique_names((i, "+".join(b)) for i, b in enumerate(eblocks))
    vclass = {x: vnames[i] for i, b in enumerate(vblocks) for x in b}
    eclass = {x: enames[i] for i, b in enumerate(eblocks) for x in b}
    middle = LGraph(
        lattice,
        {
            vnames[i]: lattice.join(lhs.vlabel[x] for x in b)
            for i, b in enumerate(vblocks)
        },
        {enames[i]: vclass[lhs.src[b[0]]] for i, b in enumerate(eblocks)},
        {enames[i]: vclass[lhs.tgt[b[0]]] for i, b in enumerate(eblocks)},
        {
            enames[i]: lattice.join(lhs.elabel[x] for x in b)
            for i, b in enumerate(eblocks)
        },
    )
    first = Morphism(lhs, middle, vclass, eclass)
    second = Morphism(
        middle,
        t_l.target,
        {vnames[i]: t_l.vmap[b[0]] for i, b in enumerate(vblocks)},
        {enames[i]: t_l.emap[b[0]] for i, b in enumerate(eblocks)},
    )
    return Factorization(middle, first, second)


def enumerate_epi_factorizations(t_l: Morphism) -> list[Factorization]:
    """Every factorization of t_L through an epi, up to iso.

    These correspond to the quotients of L that t_L is constant on, with
    merged edges sharing merged endpoints. The identity quotient comes
    first.
    """
    lhs = t_l.source
    vfibres = defaultdict(list)
    for v in lhs.vertices:
        vfibres[t_l.vmap[v]].append(v)
    result = []
    for vblocks in _fibre_partitions(vfibres):
        block_of = {x: i for i, b in enumerate(vblocks) for x in b}
        efibres = defaultdict(list)
        for e in lhs.edges:
            key = (t_l.emap[e], block_of[lhs.src[e]], block_of[lhs.tgt[e]])
            efibres[key].append(e)
        for eblocks in _fibre_partitions(efibres):
            result.append(_quotient(t_l, vblocks, eblocks))
    logger.debug("t_L has %d epi factorizations", len(result))
    return result


def compacted_rule(rule: PbpoRule, factorization: Factorization) -> PbpoRule:
    """The rule over L_c induced by t_L = t_Lc after e.

    Monic matches of the compacted rule correspond to the matches m' after
    e of the original rule.
    """
    e, t_lc = factorization.first, factorization.second
    if not is_epi(e):
        raise NotEpi("the first factor is not surjective")
    if not rule.canonical:
        raise NotCanonical("compaction needs a canonical rule")
    if not compose(t_lc, e).same_maps(rule.tL):
        raise NotCommuting("factorization does not recompose to t_L")
    pb = pullback(Cospan(rule.Lp, t_lc, rule.lp))
    k = pullback_mediator(pb, compose(e, rule.left), rule.tK)
    po = pushout(Span(rule.K, k, rule.right))
    t_rc = pushout_mediator(po, compose(rule.rp, pb.right), rule.tR)
    return PbpoRule(
        L=factorization.through,
        K=pb.obj,
        R=po.obj,
        Lp=rule.Lp,
        Kp=rule.Kp,
        left=pb.left,
        right=po.left,
        tL=t_lc,
        tK=pb.right,
        lp=rule.lp,
        Rp=rule.Rp,
        rp=rule.rp,
        tR=t_rc,
    )


def _bottom_name(v: str) -> str:
    return f"⊥{v}"


def materialize(t_l: Morphism) -> AmendabilityWitness:
    """Factor t_L through a monic tLprime whose match squares are pullbacks.

    L'' holds L itself plus a fresh vertex over each vertex of L' for
    elements outside the match. Over each edge of L' it holds the L-edges,
    one edge per pair of L-vertices, one per L-vertex towards or from the
    fresh vertices, and one between the fresh vertices. Everything carries
    the label of its image in L'.
    """
    lhs, typed = t_l.source, t_l.target
    vfibre = defaultdict(list)
    for v in lhs.vertices:
        vfibre[t_l.vmap[v]].append(v)

    vnames = unique_names(
        [(("L", v), v) for v in lhs.vertices]
        + [(("bot", v), _bottom_name(v)) for v in typed.vertices]
    )
    bot = {v: vnames[("bot", v)] for v in typed.vertices}

    # key -> (wanted name, source, target, edge of L')
    wanted: dict[tuple, tuple[str, str, str, str]] = {}
    for e in lhs.edges:
        s, t = vnames[("L", lhs.src[e])], vnames[("L", lhs.tgt[e])]
        wanted[("L", e)] = (e, s, t, t_l.emap[e])
    for d in typed.edges:
        s, t = typed.src[d], typed.tgt[d]
        for a in vfibre[s]:
            for b in vfibre[t]:
                wanted[("both", d, a, b)] = (
                    f"{d}⟨{a},{b}⟩",
                    vnames[("L", a)],
                    vnames[("L", b)],
                    d,
                )
            wanted[("src", d, a)] = (
                f"{d}⟨{a},⊥⟩",
                vnames[("L", a)],
                bot[t],
                d,
            )
        for b in vfibre[t]:
            wanted[("tgt", d, b)] = (
                f"{d}⟨⊥,{b}⟩",
                bot[s],
                vnames[("L", b)],
                d,
            )
        wanted[("empty", d)] = (f"{d}⟨⊥,⊥⟩", bot[s], bot[t], d)
    enames = unique_names((k, w[0]) for k, w in wanted.items())

    vbeta = {vnames[("L", v)]: t_l.vmap[v] for v in lhs.vertices}
    vbeta.update({bot[v]: v for v in typed.vertices})
    ebeta = {enames[k]: w[3] for k, w in wanted.items()}
    middle = LGraph(
        lhs.lattice,
        {x: typed.vlabel[y] for x, y in vbeta.items()},
        {enames[k]: w[1] for k, w in wanted.items()},
        {enames[k]: w[2] for k, w in wanted.items()},
        {x: typed.elabel[y] for x, y in ebeta.items()},
    )
    beta = Morphism(middle, typed, vbeta, ebeta)
    t_l_prime = Morphism(
        lhs,
        middle,
        {v: vnames[("L", v)] for v in lhs.vertices},
        {e: enames[("L", e)] for e in lhs.edges},
    )
    logger.debug(
        "materialized L'' has %d vertices and %d edges",
        len(middle.vlabel),
        len(middle.elabel),
    )
    return AmendabilityWitness(t_l_prime, beta, strong=True)


def _lifts(
    witness: AmendabilityWitness, sample: MatchCandidate
) -> Iterator[Morphism]:
    m, alpha = sample.m, sample.alpha
    beta, t_l_prime = witness.beta, witness.tLprime
    vfixed = {m.vmap[x]: y for x, y in t_l_prime.vmap.items()}
    efixed = {m.emap[x]: y for x, y in t_l_prime.emap.items()}
    for lift in enumerate_morphisms(
        m.target,
        beta.source,
        vfixed=vfixed,
        efixed=efixed,
        vallowed=lambda g, y: beta.vmap[y] == alpha.vmap[g],
        eallowed=lambda g, y: beta.emap[y] == alpha.emap[g],
    ):
        if compose(beta, lift).same_maps(alpha):
            yield lift


def check_amendability(
    witness: AmendabilityWitness, samples: Iterable[MatchCandidate]
) -> AmendabilityReport:
    """Look for a lift alpha' of every sampled (m, alpha) through L''.

    A lift satisfies beta after alpha' = alpha and alpha' after m =
    tLprime. A strong witness also needs the square formed by m and
    tLprime to be a pullback.
    """
    t_l = witness.typing
    failures = []
    for i, sample in enumerate(samples):
        if not is_mono(sample.m) or not is_pbpo_match(
            t_l, sample.m, sample.alpha
        ):
            failures.append(f"sample {i}: not a monic factorization of t_L")
            continue
        lifts = _lifts(witness, sample)
        if witness.strong:
            lifts = (
                a
                for a in lifts
                if is_strong_match(witness.tLprime, sample.m, a)
            )
        if next(lifts, None) is None:
            kind = "strong lift" if witness.strong else "lift"
            failures.append(f"sample {i}: no {kind}")
    for failure in failures:
        logger.debug("amendability: %s", failure)
    return AmendabilityReport(tuple(failures))


def monicize_rule(
    rule: PbpoRule, witness: AmendabilityWitness
) -> PbpoRule:
    """Retype a rule over L'' so that its typing becomes tLprime.

    K'' is the pullback of beta and l', and R'' the pushout of K >-> K''
    and r.
    """
    if not rule.canonical:
        raise NotCanonical("monicization needs a canonical rule")
    t_l_prime, beta = witness.tLprime, witness.beta
    if t_l_prime.source is not rule.L or beta.target is not rule.Lp:
        raise NotCommuting("witness does not factor the rule's typing")
    if not witness.typing.same_maps(rule.tL):
        raise NotCommuting("witness does not factor the rule's typing")
    pb = pullback(Cospan(rule.Lp, beta, rule.lp))
    t_k = pullback_mediator(pb, compose(t_l_prime, rule.left), rule.tK)
    po = pushout(Span(rule.K, t_k, rule.right))
    return PbpoRule(
        L=rule.L,
        K=rule.K,
        R=rule.R,
        Lp=beta.source,
        Kp=pb.obj,
        left=rule.left,
        right=rule.right,
        tL=t_l_prime,
        tK=t_k,
        lp=pb.left,
        Rp=po.obj,
        rp=po.left,
        tR=po.right,
    )


def forget_pushout(rule: PbpoRule) -> Rule:
    """The PBPO+ rule underlying a PBPO rule."""
    return Rule(**{f.name: getattr(rule, f.name) for f in fields(Rule)})


def pbpo_to_pbpoplus(rule: PbpoRule) -> list[Rule]:
    """One PBPO+ rule per epi factorization of the typing.

    Together their PBPO+ steps give the PBPO steps of `rule`.
    """
    if not rule.canonical:
        raise NotCanonical("translation needs a canonical rule")
    rules = []
    for factorization in enumerate_epi_factorizations(rule.tL):
        compact = compacted_rule(rule, factorization)
        monic = monicize_rule(compact, materialize(compact.tL))
        rules.append(forget_pushout(monic))
    logger.info("translated into %d PBPO+ rules", len(rules))
    return rules


def saturate_context(lhs: LGraph) -> tuple[LGraph, Morphism]:
    """Type graph admitting any context around L.

    Adds a top-labeled context vertex and a top-labeled edge for every
    ordered pair of vertices, loops included.
    """
    lattice = lhs.lattice
    if not lattice.is_flat:
        raise NotFlatLattice("context saturation needs a flat lattice")
    context = unique_names(
        [(v, v) for v in lhs.vertices] + [(None, "ctx")]
    )[None]
    vertices = [*lhs.vertices, context]
    pairs = [(s, t) for s in vertices for t in vertices]
    enames = unique_names(
        [(e, e) for e in lhs.edges]
        + [(p, f"⊤⟨{p[0]},{p[1]}⟩") for p in pairs]
    )
    vlabel = dict(lhs.vlabel) | {context: lattice.top}
    src, tgt, elabel = dict(lhs.src), dict(lhs.tgt), dict(lhs.elabel)
    for p in pairs:
        src[enames[p]], tgt[enames[p]] = p
        elabel[enames[p]] = lattice.top
    type_graph = LGraph(lattice, vlabel, src, tgt, elabel)
    return type_graph, inclusion(lhs, type_graph)


def enumerate_hosts(
    lattice: Lattice,
    labels: Iterable[str] | None = None,
    max_vertices: int = 3,
    max_edges: int = 3,
) -> Iterator[LGraph]:
    """Yield every graph within the bounds once per isomorphism class."""
    labels = sorted(set(labels) if labels is not None else lattice.elements)
    seen: dict[tuple, list[LGraph]] = defaultdict(list)
    for n in range(max_vertices + 1):
        names = [f"v{i}" for i in range(n)]
        slots = [
            (s, t, label)
            for s in names
            for t in names
            for label in labels
        ]
        for vlabels in itertools.combinations_with_replacement(labels, n):
            for k in range(max_edges + 1):
                for chosen in itertools.combinations_with_replacement(
                    slots, k
                ):
                    host = LGraph.of(
                        lattice,
                        dict(zip(names, vlabels, strict=True)),
                        [(f"e{i}", *slot) for i, slot in enumerate(chosen)],
                    )
                    key = _invariant(host)
                    if any(are_isomorphic(host, g) for g in seen[key]):
                        continue
                    seen[key].append(host)
                    yield host


def _invariant(g: LGraph) -> tuple:
    degrees = sorted(
        (
            g.vlabel[v],
            sum(1 for e in g.edges if g.src[e] == v),
            sum(1 for e in g.edges if g.tgt[e] == v),
        )
        for v in g.vertices
    )
    return (tuple(degrees), tuple(sorted(g.elabel.values())))


def relation(
    rule: Rule,
    hosts: Iterable[LGraph],
    semantics: Semantics = Semantics.PBPO_PLUS,
    policy: MatchPolicy | None = None,
) -> Relation:
    """Map each host to one representative per iso class of its results."""
    return {
        host: [t.G_R for t in rewrite_all(rule, host, semantics, policy)]
        for host in hosts
    }


def _included(xs: Iterable[LGraph], ys: Sequence[LGraph]) -> bool:
    return all(any(are_isomorphic(x, y) for y in ys) for x in xs)


def relations_equal(a: Relation, b: Relation) -> bool:
    if a.keys() != b.keys():
        logger.debug("relations cover different hosts")
        return False
    for host, results in a.items():
        other = b[host]
        if not (_included(results, other) and _included(other, results)):
            logger.debug("relations differ on %r", host)
            return False
    return True


def relation_union(relations: Iterable[Relation]) -> Relation:
    union: Relation = {}
    for rel in relations:
        for host, results in rel.items():
            merged = union.setdefault(host, [])
            for g in results:
                if not any(are_isomorphic(g, h) for h in merged):
                    merged.append(g)
    return union


def compaction_relation_agrees(
    rule: PbpoRule, factorization: Factorization, hosts: Iterable[LGraph]
) -> bool:
    """Check steps of the compacted rule against the original's.

    For every monic m' and alpha, the compacted rule's step at (m', alpha)
    must match the original's PBPO step at (m' after e, alpha), and the
    original must have no other matches that factor monically through e.
    """
    compact = compacted_rule(rule, factorization)
    e = factorization.first
    for host in hosts:
        compact_count = 0
        for c in enumerate_match_candidates(
            compact.tL, host, MatchPolicy.MONIC
        ):
            compact_count += 1
            mine = apply_step(compact, host, c.m, c.alpha, Semantics.PBPO)
            theirs = apply_step(
                rule, host, compose(c.m, e), c.alpha, Semantics.PBPO
            )
            if not are_isomorphic(mine.G_R, theirs.G_R):
                logger.debug("compacted step differs on %r", host)
                return False
        original_count = sum(
            1
            for c in enumerate_match_candidates(
                rule.tL, host, MatchPolicy.ANY
            )
            if _factors_monically(c.m, e)
        )
        if original_count != compact_count:
            logger.debug(
                "%d original matches factor through e, %d compacted",
                original_count,
                compact_count,
            )
            return False
    return True


def _factors_monically(m: Morphism, e: Morphism) -> bool:
    for emap, mmap in ((e.vmap, m.vmap), (e.emap, m.emap)):
        through: dict[str, str] = {}
        for x, block in emap.items():
            if through.setdefault(block, mmap[x]) != mmap[x]:
                return False
        if len(set(through.values())) != len(through):
            return False
    return True
