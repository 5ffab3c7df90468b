"""Match and adherence search.

A match is found in two stages: first a morphism m : L -> G_L, then the
adherences alpha : G_L -> L' that agree with the typing on the image of m.
Fixing m first pins alpha on m(L), which prunes the second search hard.
"""

import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from enum import Enum, unique

from pbpoplus.graph import LGraph, Morphism, enumerate_morphisms

logger = logging.getLogger(__name__)


@unique
class MatchPolicy(Enum):
    """Which (m, alpha) pairs count as matches."""

    ANY = "any"
    MONIC = "monic"
    STRONG = "strong"


@dataclass(frozen=True)
class MatchCandidate:
    """A match morphism together with an adherence."""

    m: Morphism
    alpha: Morphism


def enumerate_matches(
    lhs: LGraph, host: LGraph, monic_only: bool = True
) -> Iterator[Morphism]:
    yield from enumerate_morphisms(lhs, host, monic_only)


def enumerate_adherences(
    m: Morphism, t_l: Morphism, strong_only: bool = False
) -> Iterator[Morphism]:
    """Yield every alpha : G_L -> L' with alpha after m equal to t_L.

    With `strong_only`, only adherences forming a strong match are
    yielded: nothing outside m(L) may land in t_L(L).
    """
    host, type_graph = m.target, t_l.target
    vfixed: dict[str, str] = {}
    efixed: dict[str, str] = {}
    for fixed, kind in ((vfixed, "v"), (efixed, "e")):
        for x in m.source.elements(kind):
            image, typed = m.image(kind, x), t_l.image(kind, x)
            if fixed.setdefault(image, typed) != typed:
                logger.debug("typing disagrees on %s", image)
                return

    vallowed = eallowed = None
    if strong_only:
        vallowed = _avoiding(set(t_l.vmap.values()))
        eallowed = _avoiding(set(t_l.emap.values()))

    for alpha in enumerate_morphisms(
        host,
        type_graph,
        vfixed=vfixed,
        efixed=efixed,
        vallowed=vallowed,
        eallowed=eallowed,
    ):
        if not strong_only or is_strong_match(t_l, m, alpha):
            yield alpha


def _avoiding(forbidden: set[str]) -> Callable[[str, str], bool]:
    return lambda _, image: image not in forbidden


def is_pbpo_match(t_l: Morphism, m: Morphism, alpha: Morphism) -> bool:
    """Test the commuting condition alpha after m == t_L."""
    if not (
        m.source is t_l.source
        and alpha.source is m.target
        and alpha.target is t_l.target
    ):
        return False
    return all(
        alpha.vmap[m.vmap[x]] == t_l.vmap[x] for x in t_l.vmap
    ) and all(alpha.emap[m.emap[x]] == t_l.emap[x] for x in t_l.emap)


def is_strong_match(t_l: Morphism, m: Morphism, alpha: Morphism) -> bool:
    """Test whether the match square over t_L is a pullback.

    Equivalently, every element of t_L(L) has exactly one alpha-preimage
    in G_L, and that preimage lies in m(L).
    """
    if not is_pbpo_match(t_l, m, alpha):
        return False
    for kind in ("v", "e"):
        matched = {m.image(kind, x) for x in m.source.elements(kind)}
        typed = {t_l.image(kind, x) for x in t_l.source.elements(kind)}
        preimages: dict[str, list[str]] = {y: [] for y in typed}
        for g in m.target.elements(kind):
            image = alpha.image(kind, g)
            if image in preimages:
                preimages[image].append(g)
        for pre in preimages.values():
            if len(pre) != 1 or pre[0] not in matched:
                return False
    return True


def enumerate_match_candidates(
    t_l: Morphism, host: LGraph, policy: MatchPolicy
) -> Iterator[MatchCandidate]:
    """Yield every (m, alpha) admissible under the policy."""
    monic = policy is not MatchPolicy.ANY
    strong = policy is MatchPolicy.STRONG
    count = 0
    for m in enumerate_matches(t_l.source, host, monic_only=monic):
        for alpha in enumerate_adherences(m, t_l, strong_only=strong):
            count += 1
            yield MatchCandidate(m, alpha)
    logger.debug("found %d %s match candidates", count, policy.value)
