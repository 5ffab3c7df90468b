"""Rules and rewrite steps.

A step pulls the host back along the rule's type graph, which deletes,
duplicates and relabels, and then pushes the result out along r, which
merges, adds and relabels upwards. Under PBPO+ semantics the match must be
strong. Under PBPO semantics any commuting (m, alpha) is allowed.
"""

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field, fields
from enum import Enum, unique

from pbpoplus.errors import (
    LemmaViolated,
    NotAMatch,
    NotCommuting,
    NotComposable,
    RuleInvalid,
    UniquenessViolation,
)
from pbpoplus.graph import (
    LGraph,
    Morphism,
    are_isomorphic,
    compose,
    enumerate_morphisms,
    is_mono,
)
from pbpoplus.limits import (
    Cospan,
    Pushout,
    Span,
    is_pullback_square,
    is_pushout_square,
    pullback,
    pullback_mediator,
    pushout,
    pushout_mediator,
)
from pbpoplus.matching import (
    MatchCandidate,
    MatchPolicy,
    enumerate_match_candidates,
    is_pbpo_match,
    is_strong_match,
)

logger = logging.getLogger(__name__)


@unique
class Semantics(Enum):
    PBPO_PLUS = "pbpo+"
    PBPO = "pbpo"


def _expect(f: Morphism, source: LGraph, target: LGraph, name: str):
    if f.source is not source or f.target is not target:
        raise NotComposable(f"{name} does not connect the expected graphs")


@dataclass(frozen=True)
class Rule:
    """A PBPO+ rule.

    The top row is L <-left- K -right-> R. The typings tL and tK embed the
    pattern into the type graphs Lp and Kp, with lp : Kp -> Lp closing the
    left square.
    """

    L: LGraph
    K: LGraph
    R: LGraph
    Lp: LGraph
    Kp: LGraph
    left: Morphism
    right: Morphism
    tL: Morphism
    tK: Morphism
    lp: Morphism

    def __post_init__(self):
        _expect(self.left, self.K, self.L, "l")
        _expect(self.right, self.K, self.R, "r")
        _expect(self.tL, self.L, self.Lp, "tL")
        _expect(self.tK, self.K, self.Kp, "tK")
        _expect(self.lp, self.Kp, self.Lp, "l'")

    def as_pbpo(self) -> "PbpoRule":
        """Extend with the pushout type graph of the right-hand side."""
        if isinstance(self, PbpoRule):
            return self
        rp_obj, rp, t_r = derive_rhs_typegraph(self)
        return PbpoRule(
            **{f.name: getattr(self, f.name) for f in fields(Rule)},
            Rp=rp_obj,
            rp=rp,
            tR=t_r,
        )


@dataclass(frozen=True)
class PbpoRule(Rule):
    """A PBPO rule: a Rule plus rp : Kp -> Rp and tR : R -> Rp."""

    Rp: LGraph = field(kw_only=True)
    rp: Morphism = field(kw_only=True)
    tR: Morphism = field(kw_only=True)

    def __post_init__(self):
        super().__post_init__()
        _expect(self.rp, self.Kp, self.Rp, "r'")
        _expect(self.tR, self.R, self.Rp, "tR")

    @property
    def canonical(self) -> bool:
        """Left square a pullback and right square a pushout."""
        return is_pullback_square(
            self.tL, self.lp, self.left, self.tK
        ) and is_pushout_square(self.tK, self.right, self.rp, self.tR)

    @property
    def monic_typing(self) -> bool:
        return is_mono(self.tL)


@unique
class ProblemKind(Enum):
    NOT_COMMUTING = "NotCommuting"
    NOT_PULLBACK = "NotPullback"
    NOT_PUSHOUT = "NotPushout"
    TYPING_NOT_MONIC = "TypingNotMonic"


@dataclass(frozen=True)
class RuleProblem:
    kind: ProblemKind
    detail: str

    def __str__(self):
        return f"{self.kind.value}: {self.detail}"


@dataclass(frozen=True)
class RuleReport:
    """What `validate_rule` found.

    `problems` make the rule unusable under the semantics. `flags` mark a
    PBPO rule that is usable but not canonical.
    """

    problems: tuple[RuleProblem, ...] = ()
    flags: tuple[RuleProblem, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    @property
    def canonical(self) -> bool:
        return not self.flags

    @property
    def kinds(self) -> set[ProblemKind]:
        return {p.kind for p in self.problems}

    @property
    def flag_kinds(self) -> set[ProblemKind]:
        return {p.kind for p in self.flags}

    def raise_if_invalid(self) -> None:
        if self.problems:
            raise RuleInvalid(self.problems)


def validate_rule(
    rule: Rule, semantics: Semantics | None = None
) -> RuleReport:
    """Check the squares and typings a rule needs under the semantics.

    PBPO+ rules need a pullback left square with monic typings. PBPO rules
    need commuting squares; a left square that is not a pullback or a right
    square that is not a pushout is flagged as non-canonical.
    """
    if semantics is None:
        pbpo = isinstance(rule, PbpoRule)
        semantics = Semantics.PBPO if pbpo else Semantics.PBPO_PLUS
    problems: list[RuleProblem] = []
    flags: list[RuleProblem] = []
    non_canonical = problems if semantics is Semantics.PBPO_PLUS else flags
    if not compose(rule.lp, rule.tK).same_maps(compose(rule.tL, rule.left)):
        problems.append(
            RuleProblem(ProblemKind.NOT_COMMUTING, "left square")
        )
    elif not is_pullback_square(rule.tL, rule.lp, rule.left, rule.tK):
        non_canonical.append(
            RuleProblem(ProblemKind.NOT_PULLBACK, "left square")
        )

    if semantics is Semantics.PBPO_PLUS:
        for name, typing in (("tL", rule.tL), ("tK", rule.tK)):
            if not is_mono(typing):
                problems.append(
                    RuleProblem(ProblemKind.TYPING_NOT_MONIC, name)
                )
    else:
        full = rule.as_pbpo()
        if not compose(full.rp, full.tK).same_maps(
            compose(full.tR, full.right)
        ):
            problems.append(
                RuleProblem(ProblemKind.NOT_COMMUTING, "right square")
            )
        elif not is_pushout_square(full.tK, full.right, full.rp, full.tR):
            flags.append(
                RuleProblem(ProblemKind.NOT_PUSHOUT, "right square")
            )
    for problem in problems:
        logger.debug("rule problem: %s", problem)
    for flag in flags:
        logger.debug("rule is not canonical: %s", flag)
    return RuleReport(tuple(problems), tuple(flags))


def derive_rhs_typegraph(rule: Rule) -> tuple[LGraph, Morphism, Morphism]:
    """Push out Kp <-tK- K -r-> R, returning (Rp, rp, tR)."""
    po = pushout(Span(rule.K, rule.tK, rule.right))
    return po.obj, po.left, po.right


def canonicalize(rule: PbpoRule) -> PbpoRule:
    """An equivalent rule whose squares are a pullback and a pushout."""
    pb = pullback(Cospan(rule.Lp, rule.tL, rule.lp))
    k = pullback_mediator(pb, rule.left, rule.tK)
    po = pushout(Span(rule.K, k, rule.right))
    rhs = pushout(Span(pb.obj, pb.right, po.left))
    return PbpoRule(
        L=rule.L,
        K=pb.obj,
        R=po.obj,
        Lp=rule.Lp,
        Kp=rule.Kp,
        left=pb.left,
        right=po.left,
        tL=rule.tL,
        tK=pb.right,
        lp=rule.lp,
        Rp=rhs.obj,
        rp=rhs.left,
        tR=rhs.right,
    )


@dataclass(frozen=True)
class StepTrace:
    """Every object and arrow of one rewrite step.

    G_K is the pullback of alpha along lp, with projections g_L : G_K -> G_L
    and u_prime : G_K -> Kp. G_R is the pushout of u and r, with injections
    g_R : G_K -> G_R and w : R -> G_R.
    """

    rule: Rule
    host: LGraph
    m: Morphism
    alpha: Morphism
    G_K: LGraph
    g_L: Morphism
    u_prime: Morphism
    u: Morphism
    G_R: LGraph
    g_R: Morphism
    w: Morphism
    semantics: Semantics
    rhs_pushout: Pushout = field(repr=False, compare=False)


def _host_name(host_element: str, _type_element: str) -> str:
    return host_element


def apply_step(
    rule: Rule,
    host: LGraph,
    m: Morphism,
    alpha: Morphism,
    semantics: Semantics = Semantics.PBPO_PLUS,
    check: bool = False,
) -> StepTrace:
    """Rewrite `host` at (m, alpha).

    With `check`, PBPO+ steps also verify the uniqueness of u and the
    top-left pullback and bottom-right pushout properties; a failure there
    is an engine bug, not a user error.
    """
    if m.target is not host:
        raise NotAMatch("match does not land in the host")
    if semantics is Semantics.PBPO_PLUS:
        if not is_mono(m):
            raise NotAMatch("match morphism is not monic")
        if not is_strong_match(rule.tL, m, alpha):
            raise NotAMatch("match square is not a pullback")
    elif not is_pbpo_match(rule.tL, m, alpha):
        raise NotAMatch("adherence does not commute with the typing")

    pb = pullback(Cospan(rule.Lp, alpha, rule.lp), namer=_host_name)
    u = pullback_mediator(pb, compose(m, rule.left), rule.tK)
    if semantics is Semantics.PBPO_PLUS and not is_mono(u):
        raise LemmaViolated("u is monic")
    po = pushout(Span(rule.K, u, rule.right))
    logger.debug(
        "step: G_K has %d elements, G_R has %d", pb.obj.size, po.obj.size
    )
    trace = StepTrace(
        rule=rule,
        host=host,
        m=m,
        alpha=alpha,
        G_K=pb.obj,
        g_L=pb.left,
        u_prime=pb.right,
        u=u,
        G_R=po.obj,
        g_R=po.left,
        w=po.right,
        semantics=semantics,
        rhs_pushout=po,
    )
    if check and semantics is Semantics.PBPO_PLUS:
        count = count_u_candidates(trace)
        if count != 1:
            raise UniquenessViolation(count)
        check_step_lemmas(trace)
    return trace


def count_u_candidates(trace: StepTrace) -> int:
    """Count the v : K -> G_K with u_prime after v equal to tK."""
    t_k, u_prime = trace.rule.tK, trace.u_prime
    candidates = enumerate_morphisms(
        trace.rule.K,
        trace.G_K,
        vallowed=lambda k, w: u_prime.vmap[w] == t_k.vmap[k],
        eallowed=lambda k, d: u_prime.emap[d] == t_k.emap[k],
    )
    return sum(
        1
        for v in candidates
        if compose(u_prime, v).same_maps(t_k)
    )


def check_step_lemmas(trace: StepTrace) -> tuple[str, ...]:
    """Verify the properties every PBPO+ step has, raising LemmaViolated.

    Returns the names of the checked properties.
    """
    rule = trace.rule
    if not is_pullback_square(trace.m, trace.g_L, rule.left, trace.u):
        raise LemmaViolated("top-left pullback")
    if not is_mono(trace.u):
        raise LemmaViolated("u is monic")
    rp_obj, rp, t_r = derive_rhs_typegraph(rule)
    try:
        w_prime = pushout_mediator(
            trace.rhs_pushout, compose(rp, trace.u_prime), t_r
        )
    except NotCommuting as exc:
        raise LemmaViolated("bottom-right pushout", str(exc)) from exc
    if not compose(w_prime, trace.w).same_maps(t_r):
        raise LemmaViolated("tR factors through w")
    if not is_pushout_square(trace.u_prime, trace.g_R, rp, w_prime):
        raise LemmaViolated("bottom-right pushout")
    logger.debug("step lemmas hold (R' has %d elements)", rp_obj.size)
    return ("top-left pullback", "u is monic", "bottom-right pushout")


def _policy_for(
    semantics: Semantics, policy: MatchPolicy | None
) -> MatchPolicy:
    if semantics is Semantics.PBPO_PLUS:
        if policy not in (None, MatchPolicy.STRONG):
            raise ValueError("PBPO+ steps always use strong matches")
        return MatchPolicy.STRONG
    return policy or MatchPolicy.ANY


def enumerate_candidates(
    rule: Rule,
    host: LGraph,
    semantics: Semantics = Semantics.PBPO_PLUS,
    policy: MatchPolicy | None = None,
) -> Iterator[MatchCandidate]:
    yield from enumerate_match_candidates(
        rule.tL, host, _policy_for(semantics, policy)
    )


def enumerate_steps(
    rule: Rule,
    host: LGraph,
    semantics: Semantics = Semantics.PBPO_PLUS,
    policy: MatchPolicy | None = None,
    check: bool = False,
) -> Iterator[StepTrace]:
    """Yield a trace for every admissible (m, alpha), in search order."""
    for candidate in enumerate_candidates(rule, host, semantics, policy):
        yield apply_step(
            rule, host, candidate.m, candidate.alpha, semantics, check
        )


def rewrite_all(
    rule: Rule,
    host: LGraph,
    semantics: Semantics = Semantics.PBPO_PLUS,
    policy: MatchPolicy | None = None,
    check: bool = False,
) -> list[StepTrace]:
    """One trace per isomorphism class of result graph."""
    results: list[StepTrace] = []
    for trace in enumerate_steps(rule, host, semantics, policy, check):
        if not any(are_isomorphic(trace.G_R, r.G_R) for r in results):
            results.append(trace)
    logger.debug("%d distinct results", len(results))
    return results


def first_step(
    rule: Rule,
    host: LGraph,
    semantics: Semantics = Semantics.PBPO_PLUS,
    check: bool = False,
) -> StepTrace | None:
    return next(enumerate_steps(rule, host, semantics, None, check), None)


def derive(
    rule: Rule,
    host: LGraph,
    semantics: Semantics = Semantics.PBPO_PLUS,
    max_steps: int = 100,
    check: bool = False,
) -> list[LGraph]:
    """Apply the first admissible step repeatedly.

    Stops when nothing matches or after `max_steps` steps, and returns the
    host followed by every intermediate result.
    """
    graphs = [host]
    for i in range(max_steps):
        trace = first_step(rule, graphs[-1], semantics, check)
        if trace is None:
            logger.info("no match after %d steps", i)
            break
        graphs.append(trace.G_R)
    return graphs

