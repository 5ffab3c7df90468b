"""Command line front end for validating and running rewrite rules."""

import functools
import logging
import pathlib
import sys

import click

from pbpoplus.cliutils import (
    CHECK_ENV_VAR,
    ExitCode,
    PolicyChoice,
    SemanticsChoice,
    getCheckDefault,
    getLoggingLevel,
)
from pbpoplus.errors import ParseError, PbpoError
from pbpoplus.graph import LGraph, patch_decomposition
from pbpoplus.lattice import Lattice
from pbpoplus.matching import MatchPolicy
from pbpoplus.rewrite import (
    PbpoRule,
    Rule,
    Semantics,
    canonicalize,
    derive,
    enumerate_candidates,
    enumerate_steps,
    rewrite_all,
    validate_rule,
)
from pbpoplus.textformat import (
    Workspace,
    parse_files,
    serialize_graph,
    serialize_lattice,
    serialize_morphism,
    serialize_rule,
    to_dot,
)
from pbpoplus.translation import pbpo_to_pbpoplus

logger = logging.getLogger(__name__)


def print_and_log(msg: str):
    logger.info(msg)
    print(msg)


def exit_codes(command):
    """Turn engine errors into the documented exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ParseError as exc:
            logger.error("parse error: %s", exc)
            click.echo(f"parse error: {exc}", err=True)
            sys.exit(ExitCode.PARSE_ERROR)
        except PbpoError as exc:
            logger.error("invalid input: %s", exc)
            click.echo(f"invalid: {exc}", err=True)
            for note in getattr(exc, "__notes__", ()):
                click.echo(f"  {note}", err=True)
            sys.exit(ExitCode.INVALID)

    return wrapper


files_argument = click.argument(
    "files",
    nargs=-1,
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=pathlib.Path),
)
rule_option = click.option("--rule", "rule_name", required=True)
graph_option = click.option("--graph", "graph_name", required=True)
semantics_option = click.option(
    "--semantics", type=SemanticsChoice, default=Semantics.PBPO_PLUS.value
)
policy_option = click.option(
    "--match",
    "policy",
    type=PolicyChoice,
    default=None,
    help="Which matches PBPO steps accept (default: any).",
)
out_option = click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=pathlib.Path),
    default=None,
    help="Write result graphs to this file.",
)


def check_option(default: bool):
    return click.option(
        "--check/--no-check",
        default=lambda: getCheckDefault(default),
        help=f"Verify step properties (default from {CHECK_ENV_VAR}).",
    )


def lattice_name(workspace: Workspace, lattice: Lattice) -> str:
    for name, candidate in workspace.lattices.items():
        if candidate == lattice:
            return name
    return "lattice"


def checked_policy(
    semantics: Semantics, policy: MatchPolicy | None
) -> MatchPolicy | None:
    if semantics is Semantics.PBPO_PLUS and policy not in (
        None,
        MatchPolicy.STRONG,
    ):
        raise click.BadParameter(
            "PBPO+ steps always use strong matches", param_hint="--match"
        )
    return policy


def load_rule(
    workspace: Workspace, name: str, semantics: Semantics
) -> Rule:
    rule = workspace.rule(name)
    validate_rule(rule, semantics).raise_if_invalid()
    return rule


def lattice_header(workspace: Workspace, lattices: list[Lattice]) -> str:
    """Declare the given lattices so an output file parses on its own."""
    declared: dict[str, Lattice] = {}
    for lattice in lattices:
        declared.setdefault(lattice_name(workspace, lattice), lattice)
    return "".join(
        serialize_lattice(name, lattice) for name, lattice in declared.items()
    )


def write_document(
    path: pathlib.Path, header: str, chunks: list[str], what: str
):
    path.write_text("\n".join([header, *chunks]), encoding="utf-8")
    logger.info("wrote %d %s to %s", len(chunks), what, path)


def write_graphs(
    path: pathlib.Path,
    workspace: Workspace,
    graphs: list[tuple[str, LGraph]],
):
    chunks = [
        serialize_graph(name, g, lattice_name(workspace, g.lattice))
        for name, g in graphs
    ]
    header = lattice_header(workspace, [g.lattice for _, g in graphs])
    write_document(path, header, chunks, "graphs")


@click.group()
def main():
    """Validate, match and apply PBPO+ and PBPO rewrite rules."""
    logging.basicConfig(
        format="%(asctime)s %(levelname)s: %(message)s",
        level=getLoggingLevel(logging.WARNING),
    )


@main.command()
@files_argument
@click.option("--rule", "rule_name", default=None)
@click.option("--semantics", type=SemanticsChoice, default=None)
@click.option(
    "--canonicalize",
    "show_canonical",
    is_flag=True,
    help="Print the canonical PBPO form of each rule.",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=pathlib.Path),
    default=None,
    help="Write the canonical PBPO form of every valid rule to this file.",
)
@exit_codes
def validate(files, rule_name, semantics, show_canonical, out):
    """Check that rules are well formed."""
    workspace = parse_files(files)
    names = [rule_name] if rule_name else list(workspace.rules)
    invalid = 0
    canonical_rules = []
    for name in names:
        rule = workspace.rule(name)
        report = validate_rule(rule, semantics)
        if report.ok:
            print_and_log(f"rule {name}: ok")
            for flag in report.flags:
                print_and_log(f"  not canonical: {flag}")
        else:
            invalid += 1
            print_and_log(f"rule {name}: invalid")
            for problem in report.problems:
                print_and_log(f"  {problem}")
            continue
        if not show_canonical and out is None:
            continue
        canonical = canonicalize(rule.as_pbpo())
        text = serialize_rule(
            f"{name}_canonical",
            canonical,
            lattice_name(workspace, rule.L.lattice),
        )
        canonical_rules.append((rule.L.lattice, text))
        if show_canonical:
            print(text)
    if out is not None:
        header = lattice_header(workspace, [x for x, _ in canonical_rules])
        chunks = [text for _, text in canonical_rules]
        write_document(out, header, chunks, "rules")
    if invalid:
        sys.exit(ExitCode.INVALID)


@main.command()
@files_argument
@rule_option
@graph_option
@semantics_option
@policy_option
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=pathlib.Path),
    default=None,
    help="Write every (m, alpha) pair to this file as morphisms.",
)
@exit_codes
def match(files, rule_name, graph_name, semantics, policy, out):
    """List the admissible (m, alpha) pairs of a rule in a graph."""
    workspace = parse_files(files)
    rule = load_rule(workspace, rule_name, semantics)
    host = workspace.graph(graph_name)
    candidates = list(
        enumerate_candidates(
            rule, host, semantics, checked_policy(semantics, policy)
        )
    )
    print_and_log(
        f"{len(candidates)} admissible matches of {rule_name} "
        f"in {graph_name} under {semantics.value}"
    )
    for i, candidate in enumerate(candidates):
        print(f"[{i}] m: {candidate.m}")
        print(f"    alpha: {candidate.alpha}")
    if out is not None:
        lattice = lattice_name(workspace, host.lattice)
        lhs, type_graph = f"{rule_name}.L", f"{rule_name}.L'"
        chunks = [
            serialize_graph(lhs, rule.L, lattice),
            serialize_graph(type_graph, rule.Lp, lattice),
            serialize_graph(graph_name, host, lattice),
        ]
        for i, candidate in enumerate(candidates):
            chunks.append(
                serialize_morphism(f"m{i}", candidate.m, lhs, graph_name)
            )
            chunks.append(
                serialize_morphism(
                    f"alpha{i}", candidate.alpha, graph_name, type_graph
                )
            )
        header = lattice_header(workspace, [host.lattice])
        write_document(out, header, chunks, "declarations")


@main.command()
@files_argument
@rule_option
@graph_option
@semantics_option
@policy_option
@click.option("--all", "apply_all", is_flag=True)
@check_option(True)
@out_option
@exit_codes
def apply(
    files, rule_name, graph_name, semantics, policy, apply_all, check, out
):
    """Rewrite a graph once, or in every possible way with --all."""
    workspace = parse_files(files)
    rule = load_rule(workspace, rule_name, semantics)
    host = workspace.graph(graph_name)
    policy = checked_policy(semantics, policy)
    if apply_all:
        results = [
            t.G_R for t in rewrite_all(rule, host, semantics, policy, check)
        ]
    else:
        steps = enumerate_steps(rule, host, semantics, policy, check)
        trace = next(steps, None)
        results = [] if trace is None else [trace.G_R]
    if not results:
        print_and_log(f"{rule_name} does not match {graph_name}")
        sys.exit(ExitCode.NO_MATCH)
    print_and_log(f"{len(results)} result(s)")
    named = [(f"{graph_name}_{i}", g) for i, g in enumerate(results)]
    for name, g in named:
        print(f"{name}: {g!r}")
    if out is not None:
        write_graphs(out, workspace, named)


@main.command(name="derive")
@files_argument
@rule_option
@graph_option
@semantics_option
@click.option("--max-steps", type=int, default=100)
@check_option(False)
@out_option
@exit_codes
def derive_command(
    files, rule_name, graph_name, semantics, max_steps, check, out
):
    """Apply a rule repeatedly until it no longer matches."""
    workspace = parse_files(files)
    rule = load_rule(workspace, rule_name, semantics)
    host = workspace.graph(graph_name)
    graphs = derive(rule, host, semantics, max_steps, check)
    steps = len(graphs) - 1
    print_and_log(f"derivation of {graph_name} took {steps} step(s)")
    print(f"final: {graphs[-1]!r}")
    if out is not None:
        write_graphs(
            out,
            workspace,
            [(f"{graph_name}_{i}", g) for i, g in enumerate(graphs)],
        )


@main.command()
@files_argument
@rule_option
@out_option
@exit_codes
def translate(files, rule_name, out):
    """Translate a PBPO rule into a set of PBPO+ rules."""
    workspace = parse_files(files)
    rule = workspace.rule(rule_name)
    pbpo = rule if isinstance(rule, PbpoRule) else rule.as_pbpo()
    validate_rule(pbpo, Semantics.PBPO).raise_if_invalid()
    rules = pbpo_to_pbpoplus(canonicalize(pbpo))
    print_and_log(f"{rule_name} translates into {len(rules)} PBPO+ rules")
    lattice = lattice_name(workspace, rule.L.lattice)
    chunks = [
        serialize_rule(f"{rule_name}_{i}", r, lattice)
        for i, r in enumerate(rules)
    ]
    if out is None:
        print("\n".join(chunks))
    else:
        header = lattice_header(workspace, [rule.L.lattice])
        write_document(out, header, chunks, "rules")


@main.command(name="export-dot")
@files_argument
@click.option("--graph", "graph_name", default=None)
@click.option(
    "--morphism",
    "morphism_name",
    default=None,
    help="Colour the match, context and patch this morphism induces.",
)
@out_option
@exit_codes
def export_dot(files, graph_name, morphism_name, out):
    """Render a graph as DOT."""
    workspace = parse_files(files)
    decomposition = None
    if morphism_name is not None:
        morphism = workspace.morphism(morphism_name)
        graph = morphism.target
        decomposition = patch_decomposition(morphism)
        graph_name = graph_name or morphism_name
    elif graph_name is not None:
        graph = workspace.graph(graph_name)
    else:
        raise click.UsageError("give --graph or --morphism")
    text = to_dot(graph, decomposition, graph_name)
    if out is None:
        print(text, end="")
    else:
        out.write_text(text, encoding="utf-8")


if __name__ == "__main__":
    main()
