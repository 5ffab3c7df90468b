"""Reading and writing the textual rule format.

A file is a sequence of declarations:

    lattice L flat { a b c }
    lattice P poset { elements: bot p q top; covers: bot < p, bot < q,
                      p < top, q < top }
    graph G over L { node x : a; node y; edge e : x -> y : b }
    morphism f : G -> H { x -> x1; edge e -> e1; * }
    rule rho { L G; K G0; R G1; L' G2; K' G3; l f; r g; tL h; tK i; l' j }

Statements inside braces are separated by newlines or `;`, and `#` starts a
comment. Identifiers that are not plain words are written in double
quotes. A graph that omits a label gets the lattice's bottom.
"""

import logging
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from pbpoplus.errors import (
    DuplicateName,
    ParseError,
    PbpoError,
    UnknownName,
    UnknownReference,
)
from pbpoplus.graph import LGraph, Morphism, PatchDecomposition
from pbpoplus.lattice import (
    BOTTOM,
    TOP,
    FlatLatticeSpec,
    Lattice,
    build_flat_lattice,
    build_poset_lattice,
)
from pbpoplus.rewrite import PbpoRule, Rule

logger = logging.getLogger(__name__)

KEYWORDS = frozenset(
    {
        "lattice",
        "flat",
        "poset",
        "elements",
        "covers",
        "graph",
        "over",
        "node",
        "edge",
        "morphism",
        "rule",
    }
)

RULE_GRAPHS = ("L", "K", "R", "L'", "K'")
RULE_MORPHISMS = ("l", "r", "tL", "tK", "l'")
RULE_PBPO = ("R'", "r'", "tR")

_BARE = re.compile(r"[\w'+.⊥⊤⟨⟩]+")
_TOKEN = re.compile(
    r"""
    (?P<newline>\n)
    |(?P<space>[ \t\r]+)
    |(?P<comment>\#[^\n]*)
    |(?P<string>"(?:[^"\\\n]|\\.)*")
    |(?P<arrow>->)
    |(?P<punct>[{};:,<*])
    |(?P<word>[\w'+.⊥⊤⟨⟩]+)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def is_name(self) -> bool:
        return self.kind in ("word", "string")

    def value(self) -> str:
        if self.kind == "string":
            return re.sub(r"\\(.)", r"\1", self.text[1:-1])
        return self.text


def tokenize(text: str) -> list[Token]:
    """Split text into tokens; newlines become `;` separators."""
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        found = _TOKEN.match(text, pos)
        column = pos - line_start + 1
        if found is None:
            message = f"unexpected character {text[pos]!r}"
            raise ParseError(message, line, column)
        kind = found.lastgroup or ""
        if kind == "newline":
            tokens.append(Token("punct", ";", line, column))
            line += 1
            line_start = found.end()
        elif kind not in ("space", "comment"):
            tokens.append(Token(kind, found.group(), line, column))
        pos = found.end()
    tokens.append(Token("end", "", line, pos - line_start + 1))
    return tokens


@dataclass
class Workspace:
    """Named lattices, graphs, morphisms and rules."""

    lattices: dict[str, Lattice] = field(default_factory=dict)
    graphs: dict[str, LGraph] = field(default_factory=dict)
    morphisms: dict[str, Morphism] = field(default_factory=dict)
    rules: dict[str, Rule] = field(default_factory=dict)

    def rule(self, name: str) -> Rule:
        if name not in self.rules:
            raise UnknownName("rule", name)
        return self.rules[name]

    def graph(self, name: str) -> LGraph:
        if name not in self.graphs:
            raise UnknownName("graph", name)
        return self.graphs[name]

    def morphism(self, name: str) -> Morphism:
        if name not in self.morphisms:
            raise UnknownName("morphism", name)
        return self.morphisms[name]


class WorkspaceParser:
    """Parses declarations into a workspace.

    Declarations may refer to anything declared before them, including in
    previously parsed files.
    """

    def __init__(self, workspace: Workspace | None = None):
        """Parse into `workspace`, or into a fresh one."""
        self.workspace = workspace if workspace is not None else Workspace()
        self._tokens: list[Token] = []
        self._pos = 0

    def __call__(self, text: str) -> Workspace:
        """Parse every declaration in text."""
        self._tokens = tokenize(text)
        self._pos = 0
        while True:
            self._skip_separators()
            token = self._peek()
            if token.kind == "end":
                return self.workspace
            match token.text if token.kind == "word" else None:
                case "lattice":
                    self.parse_lattice()
                case "graph":
                    self.parse_graph()
                case "morphism":
                    self.parse_morphism()
                case "rule":
                    self.parse_rule()
                case _:
                    raise self._error(f"unexpected {token.text!r}", token)

    def _peek(self) -> Token:
        return self._tokens[self._pos]

    def _next(self) -> Token:
        token = self._tokens[self._pos]
        if token.kind != "end":
            self._pos += 1
        return token

    def _error(self, message: str, token: Token) -> ParseError:
        return ParseError(message, token.line, token.column)

    def _at(self, text: str) -> bool:
        token = self._peek()
        return token.kind in ("punct", "arrow", "word") and token.text == text

    def _expect(self, text: str) -> Token:
        token = self._next()
        if token.kind == "string" or token.text != text:
            shown = token.text or "end of input"
            raise self._error(f"expected {text!r}, found {shown!r}", token)
        return token

    def _name(self) -> tuple[str, Token]:
        token = self._next()
        if not token.is_name:
            shown = token.text or "end of input"
            raise self._error(f"expected a name, found {shown!r}", token)
        return token.value(), token

    def _skip_separators(self):
        while self._at(";"):
            self._next()

    def _entries(self) -> Iterator[Token]:
        """Yield the first token of each statement of a braced block."""
        self._expect("{")
        while True:
            self._skip_separators()
            if self._at("}"):
                self._next()
                return
            yield self._peek()
            if not (self._at(";") or self._at("}")):
                token = self._peek()
                raise self._error(f"unexpected {token.text!r}", token)

    def _declare(self, table: dict, kind: str, name: str, token: Token):
        if name in table:
            raise DuplicateName(kind, name, token.line, token.column)

    def _lookup(self, table: Mapping, kind: str, name: str, token: Token):
        if name not in table:
            raise UnknownReference(kind, name, token.line, token.column)
        return table[name]

    def _build(self, token: Token, build, *args):
        try:
            return build(*args)
        except ParseError:
            raise
        except PbpoError as exc:
            exc.add_note(f"declared at line {token.line}")
            raise

    def parse_lattice(self):
        start = self._expect("lattice")
        name, name_token = self._name()
        self._declare(self.workspace.lattices, "lattice", name, name_token)
        kind = self._next()
        if kind.text == "flat":
            base = []
            for _ in self._entries():
                while self._peek().is_name:
                    base.append(self._name()[0])
                    if self._at(","):
                        self._next()
            lattice = self._build(
                start, build_flat_lattice, FlatLatticeSpec(frozenset(base))
            )
        elif kind.text == "poset":
            elements: list[str] = []
            covers: list[tuple[str, str]] = []
            for entry in self._entries():
                section = self._next()
                self._expect(":")
                if section.text == "elements":
                    while self._peek().is_name:
                        elements.append(self._name()[0])
                        if self._at(","):
                            self._next()
                elif section.text == "covers":
                    covers.extend(self._covers())
                else:
                    raise self._error(f"unknown section {entry.text!r}", entry)
            lattice = self._build(
                start, build_poset_lattice, elements, covers
            )
        else:
            raise self._error("expected 'flat' or 'poset'", kind)
        self.workspace.lattices[name] = lattice
        logger.debug("parsed lattice %s", name)

    def _covers(self) -> Iterator[tuple[str, str]]:
        while True:
            lo = self._name()[0]
            self._expect("<")
            hi = self._name()[0]
            yield lo, hi
            if not self._at(","):
                return
            self._next()
            self._skip_separators()

    def _label(self, lattice: Lattice) -> str:
        label, token = self._name()
        aliases = {"⊥": lattice.bottom, "⊤": lattice.top}
        label = aliases.get(label, label)
        if label not in lattice:
            raise UnknownReference("label", label, token.line, token.column)
        return label

    def parse_graph(self):
        start = self._expect("graph")
        name, name_token = self._name()
        self._declare(self.workspace.graphs, "graph", name, name_token)
        self._expect("over")
        lattice_name, token = self._name()
        lattice = self._lookup(
            self.workspace.lattices, "lattice", lattice_name, token
        )
        vlabel: dict[str, str] = {}
        edges: dict[str, tuple[str, str, str]] = {}
        pending = []
        for entry in self._entries():
            keyword = self._next()
            element, element_token = self._name()
            if element in vlabel or element in edges:
                raise DuplicateName(
                    keyword.text,
                    element,
                    element_token.line,
                    element_token.column,
                )
            if keyword.text == "node":
                vlabel[element] = lattice.bottom
                if self._at(":"):
                    self._next()
                    vlabel[element] = self._label(lattice)
            elif keyword.text == "edge":
                self._expect(":")
                src, src_token = self._name()
                self._expect("->")
                tgt, tgt_token = self._name()
                label = lattice.bottom
                if self._at(":"):
                    self._next()
                    label = self._label(lattice)
                edges[element] = (src, tgt, label)
                pending.extend([(src, src_token), (tgt, tgt_token)])
            else:
                raise self._error("expected 'node' or 'edge'", entry)
        for vertex, token in pending:
            self._lookup(vlabel, "node", vertex, token)
        graph = self._build(
            start,
            LGraph.of,
            lattice,
            vlabel,
            [(e, *rest) for e, rest in edges.items()],
        )
        self.workspace.graphs[name] = graph
        logger.debug("parsed graph %s", name)

    def parse_morphism(self):
        start = self._expect("morphism")
        name, name_token = self._name()
        self._declare(self.workspace.morphisms, "morphism", name, name_token)
        self._expect(":")
        graphs = self.workspace.graphs
        source = self._lookup(graphs, "graph", *self._name())
        self._expect("->")
        target = self._lookup(graphs, "graph", *self._name())
        maps: dict[str, dict[str, str]] = {"v": {}, "e": {}}
        for entry in self._entries():
            if self._at("*"):
                self._next()
                self._fill_by_name(source, target, maps, entry)
                continue
            kind = None
            if self._at("node") or self._at("edge"):
                kind = "v" if self._next().text == "node" else "e"
            x, token = self._name()
            kind = kind or self._element_kind(source, x, token)
            self._expect("->")
            y, image_token = self._name()
            table = target.vlabel if kind == "v" else target.elabel
            element_kind = "node" if kind == "v" else "edge"
            self._lookup(table, element_kind, y, image_token)
            maps[kind][x] = y
        morphism = self._build(
            start, Morphism, source, target, maps["v"], maps["e"]
        )
        self.workspace.morphisms[name] = morphism
        logger.debug("parsed morphism %s", name)

    def _element_kind(self, graph: LGraph, x: str, token: Token) -> str:
        vertex, edge = x in graph.vlabel, x in graph.elabel
        if vertex and edge:
            raise self._error(
                f"{x!r} is both a node and an edge; prefix it", token
            )
        if not (vertex or edge):
            raise UnknownReference("element", x, token.line, token.column)
        return "v" if vertex else "e"

    def _fill_by_name(
        self,
        source: LGraph,
        target: LGraph,
        maps: dict[str, dict[str, str]],
        token: Token,
    ):
        for kind, table in (("v", target.vlabel), ("e", target.elabel)):
            for x in source.elements(kind):
                if x in maps[kind]:
                    continue
                if x not in table:
                    raise UnknownReference(
                        "node" if kind == "v" else "edge",
                        x,
                        token.line,
                        token.column,
                    )
                maps[kind][x] = x

    def parse_rule(self):
        start = self._expect("rule")
        name, name_token = self._name()
        self._declare(self.workspace.rules, "rule", name, name_token)
        parts: dict[str, LGraph | Morphism] = {}
        for entry in self._entries():
            role, role_token = self._name()
            if role in parts:
                raise DuplicateName(
                    "rule part", role, role_token.line, role_token.column
                )
            ref, token = self._name()
            if role in RULE_GRAPHS or role == "R'":
                parts[role] = self._lookup(
                    self.workspace.graphs, "graph", ref, token
                )
            elif role in RULE_MORPHISMS or role in ("r'", "tR"):
                parts[role] = self._lookup(
                    self.workspace.morphisms, "morphism", ref, token
                )
            else:
                raise self._error(f"unknown rule part {role!r}", entry)
        missing = [
            p for p in RULE_GRAPHS + RULE_MORPHISMS if p not in parts
        ]
        extra = [p for p in RULE_PBPO if p in parts]
        if extra and len(extra) != len(RULE_PBPO):
            missing += [p for p in RULE_PBPO if p not in parts]
        if missing:
            raise self._error(f"rule is missing {', '.join(missing)}", start)
        args = dict(
            L=parts["L"],
            K=parts["K"],
            R=parts["R"],
            Lp=parts["L'"],
            Kp=parts["K'"],
            left=parts["l"],
            right=parts["r"],
            tL=parts["tL"],
            tK=parts["tK"],
            lp=parts["l'"],
        )
        if extra:
            rule = self._build(
                start,
                lambda: PbpoRule(
                    **args, Rp=parts["R'"], rp=parts["r'"], tR=parts["tR"]
                ),
            )
        else:
            rule = self._build(start, lambda: Rule(**args))
        self.workspace.rules[name] = rule
        logger.debug("parsed rule %s", name)


def parse_text(text: str, workspace: Workspace | None = None) -> Workspace:
    return WorkspaceParser(workspace)(text)


def decode(data: bytes) -> str:
    """Decode UTF-8 text, locating the first bad byte on failure."""
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        column = exc.start - (data.rfind(b"\n", 0, exc.start) + 1) + 1
        message = f"invalid UTF-8 byte 0x{data[exc.start]:02x}"
        raise ParseError(message, line, column) from exc


def parse_files(paths: Iterable[Path | str]) -> Workspace:
    """Parse files in order into one workspace."""
    parser = WorkspaceParser()
    for path in paths:
        logger.debug("reading %s", path)
        try:
            parser(decode(Path(path).read_bytes()))
        except PbpoError as exc:
            exc.add_note(f"in {path}")
            raise
    return parser.workspace


def quote(name: str) -> str:
    """Write a name bare if the tokenizer reads it back as one word."""
    if _BARE.fullmatch(name) and name not in KEYWORDS:
        return name
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def serialize_lattice(name: str, lattice: Lattice) -> str:
    if lattice.is_flat and (lattice.bottom, lattice.top) == (BOTTOM, TOP):
        base = " ".join(quote(x) for x in sorted(lattice.base))
        return f"lattice {quote(name)} flat {{ {base} }}\n"
    order = nx.DiGraph()
    order.add_nodes_from(lattice.elements)
    order.add_edges_from((x, y) for x, y in lattice.order if x != y)
    hasse = nx.transitive_reduction(order)
    elements = " ".join(quote(x) for x in lattice.elements)
    covers = ", ".join(
        f"{quote(x)} < {quote(y)}" for x, y in sorted(hasse.edges)
    )
    lines = [
        f"lattice {quote(name)} poset {{",
        f"  elements: {elements}",
    ]
    if covers:
        lines.append(f"  covers: {covers}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_graph(name: str, graph: LGraph, lattice_name: str) -> str:
    lines = [f"graph {quote(name)} over {quote(lattice_name)} {{"]
    for v in graph.vertices:
        lines.append(f"  node {quote(v)} : {quote(graph.vlabel[v])}")
    for e in graph.edges:
        lines.append(
            f"  edge {quote(e)} : {quote(graph.src[e])} -> "
            f"{quote(graph.tgt[e])} : {quote(graph.elabel[e])}"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_morphism(
    name: str, morphism: Morphism, source_name: str, target_name: str
) -> str:
    lines = [
        f"morphism {quote(name)} : {quote(source_name)} -> "
        f"{quote(target_name)} {{"
    ]
    for keyword, mapping in (("node", morphism.vmap), ("edge", morphism.emap)):
        for x in sorted(mapping):
            lines.append(f"  {keyword} {quote(x)} -> {quote(mapping[x])}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_rule(name: str, rule: Rule, lattice_name: str) -> str:
    """Write a rule together with its graphs and morphisms.

    Component names are derived from the rule name, e.g. `rho.L`.
    """
    graph_roles = list(RULE_GRAPHS)
    morphism_roles = list(RULE_MORPHISMS)
    if isinstance(rule, PbpoRule):
        graph_roles.append("R'")
        morphism_roles += ["r'", "tR"]
    objects = _rule_parts(rule)
    # a graph playing several roles is written once, under its first role
    graph_names: dict[int, str] = {}
    chunks = []
    for role in graph_roles:
        graph = objects[role]
        if id(graph) not in graph_names:
            graph_names[id(graph)] = f"{name}.{role}"
            chunks.append(
                serialize_graph(f"{name}.{role}", graph, lattice_name)
            )
    names = {role: f"{name}.{role}" for role in morphism_roles}
    for role in graph_roles:
        names[role] = graph_names[id(objects[role])]
    for role in morphism_roles:
        f = objects[role]
        chunks.append(
            serialize_morphism(
                names[role],
                f,
                graph_names[id(f.source)],
                graph_names[id(f.target)],
            )
        )
    body = "; ".join(
        f"{role} {quote(names[role])}"
        for role in graph_roles + morphism_roles
    )
    chunks.append(f"rule {quote(name)} {{ {body} }}\n")
    return "\n".join(chunks)


def _rule_parts(rule: Rule) -> dict[str, LGraph | Morphism]:
    parts: dict[str, LGraph | Morphism] = {
        "L": rule.L,
        "K": rule.K,
        "R": rule.R,
        "L'": rule.Lp,
        "K'": rule.Kp,
        "l": rule.left,
        "r": rule.right,
        "tL": rule.tL,
        "tK": rule.tK,
        "l'": rule.lp,
    }
    if isinstance(rule, PbpoRule):
        parts.update({"R'": rule.Rp, "r'": rule.rp, "tR": rule.tR})
    return parts


def serialize_workspace(workspace: Workspace) -> str:
    """Write a workspace so that parsing it back gives isomorphic content.

    Rules are written with references to the workspace's own graphs and
    morphisms.
    """
    lattice_names = {}
    chunks = []
    for name, lattice in workspace.lattices.items():
        lattice_names.setdefault(lattice, name)
        chunks.append(serialize_lattice(name, lattice))
    graph_names = {}
    for name, graph in workspace.graphs.items():
        graph_names[id(graph)] = name
        chunks.append(
            serialize_graph(name, graph, lattice_names[graph.lattice])
        )
    morphism_names = {}
    for name, f in workspace.morphisms.items():
        morphism_names[id(f)] = name
        chunks.append(
            serialize_morphism(
                name, f, graph_names[id(f.source)], graph_names[id(f.target)]
            )
        )
    for name, rule in workspace.rules.items():
        refs = []
        for role, part in _rule_parts(rule).items():
            is_graph = isinstance(part, LGraph)
            names = graph_names if is_graph else morphism_names
            refs.append(f"{role} {quote(names[id(part)])}")
        chunks.append(f"rule {quote(name)} {{ {'; '.join(refs)} }}\n")
    return "\n".join(chunks)


def _dot_id(name: str) -> str:
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def to_dot(
    graph: LGraph,
    decomposition: PatchDecomposition | None = None,
    name: str = "G",
) -> str:
    """Render a graph in DOT, with vertices shown as `id:label`.

    With a patch decomposition, the match is drawn green, the context
    black and the patch edges red.
    """
    match_vertices: set[str] = set()
    match_edges: set[str] = set()
    patch: frozenset[str] = frozenset()
    if decomposition is not None:
        match_vertices = set(decomposition.match_graph.vlabel)
        match_edges = set(decomposition.match_graph.elabel)
        patch = decomposition.patch_edges

    def colour(element: str, matched: set[str]) -> str:
        if element in matched:
            return ' color="green"'
        if element in patch:
            return ' color="red"'
        return ""

    lines = [f"digraph {_dot_id(name)} {{"]
    for v in graph.vertices:
        label = _dot_id(f"{v}:{graph.vlabel[v]}")
        lines.append(
            f"  {_dot_id(v)} [label={label}{colour(v, match_vertices)}];"
        )
    for e in graph.edges:
        label = _dot_id(graph.elabel[e])
        lines.append(
            f"  {_dot_id(graph.src[e])} -> {_dot_id(graph.tgt[e])} "
            f"[label={label}{colour(e, match_edges)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
