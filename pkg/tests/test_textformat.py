import pytest
from conftest import FIXTURES, load

from pbpoplus.errors import (
    DuplicateName,
    LabelDecrease,
    NotComposable,
    ParseError,
    UnknownName,
    UnknownReference,
)
from pbpoplus.graph import are_isomorphic, patch_decomposition
from pbpoplus.rewrite import (
    PbpoRule,
    canonicalize,
    first_step,
    validate_rule,
)
from pbpoplus.translation import pbpo_to_pbpoplus
from pbpoplus.textformat import (
    parse_files,
    parse_text,
    quote,
    serialize_lattice,
    serialize_rule,
    serialize_workspace,
    to_dot,
    tokenize,
)

HEADER = "lattice one poset { elements: bot }\n"


@pytest.mark.parametrize(
    "fixture,rules",
    [
        ("step", ["split"]),
        ("nonunique", ["duplicate"]),
        ("fold", ["connect"]),
        ("loopdel", ["loopdel"]),
        ("spiral", ["spiral"]),
        ("relabel", ["relabel"]),
        ("sorts", ["receive"]),
        ("variables", ["distribute"]),
        ("wildcards", []),
    ],
)
def test_fixtures_parse(fixture, rules):
    ws = load(fixture)
    assert list(ws.rules) == rules


def test_tokens():
    tokens = tokenize('graph "a b" # note\n{ x -> y }')
    assert [(t.kind, t.text) for t in tokens] == [
        ("word", "graph"),
        ("string", '"a b"'),
        ("punct", ";"),
        ("punct", "{"),
        ("word", "x"),
        ("arrow", "->"),
        ("word", "y"),
        ("punct", "}"),
        ("end", ""),
    ]
    assert tokens[1].value() == "a b"
    assert (tokens[3].line, tokens[3].column) == (2, 1)


def test_unexpected_character():
    with pytest.raises(ParseError) as info:
        parse_text(HEADER + "graph G over one { node x @ }")
    assert (info.value.line, info.value.column) == (2, 27)
    assert str(info.value) == "2:27: unexpected character '@'"


def test_flat_and_poset_lattices():
    ws = parse_text(
        "lattice abc flat { a b, c }\n"
        "lattice chain poset {\n"
        "  elements: lo mid hi\n"
        "  covers: lo < mid,\n"
        "          mid < hi\n"
        "}\n"
    )
    assert ws.lattices["abc"].base == ("a", "b", "c")
    chain = ws.lattices["chain"]
    assert (chain.bottom, chain.top) == ("lo", "hi")


def test_labels_and_aliases():
    ws = parse_text(
        "lattice abc flat { a b }\n"
        "graph G over abc { node x : a; node y : ⊤; node z\n"
        "  edge e : x -> y : ⊥ }\n"
    )
    g = ws.graph("G")
    assert dict(g.vlabel) == {"x": "a", "y": "top", "z": "bot"}
    assert g.elabel["e"] == "bot"


def test_unknown_label():
    with pytest.raises(UnknownReference) as info:
        parse_text("lattice abc flat { a }\ngraph G over abc { node x : q }")
    assert info.value.kind == "label"
    assert (info.value.line, info.value.column) == (2, 29)


def test_unknown_node():
    with pytest.raises(UnknownReference) as info:
        parse_text(HEADER + "graph G over one { node x; edge e : x -> y }")
    assert (info.value.kind, info.value.name) == ("node", "y")
    assert info.value.line == 2


def test_unknown_graph_and_workspace_lookups():
    with pytest.raises(UnknownReference):
        parse_text(HEADER + "morphism f : A -> B { * }")
    ws = parse_text(HEADER)
    with pytest.raises(UnknownName) as info:
        ws.rule("missing")
    assert str(info.value) == "no rule named 'missing'"
    with pytest.raises(UnknownName) as info:
        ws.graph("missing")
    assert (info.value.kind, info.value.name) == ("graph", "missing")
    with pytest.raises(UnknownName):
        ws.morphism("missing")


@pytest.mark.parametrize(
    "text",
    [
        HEADER + "graph G over one { node x }\ngraph G over one { }",
        HEADER + "graph G over one { node x; node x }",
        HEADER + "graph G over one { node x; edge x : x -> x }",
        HEADER + HEADER,
    ],
)
def test_duplicate_names(text):
    with pytest.raises(DuplicateName):
        parse_text(text)


def test_morphism_forms():
    ws = parse_text(
        HEADER
        + "graph A over one { node x; node y; edge e : x -> y }\n"
        + "graph B over one { node p; edge l : p -> p }\n"
        + "morphism f : A -> B { x -> p; node y -> p; edge e -> l }\n"
        + "graph C over one { node x; node y; edge e : x -> y }\n"
        + "morphism g : A -> C { * }\n"
    )
    assert dict(ws.morphism("f").vmap) == {"x": "p", "y": "p"}
    assert dict(ws.morphism("g").emap) == {"e": "e"}


def test_engine_errors_carry_their_declaration():
    with pytest.raises(LabelDecrease) as info:
        parse_text(
            "lattice abc flat { a b }\n"
            "graph A over abc { node x : a }\n"
            "graph B over abc { node y : b }\n"
            "morphism f : A -> B { x -> y }\n"
        )
    assert "declared at line 4" in info.value.__notes__


def test_rule_parts():
    with pytest.raises(ParseError) as info:
        parse_text(HEADER + "graph A over one { }\nrule r { L A }")
    assert "rule is missing" in str(info.value)
    with pytest.raises(NotComposable) as composed:
        parse_text(
            HEADER
            + "graph A over one { node x }\n"
            + "graph B over one { node x }\n"
            + "morphism f : A -> A { * }\n"
            + "morphism g : B -> A { * }\n"
            + "rule r { L A; K A; R A; L' A; K' A\n"
            + "  l f; r f; tL f; tK f; l' g }\n"
        )
    assert "declared at line 6" in composed.value.__notes__


def test_parse_files_notes_the_file(tmp_path):
    bad = tmp_path / "bad.pbpo"
    bad.write_text(HEADER + "graph G over two { }", encoding="utf-8")
    with pytest.raises(UnknownReference) as info:
        parse_files([bad])
    assert f"in {bad}" in info.value.__notes__


def test_bad_utf8_is_a_parse_error(tmp_path):
    bad = tmp_path / "bad.pbpo"
    bad.write_bytes(b"lattice one poset { elements: bot }\ngraph \xff")
    with pytest.raises(ParseError) as info:
        parse_files([bad])
    assert (info.value.line, info.value.column) == (2, 7)
    assert "invalid UTF-8 byte 0xff" in str(info.value)
    assert f"in {bad}" in info.value.__notes__


def test_later_files_see_earlier_declarations(tmp_path):
    first = tmp_path / "first.pbpo"
    second = tmp_path / "second.pbpo"
    first.write_text(HEADER, encoding="utf-8")
    second.write_text("graph G over one { node x }", encoding="utf-8")
    ws = parse_files([first, second])
    assert ws.graph("G").vertices == ("x",)


@pytest.mark.parametrize(
    "name,quoted",
    [
        ("x", "x"),
        ("x+y", "x+y"),
        ("x'", "x'"),
        ("rho.L", "rho.L"),
        ("a b", '"a b"'),
        ("node", '"node"'),
        ("⟨x,z⟩", '"⟨x,z⟩"'),
        ('say "hi"', '"say \\"hi\\""'),
    ],
)
def test_quote(name, quoted):
    assert quote(name) == quoted


@pytest.mark.parametrize("fixture", ["sorts", "variables", "spiral"])
def test_workspace_round_trip(fixture):
    ws = load(fixture)
    again = parse_text(serialize_workspace(ws))
    assert again.lattices == ws.lattices
    assert list(again.graphs) == list(ws.graphs)
    for name, g in ws.graphs.items():
        assert are_isomorphic(g, again.graphs[name])
    for name, f in ws.morphisms.items():
        assert f.same_maps(again.morphisms[name])
    for name, rule in ws.rules.items():
        assert isinstance(again.rules[name], PbpoRule) == isinstance(
            rule, PbpoRule
        )
        assert validate_rule(again.rules[name]).ok


def test_serialized_rule_shares_graphs():
    ws = load("loopdel")
    rule = ws.rule("loopdel")
    text = serialize_rule("del", rule, "one")
    assert "graph del.K over one" in text
    assert "graph del.R " not in text
    assert "R del.K" in text
    again = parse_text(serialize_lattice("one", rule.L.lattice) + text)
    parsed = again.rule("del")
    assert parsed.K is parsed.R
    assert are_isomorphic(parsed.Lp, rule.Lp)
    assert validate_rule(parsed).ok


def test_serialized_names_are_quoted():
    full = canonicalize(load("fold").rule("connect").as_pbpo())
    translated = pbpo_to_pbpoplus(full)[1]
    text = serialize_rule("c", translated, "one")
    assert '"x⟨a+b,⊥⟩"' in text
    again = parse_text(serialize_lattice("one", full.L.lattice) + text)
    parsed = again.rule("c")
    assert not isinstance(parsed, PbpoRule)
    assert are_isomorphic(parsed.Lp, translated.Lp)
    assert validate_rule(parsed).ok


def test_dot_export():
    ws = load("relabel")
    text = to_dot(ws.graph("host"), name="host")
    assert text.startswith('digraph "host" {')
    assert '"x" [label="x:a"];' in text
    assert '"x" -> "z" [label="bot"];' in text
    assert "color" not in text


def test_dot_export_colours_the_patch():
    ws = load("step")
    rule, host = ws.rule("split"), ws.graph("GL")
    trace = first_step(rule, host)
    assert trace is not None
    text = to_dot(host, patch_decomposition(trace.m))
    assert '"x" [label="x:bot" color="green"];' in text
    assert '"z3" [label="z3:bot"];' in text
    assert '"y" -> "x" [label="bot" color="red"];' in text
    assert '"z2" -> "z1" [label="bot"];' in text


def test_fixture_directory_exists():
    assert sorted(p.stem for p in FIXTURES.glob("*.pbpo")) == [
        "fold",
        "loopdel",
        "nonunique",
        "relabel",
        "sorts",
        "spiral",
        "step",
        "variables",
        "wildcards",
    ]
