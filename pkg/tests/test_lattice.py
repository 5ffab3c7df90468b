import itertools

import pytest

from pbpoplus.errors import (
    NotALattice,
    NotAPartialOrder,
    ReservedName,
    UnknownElement,
)
from pbpoplus.lattice import (
    BOTTOM,
    TOP,
    FlatLatticeSpec,
    Lattice,
    build_flat_lattice,
    build_poset_lattice,
    singleton_lattice,
)

SORTS_COVERS = [
    ("bot", "p1"),
    ("bot", "p2"),
    ("p1", "P"),
    ("p2", "P"),
    ("bot", "d1"),
    ("d1", "D"),
    ("bot", "chan"),
    ("bot", "at"),
    ("P", "top"),
    ("D", "top"),
    ("chan", "top"),
    ("at", "top"),
]


def flat(*base: str) -> Lattice:
    return build_flat_lattice(FlatLatticeSpec(frozenset(base)))


def sorts() -> Lattice:
    elements = {x for pair in SORTS_COVERS for x in pair}
    return build_poset_lattice(elements, SORTS_COVERS)


def test_two_element_lattice():
    lattice = build_poset_lattice(["bot", "top"], [("bot", "top")])
    assert lattice.bottom == "bot"
    assert lattice.top == "top"
    assert lattice.leq("bot", "top")
    assert not lattice.leq("top", "bot")


def test_sorts_lattice():
    lattice = sorts()
    assert lattice.bottom == "bot"
    assert lattice.top == "top"
    assert lattice.leq("p1", "P")
    assert lattice.leq("bot", "P")
    assert not lattice.leq("p1", "D")
    assert lattice.join(["p1", "p2"]) == "P"
    assert lattice.join(["p1", "d1"]) == "top"
    assert lattice.meet(["P", "chan"]) == "bot"


def test_missing_join():
    with pytest.raises(NotALattice) as info:
        build_poset_lattice(["bot", "a", "b"], [("bot", "a"), ("bot", "b")])
    assert info.value.pair == ("a", "b")
    assert info.value.missing == "join"


def test_missing_meet():
    with pytest.raises(NotALattice) as info:
        build_poset_lattice(["a", "b", "top"], [("a", "top"), ("b", "top")])
    assert info.value.missing == "meet"


def test_cycle():
    with pytest.raises(NotAPartialOrder):
        build_poset_lattice(["a", "b"], [("a", "b"), ("b", "a")])


def test_cover_with_unknown_element():
    with pytest.raises(UnknownElement):
        build_poset_lattice(["a"], [("a", "b")])


def test_flat_lattice():
    lattice = flat("0", "1")
    assert len(lattice.elements) == 4
    assert lattice.is_flat
    assert set(lattice.base) == {"0", "1"}
    assert not lattice.leq("0", "1")
    assert lattice.leq("0", TOP)
    assert lattice.leq(BOTTOM, "1")


def test_empty_flat_lattice():
    lattice = flat()
    assert set(lattice.elements) == {BOTTOM, TOP}
    assert lattice.bottom == BOTTOM


@pytest.mark.parametrize("name", [BOTTOM, TOP])
def test_reserved_names(name):
    with pytest.raises(ReservedName):
        FlatLatticeSpec(frozenset({"a", name}))


@pytest.mark.parametrize(
    "xs,meet,join",
    [
        (["a", "b"], BOTTOM, TOP),
        ([], TOP, BOTTOM),
        ([TOP, "a"], "a", TOP),
        (["a"], "a", "a"),
        (["a", "a"], "a", "a"),
        ([BOTTOM, "c"], BOTTOM, "c"),
    ],
)
def test_flat_meet_join(xs, meet, join):
    lattice = flat("a", "b", "c")
    assert lattice.meet(xs) == meet
    assert lattice.join(xs) == join


def test_unknown_element():
    lattice = flat("a")
    with pytest.raises(UnknownElement):
        lattice.meet(["a", "z"])
    with pytest.raises(UnknownElement):
        lattice.leq("z", "a")
    # engine errors are value errors
    with pytest.raises(ValueError):
        lattice.join(["z"])


def test_singleton_lattice():
    lattice = singleton_lattice()
    assert lattice.bottom == lattice.top
    assert not lattice.is_flat
    assert lattice.meet([]) == lattice.join([]) == BOTTOM


@pytest.mark.parametrize(
    "lattice", [flat("a", "b"), sorts(), singleton_lattice()]
)
def test_bound_laws(lattice: Lattice):
    elements = lattice.elements
    for x in elements:
        assert lattice.leq(lattice.bottom, x)
        assert lattice.leq(x, lattice.top)
    for x, y in itertools.product(elements, repeat=2):
        meet = lattice.meet([x, y])
        join = lattice.join([x, y])
        assert lattice.leq(meet, x) and lattice.leq(meet, y)
        assert lattice.leq(x, join) and lattice.leq(y, join)
        for z in elements:
            if lattice.leq(z, x) and lattice.leq(z, y):
                assert lattice.leq(z, meet)
            if lattice.leq(x, z) and lattice.leq(y, z):
                assert lattice.leq(join, z)
        assert lattice.meet([x, join]) == x
        assert lattice.join([x, meet]) == x


def test_flat_base_elements_are_incomparable():
    lattice = flat("a", "b", "c")
    for x, y in itertools.permutations(lattice.base, 2):
        assert lattice.meet([x, y]) == BOTTOM
        assert lattice.join([x, y]) == TOP
