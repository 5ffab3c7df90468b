"""Exceptions raised by the rewriting engine.

Every error derives from ValueError so callers can treat malformed input
uniformly. The attributes carry the offending objects for reporting.
"""

from collections.abc import Sequence


class PbpoError(ValueError):
    """Base class for all engine errors."""


class NotALattice(PbpoError):
    """A pair of elements lacks a meet or a join."""

    def __init__(self, pair: tuple[str, ...], missing: str):
        """Record the pair and which bound ("meet" or "join") is missing."""
        super().__init__(f"no {missing} for {{{', '.join(pair)}}}")
        self.pair = pair
        self.missing = missing


class NotAPartialOrder(PbpoError):
    """The declared order contains a cycle."""

    def __init__(self, cycle: Sequence[str]):
        """Record the elements on the cycle."""
        super().__init__(f"order is not antisymmetric: {' < '.join(cycle)}")
        self.cycle = tuple(cycle)


class ReservedName(PbpoError):
    def __init__(self, name: str):
        """Record the reserved identifier that was used."""
        super().__init__(f"'{name}' is reserved for the bottom/top element")
        self.name = name


class UnknownElement(PbpoError):
    def __init__(self, element: str):
        """Record the identifier that is not a lattice element."""
        super().__init__(f"unknown lattice element '{element}'")
        self.element = element


class NotFlatLattice(PbpoError):
    pass


class LatticeMismatch(PbpoError):
    pass


class DanglingEdge(PbpoError):
    def __init__(self, edge: str, endpoint: str):
        """Record the edge and its missing endpoint."""
        super().__init__(
            f"edge '{edge}' refers to unknown vertex '{endpoint}'"
        )
        self.edge = edge
        self.endpoint = endpoint


class UnknownLabel(PbpoError):
    def __init__(self, element: str, label: str):
        """Record the element carrying a label outside the lattice."""
        super().__init__(f"'{element}' has unknown label '{label}'")
        self.element = element
        self.label = label


class NotAPremorphism(PbpoError):
    """An edge mapping does not commute with source or target."""

    def __init__(self, edge: str, reason: str = ""):
        """Record the offending edge."""
        message = f"edge '{edge}' is not mapped consistently"
        if reason:
            message += f": {reason}"
        super().__init__(message)
        self.edge = edge


class LabelDecrease(PbpoError):
    """An element is mapped onto an element with a smaller label."""

    def __init__(self, element: str, image: str, labels: tuple[str, str]):
        """Record the element, its image and both labels."""
        super().__init__(
            f"label of '{element}' ({labels[0]}) is not below "
            f"label of '{image}' ({labels[1]})"
        )
        self.element = element
        self.image = image
        self.labels = labels


class NotComposable(PbpoError):
    pass


class NotCommuting(PbpoError):
    def __init__(self, square: str):
        """Record a description of the square that fails to commute."""
        super().__init__(f"diagram does not commute: {square}")
        self.square = square


class Truncated(PbpoError):
    def __init__(self, size: int, cap: int):
        """Record the problem size and the cap it exceeded."""
        super().__init__(f"search over {size} elements exceeds cap of {cap}")
        self.size = size
        self.cap = cap


class NotAMatch(PbpoError):
    pass


class UniquenessViolation(PbpoError):
    def __init__(self, count: int):
        """Record how many candidate morphisms were found."""
        super().__init__(f"expected a unique u, found {count} candidates")
        self.count = count


class LemmaViolated(PbpoError):
    def __init__(self, name: str, detail: str = ""):
        """Record which property failed."""
        suffix = f": {detail}" if detail else ""
        super().__init__(f"{name} violated{suffix}")
        self.name = name
        self.detail = detail


class RuleInvalid(PbpoError):
    """A rule failed validation; `problems` lists every violation."""

    def __init__(self, problems: Sequence[object]):
        """Record the problems found."""
        super().__init__("; ".join(str(p) for p in problems))
        self.problems = tuple(problems)


class NotEpi(PbpoError):
    pass


class NotCanonical(PbpoError):
    pass


class ParseError(PbpoError):
    """Malformed input text, located by line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        """Record the message and its location."""
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class UnknownReference(ParseError):
    def __init__(self, kind: str, name: str, line: int = 0, column: int = 0):
        """Record the kind and name that could not be resolved."""
        super().__init__(f"unknown {kind} '{name}'", line, column)
        self.kind = kind
        self.name = name


class DuplicateName(ParseError):
    def __init__(self, kind: str, name: str, line: int = 0, column: int = 0):
        """Record the kind and name declared twice."""
        super().__init__(f"duplicate {kind} '{name}'", line, column)
        self.kind = kind
        self.name = name


class UnknownName(PbpoError):
    """A name looked up in a parsed workspace was never declared."""

    def __init__(self, kind: str, name: str):
        """Record the kind and name asked for."""
        super().__init__(f"no {kind} named '{name}'")
        self.kind = kind
        self.name = name
