import enum
import logging
import os

import click
import dotenv

from pbpoplus.matching import MatchPolicy
from pbpoplus.rewrite import Semantics

dotenv.load_dotenv()

CHECK_ENV_VAR = "PBPO_CHECK"


class ExitCode(enum.IntEnum):
    OK = 0
    NO_MATCH = 1
    INVALID = 2
    PARSE_ERROR = 3


class ValueChoice(click.Choice):
    """Choose an enum member by its value rather than its name."""

    def __init__(self, enum_type: type[enum.Enum]):
        """Offer the values of `enum_type`."""
        super().__init__([m.value for m in enum_type], case_sensitive=False)
        self.enum_type = enum_type

    def convert(self, value, param, ctx):
        """Return the enum member whose value was given."""
        if isinstance(value, self.enum_type):
            return value
        return self.enum_type(super().convert(value, param, ctx))


SemanticsChoice = ValueChoice(Semantics)
PolicyChoice = ValueChoice(MatchPolicy)


def getLoggingLevel(default_level: int) -> int:
    env_level = os.getenv("LOG_LEVEL")
    if env_level is None:
        return default_level
    return logging.getLevelNamesMapping()[env_level.upper()]


def getCheckDefault(default: bool) -> bool:
    """Read PBPO_CHECK, which must be 0 or 1 when set."""
    env_check = os.getenv(CHECK_ENV_VAR)
    if env_check is None:
        return default
    match env_check.strip():
        case "1":
            return True
        case "0":
            return False
        case value:
            raise ValueError(
                f"Cannot parse {CHECK_ENV_VAR}={value!r}. "
                "Please set it to 0 or 1."
            )
