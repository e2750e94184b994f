"""Exception hierarchy for povm-ascent."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .model import ValidationReport


class PovmAscentError(Exception):
    """Base class for every error raised by povm-ascent."""


class NotHermitian(PovmAscentError, ValueError):
    """A matrix that must be hermitian is not, beyond tolerance."""


class NotPSD(PovmAscentError, ValueError):
    """A matrix that must be positive semidefinite has a negative eigenvalue."""


class RankDeficient(PovmAscentError, ArithmeticError):
    """The completeness operator S cannot be inverted."""


class DimensionMismatch(PovmAscentError, ValueError):
    """Matrix dimensions disagree."""


class EmptyPovm(PovmAscentError, ValueError):
    """Every outcome of a POVM was dropped."""


class ConfigError(PovmAscentError, ValueError):
    """An optimizer setting is out of range."""


class InvalidEnsemble(PovmAscentError, ValueError):
    """An ensemble failed validation; ``report`` lists every violation."""

    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        lines = "; ".join(v.message for v in report.violations)
        super().__init__(f"Invalid ensemble: {lines}")


class ParseError(PovmAscentError, ValueError):
    """Malformed import text.

    ``line`` is 1-based, ``offset`` is the 0-based byte offset within the
    line (or token when no line is known).
    """

    def __init__(self, reason: str, line: int | None = None, offset: int | None = None) -> None:
        self.reason = reason
        self.line = line
        self.offset = offset
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{reason}")


class CountMismatch(ParseError):
    """The import file holds a different number of matrices than its header says."""
