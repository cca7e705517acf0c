"""Reviewer output grammar: ``- ERROR: … → SUGGESTION: …`` bullets or a no-corrections sentinel."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Literal

__all__ = [
    "SENTINELS",
    "Dimension",
    "EmptyReport",
    "FormatError",
    "ReviewError",
    "ReviewReport",
    "Suggestion",
    "format_report",
    "parse_review",
]

Mode = Literal["strict", "lenient"]


class Dimension(str, Enum):
    ADEQUACY = "adequacy"
    FLUENCY = "fluency"


# The adequacy reviewer's sentinel says "Accuracy", as its instruction does.
SENTINELS = {
    Dimension.ADEQUACY: "Accuracy: No corrections needed",
    Dimension.FLUENCY: "Fluency: No corrections needed",
}

ARROW = "→"
_SEPARATOR = re.compile(r"\s*(?:→|->)\s*SUGGESTION:")
_LINE = re.compile(
    r"^(?:[-*•]\s*)?ERROR:\s*(?P<error>.+?)\s*(?:→|->)\s*SUGGESTION:\s*(?P<fix>.+?)\s*$"
)


class ReviewError(ValueError):
    pass


class FormatError(ReviewError):
    def __init__(self, line_no: int, line: str, reason: str = "matches neither sentinel nor suggestion grammar"):
        super().__init__(f"line {line_no}: {reason}: {line!r}")
        self.line_no = line_no
        self.line = line


class EmptyReport(ReviewError):
    pass


def _single_line(s: str) -> bool:
    return len(s.splitlines()) == 1 and "\n" not in s


@dataclass(frozen=True)
class Suggestion:
    error_text: str
    fix_text: str

    def __post_init__(self) -> None:
        for name, value in (("error_text", self.error_text), ("fix_text", self.fix_text)):
            if not value or value != value.strip() or not _single_line(value):
                raise ValueError(f"{name} must be a non-empty trimmed single line: {value!r}")
        if self.error_text in SENTINELS.values():
            raise ValueError("error_text cannot be a sentinel phrase")
        if _SEPARATOR.search(self.error_text):
            raise ValueError("error_text cannot contain the SUGGESTION separator")

    def to_line(self) -> str:
        return f"- ERROR: {self.error_text} {ARROW} SUGGESTION: {self.fix_text}"

    def to_dict(self) -> dict[str, str]:
        return {"error": self.error_text, "fix": self.fix_text}


@dataclass(frozen=True)
class ReviewReport:
    dimension: Dimension
    suggestions: tuple[Suggestion, ...]
    clean: bool
    raw: str = ""
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.clean and self.suggestions:
            raise ValueError("a clean report cannot carry suggestions")
        if not self.clean and not self.suggestions:
            raise ValueError("a report with no suggestions must be clean")

    @classmethod
    def clean_report(cls, dimension: Dimension | str) -> ReviewReport:
        dimension = Dimension(dimension)
        return cls(dimension, (), True, SENTINELS[dimension])

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension.value,
            "clean": self.clean,
            "suggestions": [s.to_dict() for s in self.suggestions],
            "warnings": list(self.warnings),
        }


def parse_review(raw: str, dimension: Dimension | str, mode: Mode = "strict") -> ReviewReport:
    """Parse one reviewer reply.

    Strict mode raises ``FormatError`` on the first line that is neither the
    dimension's sentinel nor a suggestion, and on a reply mixing the two.
    Lenient mode keeps whatever parses and records the rest as warnings.
    """
    dimension = Dimension(dimension)
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown parse mode {mode!r}")
    sentinel = SENTINELS[dimension]
    suggestions: list[Suggestion] = []
    warnings: list[str] = []
    sentinel_line: int | None = None

    for line_no, line in enumerate(raw.splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        if text == sentinel:
            if sentinel_line is None:
                sentinel_line = line_no
            continue
        m = _LINE.match(text)
        if m is not None:
            try:
                suggestions.append(Suggestion(m.group("error"), m.group("fix")))
                continue
            except ValueError:
                pass
        if mode == "strict":
            raise FormatError(line_no, line)
        warnings.append(f"line {line_no}: unparsed: {text}")

    if sentinel_line is not None and suggestions:
        if mode == "strict":
            raise FormatError(sentinel_line, sentinel, "sentinel mixed with suggestions")
        warnings.append(f"line {sentinel_line}: sentinel ignored alongside suggestions")
    if suggestions:
        return ReviewReport(dimension, tuple(suggestions), False, raw, tuple(warnings))
    if sentinel_line is not None:
        return ReviewReport(dimension, (), True, raw, tuple(warnings))
    raise EmptyReport(f"{dimension.value} review has neither a sentinel nor any suggestion")


def format_report(report: ReviewReport) -> str:
    if report.clean:
        return SENTINELS[report.dimension]
    return "\n".join(s.to_line() for s in report.suggestions)
