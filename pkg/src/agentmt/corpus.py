"""Source documents, segmentation and corpus statistics."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "DEFAULT_RULES",
    "LINE_RULES",
    "PARAGRAPH_RULES",
    "DocStats",
    "Document",
    "Segment",
    "SegmentationRules",
    "compute_stats",
    "join_segments",
    "load_document",
    "segment_document",
    "stats_for_text",
    "tokenize",
    "type_token_ratio",
    "word_count",
]


@dataclass(frozen=True)
class SegmentationRules:
    """A named boundary regex; text is split wherever ``boundary`` matches."""

    name: str
    boundary: re.Pattern[str]

    @classmethod
    def from_regex(cls, pattern: str, name: str = "custom") -> SegmentationRules:
        return cls(name, re.compile(pattern))


# Sentence-final punctuation (optionally followed by a closing quote or bracket)
# then whitespace, or a blank line.
DEFAULT_RULES = SegmentationRules(
    "sentence",
    re.compile(r"\n[ \t]*\n\s*|(?<=[.!?])\s+|(?<=[.!?][\"'”’)\]])\s+"),
)
PARAGRAPH_RULES = SegmentationRules("paragraph", re.compile(r"\n[ \t]*\n\s*"))
LINE_RULES = SegmentationRules("line", re.compile(r"\s*\n\s*"))

RULES_BY_NAME = {r.name: r for r in (DEFAULT_RULES, PARAGRAPH_RULES, LINE_RULES)}


@dataclass(frozen=True)
class Segment:
    index: int
    text: str
    # Character offsets into the source text; text == source[start:end].
    start: int = 0
    end: int = 0

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"segment index must be non-negative, got {self.index}")
        if not self.text or self.text != self.text.strip():
            raise ValueError(f"segment text must be non-empty and trimmed: {self.text!r}")


@dataclass(frozen=True)
class DocStats:
    word_count: int
    segment_count: int
    type_token_ratio: float | None

    def to_dict(self) -> dict[str, int | float | None]:
        return {
            "word_count": self.word_count,
            "segment_count": self.segment_count,
            "type_token_ratio": self.type_token_ratio,
        }


def segment_document(text: str, rules: SegmentationRules = DEFAULT_RULES) -> list[Segment]:
    """Split ``text`` at every boundary match, dropping empty pieces.

    Each segment records its offsets so the gaps between segments (always
    boundary text) can be recovered from the original string.
    """
    segments: list[Segment] = []
    pos = 0
    for m in [*rules.boundary.finditer(text), None]:
        stop = m.start() if m is not None else len(text)
        piece = text[pos:stop]
        stripped = piece.strip()
        if stripped:
            lead = len(piece) - len(piece.lstrip())
            start = pos + lead
            segments.append(Segment(len(segments), stripped, start, start + len(stripped)))
        if m is not None:
            pos = m.end()
    return segments


def join_segments(segments: list[Segment]) -> str:
    """Join segments with paragraph breaks; re-segmenting the result is stable."""
    return "\n\n".join(s.text for s in segments)


def _strip_punct(run: str) -> str:
    start, end = 0, len(run)
    while start < end and unicodedata.category(run[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(run[end - 1]).startswith("P"):
        end -= 1
    return run[start:end]


def tokenize(text: str) -> list[str]:
    """Whitespace runs with surrounding punctuation removed; internal punctuation stays."""
    tokens = []
    for run in text.split():
        tok = _strip_punct(run)
        if tok:
            tokens.append(tok)
    return tokens


def word_count(text: str) -> int:
    return len(tokenize(text))


def type_token_ratio(text: str) -> float | None:
    """Distinct case-folded tokens over total tokens, or None for text with no tokens."""
    tokens = tokenize(text)
    if not tokens:
        return None
    return len({t.casefold() for t in tokens}) / len(tokens)


def stats_for_text(text: str, rules: SegmentationRules = DEFAULT_RULES) -> DocStats:
    return DocStats(word_count(text), len(segment_document(text, rules)), type_token_ratio(text))


@dataclass(frozen=True)
class Document:
    id: str
    source_lang: str
    target_lang: str
    text: str
    segments: tuple[Segment, ...] = field(default=())
    domain: str | None = None

    def __post_init__(self) -> None:
        if self.source_lang == self.target_lang:
            raise ValueError(f"source and target language are both {self.source_lang!r}")
        for i, seg in enumerate(self.segments):
            if seg.index != i:
                raise ValueError(f"segment indices must be contiguous from 0; got {seg.index} at {i}")

    @classmethod
    def from_text(
        cls,
        text: str,
        source_lang: str,
        target_lang: str,
        id: str = "doc",
        rules: SegmentationRules = DEFAULT_RULES,
        domain: str | None = None,
    ) -> Document:
        return cls(id, source_lang, target_lang, text, tuple(segment_document(text, rules)), domain)

    @property
    def word_count(self) -> int:
        return word_count(self.text)


def compute_stats(doc: Document) -> DocStats:
    return DocStats(word_count(doc.text), len(doc.segments), type_token_ratio(doc.text))


def load_document(
    path: str | Path,
    source_lang: str | None = None,
    target_lang: str | None = None,
    rules: SegmentationRules = DEFAULT_RULES,
) -> Document:
    """Read a UTF-8 text file plus an optional ``<stem>.json`` sidecar.

    The sidecar may carry ``id``, ``source_lang``, ``target_lang`` and
    ``domain``; explicit arguments win over sidecar values.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    meta: dict = {}
    sidecar = path.with_suffix(".json")
    if sidecar != path and sidecar.is_file():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    src = source_lang or meta.get("source_lang")
    tgt = target_lang or meta.get("target_lang")
    if not src or not tgt:
        raise ValueError(f"language pair for {path} not given and no sidecar supplies it")
    return Document.from_text(
        text, src, tgt, id=meta.get("id", path.stem), rules=rules, domain=meta.get("domain")
    )
