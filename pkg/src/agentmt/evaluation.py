"""Aggregation of segment-level human judgments: means, rank histograms, orderings."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Hashable, Iterable, Literal, Mapping

__all__ = [
    "COLUMNS",
    "EvalDataset",
    "EvalError",
    "EvalParseError",
    "EvaluationRecord",
    "GridError",
    "ScaleError",
    "SystemSummary",
    "assign_ranks",
    "emit_report",
    "load_records",
    "parse_records",
    "rank_histograms",
    "round2",
    "summarize",
    "total_words",
]

COLUMNS = ("segment_id", "system_id", "adequacy", "fluency", "rank", "word_count")
SCALE = (1, 4)


class EvalError(ValueError):
    kind = "validation"

    def __init__(self, message: str, rows: list[str] | None = None):
        self.rows = rows or []
        detail = "".join(f"\n  {r}" for r in self.rows)
        super().__init__(message + detail)


class EvalParseError(EvalError):
    kind = "parse"


class ScaleError(EvalError):
    kind = "scale"


class GridError(EvalError):
    kind = "grid"


@dataclass(frozen=True)
class EvaluationRecord:
    segment_id: str
    system_id: str
    adequacy: int
    fluency: int
    rank: int
    word_count: int = 0

    def problems(self) -> list[str]:
        lo, hi = SCALE
        out = []
        if not lo <= self.adequacy <= hi:
            out.append(f"adequacy {self.adequacy} outside [{lo}, {hi}]")
        if not lo <= self.fluency <= hi:
            out.append(f"fluency {self.fluency} outside [{lo}, {hi}]")
        if self.rank < 1:
            out.append(f"rank {self.rank} < 1")
        if self.word_count < 0:
            out.append(f"word_count {self.word_count} < 0")
        return out


@dataclass(frozen=True)
class EvalDataset:
    records: tuple[EvaluationRecord, ...]
    systems: tuple[str, ...] = field(init=False)
    segments: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "systems", tuple(dict.fromkeys(r.system_id for r in self.records)))
        object.__setattr__(self, "segments", tuple(dict.fromkeys(r.segment_id for r in self.records)))
        bad = [f"{r.segment_id}/{r.system_id}: {'; '.join(p)}" for r in self.records if (p := r.problems())]
        if bad:
            raise ScaleError(f"{len(bad)} record(s) violate the score scales", bad)
        cells = Counter((r.segment_id, r.system_id) for r in self.records)
        dupes = [f"{seg}/{sys}: {n} records" for (seg, sys), n in cells.items() if n > 1]
        missing = [
            f"{seg}/{sys}: missing"
            for seg in self.segments
            for sys in self.systems
            if (seg, sys) not in cells
        ]
        if dupes or missing:
            raise GridError("dataset is not a complete segment x system grid", dupes + missing)

    def for_system(self, system_id: str) -> list[EvaluationRecord]:
        return [r for r in self.records if r.system_id == system_id]


def _int(value: str, column: str, line: int) -> int:
    try:
        return int(value.strip())
    except (AttributeError, ValueError):
        raise EvalParseError(f"line {line}: column {column!r} is not an integer: {value!r}") from None


def parse_records(text: str, source: str = "<records>") -> EvalDataset:
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise EvalParseError(f"{source}: missing column(s): {', '.join(missing)}")
    records = []
    bad = []
    for row in reader:
        line = reader.line_num
        if None in row or any(row[c] is None for c in COLUMNS):
            raise EvalParseError(f"{source}: line {line}: wrong number of fields")
        rec = EvaluationRecord(
            row["segment_id"].strip(),
            row["system_id"].strip(),
            *(_int(row[c], c, line) for c in COLUMNS[2:]),
        )
        if problems := rec.problems():
            bad.append(f"line {line} ({rec.segment_id}/{rec.system_id}): {'; '.join(problems)}")
        records.append(rec)
    if bad:
        raise ScaleError(f"{source}: {len(bad)} row(s) violate the score scales", bad)
    return EvalDataset(tuple(records))


def load_records(path: str | Path) -> EvalDataset:
    """Read a CSV with header ``segment_id,system_id,adequacy,fluency,rank,word_count``."""
    path = Path(path)
    return parse_records(path.read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class SystemSummary:
    system_id: str
    mean_adequacy: Fraction
    mean_fluency: Fraction
    rank_histogram: dict[int, int]

    @property
    def combined_average(self) -> Fraction:
        return (self.mean_adequacy + self.mean_fluency) / 2

    @property
    def first_place_count(self) -> int:
        return self.rank_histogram.get(1, 0)


def rank_histograms(dataset: EvalDataset) -> dict[str, dict[int, int]]:
    hist: dict[str, Counter[int]] = {s: Counter() for s in dataset.systems}
    for r in dataset.records:
        hist[r.system_id][r.rank] += 1
    return {s: dict(sorted(c.items())) for s, c in hist.items()}


def summarize(dataset: EvalDataset) -> list[SystemSummary]:
    """Per-system exact means, best combined average first, ties by system id."""
    hists = rank_histograms(dataset)
    out = []
    for system in dataset.systems:
        recs = dataset.for_system(system)
        n = len(recs)
        out.append(
            SystemSummary(
                system,
                Fraction(sum(r.adequacy for r in recs), n),
                Fraction(sum(r.fluency for r in recs), n),
                hists[system],
            )
        )
    out.sort(key=lambda s: s.system_id)
    out.sort(key=lambda s: s.combined_average, reverse=True)
    return out


def assign_ranks(
    scores: Mapping[Hashable, Any],
    mode: Literal["dense", "competition"] = "dense",
    higher_is_better: bool = True,
) -> dict[Hashable, int]:
    """Tie-aware ranks; dense gives 1,1,2 and competition gives 1,1,3."""
    if not scores:
        raise ValueError("cannot rank an empty score map")
    if mode not in ("dense", "competition"):
        raise ValueError(f"unknown ranking mode {mode!r}")
    levels = sorted(set(scores.values()), reverse=higher_is_better)
    if mode == "dense":
        rank_of = {v: i + 1 for i, v in enumerate(levels)}
    else:
        rank_of, seen = {}, 0
        counts = Counter(scores.values())
        for v in levels:
            rank_of[v] = seen + 1
            seen += counts[v]
    return {k: rank_of[v] for k, v in scores.items()}


def total_words(dataset: EvalDataset) -> int:
    return sum(r.word_count for r in dataset.records)


def round2(x: Fraction) -> str:
    """Two-decimal string, half away from zero, computed exactly."""
    scaled = x * 100
    n = math.floor(abs(scaled) + Fraction(1, 2))
    sign = "-" if scaled < 0 and n else ""
    return f"{sign}{n // 100}.{n % 100:02d}"


def _ranks(histograms: Mapping[str, Mapping[int, int]]) -> list[int]:
    return sorted({k for h in histograms.values() for k in h})


def report_data(
    summaries: Iterable[SystemSummary], histograms: Mapping[str, Mapping[int, int]]
) -> dict[str, Any]:
    return {
        "systems": [
            {
                "system_id": s.system_id,
                "mean_adequacy": float(s.mean_adequacy),
                "mean_fluency": float(s.mean_fluency),
                "combined_average": float(s.combined_average),
                "first_place_count": histograms.get(s.system_id, {}).get(1, 0),
                "rank_histogram": {str(k): v for k, v in sorted(histograms.get(s.system_id, {}).items())},
            }
            for s in summaries
        ]
    }


def emit_report(
    summaries: list[SystemSummary],
    histograms: Mapping[str, Mapping[int, int]],
    format: Literal["text", "json", "csv"] = "text",
    words: int | None = None,
) -> str:
    """Render systems in the given order; ``words`` adds a words-evaluated total."""
    if format == "json":
        data = report_data(summaries, histograms)
        if words is not None:
            data["total_words"] = words
        return json.dumps(data, indent=2) + "\n"
    ranks = _ranks(histograms)
    header = ["system", "adequacy", "fluency", "combined", "first_place", *(f"rank_{r}" for r in ranks)]
    rows = []
    for s in summaries:
        h = histograms.get(s.system_id, {})
        rows.append(
            [
                s.system_id,
                round2(s.mean_adequacy),
                round2(s.mean_fluency),
                round2(s.combined_average),
                str(h.get(1, 0)),
                *(str(h.get(r, 0)) for r in ranks),
            ]
        )
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if format == "text":
        widths = [max(len(c) for c in col) for col in zip(header, *rows)]
        lines = []
        for i, row in enumerate([header, *rows]):
            cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        if words is not None:
            lines += ["", f"words evaluated: {words}"]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
