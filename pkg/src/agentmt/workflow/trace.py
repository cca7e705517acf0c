from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable

from agentmt.backend import Usage


@dataclass(frozen=True)
class NodeRecord:
    node: str
    call_key: str
    role: str
    rendered_system_prompt: str
    user_input: str
    output: str
    usage: Usage
    started_at: float
    ended_at: float
    attempts: int = 1
    iteration: int | None = None
    # Position in submission order; parallel calls may finish in any order.
    seq: int = 0

    @property
    def duration(self) -> float:
        return self.ended_at - self.started_at

    def to_dict(self, timestamps: bool = True) -> dict[str, Any]:
        return {
            "type": "call",
            "seq": self.seq,
            "node": self.node,
            "call_key": self.call_key,
            "role": self.role,
            "iteration": self.iteration,
            "rendered_system_prompt": self.rendered_system_prompt,
            "user_input": self.user_input,
            "output": self.output,
            "usage": self.usage.to_dict(),
            "attempts": self.attempts,
            "started_at": self.started_at if timestamps else None,
            "ended_at": self.ended_at if timestamps else None,
        }

    def fingerprint(self) -> str:
        """Canonical form without timing, for comparing runs."""
        return json.dumps(self.to_dict(timestamps=False), sort_keys=True, ensure_ascii=False)


@dataclass
class RunTrace:
    run_id: str
    records: list[NodeRecord] = field(default_factory=list)
    iterations: int = 0
    route: str | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, record: NodeRecord) -> None:
        with self._lock:
            self.records.append(record)

    def finalize(self) -> None:
        """Put records in submission order, which is a valid execution order."""
        with self._lock:
            self.records.sort(key=lambda r: r.seq)

    @property
    def total_usage(self) -> Usage:
        total = Usage()
        for r in self.records:
            total = total + r.usage
        return total

    def calls_to(self, node: str) -> list[NodeRecord]:
        return [r for r in self.records if r.node == node]


@dataclass(frozen=True)
class TraceSummary:
    per_node: dict[str, Usage]
    total: Usage
    wall_time: float
    iterations: int
    calls: int

    @property
    def estimated(self) -> bool:
        return self.total.estimated

    def to_dict(self, timestamps: bool = True) -> dict[str, Any]:
        return {
            "type": "summary",
            "per_node": {k: v.to_dict() | {"total_tokens": v.total_tokens} for k, v in self.per_node.items()},
            "total": self.total.to_dict() | {"total_tokens": self.total.total_tokens},
            "estimated": self.estimated,
            "calls": self.calls,
            "iterations": self.iterations,
            "wall_time": self.wall_time if timestamps else None,
        }


def trace_summary(trace: RunTrace) -> TraceSummary:
    per_node: dict[str, Usage] = {}
    for r in trace.records:
        per_node[r.node] = per_node.get(r.node, Usage()) + r.usage
    if trace.records:
        wall = max(r.ended_at for r in trace.records) - min(r.started_at for r in trace.records)
    else:
        wall = 0.0
    return TraceSummary(per_node, trace.total_usage, wall, trace.iterations, len(trace.records))


def trace_lines(
    trace: RunTrace, timestamps: bool = True, extra: Iterable[dict[str, Any]] = ()
) -> list[str]:
    """JSON-lines rendering: one line per call, then the summary line."""
    lines = [json.dumps(r.to_dict(timestamps), ensure_ascii=False) for r in trace.records]
    summary = trace_summary(trace).to_dict(timestamps)
    summary["run_id"] = trace.run_id
    summary["route"] = trace.route
    lines.append(json.dumps(summary, ensure_ascii=False))
    lines.extend(json.dumps(e, ensure_ascii=False) for e in extra)
    return lines
