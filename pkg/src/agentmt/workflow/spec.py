from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Mapping, Sequence

from agentmt.agents import AgentRole, AgentSpec
from agentmt.corpus import Document

DOCUMENT = "document"


class Topology(str, Enum):
    CHAIN = "chain"
    ROUTER = "router"
    PARALLEL_REVIEW = "parallel_review"
    ORCHESTRATOR_WORKERS = "orchestrator_workers"
    EVALUATOR_OPTIMIZER = "evaluator_optimizer"


class WorkflowError(ValueError):
    pass


@dataclass(frozen=True)
class InputSlot:
    """One piece of a node's user message.

    ``source`` is ``"document"`` or the name of an upstream node. A slot with
    no label is inserted bare; labelled slots get a ``## label`` heading.
    """

    source: str
    label: str | None = None


# Fixed input assembly: source text, then draft, then adequacy, then fluency.
SOURCE_SLOT = InputSlot(DOCUMENT, "Source text")


def assemble_input(slots: Sequence[InputSlot], values: Mapping[str, str]) -> str:
    if len(slots) == 1 and slots[0].label is None:
        return values[slots[0].source]
    parts = []
    for slot in slots:
        value = values[slot.source]
        parts.append(f"## {slot.label}\n{value}" if slot.label else value)
    return "\n\n".join(parts)


@dataclass(frozen=True)
class RoutingRule:
    """Dispatch rule; unset criteria match anything.

    ``max_words`` is exclusive, ``min_words`` inclusive. A rule with no
    criteria is a catch-all.
    """

    target: str
    priority: int = 0
    source_lang: str | None = None
    target_lang: str | None = None
    domain: str | None = None
    min_words: int | None = None
    max_words: int | None = None

    @property
    def is_default(self) -> bool:
        return all(
            v is None
            for v in (self.source_lang, self.target_lang, self.domain, self.min_words, self.max_words)
        )

    def matches(self, doc: Document) -> bool:
        if self.source_lang is not None and doc.source_lang != self.source_lang:
            return False
        if self.target_lang is not None and doc.target_lang != self.target_lang:
            return False
        if self.domain is not None and doc.domain != self.domain:
            return False
        if self.min_words is not None or self.max_words is not None:
            n = doc.word_count
            if self.min_words is not None and n < self.min_words:
                return False
            if self.max_words is not None and n >= self.max_words:
                return False
        return True

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RoutingRule:
        when = data.get("when", {})
        return cls(
            target=data["target"],
            priority=int(data.get("priority", 0)),
            source_lang=when.get("source_lang"),
            target_lang=when.get("target_lang"),
            domain=when.get("domain"),
            min_words=when.get("min_words"),
            max_words=when.get("max_words"),
        )

    def to_dict(self) -> dict[str, Any]:
        when = {
            k: v
            for k in ("source_lang", "target_lang", "domain", "min_words", "max_words")
            if (v := getattr(self, k)) is not None
        }
        return {"target": self.target, "priority": self.priority, "when": when}


def check_rules(rules: Sequence[RoutingRule]) -> None:
    defaults = [r for r in rules if r.is_default]
    if not defaults:
        raise WorkflowError("routing rules need a catch-all default rule")
    floor = min(r.priority for r in rules)
    if all(r.priority > floor for r in defaults):
        raise WorkflowError("the catch-all rule must have the lowest priority")


def route(rules: Sequence[RoutingRule], doc: Document) -> str:
    """Target of the highest-priority matching rule; earlier rules win ties."""
    check_rules(rules)
    best: RoutingRule | None = None
    for rule in rules:
        if rule.matches(doc) and (best is None or rule.priority > best.priority):
            best = rule
    assert best is not None  # a catch-all always matches
    return best.target


@dataclass(frozen=True)
class WorkflowSpec:
    name: str
    topology: Topology
    nodes: tuple[AgentSpec, ...]
    edges: tuple[tuple[str, str], ...] = ()
    inputs: Mapping[str, tuple[InputSlot, ...]] = field(default_factory=dict)
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", MappingProxyType(dict(self.inputs)))
        object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))
        names = [n.name for n in self.nodes]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise WorkflowError(f"duplicate node names: {', '.join(dupes)}")
        known = set(names)
        for a, b in self.edges:
            for end in (a, b):
                if end not in known:
                    raise WorkflowError(f"edge {a} -> {b} references unknown node {end!r}")
        self.order()  # raises on cycles
        ancestors = self.ancestors()
        for node, slots in self.inputs.items():
            if node not in known:
                raise WorkflowError(f"inputs declared for unknown node {node!r}")
            for slot in slots:
                if slot.source != DOCUMENT and slot.source not in ancestors[node]:
                    raise WorkflowError(f"node {node!r} reads {slot.source!r}, which is not an ancestor")

    def node(self, name: str) -> AgentSpec:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    def by_role(self, role: AgentRole) -> list[AgentSpec]:
        return [n for n in self.nodes if n.role == role]

    def predecessors(self) -> dict[str, set[str]]:
        preds: dict[str, set[str]] = {n.name: set() for n in self.nodes}
        for a, b in self.edges:
            preds[b].add(a)
        return preds

    def order(self) -> list[str]:
        try:
            return list(graphlib.TopologicalSorter(self.predecessors()).static_order())
        except graphlib.CycleError as e:
            raise WorkflowError(f"edges contain a cycle: {' -> '.join(e.args[1])}") from None

    def ancestors(self) -> dict[str, set[str]]:
        preds = self.predecessors()
        out: dict[str, set[str]] = {}
        for name in self.order():
            acc: set[str] = set()
            for p in preds[name]:
                acc |= {p} | out[p]
            out[name] = acc
        return out

    @property
    def targets(self) -> Mapping[str, WorkflowSpec]:
        return self.parameters.get("workflows", {})

    def all_nodes(self) -> list[AgentSpec]:
        """Nodes of this spec and, for routers, of every target."""
        nodes = list(self.nodes)
        for sub in self.targets.values():
            nodes.extend(sub.all_nodes())
        return nodes


# --------------------------------------------------------------------------- builders


def _single(agents: Sequence[AgentSpec], role: AgentRole) -> AgentSpec:
    found = [a for a in agents if a.role == role]
    if len(found) != 1:
        what = "missing" if not found else "duplicate"
        raise WorkflowError(f"{what} {role.value} agent")
    return found[0]


def build_parallel_review_pipeline(
    agents: Sequence[AgentSpec], name: str = "parallel-review", **parameters: Any
) -> WorkflowSpec:
    """Translator, then both reviewers side by side on (source, draft), then the editor."""
    t = _single(agents, AgentRole.TRANSLATOR)
    ar = _single(agents, AgentRole.ADEQUACY_REVIEWER)
    fr = _single(agents, AgentRole.FLUENCY_REVIEWER)
    ed = _single(agents, AgentRole.EDITOR)
    if len(agents) != 4:
        raise WorkflowError(f"parallel review takes exactly 4 agents, got {len(agents)}")
    draft = InputSlot(t.name, "Draft translation")
    review_input = (SOURCE_SLOT, draft)
    return WorkflowSpec(
        name,
        Topology.PARALLEL_REVIEW,
        (t, ar, fr, ed),
        ((t.name, ar.name), (t.name, fr.name), (ar.name, ed.name), (fr.name, ed.name)),
        {
            t.name: (InputSlot(DOCUMENT),),
            ar.name: review_input,
            fr.name: review_input,
            ed.name: (
                SOURCE_SLOT,
                draft,
                InputSlot(ar.name, "Adequacy review"),
                InputSlot(fr.name, "Fluency review"),
            ),
        },
        parameters,
    )


def build_prompt_chain(
    agents: Sequence[AgentSpec], name: str = "chain", **parameters: Any
) -> WorkflowSpec:
    """Linear chain: the document feeds the first agent, each output feeds the next."""
    if not agents:
        raise WorkflowError("a prompt chain needs at least one agent")
    names = [a.name for a in agents]
    inputs = {names[0]: (InputSlot(DOCUMENT),)}
    inputs.update({b: (InputSlot(a),) for a, b in zip(names, names[1:])})
    return WorkflowSpec(
        name, Topology.CHAIN, tuple(agents), tuple(zip(names, names[1:])), inputs, parameters
    )


def build_router(
    rules: Sequence[RoutingRule], workflows: Mapping[str, WorkflowSpec], name: str = "router"
) -> WorkflowSpec:
    check_rules(rules)
    for r in rules:
        if r.target not in workflows:
            raise WorkflowError(f"routing rule targets unknown workflow {r.target!r}")
    return WorkflowSpec(
        name, Topology.ROUTER, (), parameters={"rules": tuple(rules), "workflows": dict(workflows)}
    )


def build_orchestrator_workers(
    orchestrator: AgentSpec,
    worker_template: AgentSpec,
    reviewers: Sequence[AgentSpec],
    editor: AgentSpec,
    chunking: str = "paragraph",
    mode: str = "deterministic",
    name: str = "orchestrator-workers",
) -> WorkflowSpec:
    """Static part of the orchestrator-workers topology.

    The worker node stands for the whole fan-out: the engine invokes
    ``worker_template`` once per chunk and records each call as ``<worker>[i]``.
    """
    agents = [orchestrator, worker_template, *reviewers, editor]
    for a, role in (
        (orchestrator, AgentRole.ORCHESTRATOR),
        (worker_template, AgentRole.WORKER),
        (editor, AgentRole.EDITOR),
    ):
        if a.role != role:
            raise WorkflowError(f"agent {a.name!r} should have role {role.value}, has {a.role.value}")
    _single(reviewers, AgentRole.ADEQUACY_REVIEWER)
    _single(reviewers, AgentRole.FLUENCY_REVIEWER)
    if len(reviewers) != 2:
        raise WorkflowError("orchestrator-workers takes exactly two reviewers")
    if mode not in ("deterministic", "llm"):
        raise WorkflowError(f"unknown chunking mode {mode!r}")
    ar = _single(reviewers, AgentRole.ADEQUACY_REVIEWER)
    fr = _single(reviewers, AgentRole.FLUENCY_REVIEWER)
    o, w, e = orchestrator.name, worker_template.name, editor.name
    return WorkflowSpec(
        name,
        Topology.ORCHESTRATOR_WORKERS,
        tuple(agents),
        ((o, w), (w, ar.name), (w, fr.name), (ar.name, e), (fr.name, e)),
        parameters={"chunking": chunking, "mode": mode},
    )


def build_evaluator_optimizer(
    generator: AgentSpec,
    evaluator: AgentSpec,
    optimizer: AgentSpec,
    max_iterations: int = 3,
    dimension: str = "adequacy",
    name: str = "evaluator-optimizer",
) -> WorkflowSpec:
    """Generator once, then evaluate/revise until clean or ``max_iterations`` evaluations.

    The feedback loop is a parameter, not a graph cycle.
    """
    if max_iterations < 1:
        raise WorkflowError("max_iterations must be >= 1")
    for a, role in (
        (generator, AgentRole.GENERATOR),
        (evaluator, AgentRole.EVALUATOR),
        (optimizer, AgentRole.OPTIMIZER),
    ):
        if a.role != role:
            raise WorkflowError(f"agent {a.name!r} should have role {role.value}, has {a.role.value}")
    return WorkflowSpec(
        name,
        Topology.EVALUATOR_OPTIMIZER,
        (generator, evaluator, optimizer),
        ((generator.name, evaluator.name), (evaluator.name, optimizer.name)),
        parameters={"max_iterations": max_iterations, "dimension": dimension},
    )
