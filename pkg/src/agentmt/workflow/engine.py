from __future__ import annotations

import graphlib
import itertools
import logging
import threading
import time
import uuid
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any, Mapping

from agentmt.agents import AgentRole, AgentSpec, TemplateError, language_name, render_prompt
from agentmt.backend import Backend, BackendError, ChatRequest, Message
from agentmt.corpus import RULES_BY_NAME, Document, SegmentationRules, segment_document
from agentmt.review import Dimension, ReviewError, ReviewReport, format_report, parse_review
from agentmt.workflow.spec import (
    DOCUMENT,
    SOURCE_SLOT,
    InputSlot,
    Topology,
    WorkflowError,
    WorkflowSpec,
    assemble_input,
    route,
)
from agentmt.workflow.trace import NodeRecord, RunTrace

log = logging.getLogger(__name__)

CHUNK_DELIMITER = "---"

_REVIEW_DIMENSION = {
    AgentRole.ADEQUACY_REVIEWER: Dimension.ADEQUACY,
    AgentRole.FLUENCY_REVIEWER: Dimension.FLUENCY,
}


class NodeFailed(WorkflowError):
    """A node call failed; ``cause`` is the underlying backend, template or parse error."""

    def __init__(self, node: str, cause: Exception):
        super().__init__(f"node {node!r} failed: {type(cause).__name__}: {cause}")
        self.node = node
        self.cause = cause


class EmptyOutput(WorkflowError):
    pass


@dataclass(frozen=True)
class TranslationResult:
    final_text: str
    draft_text: str
    trace: RunTrace
    adequacy_report: ReviewReport | None = None
    fluency_report: ReviewReport | None = None
    evaluator_reports: tuple[ReviewReport, ...] = ()
    converged: bool = True
    chunks: tuple[str, ...] = ()

    @property
    def flags(self) -> tuple[str, ...]:
        return () if self.converged else ("unconverged",)


@dataclass
class _Run:
    doc: Document
    backends: Mapping[str, Backend]
    pool: ThreadPoolExecutor
    trace: RunTrace
    bindings: dict[str, str]
    parse_mode: str = "strict"
    max_iterations: int | None = None
    _seq: itertools.count = field(default_factory=itertools.count)
    _seq_lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def source(self) -> str:
        return self.doc.text.strip()

    # ------------------------------------------------------------ node calls

    def submit(
        self, node: AgentSpec, user_input: str, call_key: str | None = None, iteration: int | None = None
    ) -> Future[str]:
        with self._seq_lock:
            seq = next(self._seq)
        return self.pool.submit(self._call, node, user_input, call_key or node.name, iteration, seq)

    def call(self, node: AgentSpec, user_input: str, call_key: str | None = None, iteration: int | None = None) -> str:
        return self.submit(node, user_input, call_key, iteration).result()

    def _call(self, node: AgentSpec, user_input: str, call_key: str, iteration: int | None, seq: int) -> str:
        try:
            system = render_prompt(
                node.template,
                {k: v for k, v in self.bindings.items() if k in node.template.placeholders},
            )
        except TemplateError as e:
            raise NodeFailed(node.name, e) from e
        request = ChatRequest(
            node.model_id,
            (Message("system", system), Message("user", user_input)),
            node.temperature,
            tag=node.name,
            call_key=call_key,
        )
        started = time.time()
        try:
            response = self.backends[node.backend_id].complete(request)
        except BackendError as e:
            raise NodeFailed(node.name, e) from e
        ended = time.time()
        self.trace.add(
            NodeRecord(
                node=node.name,
                call_key=call_key,
                role=node.role.value,
                rendered_system_prompt=system,
                user_input=user_input,
                output=response.content,
                usage=response.usage,
                started_at=started,
                ended_at=ended,
                attempts=response.attempts,
                iteration=iteration,
                seq=seq,
            )
        )
        return response.content

    def review(self, node: AgentSpec, output: str, dimension: Dimension | str) -> ReviewReport:
        try:
            report = parse_review(output, dimension, self.parse_mode)
        except ReviewError as e:
            raise NodeFailed(node.name, e) from e
        for w in report.warnings:
            log.warning("%s: %s", node.name, w)
        return report

    @staticmethod
    def nonempty(node: AgentSpec, text: str) -> str:
        if not text.strip():
            raise NodeFailed(node.name, EmptyOutput("empty output"))
        return text

    # ------------------------------------------------------------ topologies

    def run(self, spec: WorkflowSpec) -> TranslationResult:
        handler = {
            Topology.CHAIN: self._chain,
            Topology.PARALLEL_REVIEW: self._parallel_review,
            Topology.ROUTER: self._router,
            Topology.ORCHESTRATOR_WORKERS: self._orchestrator_workers,
            Topology.EVALUATOR_OPTIMIZER: self._evaluator_optimizer,
        }[spec.topology]
        return handler(spec)

    def _dag(self, spec: WorkflowSpec) -> tuple[dict[str, str], dict[str, ReviewReport]]:
        """Run every node once, each as soon as its predecessors are done.

        Reviewer outputs are parsed and passed downstream in canonical form.
        """
        values: dict[str, str] = {DOCUMENT: self.source}
        reports: dict[str, ReviewReport] = {}
        sorter = graphlib.TopologicalSorter(spec.predecessors())
        sorter.prepare()
        pending: dict[Future[str], AgentSpec] = {}
        while sorter.is_active():
            for name in sorter.get_ready():
                node = spec.node(name)
                pending[self.submit(node, assemble_input(spec.inputs[name], values))] = node
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for fut in sorted(done, key=lambda f: spec.order().index(pending[f].name)):
                node = pending.pop(fut)
                out = fut.result()
                if node.role in _REVIEW_DIMENSION:
                    report = self.review(node, out, _REVIEW_DIMENSION[node.role])
                    reports[node.name] = report
                    out = format_report(report)
                values[node.name] = out
                sorter.done(node.name)
        return values, reports

    def _chain(self, spec: WorkflowSpec) -> TranslationResult:
        values, _ = self._dag(spec)
        first, last = spec.nodes[0], spec.nodes[-1]
        return TranslationResult(self.nonempty(last, values[last.name]), values[first.name], self.trace)

    def _parallel_review(self, spec: WorkflowSpec) -> TranslationResult:
        values, reports = self._dag(spec)
        t = spec.by_role(AgentRole.TRANSLATOR)[0]
        ar = spec.by_role(AgentRole.ADEQUACY_REVIEWER)[0]
        fr = spec.by_role(AgentRole.FLUENCY_REVIEWER)[0]
        ed = spec.by_role(AgentRole.EDITOR)[0]
        return TranslationResult(
            self.nonempty(ed, values[ed.name]),
            values[t.name],
            self.trace,
            adequacy_report=reports[ar.name],
            fluency_report=reports[fr.name],
        )

    def _router(self, spec: WorkflowSpec) -> TranslationResult:
        target = route(spec.parameters["rules"], self.doc)
        self.trace.route = target
        log.info("routed %s to %s", self.doc.id, target)
        return self.run(spec.targets[target])

    def _chunks(self, spec: WorkflowSpec, orchestrator: AgentSpec) -> list[str]:
        if spec.parameters.get("mode", "deterministic") == "llm":
            out = self.call(orchestrator, self.source)
            chunks, current = [], []
            for line in out.splitlines():
                if line.strip() == CHUNK_DELIMITER:
                    chunks.append("\n".join(current).strip())
                    current = []
                else:
                    current.append(line)
            chunks.append("\n".join(current).strip())
            return [c for c in chunks if c]
        rules = spec.parameters.get("chunking", "paragraph")
        if not isinstance(rules, SegmentationRules):
            rules = RULES_BY_NAME[rules]
        return [s.text for s in segment_document(self.doc.text, rules)]

    def _orchestrator_workers(self, spec: WorkflowSpec) -> TranslationResult:
        orch = spec.by_role(AgentRole.ORCHESTRATOR)[0]
        worker = spec.by_role(AgentRole.WORKER)[0]
        ar = spec.by_role(AgentRole.ADEQUACY_REVIEWER)[0]
        fr = spec.by_role(AgentRole.FLUENCY_REVIEWER)[0]
        ed = spec.by_role(AgentRole.EDITOR)[0]
        chunks = self._chunks(spec, orch)
        if not chunks:
            raise WorkflowError(f"{spec.name}: document {self.doc.id!r} yields no chunks")
        futures = [self.submit(worker, c, f"{worker.name}[{i}]") for i, c in enumerate(chunks)]
        draft = "\n\n".join(f.result() for f in futures)

        values = {DOCUMENT: self.source, worker.name: draft}
        review_input = assemble_input((SOURCE_SLOT, InputSlot(worker.name, "Draft translation")), values)
        fa, ff = self.submit(ar, review_input), self.submit(fr, review_input)
        ra = self.review(ar, fa.result(), Dimension.ADEQUACY)
        rf = self.review(fr, ff.result(), Dimension.FLUENCY)
        values[ar.name], values[fr.name] = format_report(ra), format_report(rf)
        editor_input = assemble_input(
            (
                SOURCE_SLOT,
                InputSlot(worker.name, "Draft translation"),
                InputSlot(ar.name, "Adequacy review"),
                InputSlot(fr.name, "Fluency review"),
            ),
            values,
        )
        final = self.nonempty(ed, self.call(ed, editor_input))
        return TranslationResult(
            final, draft, self.trace, adequacy_report=ra, fluency_report=rf, chunks=tuple(chunks)
        )

    def _evaluator_optimizer(self, spec: WorkflowSpec) -> TranslationResult:
        gen = spec.by_role(AgentRole.GENERATOR)[0]
        ev = spec.by_role(AgentRole.EVALUATOR)[0]
        opt = spec.by_role(AgentRole.OPTIMIZER)[0]
        limit = self.max_iterations or int(spec.parameters.get("max_iterations", 3))
        if limit < 1:
            raise WorkflowError("max_iterations must be >= 1")
        dimension = spec.parameters.get("dimension", "adequacy")

        draft = current = self.nonempty(gen, self.call(gen, self.source))
        reports: list[ReviewReport] = []
        converged = False
        for i in range(1, limit + 1):
            self.trace.iterations = i
            values = {DOCUMENT: self.source, "current": current}
            out = self.call(
                ev,
                assemble_input((SOURCE_SLOT, InputSlot("current", "Translation")), values),
                f"{ev.name}[{i}]",
                i,
            )
            report = self.review(ev, out, dimension)
            reports.append(report)
            if report.clean:
                converged = True
                break
            values["evaluation"] = format_report(report)
            current = self.nonempty(
                opt,
                self.call(
                    opt,
                    assemble_input(
                        (
                            SOURCE_SLOT,
                            InputSlot("current", "Translation"),
                            InputSlot("evaluation", "Evaluation"),
                        ),
                        values,
                    ),
                    f"{opt.name}[{i}]",
                    i,
                ),
            )
        if not converged:
            log.warning("%s: no clean evaluation after %d iteration(s)", spec.name, limit)
        return TranslationResult(
            current, draft, self.trace, evaluator_reports=tuple(reports), converged=converged
        )


def language_bindings(doc: Document) -> dict[str, str]:
    return {
        "source language": language_name(doc.source_lang),
        "target language": language_name(doc.target_lang),
    }


def run(
    spec: WorkflowSpec,
    doc: Document,
    backends: Mapping[str, Backend],
    *,
    parse_mode: str = "strict",
    run_id: str | None = None,
    max_workers: int = 4,
    max_iterations: int | None = None,
    bindings: Mapping[str, str] | None = None,
) -> TranslationResult:
    """Execute ``spec`` on ``doc``.

    Independent nodes run concurrently on a thread pool of ``max_workers``.
    Extra template ``bindings`` (beyond the language pair) can come from the
    call or from a ``bindings`` entry in the spec parameters.
    """
    missing = sorted({n.backend_id for n in spec.all_nodes()} - set(backends))
    if missing:
        raise WorkflowError(f"unresolved backend ids: {', '.join(missing)}")
    pool_bindings: dict[str, Any] = language_bindings(doc)
    pool_bindings.update(spec.parameters.get("bindings", {}))
    pool_bindings.update(bindings or {})
    trace = RunTrace(run_id or uuid.uuid4().hex[:12])
    with ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="agentmt") as pool:
        runner = _Run(doc, backends, pool, trace, pool_bindings, parse_mode, max_iterations)
        try:
            result = runner.run(spec)
        finally:
            trace.finalize()
    return result
