from __future__ import annotations

import json
from pathlib import Path

from agentmt.agents import AgentRole, AgentSpec, PromptTemplate
from agentmt.backend import ScriptedBackend


def inline_agent(name: str, role: AgentRole, body: str = "Act as [target language] {role}.") -> AgentSpec:
    return AgentSpec(name, role, PromptTemplate.inline(role, body.replace("{role}", role.value)), "m", 0.7)


def scripted(**responses: str | list[str]) -> ScriptedBackend:
    return ScriptedBackend.from_data(
        [{"key": k, "responses": v if isinstance(v, list) else [v]} for k, v in responses.items()]
    )


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, ensure_ascii=False), encoding="utf-8")
    return path


def pilot_script(draft: str = "D", adequacy: str = "- ERROR: a1 → SUGGESTION: s1", fluency: str = "- ERROR: f1 → SUGGESTION: s2", final: str = "F") -> ScriptedBackend:
    return scripted(translator=draft, adequacy=adequacy, fluency=fluency, editor=final)


def topology_cases():
    """(label, spec, backend factory, document) for one scripted run of every topology."""
    from agentmt.agents import pilot_agent_set
    from agentmt.corpus import Document
    from agentmt.workflow import (
        RoutingRule,
        build_evaluator_optimizer,
        build_orchestrator_workers,
        build_parallel_review_pipeline,
        build_prompt_chain,
        build_router,
    )

    doc = Document.from_text("Clause one applies.\n\nClause two applies.", "en", "es", id="d")
    pilot = build_parallel_review_pipeline(pilot_agent_set("Big13_05"))
    chain = build_prompt_chain([inline_agent(n, AgentRole.TRANSLATOR) for n in ("a", "b", "c")])
    ow = build_orchestrator_workers(
        inline_agent("orchestrator", AgentRole.ORCHESTRATOR),
        inline_agent("worker", AgentRole.WORKER),
        [inline_agent("adequacy", AgentRole.ADEQUACY_REVIEWER), inline_agent("fluency", AgentRole.FLUENCY_REVIEWER)],
        inline_agent("editor", AgentRole.EDITOR),
    )
    eo = build_evaluator_optimizer(
        inline_agent("generator", AgentRole.GENERATOR),
        inline_agent("evaluator", AgentRole.EVALUATOR),
        inline_agent("optimizer", AgentRole.OPTIMIZER),
        max_iterations=5,
    )
    router = build_router(
        [RoutingRule("pilot", priority=1, source_lang="en"), RoutingRule("chain")],
        {"pilot": pilot, "chain": chain},
    )
    dirty = "- ERROR: x → SUGGESTION: y"
    return [
        ("parallel_review", pilot, lambda: pilot_script(), doc),
        ("chain", chain, lambda: scripted(a="A", b="B", c="C"), doc),
        ("router", router, lambda: pilot_script(), doc),
        (
            "orchestrator_workers",
            ow,
            lambda: scripted(**{"worker[0]": "W1", "worker[1]": "W2"}, adequacy=dirty, fluency="Fluency: No corrections needed", editor="E"),
            doc,
        ),
        (
            "evaluator_optimizer",
            eo,
            lambda: scripted(generator="G", evaluator=[dirty, dirty, "Accuracy: No corrections needed"], optimizer=["O1", "O2"]),
            doc,
        ),
    ]
