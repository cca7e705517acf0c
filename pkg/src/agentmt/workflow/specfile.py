"""Workflow spec files (JSON): loading, validation findings and serialization.

Layout::

    {"name": ..., "topology": ..., "parameters": {...},
     "agents": [{"name", "role", "model", "temperature", "backend",
                 "template": "builtin" | {"inline": "..."}}],
     "edges": [[from, to], ...],          # optional; must match the topology
     "backends": [{"id", "kind", ...}]}

Routers list ``parameters.routes`` and nested ``parameters.workflows``
(same layout minus ``backends``, which are shared with the parent).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from agentmt.agents import (
    AgentRole,
    AgentSpec,
    NoBuiltinTemplate,
    PromptTemplate,
    TemplateError,
    builtin_template,
)
from agentmt.backend import BackendConfig
from agentmt.workflow.spec import (
    RoutingRule,
    Topology,
    WorkflowError,
    WorkflowSpec,
    build_evaluator_optimizer,
    build_orchestrator_workers,
    build_parallel_review_pipeline,
    build_prompt_chain,
    build_router,
)

PRESET_PREFIX = "preset:"


class SpecFileError(WorkflowError):
    def __init__(self, findings: list[str], source: str = "spec"):
        super().__init__(f"{source}: " + "; ".join(findings))
        self.findings = findings


@dataclass(frozen=True)
class LoadedWorkflow:
    spec: WorkflowSpec
    backends: tuple[BackendConfig, ...]
    base_dir: Path | None
    data: Mapping[str, Any]


REQUIRED_ROLES: dict[Topology, list[AgentRole]] = {
    Topology.PARALLEL_REVIEW: [
        AgentRole.TRANSLATOR,
        AgentRole.ADEQUACY_REVIEWER,
        AgentRole.FLUENCY_REVIEWER,
        AgentRole.EDITOR,
    ],
    Topology.ORCHESTRATOR_WORKERS: [
        AgentRole.ORCHESTRATOR,
        AgentRole.WORKER,
        AgentRole.ADEQUACY_REVIEWER,
        AgentRole.FLUENCY_REVIEWER,
        AgentRole.EDITOR,
    ],
    Topology.EVALUATOR_OPTIMIZER: [AgentRole.GENERATOR, AgentRole.EVALUATOR, AgentRole.OPTIMIZER],
}


def _template(role: AgentRole, raw: Any) -> PromptTemplate:
    if raw in (None, "builtin"):
        return builtin_template(role)
    if isinstance(raw, Mapping) and isinstance(raw.get("inline"), str):
        return PromptTemplate.inline(role, raw["inline"])
    raise TemplateError("template must be 'builtin' or {\"inline\": \"...\"}")


def _agent(raw: Mapping[str, Any]) -> AgentSpec:
    role = AgentRole(raw["role"])
    temp = raw.get("temperature", 1.0)
    if isinstance(temp, bool) or not isinstance(temp, (int, float)):
        raise ValueError(f"agent {raw.get('name')!r}: temperature must be a number")
    return AgentSpec(
        name=raw["name"],
        role=role,
        template=_template(role, raw.get("template")),
        model_id=raw["model"],
        temperature=float(temp),
        backend_id=raw.get("backend", "default"),
    )


def _check_agents(data: Mapping[str, Any], where: str, backend_ids: set[str] | None) -> list[str]:
    findings = []
    agents = data.get("agents")
    if not isinstance(agents, list):
        return [f"{where}: 'agents' must be a list"]
    names: list[str] = []
    for i, raw in enumerate(agents):
        label = f"{where}: agent {i}"
        if not isinstance(raw, Mapping):
            findings.append(f"{label}: must be an object")
            continue
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            findings.append(f"{label}: missing name")
        else:
            names.append(name)
            label = f"{where}: agent {name!r}"
        try:
            role = AgentRole(raw.get("role"))
        except ValueError:
            findings.append(f"{label}: unknown role {raw.get('role')!r}")
            role = None
        if not isinstance(raw.get("model"), str) or not raw.get("model"):
            findings.append(f"{label}: missing model")
        temp = raw.get("temperature")
        if isinstance(temp, bool) or not isinstance(temp, (int, float)):
            findings.append(f"{label}: temperature must be a number")
        elif not 0.0 <= temp <= 2.0:
            findings.append(f"{label}: temperature out of range [0.0, 2.0]: {temp}")
        backend = raw.get("backend", "default")
        if backend_ids is not None and backend not in backend_ids:
            findings.append(f"{label}: references undeclared backend {backend!r}")
        if role is not None:
            try:
                _template(role, raw.get("template"))
            except (TemplateError, NoBuiltinTemplate) as e:
                findings.append(f"{label}: template: {e}")
    for n in sorted({n for n in names if names.count(n) > 1}):
        findings.append(f"{where}: duplicate agent name {n!r}")
    return findings


def _check_coverage(data: Mapping[str, Any], topology: Topology, where: str) -> list[str]:
    roles = [a.get("role") for a in data.get("agents", []) if isinstance(a, Mapping)]
    findings = []
    if topology in (Topology.CHAIN,) and not roles:
        findings.append(f"{where}: a chain needs at least one agent")
    for role in REQUIRED_ROLES.get(topology, []):
        n = roles.count(role.value)
        if n != 1:
            findings.append(
                f"{where}: topology {topology.value} needs exactly one {role.value} agent, found {n}"
            )
    if topology in REQUIRED_ROLES:
        extra = set(roles) - {r.value for r in REQUIRED_ROLES[topology]}
        if extra:
            findings.append(f"{where}: roles not used by {topology.value}: {', '.join(sorted(map(str, extra)))}")
    return findings


def _check_edges(data: Mapping[str, Any], where: str) -> list[str]:
    edges = data.get("edges")
    if edges is None:
        return []
    names = {a.get("name") for a in data.get("agents", []) if isinstance(a, Mapping)}
    findings = []
    if not isinstance(edges, list):
        return [f"{where}: 'edges' must be a list of [from, to] pairs"]
    for e in edges:
        if not (isinstance(e, list) and len(e) == 2):
            findings.append(f"{where}: malformed edge {e!r}")
            continue
        for end in e:
            if end not in names:
                findings.append(f"{where}: edge {e[0]} -> {e[1]} references unknown node {end!r}")
    return findings


def _check_parameters(data: Mapping[str, Any], topology: Topology, where: str) -> list[str]:
    params = data.get("parameters", {})
    if not isinstance(params, Mapping):
        return [f"{where}: 'parameters' must be an object"]
    findings = []
    if topology == Topology.EVALUATOR_OPTIMIZER:
        k = params.get("max_iterations", 3)
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            findings.append(f"{where}: max_iterations must be an integer >= 1")
        if params.get("dimension", "adequacy") not in ("adequacy", "fluency"):
            findings.append(f"{where}: dimension must be adequacy or fluency")
    if topology == Topology.ORCHESTRATOR_WORKERS:
        if params.get("mode", "deterministic") not in ("deterministic", "llm"):
            findings.append(f"{where}: mode must be deterministic or llm")
        if params.get("chunking", "paragraph") not in ("sentence", "paragraph", "line"):
            findings.append(f"{where}: chunking must be sentence, paragraph or line")
    return findings


def _check_workflow(data: Any, where: str, backend_ids: set[str] | None) -> list[str]:
    if not isinstance(data, Mapping):
        return [f"{where}: must be an object"]
    try:
        topology = Topology(data.get("topology"))
    except ValueError:
        return [f"{where}: unknown topology {data.get('topology')!r}"]
    findings = _check_parameters(data, topology, where)
    if topology == Topology.ROUTER:
        params = data.get("parameters", {})
        workflows = params.get("workflows", {}) if isinstance(params, Mapping) else {}
        if not isinstance(workflows, Mapping) or not workflows:
            findings.append(f"{where}: router needs parameters.workflows")
            workflows = {}
        for name, sub in workflows.items():
            findings += _check_workflow(sub, f"{where}/{name}", backend_ids)
        try:
            rules = [RoutingRule.from_dict(r) for r in params.get("routes", [])]
            build_router(rules, {k: None for k in workflows})  # type: ignore[misc]
        except (WorkflowError, KeyError, TypeError, ValueError, AttributeError) as e:
            findings.append(f"{where}: routes: {e}")
        return findings
    findings += _check_agents(data, where, backend_ids)
    findings += _check_coverage(data, topology, where)
    findings += _check_edges(data, where)
    if not findings:
        try:
            spec = _build(data)
        except (WorkflowError, ValueError) as e:
            findings.append(f"{where}: {e}")
        else:
            if data.get("edges") is not None:
                declared = {tuple(e) for e in data["edges"]}
                if declared != set(spec.edges):
                    findings.append(
                        f"{where}: edges do not match the {topology.value} topology; "
                        f"expected {sorted(spec.edges)}"
                    )
    return findings


def validate_data(data: Any, base_dir: Path | None = None) -> list[str]:
    """All problems found in a parsed spec file; empty when it is well formed."""
    if not isinstance(data, Mapping):
        return ["spec must be a JSON object"]
    findings = []
    if not isinstance(data.get("name"), str) or not data.get("name"):
        findings.append("missing workflow name")
    backend_ids: set[str] = set()
    raw_backends = data.get("backends", [])
    if not isinstance(raw_backends, list):
        findings.append("'backends' must be a list")
        raw_backends = []
    for i, raw in enumerate(raw_backends):
        try:
            cfg = BackendConfig.from_dict(raw)
        except (KeyError, TypeError, ValueError) as e:
            findings.append(f"backend {i}: {e}")
            continue
        if cfg.backend_id in backend_ids:
            findings.append(f"duplicate backend id {cfg.backend_id!r}")
        backend_ids.add(cfg.backend_id)
        if cfg.kind == "scripted" and base_dir is not None:
            path = Path(cfg.script_path)
            if not path.is_absolute():
                path = base_dir / path
            if not path.is_file():
                findings.append(f"backend {cfg.backend_id!r}: script file not found: {path}")
    findings += _check_workflow(data, data.get("name") or "workflow", backend_ids)
    return findings


def _build(data: Mapping[str, Any]) -> WorkflowSpec:
    spec = _build_topology(data)
    extra = {k: v for k, v in data.get("parameters", {}).items() if k not in spec.parameters}
    if extra and spec.topology != Topology.ROUTER:
        spec = replace(spec, parameters={**spec.parameters, **extra})
    return spec


def _build_topology(data: Mapping[str, Any]) -> WorkflowSpec:
    topology = Topology(data["topology"])
    name = data.get("name", topology.value)
    params = dict(data.get("parameters", {}))
    if topology == Topology.ROUTER:
        workflows = {k: _build({"name": k, **v}) for k, v in params.get("workflows", {}).items()}
        rules = [RoutingRule.from_dict(r) for r in params.get("routes", [])]
        return build_router(rules, workflows, name=name)
    agents = [_agent(a) for a in data["agents"]]
    if topology == Topology.CHAIN:
        return build_prompt_chain(agents, name=name, **params)
    if topology == Topology.PARALLEL_REVIEW:
        return build_parallel_review_pipeline(agents, name=name, **params)
    by_role = {a.role: a for a in agents}
    if topology == Topology.ORCHESTRATOR_WORKERS:
        return build_orchestrator_workers(
            by_role[AgentRole.ORCHESTRATOR],
            by_role[AgentRole.WORKER],
            [by_role[AgentRole.ADEQUACY_REVIEWER], by_role[AgentRole.FLUENCY_REVIEWER]],
            by_role[AgentRole.EDITOR],
            chunking=params.get("chunking", "paragraph"),
            mode=params.get("mode", "deterministic"),
            name=name,
        )
    return build_evaluator_optimizer(
        by_role[AgentRole.GENERATOR],
        by_role[AgentRole.EVALUATOR],
        by_role[AgentRole.OPTIMIZER],
        max_iterations=params.get("max_iterations", 3),
        dimension=params.get("dimension", "adequacy"),
        name=name,
    )


def read_spec_text(ref: str | Path) -> tuple[str, Path | None]:
    """Text of a spec file, or of a bundled preset when ``ref`` is ``preset:NAME``."""
    ref = str(ref)
    if ref.startswith(PRESET_PREFIX):
        name = ref[len(PRESET_PREFIX):]
        res = resources.files("agentmt.presets").joinpath(f"{name}.json")
        if not res.is_file():
            raise FileNotFoundError(f"no bundled preset {name!r}; available: {', '.join(preset_names())}")
        return res.read_text(encoding="utf-8"), None
    path = Path(ref)
    return path.read_text(encoding="utf-8"), path.resolve().parent


def preset_names() -> list[str]:
    root = resources.files("agentmt.presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def parse_spec_text(text: str, source: str = "spec") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFileError([f"line {e.lineno}: {e.msg}"], source) from None


def load_workflow(data: Mapping[str, Any], base_dir: Path | None = None, source: str = "spec") -> LoadedWorkflow:
    findings = validate_data(data, base_dir)
    if findings:
        raise SpecFileError(findings, source)
    backends = tuple(BackendConfig.from_dict(b) for b in data.get("backends", []))
    return LoadedWorkflow(_build(data), backends, base_dir, data)


def load_workflow_file(ref: str | Path) -> LoadedWorkflow:
    text, base_dir = read_spec_text(ref)
    return load_workflow(parse_spec_text(text, str(ref)), base_dir, str(ref))


def content_hash(*parts: Any) -> str:
    """Short stable digest of JSON-serializable parts."""
    h = hashlib.sha256()
    for p in parts:
        blob = p if isinstance(p, (bytes, str)) else json.dumps(p, sort_keys=True, ensure_ascii=False)
        if isinstance(blob, str):
            blob = blob.encode("utf-8")
        h.update(len(blob).to_bytes(8, "big"))
        h.update(blob)
    return h.hexdigest()[:16]
