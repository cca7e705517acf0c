"""Workflow topologies, the execution engine and run traces."""

from agentmt.workflow.engine import EmptyOutput, NodeFailed, TranslationResult, run
from agentmt.workflow.spec import (
    DOCUMENT,
    InputSlot,
    RoutingRule,
    Topology,
    WorkflowError,
    WorkflowSpec,
    build_evaluator_optimizer,
    build_orchestrator_workers,
    build_parallel_review_pipeline,
    build_prompt_chain,
    build_router,
    route,
)
from agentmt.workflow.specfile import (
    LoadedWorkflow,
    SpecFileError,
    load_workflow,
    load_workflow_file,
    validate_data,
)
from agentmt.workflow.trace import NodeRecord, RunTrace, TraceSummary, trace_lines, trace_summary

__all__ = [
    "DOCUMENT",
    "EmptyOutput",
    "InputSlot",
    "LoadedWorkflow",
    "NodeFailed",
    "NodeRecord",
    "RoutingRule",
    "RunTrace",
    "SpecFileError",
    "Topology",
    "TraceSummary",
    "TranslationResult",
    "WorkflowError",
    "WorkflowSpec",
    "build_evaluator_optimizer",
    "build_orchestrator_workers",
    "build_parallel_review_pipeline",
    "build_prompt_chain",
    "build_router",
    "load_workflow",
    "load_workflow_file",
    "route",
    "run",
    "trace_lines",
    "trace_summary",
    "validate_data",
]
