"""Command-line entry point: ``agentmt translate|stats|eval|validate|presets``.

Exit codes: 0 success, 2 configuration/input problem, 3 backend failure,
4 parse or validation failure of model output or evaluation records.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from agentmt.backend import BackendError, ScriptError, build_registry
from agentmt.corpus import RULES_BY_NAME, load_document, stats_for_text
from agentmt.evaluation import EvalError, emit_report, load_records, rank_histograms, summarize, total_words
from agentmt.review import ReviewError
from agentmt.workflow import NodeFailed, WorkflowError, run, trace_lines, trace_summary
from agentmt.workflow.engine import EmptyOutput
from agentmt.workflow.specfile import (
    SpecFileError,
    content_hash,
    load_workflow,
    parse_spec_text,
    preset_names,
    read_spec_text,
    validate_data,
)

log = logging.getLogger("agentmt")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_PARSE = 4


class CliError(Exception):
    def __init__(self, code: int, category: str, message: str):
        super().__init__(message)
        self.code = code
        self.category = category


def _rebind(data: dict[str, Any], backend_id: str) -> None:
    for agent in data.get("agents", []):
        agent["backend"] = backend_id
    for sub in data.get("parameters", {}).get("workflows", {}).values():
        _rebind(sub, backend_id)


def apply_overrides(data: dict[str, Any], backend: str | None, script: Path | None) -> dict[str, Any]:
    """Copy of a spec with ``--backend``/``--script`` applied.

    ``--script`` points every scripted backend at the given file, or, if the
    spec declares none, adds a scripted backend and binds all agents to it.
    ``--backend`` binds all agents to an already-declared backend.
    """
    data = copy.deepcopy(data)
    if script is not None:
        backends = data.setdefault("backends", [])
        scripted = [b for b in backends if b.get("kind") == "scripted"]
        for b in scripted:
            b["script"] = str(script.resolve())
        if not scripted:
            backends.append({"id": "scripted", "kind": "scripted", "script": str(script.resolve())})
            if backend is None:
                backend = "scripted"
    if backend is not None:
        _rebind(data, backend)
    return data


def _read_spec(ref: str) -> tuple[Any, Path | None]:
    try:
        text, base_dir = read_spec_text(ref)
    except (OSError, FileNotFoundError) as e:
        raise CliError(EXIT_CONFIG, "config", f"cannot read spec {ref}: {e}") from None
    try:
        return parse_spec_text(text, ref), base_dir
    except SpecFileError as e:
        raise CliError(EXIT_CONFIG, "config", str(e)) from None


def _node_failure(e: NodeFailed) -> CliError:
    cause = e.cause
    if isinstance(cause, BackendError):
        return CliError(EXIT_BACKEND, "backend", str(e))
    if isinstance(cause, (ReviewError, EmptyOutput)):
        return CliError(EXIT_PARSE, "parse", str(e))
    # template binding problems and anything else are configuration issues
    return CliError(EXIT_CONFIG, "config", str(e))


def cmd_translate(args: argparse.Namespace) -> int:
    script = Path(args.script) if args.script else None
    raw, base_dir = _read_spec(args.spec)
    if not isinstance(raw, dict):
        raise CliError(EXIT_CONFIG, "config", "spec must be a JSON object")
    data = apply_overrides(raw, args.backend, script)
    try:
        loaded = load_workflow(data, base_dir, args.spec)
    except SpecFileError as e:
        raise CliError(EXIT_CONFIG, "config", str(e)) from None

    try:
        doc = load_document(args.doc, args.source_lang, args.target_lang)
    except (OSError, ValueError) as e:
        raise CliError(EXIT_CONFIG, "config", f"cannot load document: {e}") from None

    used = {n.backend_id for n in loaded.spec.all_nodes()}
    configs = [b for b in loaded.backends if b.backend_id in used]
    script_texts = []
    for b in configs:
        if b.kind == "scripted":
            p = Path(b.script_path)
            p = p if p.is_absolute() or base_dir is None else base_dir / p
            try:
                script_texts.append(p.read_text(encoding="utf-8"))
            except OSError as e:
                raise CliError(EXIT_CONFIG, "config", f"cannot read script {p}: {e}") from None
    hashed = copy.deepcopy(data)
    for b in hashed.get("backends", []):
        b.pop("script", None)
    run_id = content_hash(hashed, [doc.id, doc.source_lang, doc.target_lang, doc.text], script_texts)

    out_dir = None
    if args.out:
        out_dir = Path(args.out) / run_id
        if out_dir.exists():
            raise CliError(EXIT_CONFIG, "config", f"run directory {out_dir} already exists; not overwriting")

    try:
        registry = build_registry(configs, base_dir)
    except ScriptError as e:
        raise CliError(EXIT_CONFIG, "config", f"script: {e}") from None
    except BackendError as e:
        raise CliError(EXIT_BACKEND, "backend", str(e)) from None

    try:
        result = run(
            loaded.spec,
            doc,
            registry,
            parse_mode="strict" if args.strict else "lenient",
            run_id=run_id,
            max_iterations=args.max_iterations,
        )
    except NodeFailed as e:
        raise _node_failure(e) from None
    except WorkflowError as e:
        raise CliError(EXIT_CONFIG, "config", str(e)) from None

    stamps = not args.no_timestamps
    if out_dir is not None:
        out_dir.mkdir(parents=True)
        (out_dir / "translation.txt").write_text(result.final_text, encoding="utf-8")
        (out_dir / "trace.jsonl").write_text("\n".join(trace_lines(result.trace, stamps)) + "\n", encoding="utf-8")
        summary = {
            "run_id": run_id,
            "workflow": loaded.spec.name,
            "topology": loaded.spec.topology.value,
            "document": doc.id,
            "language_pair": [doc.source_lang, doc.target_lang],
            "route": result.trace.route,
            "converged": result.converged,
            "flags": list(result.flags),
            "reports": {
                name: rep.to_dict()
                for name, rep in (("adequacy", result.adequacy_report), ("fluency", result.fluency_report))
                if rep is not None
            },
            "evaluations": [r.to_dict() for r in result.evaluator_reports],
            "usage": trace_summary(result.trace).to_dict(stamps),
        }
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        print(f"wrote {out_dir}", file=sys.stderr)
    if args.print or out_dir is None:
        sys.stdout.write(result.final_text)
        if not result.final_text.endswith("\n"):
            sys.stdout.write("\n")
    if not result.converged:
        print("warning: unconverged", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    path = Path(args.doc)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise CliError(EXIT_CONFIG, "config", f"cannot read {path}: {e}") from None
    stats = stats_for_text(text, RULES_BY_NAME[args.rules])
    print(json.dumps(stats.to_dict(), separators=(",", ":")))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        dataset = load_records(args.records)
    except OSError as e:
        raise CliError(EXIT_CONFIG, "config", f"cannot read {args.records}: {e}") from None
    except EvalError as e:
        raise CliError(EXIT_PARSE, e.kind, str(e)) from None
    sys.stdout.write(
        emit_report(summarize(dataset), rank_histograms(dataset), args.format, total_words(dataset))
    )
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    data, base_dir = _read_spec(args.spec)
    findings = validate_data(data, base_dir)
    if findings:
        for f in findings:
            print(f)
        return EXIT_CONFIG
    print(f"ok: {data['name']} ({data['topology']})")
    return EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    for name in preset_names():
        print(f"preset:{name}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentmt", description="Run multi-agent translation workflows and aggregate human judgments."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("translate", help="run a workflow on a document")
    p.add_argument("--spec", required=True, help="workflow spec file or preset:NAME")
    p.add_argument("--doc", required=True, help="UTF-8 source text file")
    p.add_argument("--source-lang")
    p.add_argument("--target-lang")
    p.add_argument("--backend", help="bind every agent to this declared backend id")
    p.add_argument("--script", help="scripted-backend response file")
    p.add_argument("--out", help="directory under which <run_id>/ artifacts are written")
    p.add_argument("--strict", action="store_true", help="reject reviewer output outside the grammar")
    p.add_argument("--max-iterations", type=int, help="override the evaluator-optimizer bound")
    p.add_argument("--no-timestamps", action="store_true", help="omit wall-clock times from artifacts")
    p.add_argument("--print", action="store_true", help="also print the final text when --out is given")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("stats", help="corpus statistics of a document as JSON")
    p.add_argument("doc")
    p.add_argument("--rules", choices=sorted(RULES_BY_NAME), default="sentence")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="aggregate human evaluation records")
    p.add_argument("records", help="CSV of segment_id,system_id,adequacy,fluency,rank,word_count")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate", help="check a workflow spec file")
    p.add_argument("spec", nargs="?")
    p.add_argument("--spec", dest="spec_opt")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("presets", help="list bundled workflow specs")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "validate":
        args.spec = args.spec_opt or args.spec
        if not args.spec:
            parser.error("validate needs a spec path")
    try:
        return args.func(args)
    except CliError as e:
        print(f"error[{e.category}]: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
