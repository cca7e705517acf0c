"""Acceptance gate: one numbered check per criterion, reported as PASS/FAIL lines.

Tolerances: means compare as exact two-decimal strings, counts exactly,
scripted-run runtimes under 1 second.
"""

import csv
import io
import json
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import judgment_grid
from agentmt.agents import AgentRole, pilot_agent_set
from agentmt.backend import AuthError, BackendConfig, ChatRequest, LiveBackend, Message, RateLimited
from agentmt.cli import main
from agentmt.corpus import Document, type_token_ratio, word_count
from agentmt.evaluation import EvalDataset, EvaluationRecord, total_words
from agentmt.review import SENTINELS, Dimension, FormatError, ReviewReport, Suggestion, format_report, parse_review
from agentmt.workflow import build_evaluator_optimizer, build_parallel_review_pipeline, run
from agentmt.workflow.specfile import read_spec_text
from helpers import inline_agent, pilot_script, scripted, topology_cases, write_json

acceptance = pytest.mark.acceptance

PRESETS = ["pilot-big-1.3", "pilot-big-1.3-0.5", "pilot-small-1.3", "pilot-small-1.3-0.5"]
A_LINE = "- ERROR: Licensee → SUGGESTION: Licenciatario"
F_LINE = "- ERROR: se paga → SUGGESTION: pagará"


@acceptance(1, "scripted pilot pipeline end to end through the translate command")
def test_pilot_end_to_end(tmp_path, capsys):
    (tmp_path / "doc.txt").write_text("The Licensee shall pay the fee.\n", encoding="utf-8")
    script = [
        {"key": "translator", "responses": ["BORRADOR-D"]},
        {"key": "adequacy", "responses": [A_LINE]},
        {"key": "fluency", "responses": [F_LINE]},
        {"key": "editor", "responses": ["FINAL-F"]},
    ]
    write_json(tmp_path / "script.json", script)
    start = time.perf_counter()
    code = main(
        [
            "translate", "--spec", "preset:pilot-big-1.3-0.5", "--doc", str(tmp_path / "doc.txt"),
            "--source-lang", "en", "--target-lang", "es", "--script", str(tmp_path / "script.json"),
            "--out", str(tmp_path / "out"), "--print",
        ]
    )
    elapsed = time.perf_counter() - start
    assert code == 0
    assert elapsed < 1.0
    (run_dir,) = (tmp_path / "out").iterdir()
    records = [json.loads(ln) for ln in (run_dir / "trace.jsonl").read_text().splitlines()]
    calls = [r for r in records if r["type"] == "call"]
    assert len(calls) == 4
    by = {r["node"]: r for r in calls}
    assert by["adequacy"]["user_input"] == by["fluency"]["user_input"]
    assert "BORRADOR-D" in by["adequacy"]["user_input"]
    editor_input = by["editor"]["user_input"]
    assert A_LINE in editor_input.splitlines() and F_LINE in editor_input.splitlines()
    assert editor_input.index(A_LINE) < editor_input.index(F_LINE)
    assert (run_dir / "translation.txt").read_text() == "FINAL-F"
    assert capsys.readouterr().out == "FINAL-F\n"


line_text = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), min_size=1, max_size=40).filter(
    lambda s: s.strip() == s
)


@acceptance(2, "reviewer isolation over randomized scripted runs")
@settings(max_examples=150, deadline=None)
@given(line_text, line_text, line_text, line_text)
def test_reviewer_isolation(source, draft, a_fix, f_fix):
    a_out = f"- ERROR: adequacy point → SUGGESTION: {a_fix}"
    f_out = f"- ERROR: fluency point → SUGGESTION: {f_fix}"
    spec = build_parallel_review_pipeline(pilot_agent_set("Big13"))
    doc = Document.from_text(source, "en", "es")
    res = run(spec, doc, {"default": pilot_script(draft, a_out, f_out, "F")})
    by = {r.node: r for r in res.trace.records}
    assert by["adequacy"].user_input == by["fluency"].user_input
    assert by["adequacy"].output not in by["fluency"].user_input
    assert by["fluency"].output not in by["adequacy"].user_input


def _suggestion(e, f):
    try:
        return Suggestion(e, f)
    except ValueError:
        return Suggestion("placeholder error", "placeholder fix")


reports = st.builds(
    lambda dim, items: ReviewReport(dim, tuple(items), False),
    st.sampled_from(list(Dimension)),
    st.lists(st.builds(_suggestion, line_text, line_text), min_size=1, max_size=5),
) | st.builds(ReviewReport.clean_report, st.sampled_from(list(Dimension)))


@acceptance(3, "review grammar round trip, sentinels and strict rejection")
@settings(max_examples=1000, deadline=None)
@given(reports, line_text)
def test_review_round_trip(report, junk):
    parsed = parse_review(format_report(report), report.dimension)
    assert (parsed.dimension, parsed.clean, parsed.suggestions) == (report.dimension, report.clean, report.suggestions)
    assert parse_review("Accuracy: No corrections needed", "adequacy").clean
    assert parse_review("Fluency: No corrections needed", "fluency").clean
    if junk != SENTINELS[report.dimension] and "SUGGESTION:" not in junk:
        with pytest.raises(FormatError):
            parse_review(format_report(report) + "\n" + junk, report.dimension)


def _eo(k):
    return build_evaluator_optimizer(
        inline_agent("generator", AgentRole.GENERATOR),
        inline_agent("evaluator", AgentRole.EVALUATOR),
        inline_agent("optimizer", AgentRole.OPTIMIZER),
        max_iterations=k,
    )


@acceptance(4, "evaluator-optimizer iteration bound")
@pytest.mark.parametrize("k", [1, 3, 10])
def test_evaluator_optimizer_bound(doc, k):
    b = scripted(generator="G", evaluator="- ERROR: x → SUGGESTION: y", optimizer="O")
    start = time.perf_counter()
    res = run(_eo(k), doc, {"default": b})
    assert time.perf_counter() - start < 1.0
    assert len(res.trace.calls_to("evaluator")) == k
    assert len(res.trace.calls_to("optimizer")) == k
    assert "unconverged" in res.flags

    start = time.perf_counter()
    res = run(_eo(k), doc, {"default": scripted(generator="G", evaluator=SENTINELS[Dimension.ADEQUACY])})
    assert time.perf_counter() - start < 1.0
    assert len(res.trace.calls_to("evaluator")) == 1 and len(res.trace.calls_to("optimizer")) == 0
    assert res.flags == ()


@acceptance(5, "published means and first-place counts reproduced by the eval command")
def test_reported_arithmetic(tmp_path, capsys):
    p = tmp_path / "records.csv"
    p.write_text(judgment_grid.csv_text())
    assert len(judgment_grid.records()) == 600
    assert main(["eval", str(p), "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    got = {r["system"]: (r["fluency"], r["adequacy"], int(r["first_place"])) for r in rows}
    expected = {
        "Multi-Agent Big 1.3": ("3.52", "3.68", 64),
        "Multi-Agent Big 1.3/0.5": ("3.48", "3.69", 57),
        "Multi-Agent Small 1.3": ("3.31", "3.47", 39),
        "Multi-Agent Small 1.3/0.5": ("3.23", "3.44", 37),
        "Google Translate": ("3.40", "3.52", 56),
        "DeepL": ("3.45", "3.55", 50),
    }
    assert got == expected
    assert rows[0]["system"] == "Multi-Agent Big 1.3"
    assert main(["eval", str(p)]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[2].split("  ")[0].strip() == "Multi-Agent Big 1.3"


@acceptance(6, "words evaluated total")
def test_total_words():
    recs = [
        EvaluationRecord(f"s{i}", system, 3, 3, 1, judgment_grid.segment_words(i))
        for i in range(100)
        for system in judgment_grid.MEANS
    ]
    ds = EvalDataset(tuple(recs))
    assert sum(r.word_count for r in ds.for_system("DeepL")) == 2547
    assert total_words(ds) == 15282


@acceptance(7, "corpus statistics examples and bounded type-token ratio")
@settings(max_examples=1000)
@given(st.text(max_size=80))
def test_corpus_stats(text):
    assert word_count("Hello, world!") == 2
    assert word_count("") == 0
    assert type_token_ratio("a a a") == pytest.approx(1 / 3)
    assert type_token_ratio("a b c") == 1.0
    assert type_token_ratio("") is None
    ttr = type_token_ratio(text)
    assert ttr is None or 0 < ttr <= 1


@acceptance(8, "determinism and token additivity on every topology")
@pytest.mark.parametrize("case", topology_cases(), ids=lambda c: c[0])
def test_determinism(case):
    _, spec, backend, doc = case
    a = run(spec, doc, {"default": backend()})
    b = run(spec, doc, {"default": backend()})
    assert a.final_text == b.final_text
    assert sorted(r.fingerprint() for r in a.trace.records) == sorted(r.fingerprint() for r in b.trace.records)
    for res in (a, b):
        assert res.trace.total_usage.total_tokens == sum(r.usage.total_tokens for r in res.trace.records)
        assert res.trace.total_usage.prompt_tokens == sum(r.usage.prompt_tokens for r in res.trace.records)


def _diff(a, b, path=()):
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            out += _diff(a.get(k), b.get(k), path + (k,))
        return out
    if isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        out = []
        for i, (x, y) in enumerate(zip(a, b)):
            out += _diff(x, y, path + (i,))
        return out
    return [] if a == b else [path]


@acceptance(9, "bundled pilot configurations validate and differ only in model/temperature")
def test_config_grid(capsys):
    for name in PRESETS:
        assert main(["validate", f"preset:{name}"]) == 0
    data = {n: json.loads(read_spec_text(f"preset:{n}")[0]) for n in PRESETS}
    base = data[PRESETS[0]]
    for name in PRESETS[1:]:
        for path in _diff(base, data[name]):
            assert path[0] == "agents" and path[2] in ("model", "temperature"), path
    temps = [a["temperature"] for a in data["pilot-big-1.3-0.5"]["agents"]]
    roles = [a["role"] for a in data["pilot-big-1.3-0.5"]["agents"]]
    assert roles == ["translator", "adequacy_reviewer", "fluency_reviewer", "editor"]
    assert temps == [1.3, 0.5, 0.5, 1.3]


@acceptance(10, "live backend contract against a local stub")
def test_live_contract(stub_server):
    cfg = BackendConfig("stub", "live", base_url=stub_server.base_url, api_key_env="K", max_retries=3, backoff=0)
    request = ChatRequest("m", (Message("user", "hi"),), 0.5)
    ok = {"choices": [{"message": {"content": "stubbed"}}], "usage": {"prompt_tokens": 3, "completion_tokens": 1}}

    stub_server.plan = [(200, ok)]
    r = LiveBackend(cfg, sleep=lambda s: None, environ={"K": "x"}).complete(request)
    assert r.content == "stubbed" and r.usage.estimated is False

    stub_server.requests.clear()
    stub_server.plan = [(429, {})]
    with pytest.raises(RateLimited):
        LiveBackend(cfg, sleep=lambda s: None, environ={"K": "x"}).complete(request)
    assert len(stub_server.requests) == 1 + cfg.max_retries

    stub_server.requests.clear()
    stub_server.plan = [(401, {})]
    with pytest.raises(AuthError):
        LiveBackend(cfg, sleep=lambda s: None, environ={"K": "x"}).complete(request)
    assert len(stub_server.requests) == 1
