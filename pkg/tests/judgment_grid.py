"""Synthetic 100-segment x 6-system judgment grid whose aggregates hit fixed targets.

Each mean m over 100 integer scores in {3, 4} needs (100*m - 300) fours.
First places are realized by a per-segment score where first-place systems
get 4 and the others 3 (Big), 2 (NMT) or 1 (Small); dense ranking turns that
into ranks in 1..4.
"""

from __future__ import annotations

import csv
import io

from agentmt.evaluation import assign_ranks

SEGMENTS = 100

# system -> (fluency, adequacy) as hundredths
MEANS = {
    "Multi-Agent Big 1.3": (352, 368),
    "Multi-Agent Big 1.3/0.5": (348, 369),
    "Multi-Agent Small 1.3": (331, 347),
    "Multi-Agent Small 1.3/0.5": (323, 344),
    # no fixed targets for these two; picked to sit between the Big and Small systems
    "DeepL": (345, 355),
    "Google Translate": (340, 352),
}

FIRSTS = {
    "Multi-Agent Big 1.3": 64,
    "Multi-Agent Big 1.3/0.5": 57,
    "Google Translate": 56,
    "DeepL": 50,
    "Multi-Agent Small 1.3": 39,
    "Multi-Agent Small 1.3/0.5": 37,
}

# inclusive segment ranges where each system is ranked first
FIRST_SPANS = {
    "Multi-Agent Big 1.3": (0, 63),
    "Multi-Agent Big 1.3/0.5": (43, 99),
    "Google Translate": (0, 55),
    "DeepL": (50, 99),
    "Multi-Agent Small 1.3": (0, 38),
    "Multi-Agent Small 1.3/0.5": (63, 99),
}

TIER = {"Big": 3, "DeepL": 2, "Google": 2, "Small": 1}

WORDS_PER_SYSTEM = 2547


def segment_words(i: int) -> int:
    # 47 * 26 + 53 * 25 = 2547
    return 26 if i < 47 else 25


def _tier(system: str) -> int:
    return next(v for k, v in TIER.items() if k in system)


def fours(hundredths: int) -> int:
    return hundredths - 300


def records() -> list[dict]:
    rows = []
    for i in range(SEGMENTS):
        score = {}
        for system, (lo, hi) in FIRST_SPANS.items():
            score[system] = 4 if lo <= i <= hi else _tier(system)
        ranks = assign_ranks(score, mode="dense")
        for system, (flu, ade) in MEANS.items():
            rows.append(
                {
                    "segment_id": f"seg{i:03d}",
                    "system_id": system,
                    "adequacy": 4 if i < fours(ade) else 3,
                    "fluency": 4 if i < fours(flu) else 3,
                    "rank": ranks[system],
                    "word_count": segment_words(i),
                }
            )
    return rows


def csv_text() -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(records()[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(records())
    return buf.getvalue()
