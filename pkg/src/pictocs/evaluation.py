"""Ranking metrics (ACC@K, MRR, Entropy@K) and the tagged-vs-flat experiment.

Entropy@K uses the natural logarithm and is averaged over test cases; both
choices are recorded in the report header.  Targets that are missing from the
board count as misses (never dropped), so compared models always share the
same denominator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import checkpoint as ckpt_io
from .board import Board
from .corpus import Sentence
from .model import Checkpoint
from .prediction import CardDecoder, Prediction, Query, build_decoder, predict_cards


class EvalError(ValueError):
    """Evaluation could not be carried out."""


def acc_at_k(
    rankings: Sequence[Sequence[str]], targets: Sequence[str], k: int
) -> float:
    """Fraction of cases whose target appears in the top k of its ranking."""
    if k < 1:
        raise EvalError("k must be at least 1")
    if not rankings or len(rankings) != len(targets):
        raise EvalError("need one non-empty ranking per target")
    hits = 0
    for ranked, target in zip(rankings, targets):
        if target in ranked[:k]:
            hits += 1
    return hits / len(targets)


def mrr(rankings: Sequence[Sequence[str]], targets: Sequence[str]) -> float:
    """Mean reciprocal rank of the target; absent targets contribute 0."""
    if not rankings or len(rankings) != len(targets):
        raise EvalError("need one non-empty ranking per target")
    total = 0.0
    for ranked, target in zip(rankings, targets):
        if target in ranked:
            total += 1.0 / (list(ranked).index(target) + 1)
    return total / len(targets)


def entropy_at_k(log_probs: Sequence[Sequence[float]], k: int) -> float:
    """Mean over cases of -(1/k) * sum of the top-k ranked log-probabilities
    (natural log)."""
    if k < 1:
        raise EvalError("k must be at least 1")
    if not log_probs:
        raise EvalError("no cases")
    total = 0.0
    for case in log_probs:
        if len(case) < k:
            raise EvalError(f"case has {len(case)} ranked items, need {k}")
        top = case[:k]
        if any(not math.isfinite(lp) for lp in top):
            raise EvalError("zero probability in top-k")
        total += -sum(top) / k
    return total / len(log_probs)


@dataclass
class EvalCase:
    sentence: Sentence
    target_id: str
    query: Query


def build_eval_cases(
    sentences: Sequence[Sentence], board: Board, mode: str, k: int | None = None
) -> tuple[list[EvalCase], int]:
    """One case per sentence: mask the last content slot, target the card whose
    caption equals that slot's phrase.  Returns (cases, unusable count)."""
    if mode not in ("cs", "flat"):
        raise EvalError(f"unknown mode {mode!r}")
    captions = board.caption_to_card()
    k = k or len(board.cards)
    cases: list[EvalCase] = []
    unusable = 0
    for sentence in sentences:
        card = captions.get(sentence.last_slot.text)
        if card is None:
            unusable += 1
            continue
        rest = sentence.slots[:-1]
        if mode == "cs":
            query = Query(
                mode="cs",
                filled={s.role: s.text for s in rest},
                mask_role=sentence.last_slot.role,
                k=k,
            )
        else:
            prefix = " ".join(s.text for s in rest)
            query = Query(mode="flat", prefix=prefix, k=k)
        cases.append(EvalCase(sentence=sentence, target_id=card.id, query=query))
    if not cases:
        raise EvalError("no usable evaluation cases (no targets on the board)")
    return cases, unusable


@dataclass
class CaseResult:
    target_id: str
    rank: int | None  # 1-based rank of the target, None when absent
    ranked_ids: list[str]
    log_probs: list[float]


def evaluate_cases(
    ckpt: Checkpoint, decoder: CardDecoder, cases: Sequence[EvalCase]
) -> list[CaseResult]:
    results = []
    for case in cases:
        full_query = Query(
            mode=case.query.mode,
            filled=case.query.filled,
            prefix=case.query.prefix,
            mask_role=case.query.mask_role,
            k=len(decoder.card_ids),
        )
        pred: Prediction = predict_cards(full_query, ckpt, decoder)
        ranked = [cid for cid, _, _ in pred.items]
        rank = ranked.index(case.target_id) + 1 if case.target_id in ranked else None
        results.append(
            CaseResult(
                target_id=case.target_id,
                rank=rank,
                ranked_ids=ranked,
                log_probs=[lp for _, _, lp in pred.items],
            )
        )
    return results


@dataclass
class ModelReport:
    label: str
    mode: str
    fingerprint: str
    case_count: int
    misses: int
    acc: dict[int, float]
    mrr: float
    entropy: dict[int, float]


def summarize(
    label: str, mode: str, fp: str, results: Sequence[CaseResult], k_list: Sequence[int]
) -> ModelReport:
    rankings = [r.ranked_ids for r in results]
    targets = [r.target_id for r in results]
    log_probs = [r.log_probs for r in results]
    return ModelReport(
        label=label,
        mode=mode,
        fingerprint=fp,
        case_count=len(results),
        misses=sum(1 for r in results if r.rank is None),
        acc={k: acc_at_k(rankings, targets, k) for k in k_list},
        mrr=mrr(rankings, targets),
        entropy={k: entropy_at_k(log_probs, k) for k in k_list},
    )


@dataclass
class CompareReport:
    k_list: list[int]
    unusable: int
    models: list[ModelReport]
    per_case: list[dict]


DEFAULT_K_LIST = (1, 9, 18, 25, 36)


def compare(
    ckpt_a: Checkpoint,
    ckpt_b: Checkpoint,
    test_sentences: Sequence[Sentence],
    board: Board,
    k_list: Sequence[int] = DEFAULT_K_LIST,
    labels: tuple[str, str] = ("cs", "flat"),
) -> CompareReport:
    """Evaluate two checkpoints on the same sentences, each under the query
    mode recorded in its metadata."""
    k_list = sorted(k_list)
    if max(k_list) > len(board.cards):
        raise EvalError(
            f"k={max(k_list)} exceeds board size {len(board.cards)}"
        )
    reports = []
    per_case: list[dict] = []
    for label, ckpt in zip(labels, (ckpt_a, ckpt_b)):
        mode = ckpt.meta.get("mode")
        if mode not in ("cs", "flat"):
            raise EvalError(
                f"checkpoint {label!r} has no query mode in metadata; "
                "was it trained with the pipeline?"
            )
        cases, unusable = build_eval_cases(test_sentences, board, mode)
        decoder = build_decoder(board, ckpt)
        results = evaluate_cases(ckpt, decoder, cases)
        reports.append(
            summarize(label, mode, ckpt_io.fingerprint(ckpt), results, k_list)
        )
        for i, (case, result) in enumerate(zip(cases, results)):
            if label == labels[0]:
                per_case.append(
                    {"index": i, "target": result.target_id, "rank": {label: result.rank}}
                )
            else:
                per_case[i]["rank"][label] = result.rank
    return CompareReport(
        k_list=list(k_list), unusable=unusable, models=reports, per_case=per_case
    )


def render_tables(report: CompareReport) -> str:
    """Two aligned text tables in the accuracy/MRR and entropy layout."""
    ks = report.k_list
    lines = []
    header = ["Model"] + [f"ACC@{k}" for k in ks] + ["MRR"]
    rows = [
        [m.label] + [f"{m.acc[k]:.4f}" for k in ks] + [f"{m.mrr:.4f}"]
        for m in report.models
    ]
    lines.extend(_format_table(header, rows))
    lines.append("")
    header = ["Model"] + [f"Entropy@{k}" for k in ks]
    rows = [
        [m.label] + [f"{m.entropy[k]:.4f}" for k in ks] for m in report.models
    ]
    lines.extend(_format_table(header, rows))
    lines.append("")
    lines.append(
        f"cases: {report.models[0].case_count}  unusable: {report.unusable}  "
        "entropy: natural log, mean over cases"
    )
    return "\n".join(lines)


def _format_table(header: list[str], rows: list[list[str]]) -> list[str]:
    widths = [
        max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))
    ]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    out = [fmt.format(*header)]
    out.extend(fmt.format(*row) for row in rows)
    return out


def report_to_dict(report: CompareReport) -> dict:
    return {
        "k_list": report.k_list,
        "unusable": report.unusable,
        "entropy_log_base": "e",
        "entropy_aggregation": "mean_over_cases",
        "models": {
            m.label: {
                "mode": m.mode,
                "fingerprint": m.fingerprint,
                "cases": m.case_count,
                "misses": m.misses,
                "acc": {str(k): v for k, v in m.acc.items()},
                "mrr": m.mrr,
                "entropy": {str(k): v for k, v in m.entropy.items()},
            }
            for m in report.models
        },
        "cases": report.per_case,
    }


def dump_rankings(
    path: str | Path,
    cases: Sequence[EvalCase],
    results: Sequence[CaseResult],
    top_k: int,
) -> None:
    """Per-case top-k rankings as JSON lines, for external analysis."""
    with open(path, "w", encoding="utf-8") as fh:
        for case, result in zip(cases, results):
            fh.write(
                json.dumps(
                    {
                        "target": case.target_id,
                        "rank": result.rank,
                        "top": [
                            {"card_id": cid, "log_prob": lp}
                            for cid, lp in zip(
                                result.ranked_ids[:top_k], result.log_probs[:top_k]
                            )
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
