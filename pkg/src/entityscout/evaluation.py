"""Metrics and harnesses: unique average precision, token F1, query
latency measurement, and learning-curve aggregation."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

from .corpus import JudgmentSet, normalize_surface
from .model import QueryModel, prune


class RankedToken(NamedTuple):
    token_id: int
    surface: str
    relevant: bool | None = None


@dataclass(frozen=True)
class LearningCurve:
    strategy: str
    query_id: str
    seed: int
    uap_by_round: tuple[float, ...]


@dataclass(frozen=True)
class TimingRow:
    q_size: int | str  # feature count, or "full" for the full-scan baseline
    median_s: float
    trials: int


@dataclass(frozen=True)
class TimingReport:
    rows: tuple[TimingRow, ...]


def dedup_ranking(ranking: Iterable[RankedToken]) -> list[RankedToken]:
    """Keep only the first occurrence of each normalized surface form.

    Later mentions are dropped whether relevant or not; forms that
    normalize to "" (bare punctuation) are dropped entirely.
    """
    seen: set[str] = set()
    kept = []
    for item in ranking:
        key = normalize_surface(item.surface)
        if not key or key in seen:
            continue
        seen.add(key)
        kept.append(item)
    return kept


def unique_ap(ranking: Sequence[RankedToken], judgments: JudgmentSet) -> float:
    """Average precision over the deduplicated ranking.

    The recall base is the number of distinct judged forms, so forms never
    retrieved count against the score. Items without a pre-marked relevance
    flag are resolved by normalized-surface membership in the judgment set.
    """
    if not judgments.accepted_forms:
        raise ValueError("empty judgment set")
    kept = dedup_ranking(
        r if isinstance(r, RankedToken) else RankedToken(*r) for r in ranking
    )
    hits = 0
    ap_sum = 0.0
    for rank, item in enumerate(kept, start=1):
        relevant = item.relevant
        if relevant is None:
            relevant = normalize_surface(item.surface) in judgments.accepted_forms
        if relevant:
            hits += 1
            ap_sum += hits / rank
    return ap_sum / len(judgments.accepted_forms)


def token_f1(
    predicted: Sequence[bool], gold: Sequence[bool]
) -> tuple[float, float, float]:
    """Binary precision/recall/F1 over aligned token label vectors.

    Zero-division convention: precision is 0 when nothing is predicted
    positive, recall is 0 when nothing is gold positive, F1 is 0 when
    precision + recall is 0.
    """
    if len(predicted) != len(gold):
        raise ValueError(
            f"length mismatch: {len(predicted)} predicted vs {len(gold)} gold"
        )
    tp = sum(1 for p, g in zip(predicted, gold) if p and g)
    fp = sum(1 for p, g in zip(predicted, gold) if p and not g)
    fn = sum(1 for p, g in zip(predicted, gold) if not p and g)
    return _prf(tp, fp, fn)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def micro_macro_f1(
    per_class: dict[str, tuple[Sequence[bool], Sequence[bool]]]
) -> tuple[float, float]:
    """Aggregate per-class (predicted, gold) pairs into micro and macro F1."""
    if not per_class:
        raise ValueError("no classes")
    tp = fp = fn = 0
    f1s = []
    for predicted, gold in per_class.values():
        if len(predicted) != len(gold):
            raise ValueError("length mismatch in per-class labels")
        c_tp = sum(1 for p, g in zip(predicted, gold) if p and g)
        c_fp = sum(1 for p, g in zip(predicted, gold) if p and not g)
        c_fn = sum(1 for p, g in zip(predicted, gold) if not p and g)
        tp, fp, fn = tp + c_tp, fp + c_fp, fn + c_fn
        f1s.append(_prf(c_tp, c_fp, c_fn)[2])
    micro = _prf(tp, fp, fn)[2]
    macro = sum(f1s) / len(f1s)
    return micro, macro


def time_queries(
    index,
    model: QueryModel,
    schedule: Sequence[int],
    trials: int = 5,
    k: int = 100,
    clock: Callable[[], float] = time.perf_counter,
) -> TimingReport:
    """Median top-k latency for the model pruned to each size in the
    schedule, plus one full-scan baseline row.

    The first call is a discarded warmup so jit compilation and cache
    effects stay out of the medians.
    """
    if trials < 5:
        raise ValueError("trials must be >= 5")
    if any(size < 1 for size in schedule):
        raise ValueError("schedule entries must be >= 1")
    from . import _kernels

    _kernels.warmup()
    pruned = [prune(model, size) for size in schedule]
    for p in pruned:  # warmup each query path once
        index.score_topk(p, k)
    index.score_all_bruteforce(model)

    # trials interleave round-robin so transient load hits every row equally
    samples: list[list[float]] = [[] for _ in pruned]
    full_samples: list[float] = []
    for _ in range(trials):
        for i, p in enumerate(pruned):
            t0 = clock()
            index.score_topk(p, k)
            samples[i].append(clock() - t0)
        t0 = clock()
        index.score_all_bruteforce(model)
        full_samples.append(clock() - t0)

    rows = [
        TimingRow(q_size=p.size(), median_s=statistics.median(s), trials=trials)
        for p, s in zip(pruned, samples)
    ]
    rows.append(
        TimingRow(q_size="full", median_s=statistics.median(full_samples), trials=trials)
    )
    return TimingReport(rows=tuple(rows))


def curve_aggregate(
    curves: Sequence[LearningCurve],
) -> list[tuple[str, int, float, float, int]]:
    """Per-strategy per-round mean and standard error.

    Shorter curves are padded with their final value: a session that
    finishes early keeps its final score. Returns rows of
    (strategy, round, mean, stderr, n) ordered by strategy then round.
    """
    if not curves:
        raise ValueError("no curves")
    max_rounds = max(len(c.uap_by_round) for c in curves)
    by_strategy: dict[str, list[tuple[float, ...]]] = {}
    for c in curves:
        padded = c.uap_by_round
        if not padded:
            raise ValueError("curve with no rounds")
        if len(padded) < max_rounds:
            padded = padded + (padded[-1],) * (max_rounds - len(padded))
        by_strategy.setdefault(c.strategy, []).append(padded)
    rows = []
    for strategy in sorted(by_strategy):
        group = by_strategy[strategy]
        n = len(group)
        for r in range(max_rounds):
            vals = [curve[r] for curve in group]
            mean = sum(vals) / n
            if n > 1:
                stderr = statistics.stdev(vals) / n**0.5
            else:
                stderr = 0.0
            rows.append((strategy, r + 1, mean, stderr, n))
    return rows
