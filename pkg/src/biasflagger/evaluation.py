"""Metrics (accuracy, precision, recall, F1, F2, ROC/AUC), per-fold
aggregation, bias-type co-occurrence counts, and CSV/JSON report emission.

Undefined metrics (zero denominators, single-class AUC) are reported as None,
never silently zero. AUC is accumulated in integer arithmetic so the
trapezoid sweep equals the Mann-Whitney pair statistic exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .labeling import BiasType

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "f2", "auc")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsRecord:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    f2: float | None
    auc: float | None = None
    task: str | None = None
    method: str | None = None
    variation: str | None = None
    fold: int | None = None

    def value(self, name: str) -> float | None:
        return getattr(self, name)


def confusion(labels: Sequence[int], predictions: Sequence[int]) -> ConfusionCounts:
    if len(labels) != len(predictions):
        raise ValueError(f"length mismatch: {len(labels)} labels, {len(predictions)} predictions")
    if not labels:
        raise ValueError("need at least one example")
    tp = fp = fn = tn = 0
    for y, yhat in zip(labels, predictions):
        if y == 1 and yhat == 1:
            tp += 1
        elif y == 0 and yhat == 1:
            fp += 1
        elif y == 1 and yhat == 0:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def f_beta(precision: float, recall: float, beta: float) -> float | None:
    den = beta * beta * precision + recall
    if den == 0.0:
        return None
    return (1.0 + beta * beta) * precision * recall / den


def metrics(c: ConfusionCounts, **context) -> MetricsRecord:
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = f2 = None
    if precision is not None and recall is not None:
        f1 = f_beta(precision, recall, 1.0)
        f2 = f_beta(precision, recall, 2.0)
    return MetricsRecord(
        accuracy=_ratio(c.tp + c.tn, c.total),
        precision=precision,
        recall=recall,
        f1=f1,
        f2=f2,
        **context,
    )


def roc_auc(
    labels: Sequence[int], scores: Sequence[float]
) -> tuple[list[tuple[float, float, float]], float | None]:
    """(curve, auc): curve points are (threshold, fpr, tpr) swept over unique
    scores, endpoints included; ties are grouped. Single-class input yields an
    undefined (None) auc with a degenerate curve."""
    if len(labels) != len(scores):
        raise ValueError("length mismatch")
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return [(math.inf, 0.0, 0.0), (-math.inf, 1.0, 1.0)], None

    by_score: dict[float, list[int]] = {}
    for y, s in zip(labels, scores):
        by_score.setdefault(float(s), []).append(y)

    tp = fp = 0
    area2 = 0  # integer accumulation: equals twice the Mann-Whitney numerator
    curve = [(math.inf, 0.0, 0.0)]
    for s in sorted(by_score, reverse=True):
        group = by_score[s]
        dtp = sum(group)
        dfp = len(group) - dtp
        area2 += dfp * (2 * tp + dtp)
        tp += dtp
        fp += dfp
        curve.append((s, fp / n_neg, tp / n_pos))
    return curve, area2 / (2 * n_pos * n_neg)


@dataclass(frozen=True)
class FoldAggregate:
    task: str | None
    method: str | None
    variation: str | None
    K: int
    stats: Mapping[str, tuple[float, float | None, int]]  # metric -> (mean, std, n_defined)

    def mean(self, name: str) -> float:
        return self.stats[name][0]


def aggregate_folds(records: Sequence[MetricsRecord]) -> FoldAggregate:
    """Mean and sample (n-1) standard deviation per metric over folds where
    the metric is defined; the defined count is carried along."""
    if not records:
        raise ValueError("no fold records to aggregate")
    tasks = {r.task for r in records}
    methods = {r.method for r in records}
    variations = {r.variation for r in records}
    if len(tasks) > 1 or len(methods) > 1 or len(variations) > 1:
        raise ValueError("records mix tasks, methods or variations")
    stats = {}
    for name in METRIC_NAMES:
        values = [r.value(name) for r in records if r.value(name) is not None]
        if not values:
            continue
        mean = sum(values) / len(values)
        if len(values) >= 2:
            std = math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))
        else:
            std = None
        stats[name] = (mean, std, len(values))
    return FoldAggregate(
        task=tasks.pop(), method=methods.pop(), variation=variations.pop(),
        K=len(records), stats=stats,
    )


def cooccurrence(positives) -> tuple[list[list[int]], dict[BiasType, int]]:
    """6x6 symmetric counts of joint type labels; the diagonal holds per-type
    totals."""
    types = list(BiasType)
    matrix = [[0] * len(types) for _ in types]
    for ex in positives:
        labels = ex.labels if hasattr(ex, "labels") else ex
        active = [i for i, t in enumerate(types) if labels.get(t) == 1]
        for i in active:
            for j in active:
                matrix[i][j] += 1
    totals = {t: matrix[i][i] for i, t in enumerate(types)}
    return matrix, totals


def mean_roc_points(
    curves: Sequence[Sequence[tuple[float, float, float]]], grid_size: int = 101
) -> list[tuple[float, float]]:
    """Vertical averaging: mean TPR at a fixed FPR grid, for external plotters."""
    grid = [i / (grid_size - 1) for i in range(grid_size)]
    out = []
    for g in grid:
        tprs = []
        for curve in curves:
            best = 0.0
            for _, fpr, tpr in curve:
                if fpr <= g:
                    best = max(best, tpr)
            tprs.append(best)
        out.append((g, sum(tprs) / len(tprs)))
    return out


# --- report emission ---------------------------------------------------------

def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def emit_report(
    aggregates: Sequence[FoldAggregate],
    curves: Mapping[str, Sequence[tuple[float, float, float]]],
    destination: str | Path,
) -> list[Path]:
    """One summary CSV (task, method, variation, metric, mean, std, folds),
    one CSV per named ROC curve, and a machine-readable JSON summary.
    Byte-stable for identical inputs."""
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    written = []

    rows = []
    for agg in aggregates:
        for metric in METRIC_NAMES:
            if metric not in agg.stats:
                continue
            mean, std, n = agg.stats[metric]
            rows.append({
                "task": agg.task or "", "method": agg.method or "",
                "variation": agg.variation or "",
                "metric": metric, "mean": _fmt(mean), "std": _fmt(std), "folds": n,
            })
    rows.sort(key=lambda r: (r["task"], r["method"], r["variation"], r["metric"]))
    summary = dest / "summary.csv"
    with summary.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["task", "method", "variation", "metric", "mean", "std", "folds"]
        )
        writer.writeheader()
        writer.writerows(rows)
    written.append(summary)

    for name in sorted(curves):
        path = dest / f"roc_{name}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "fpr", "tpr"])
            for threshold, fpr, tpr in curves[name]:
                writer.writerow([repr(float(threshold)), _fmt(fpr), _fmt(tpr)])
        written.append(path)

    blob = {
        "aggregates": [
            {
                "task": agg.task, "method": agg.method, "variation": agg.variation,
                "folds": agg.K,
                "metrics": {m: {"mean": v[0], "std": v[1], "defined": v[2]}
                            for m, v in sorted(agg.stats.items())},
            }
            for agg in aggregates
        ],
        "curves": sorted(curves),
    }
    summary_json = dest / "summary.json"
    summary_json.write_text(json.dumps(blob, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    written.append(summary_json)
    return written
