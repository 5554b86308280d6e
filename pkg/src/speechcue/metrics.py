"""Per-class, weighted and macro F1 plus row-normalized confusion matrices."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from speechcue.errors import LabelOutsideSet, LabelSetMismatch, LengthMismatch
from speechcue.jsonl import REPORT, tag


@dataclass(frozen=True)
class EvalReport:
    """Scores for one prediction run.

    ``confusion[i][j]`` is the fraction of gold-``i`` items predicted as ``j``;
    ``unparseable_share[i]`` is the fraction of gold-``i`` items with no usable
    prediction, so each non-empty row of ``confusion`` plus its unparseable
    share sums to one. Rows with zero support are all zero.
    """

    label_set: tuple[str, ...]
    per_class_f1: dict[str, float]
    weighted_f1: float
    macro_f1: float
    confusion: tuple[tuple[float, ...], ...]
    unparseable_share: tuple[float, ...]
    support: dict[str, int]
    unparseable_count: int

    @property
    def empty_rows(self) -> list[str]:
        return [lab for lab in self.label_set if self.support[lab] == 0]

    def to_dict(self) -> dict:
        return {
            "schema": tag(REPORT),
            "label_set": list(self.label_set),
            "per_class_f1": {k: round(v, 12) for k, v in self.per_class_f1.items()},
            "weighted_f1": round(self.weighted_f1, 12),
            "macro_f1": round(self.macro_f1, 12),
            "confusion": [[round(v, 12) for v in row] for row in self.confusion],
            "unparseable_share": [round(v, 12) for v in self.unparseable_share],
            "support": dict(self.support),
            "unparseable_count": self.unparseable_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> EvalReport:
        return cls(
            tuple(doc["label_set"]),
            dict(doc["per_class_f1"]),
            doc["weighted_f1"],
            doc["macro_f1"],
            tuple(tuple(row) for row in doc["confusion"]),
            tuple(doc["unparseable_share"]),
            dict(doc["support"]),
            doc["unparseable_count"],
        )


def score(
    gold: Sequence[str], predicted: Sequence[str | None], label_set: Sequence[str]
) -> EvalReport:
    """Score predictions; ``None`` marks an unparseable prediction and always counts as wrong."""
    if len(gold) != len(predicted):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(predicted)} predictions")
    if not gold:
        raise LengthMismatch("nothing to score")
    labels = tuple(label_set)
    index = {lab: i for i, lab in enumerate(labels)}
    k = len(labels)

    counts = np.zeros((k, k), dtype=np.int64)
    lost = np.zeros(k, dtype=np.int64)
    for g, p in zip(gold, predicted):
        if g not in index:
            raise LabelOutsideSet(f"gold label {g!r}")
        if p is None:
            lost[index[g]] += 1
            continue
        if p not in index:
            raise LabelOutsideSet(f"predicted label {p!r}")
        counts[index[g], index[p]] += 1

    support = counts.sum(axis=1) + lost
    tp = np.diag(counts).astype(float)
    predicted_pos = counts.sum(axis=0).astype(float)
    # 2PR/(P+R) written over integer counts: 2tp / (2tp + fp + fn)
    denom = predicted_pos + support
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = np.where(denom > 0, 2 * tp / denom, 0.0)
        confusion = np.where(support[:, None] > 0, counts / support[:, None], 0.0)
        share = np.where(support > 0, lost / support, 0.0)

    weighted = float(np.dot(f1, support) / support.sum())
    return EvalReport(
        label_set=labels,
        per_class_f1={lab: float(f1[i]) for i, lab in enumerate(labels)},
        weighted_f1=weighted,
        macro_f1=float(f1.mean()),
        confusion=tuple(tuple(float(v) for v in row) for row in confusion),
        unparseable_share=tuple(float(v) for v in share),
        support={lab: int(support[i]) for i, lab in enumerate(labels)},
        unparseable_count=int(lost.sum()),
    )


def weighted_f1_batch(gold: np.ndarray, predicted: np.ndarray, k: int) -> np.ndarray:
    """Weighted F1 for many prediction vectors at once.

    ``gold`` has shape (n,), ``predicted`` shape (trials, n), both integer class
    indices in [0, k). Returns one score per trial.
    """
    trials, n = predicted.shape
    cells = (gold[None, :] * k + predicted) + (np.arange(trials)[:, None] * k * k)
    counts = np.bincount(cells.ravel(), minlength=trials * k * k).reshape(trials, k, k)
    tp = np.diagonal(counts, axis1=1, axis2=2).astype(float)
    support = counts.sum(axis=2).astype(float)
    pred_pos = counts.sum(axis=1).astype(float)
    denom = pred_pos + support
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = np.where(denom > 0, 2 * tp / denom, 0.0)
    return (f1 * support).sum(axis=1) / n


@dataclass(frozen=True)
class ReportDiff:
    per_class: dict[str, float]
    weighted_f1: float
    macro_f1: float

    def formatted(self, digits: int = 3) -> dict[str, str]:
        out = {lab: format_delta(v, digits) for lab, v in self.per_class.items()}
        out["weighted_f1"] = format_delta(self.weighted_f1, digits)
        out["macro_f1"] = format_delta(self.macro_f1, digits)
        return out


def format_delta(points: float, digits: int = 3) -> str:
    """Signed percentage-point delta, e.g. ``+1.980%``."""
    value = round(points, digits)
    if value == 0:
        value = 0.0  # no "-0.000%"
    return f"{value:+.{digits}f}%"


def diff_reports(a: EvalReport, b: EvalReport) -> ReportDiff:
    """``b - a`` in percentage points, per class and in aggregate."""
    if tuple(a.label_set) != tuple(b.label_set):
        raise LabelSetMismatch(f"{list(a.label_set)} vs {list(b.label_set)}")
    return ReportDiff(
        per_class={
            lab: 100.0 * (b.per_class_f1[lab] - a.per_class_f1[lab]) for lab in a.label_set
        },
        weighted_f1=100.0 * (b.weighted_f1 - a.weighted_f1),
        macro_f1=100.0 * (b.macro_f1 - a.macro_f1),
    )


def format_report(report: EvalReport) -> str:
    """Aligned plain-text table, scores as percentages to three decimals."""
    width = max(12, *(len(lab) for lab in report.label_set))
    lines = [f"{'label':<{width}}  {'F1 %':>8}  {'support':>7}"]
    for lab in report.label_set:
        lines.append(
            f"{lab:<{width}}  {100 * report.per_class_f1[lab]:8.3f}  {report.support[lab]:7d}"
        )
    lines.append(f"{'weighted F1':<{width}}  {100 * report.weighted_f1:8.3f}")
    lines.append(f"{'macro F1':<{width}}  {100 * report.macro_f1:8.3f}")
    lines.append(f"{'unparseable':<{width}}  {report.unparseable_count:8d}")
    lines.append("")
    lines.append("normalized confusion (rows: gold, columns: predicted)")
    header = " " * width + "  " + "  ".join(f"{lab[:8]:>8}" for lab in report.label_set)
    lines.append(header)
    for lab, row in zip(report.label_set, report.confusion):
        lines.append(
            f"{lab:<{width}}  " + "  ".join(f"{100 * v:7.2f}%" for v in row)
        )
    return "\n".join(lines)
