"""Shared-task scoring: binary detection metrics, RMSE and Spearman's rho."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata


class UndefinedCorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class ClassificationReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def confusion(self) -> tuple[int, int, int, int]:
        return self.tp, self.fp, self.tn, self.fn


def _same_length(a, b) -> None:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} predictions vs {len(b)} gold values")
    if len(a) == 0:
        raise ValueError("cannot score empty inputs")


def f1_from_pr(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def report_from_confusion(tp: int, fp: int, tn: int, fn: int) -> ClassificationReport:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    total = tp + fp + tn + fn
    return ClassificationReport(
        precision, recall, f1_from_pr(precision, recall), (tp + tn) / total if total else 0.0, tp, fp, tn, fn
    )


def classification_report(pred: Sequence[bool], gold: Sequence[bool]) -> ClassificationReport:
    """Positive class is "humorous"; undefined ratios are reported as 0."""
    _same_length(pred, gold)
    p = np.asarray(pred, dtype=bool)
    g = np.asarray(gold, dtype=bool)
    tp = int(np.sum(p & g))
    fp = int(np.sum(p & ~g))
    tn = int(np.sum(~p & ~g))
    fn = int(np.sum(~p & g))
    return report_from_confusion(tp, fp, tn, fn)


def rmse(pred: Sequence[float], gold: Sequence[float]) -> float:
    _same_length(pred, gold)
    diff = np.asarray(pred, dtype=float) - np.asarray(gold, dtype=float)
    return float(np.sqrt(np.mean(diff**2)))


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("need at least two values")
    ra = rankdata(a, method="average")
    rb = rankdata(b, method="average")
    ra -= ra.mean()
    rb -= rb.mean()
    denom = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if denom == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    return float(np.clip((ra @ rb) / denom, -1.0, 1.0))


TABLE_COLUMNS = ("F1", "Precision", "Recall", "Accuracy", "RMSE")


def format_table(system: str, report: ClassificationReport | None = None, rmse_value: float | None = None) -> str:
    """Plain-text table with the Task 1 / Task 2 column layout."""
    cells = [
        report.f1 if report else None,
        report.precision if report else None,
        report.recall if report else None,
        report.accuracy if report else None,
        rmse_value,
    ]
    width = max(len(system), len("System"))
    head = "System".ljust(width) + "".join(c.rjust(11) for c in TABLE_COLUMNS)
    row = system.ljust(width) + "".join(("-" if v is None else f"{v:.3f}").rjust(11) for v in cells)
    return head + "\n" + row + "\n"


def report_json(report: ClassificationReport | None = None, **extra) -> str:
    out = {}
    if report is not None:
        out["classification"] = asdict(report)
    out.update({k: v for k, v in extra.items() if v is not None})
    return json.dumps(out, indent=2, sort_keys=True) + "\n"
