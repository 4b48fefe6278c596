from __future__ import annotations

import math
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import stats
from sklearn.metrics import confusion_matrix

from vqa_core.answers import LEVEL_ORDER
from vqa_core.errors import DegenerateInput

ACCURACY_KEYS = tuple(level.value for level in LEVEL_ORDER) + ("total",)


def _checked(pred: Sequence[float], gt: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(pred, dtype=np.float64)
    y = np.asarray(gt, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInput(f"inputs must be equal-length vectors (got {x.shape} and {y.shape})")
    if x.size < 2:
        raise DegenerateInput(f"correlation needs at least 2 samples (got {x.size})")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DegenerateInput("inputs contain non-finite values")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInput("correlation is undefined for a constant vector")
    return x, y


def _bounded(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DegenerateInput(f"{name} came out non-finite ({value})")
    return min(1.0, max(-1.0, value))


def srcc(pred: Sequence[float], gt: Sequence[float]) -> float:
    """Spearman rank-order correlation, average ranks for ties."""
    x, y = _checked(pred, gt)
    return _bounded(stats.spearmanr(x, y)[0], "srcc")


def plcc(pred: Sequence[float], gt: Sequence[float]) -> float:
    """Pearson linear correlation on the raw predictions (no logistic pre-fit)."""
    x, y = _checked(pred, gt)
    return _bounded(stats.pearsonr(x, y)[0], "plcc")


def level_accuracy(pred_levels: Sequence[str], gt_levels: Sequence[str]) -> Dict[str, Optional[float]]:
    """Per ground-truth level accuracy plus total; a level with no ground truth maps to None."""
    if len(pred_levels) != len(gt_levels):
        raise ValueError(f"length mismatch: {len(pred_levels)} predictions, {len(gt_levels)} labels")
    out: Dict[str, Optional[float]] = {key: None for key in ACCURACY_KEYS}
    if not gt_levels:
        return out
    labels = [level.value for level in LEVEL_ORDER]
    cm = confusion_matrix(
        [str(getattr(g, "value", g)) for g in gt_levels],
        [str(getattr(p, "value", p)) for p in pred_levels],
        labels=labels,
    )
    for i, label in enumerate(labels):
        support = int(cm[i].sum())
        out[label] = None if support == 0 else float(cm[i, i]) / support
    out["total"] = float(np.trace(cm)) / len(gt_levels)
    return out


def mean_or_none(values: Sequence[Optional[float]]) -> Optional[float]:
    kept = [v for v in values if v is not None and not math.isnan(v)]
    return float(sum(kept) / len(kept)) if kept else None
