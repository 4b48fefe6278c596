from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

from vqa_core.answers import QualityPrediction
from vqa_core.errors import DegenerateInput
from vqa_eval.metrics import ACCURACY_KEYS, level_accuracy, mean_or_none, plcc, srcc
from vqa_prompts.types import QualityLabel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionPair:
    video_id: str
    prediction: QualityPrediction
    label: QualityLabel


@dataclass
class PredictionSet:
    """Predictions with ground truth; failed parses are counted, not stored as scores."""

    pairs: List[PredictionPair] = field(default_factory=list)
    parse_failures: int = 0

    def add(self, pair: PredictionPair) -> None:
        if any(p.video_id == pair.video_id for p in self.pairs):
            raise ValueError(f"duplicate prediction for {pair.video_id!r}")
        self.pairs.append(pair)

    def __len__(self) -> int:
        return len(self.pairs)

    def scored(self) -> Tuple[List[float], List[float]]:
        kept = [p for p in self.pairs if p.prediction.score is not None]
        return [p.prediction.score for p in kept], [p.label.mos for p in kept]

    def level_accuracy(self) -> Dict[str, Optional[float]]:
        kept = [p for p in self.pairs if p.prediction.level is not None]
        return level_accuracy([p.prediction.level for p in kept], [p.label.level for p in kept])


@dataclass(frozen=True)
class EvalReport:
    dataset: str
    protocol: str
    srcc: Optional[float]
    plcc: Optional[float]
    accuracy: Dict[str, Optional[float]]
    n: int
    parse_failures: int = 0
    fold_id: Optional[str] = None
    config_fingerprint: str = ""
    runtime_s_per_video: Optional[float] = None
    setting: Optional[str] = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        return cls(**obj)


def _correlation(fn, pred: List[float], gt: List[float], dataset: str) -> Optional[float]:
    try:
        return fn(pred, gt)
    except DegenerateInput as exc:
        log.warning("%s on %s is undefined: %s", fn.__name__, dataset, exc)
        return None


def make_report(
    preds: PredictionSet,
    dataset: str,
    protocol: str,
    fold_id: Optional[str] = None,
    config_fingerprint: str = "",
    runtime_s_per_video: Optional[float] = None,
    setting: Optional[str] = None,
) -> EvalReport:
    pred, gt = preds.scored()
    return EvalReport(
        dataset=dataset,
        protocol=protocol,
        srcc=_correlation(srcc, pred, gt, dataset),
        plcc=_correlation(plcc, pred, gt, dataset),
        accuracy=preds.level_accuracy(),
        n=len(preds),
        parse_failures=preds.parse_failures,
        fold_id=fold_id,
        config_fingerprint=config_fingerprint,
        runtime_s_per_video=runtime_s_per_video,
        setting=setting,
    )


def mean_report(reports: List[EvalReport]) -> EvalReport:
    """Average of fold reports; None entries are skipped per field."""
    if not reports:
        raise ValueError("no reports to average")
    first = reports[0]
    return EvalReport(
        dataset=first.dataset,
        protocol=first.protocol,
        srcc=mean_or_none([r.srcc for r in reports]),
        plcc=mean_or_none([r.plcc for r in reports]),
        accuracy={key: mean_or_none([r.accuracy.get(key) for r in reports]) for key in ACCURACY_KEYS},
        n=sum(r.n for r in reports),
        parse_failures=sum(r.parse_failures for r in reports),
        fold_id="mean",
        config_fingerprint=first.config_fingerprint,
        runtime_s_per_video=mean_or_none([r.runtime_s_per_video for r in reports]),
        setting=first.setting,
    )
