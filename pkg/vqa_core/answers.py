"""Answer sentence frames and their inverse.

Regression:      "The quality score of the video is {score:.1f}."
Classification:  "The quality of the video is {level}."
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from vqa_core.errors import ParseError


class Task(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class QualityLevel(str, Enum):
    POOR = "poor"
    FAIR = "fair"
    GOOD = "good"


LEVEL_ORDER = (QualityLevel.POOR, QualityLevel.FAIR, QualityLevel.GOOD)

_SCORE_RE = re.compile(r"quality score of the video is\s*(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_LEVEL_RE = re.compile(r"\b(poor|fair|good)\b", re.IGNORECASE)


@dataclass(frozen=True)
class QualityPrediction:
    score: Optional[float] = None
    level: Optional[QualityLevel] = None
    raw_text: str = ""

    def __post_init__(self) -> None:
        if self.score is not None and not math.isfinite(self.score):
            raise ValueError(f"predicted score must be finite (got {self.score!r})")

    def merged(self, other: "QualityPrediction") -> "QualityPrediction":
        return QualityPrediction(
            score=self.score if self.score is not None else other.score,
            level=self.level if self.level is not None else other.level,
            raw_text=" | ".join(t for t in (self.raw_text, other.raw_text) if t),
        )

    def to_json(self) -> dict:
        return {
            "score": self.score,
            "level": self.level.value if self.level is not None else None,
            "raw_text": self.raw_text,
        }


def render_regression_answer(score: float) -> str:
    return f"The quality score of the video is {score:.1f}."


def render_classification_answer(level: QualityLevel | str) -> str:
    return f"The quality of the video is {QualityLevel(level).value}."


def render_answer(task: Task, score: float, level: QualityLevel | str) -> str:
    if Task(task) is Task.REGRESSION:
        return render_regression_answer(score)
    return render_classification_answer(level)


def parse_answer(text: str, task: Task | str) -> QualityPrediction:
    task = Task(task)
    if task is Task.REGRESSION:
        match = _SCORE_RE.search(text)
        if match is None:
            raise ParseError(f"no quality score in {text!r}")
        return QualityPrediction(score=float(match.group(1)), raw_text=text)
    match = _LEVEL_RE.search(text)
    if match is None:
        raise ParseError(f"no quality level in {text!r}")
    return QualityPrediction(level=QualityLevel(match.group(1).lower()), raw_text=text)
