from __future__ import annotations

import pytest

from vqa_core.answers import (
    QualityLevel,
    QualityPrediction,
    Task,
    parse_answer,
    render_answer,
    render_classification_answer,
    render_regression_answer,
)
from vqa_core.errors import ParseError


def test_render_frames():
    assert render_regression_answer(73.44) == "The quality score of the video is 73.4."
    assert render_classification_answer("good") == "The quality of the video is good."
    assert render_answer(Task.CLASSIFICATION, 10.0, QualityLevel.POOR) == "The quality of the video is poor."


@pytest.mark.parametrize("score", [0.0, 5.0, 42.1, 99.9, -3.5])
def test_regression_answer_parses_back(score):
    parsed = parse_answer(render_regression_answer(score), Task.REGRESSION)
    assert parsed.score == pytest.approx(score)
    assert parsed.level is None


def test_parse_tolerates_surrounding_text():
    parsed = parse_answer("well, the quality score of the video is 61 overall", "regression")
    assert parsed.score == 61.0
    assert parse_answer("I'd call it FAIR.", Task.CLASSIFICATION).level is QualityLevel.FAIR


@pytest.mark.parametrize(
    "text,task",
    [
        ("The quality score of the video is .", Task.REGRESSION),
        ("nothing to see", Task.REGRESSION),
        ("The quality of the video is decent.", Task.CLASSIFICATION),
        ("", Task.CLASSIFICATION),
    ],
)
def test_unparseable_answers_raise(text, task):
    with pytest.raises(ParseError):
        parse_answer(text, task)


def test_merged_keeps_first_known_fields():
    a = QualityPrediction(score=50.0, raw_text="a")
    b = QualityPrediction(level=QualityLevel.GOOD, raw_text="b")
    merged = a.merged(b)
    assert merged.score == 50.0
    assert merged.level is QualityLevel.GOOD
    assert merged.raw_text == "a | b"
    assert merged.to_json() == {"score": 50.0, "level": "good", "raw_text": "a | b"}


def test_prediction_rejects_non_finite_score():
    with pytest.raises(ValueError):
        QualityPrediction(score=float("nan"))
