from __future__ import annotations

import json

import pytest

from vqa_core.answers import QualityLevel, QualityPrediction
from vqa_eval.folds import kfold_split
from vqa_eval.reports import format_table, read_reports, write_reports
from vqa_eval.types import PredictionPair, PredictionSet, make_report, mean_report
from vqa_prompts.manifest import build_manifest
from vqa_prompts.types import ManifestRecord, QualityLabel


def _pair(vid, score, level, mos, gt_level):
    return PredictionPair(
        video_id=vid,
        prediction=QualityPrediction(score=score, level=None if level is None else QualityLevel(level)),
        label=QualityLabel(mos=mos, level=QualityLevel(gt_level)),
    )


def _preds():
    preds = PredictionSet()
    preds.add(_pair("a", 10.0, "poor", 12.0, "poor"))
    preds.add(_pair("b", 50.0, "good", 48.0, "fair"))
    preds.add(_pair("c", 80.0, "good", 85.0, "good"))
    preds.add(_pair("d", None, None, 30.0, "poor"))
    preds.parse_failures = 2
    return preds


def test_parse_failures_are_excluded_not_substituted():
    preds = _preds()
    assert preds.scored() == ([10.0, 50.0, 80.0], [12.0, 48.0, 85.0])
    report = make_report(preds, dataset="toy", protocol="in_sample")
    assert report.n == 4
    assert report.parse_failures == 2
    assert report.srcc == pytest.approx(1.0)
    assert report.accuracy == {"poor": 1.0, "fair": 0.0, "good": 1.0, "total": pytest.approx(2 / 3)}


def test_duplicate_video_is_rejected():
    preds = _preds()
    with pytest.raises(ValueError):
        preds.add(_pair("a", 1.0, "poor", 1.0, "poor"))


def test_undefined_correlation_becomes_null(caplog):
    preds = PredictionSet()
    preds.add(_pair("a", 10.0, None, 12.0, "poor"))
    report = make_report(preds, dataset="one", protocol="ood")
    assert report.srcc is None and report.plcc is None
    assert "undefined" in caplog.text


def test_mean_report_averages_present_values():
    a = make_report(_preds(), dataset="toy", protocol="finetune", fold_id="0")
    b = make_report(PredictionSet(), dataset="toy", protocol="finetune", fold_id="1")
    mean = mean_report([a, b])
    assert mean.fold_id == "mean"
    assert mean.n == 4
    assert mean.srcc == a.srcc
    with pytest.raises(ValueError):
        mean_report([])


def test_write_and_read_reports(tmp_path):
    reports = [make_report(_preds(), dataset="toy", protocol="in_sample", runtime_s_per_video=0.25)]
    folds = kfold_split(build_manifest([ManifestRecord(f"v{i}", "x", float(i)) for i in range(6)]), 3, seed=0)
    paths = write_reports(reports, tmp_path / "reports", folds=folds)
    assert set(paths) == {"reports_json", "reports_txt", "folds_json"}
    assert read_reports(tmp_path / "reports") == reports
    assert set(json.loads(paths["folds_json"].read_text(encoding="utf-8"))) == {"0", "1", "2"}
    schema = json.loads((tmp_path / "reports" / "schema.json").read_text(encoding="utf-8"))
    assert schema["kind"] == "eval_reports"

    table = paths["reports_txt"].read_text(encoding="utf-8").splitlines()
    assert table[0].split()[:3] == ["dataset", "protocol", "setting"]
    assert table[1].split()[:2] == ["toy", "in_sample"]
    assert "0.250" in table[1]


def test_table_marks_missing_values():
    report = make_report(PredictionSet(), dataset="", protocol="ood")
    row = format_table([report]).splitlines()[1]
    assert row.split()[0] == "-"
