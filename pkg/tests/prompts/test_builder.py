from __future__ import annotations

import random

import pytest

from vqa_core.answers import Task, parse_answer
from vqa_prompts.builder import (
    build_dataset,
    build_qa_pairs,
    export_prompts,
    import_prompts,
    task_questions,
    visual_placeholders,
)
from vqa_prompts.levels import bucket_levels
from vqa_prompts.manifest import build_manifest
from vqa_prompts.templates import generate_templates
from vqa_prompts.types import ManifestRecord


@pytest.fixture(scope="module")
def templates():
    return generate_templates(200, seed=7)


def _manifest(n: int, seed: int = 0):
    rng = random.Random(seed)
    records = [ManifestRecord(f"vid{i:05d}", f"/data/{i}.mp4", round(rng.uniform(1, 5), 3)) for i in range(n)]
    return build_manifest(records, name="konvid-1k")


def test_placeholders():
    assert visual_placeholders(3) == "<image-1> <image-2> <image-3> <temporal>"
    with pytest.raises(ValueError):
        visual_placeholders(0)


def test_qa_pairs_for_one_record(templates):
    record = ManifestRecord("clip_7", "/data/clip_7.mp4", 3.24)
    regression, classification = build_qa_pairs(record, "good", templates, k=2, seed=11)
    assert regression.task is Task.REGRESSION
    assert classification.task is Task.CLASSIFICATION
    assert regression.answer == "The quality score of the video is 3.2."
    assert classification.answer == "The quality of the video is good."
    for pair in (regression, classification):
        assert pair.video_id == "clip_7"
        assert pair.question.endswith("<image-1> <image-2> <temporal>")
    assert {regression.template_id, classification.template_id} <= {t.template_id for t in templates}
    assert build_qa_pairs(record, "good", templates, k=2, seed=11) == (regression, classification)


def test_twelve_hundred_records_give_twenty_four_hundred_pairs(templates):
    manifest = _manifest(1200)
    pairs = build_dataset(manifest, templates, {vid: 8 for vid in manifest.video_ids}, seed=0)
    assert len(pairs) == 2400
    assert [p.task for p in pairs[:2]] == [Task.REGRESSION, Task.CLASSIFICATION]
    assert {p.video_id for p in pairs} == set(manifest.video_ids)


def test_pairs_carry_ground_truth(templates):
    manifest = _manifest(30)
    levels = bucket_levels(manifest)
    pairs = build_dataset(manifest, templates, {vid: 2 for vid in manifest.video_ids}, seed=0)
    mos = {r.video_id: r.mos for r in manifest.records}
    for pair in pairs:
        parsed = parse_answer(pair.answer, pair.task)
        if pair.task is Task.REGRESSION:
            assert parsed.score == pytest.approx(round(mos[pair.video_id], 1))
        else:
            assert parsed.level is levels[pair.video_id]
        assert pair.question.endswith("<image-1> <image-2> <temporal>")


def test_question_draw_matches_training_pairs(templates):
    manifest = _manifest(12)
    pairs = build_dataset(manifest, templates, {vid: 3 for vid in manifest.video_ids}, seed=5)
    for pair in pairs:
        assert task_questions(templates, pair.video_id, 3, seed=5)[pair.task] == pair.question


def test_export_is_byte_identical_across_runs(tmp_path, templates):
    manifest = _manifest(20)
    k = {vid: 4 for vid in manifest.video_ids}
    first = export_prompts(build_dataset(manifest, templates, k, seed=1), tmp_path / "a.jsonl")
    second = export_prompts(build_dataset(manifest, templates, k, seed=1), tmp_path / "b.jsonl")
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text(encoding="utf-8").splitlines()) == 40
    assert import_prompts(first) == build_dataset(manifest, templates, k, seed=1)


def test_export_refuses_empty(tmp_path):
    with pytest.raises(ValueError):
        export_prompts([], tmp_path / "empty.jsonl")
