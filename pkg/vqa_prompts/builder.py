from __future__ import annotations

import logging
import random
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

from vqa_core.answers import QualityLevel, Task, render_classification_answer, render_regression_answer
from vqa_core.decoder.vocab import TEMPORAL_MARKER, image_placeholder
from vqa_core.writers import JsonLinesWriter, read_json_lines
from vqa_prompts.levels import bucket_levels
from vqa_prompts.templates import render_quality_prompt
from vqa_prompts.types import DatasetManifest, ManifestRecord, PromptTemplate, QAInstruction

log = logging.getLogger(__name__)


def visual_placeholders(k: int) -> str:
    """`<image-1> ... <image-K> <temporal>`: K key-frame anchors then the temporal marker."""
    if k < 1:
        raise ValueError(f"K must be >= 1 (got {k})")
    return " ".join([image_placeholder(i) for i in range(1, k + 1)] + [TEMPORAL_MARKER])


def render_question(template: PromptTemplate, task: Task, k: int) -> str:
    return f"{render_quality_prompt(template, task)} {visual_placeholders(k)}"


def record_rng(seed: int, video_id: str) -> random.Random:
    return random.Random(f"{seed}:{video_id}")


def draw_templates(templates: Sequence[PromptTemplate], video_id: str, seed: int) -> Tuple[PromptTemplate, PromptTemplate]:
    """(regression, classification) templates for one video, drawn with replacement."""
    if not templates:
        raise ValueError("templates must be nonempty")
    rng = record_rng(seed, video_id)
    return rng.choice(templates), rng.choice(templates)


def task_questions(templates: Sequence[PromptTemplate], video_id: str, k: int, seed: int) -> Dict[Task, str]:
    """The questions `build_qa_pairs` would ask about `video_id`; no ground truth needed."""
    reg_t, cls_t = draw_templates(templates, video_id, seed)
    return {
        Task.REGRESSION: render_question(reg_t, Task.REGRESSION, k),
        Task.CLASSIFICATION: render_question(cls_t, Task.CLASSIFICATION, k),
    }


def build_qa_pairs(
    record: ManifestRecord,
    level: QualityLevel | str,
    templates: Sequence[PromptTemplate],
    k: int,
    seed: int,
) -> Tuple[QAInstruction, QAInstruction]:
    """One regression and one classification pair."""
    reg_t, cls_t = draw_templates(templates, record.video_id, seed)
    regression = QAInstruction(
        video_id=record.video_id,
        task=Task.REGRESSION,
        question=render_question(reg_t, Task.REGRESSION, k),
        answer=render_regression_answer(record.mos),
        template_id=reg_t.template_id,
    )
    classification = QAInstruction(
        video_id=record.video_id,
        task=Task.CLASSIFICATION,
        question=render_question(cls_t, Task.CLASSIFICATION, k),
        answer=render_classification_answer(level),
        template_id=cls_t.template_id,
    )
    return regression, classification


def build_dataset(
    manifest: DatasetManifest,
    templates: Sequence[PromptTemplate],
    k_by_video: Mapping[str, int],
    seed: int,
    levels: Mapping[str, QualityLevel] | None = None,
) -> List[QAInstruction]:
    """Two pairs per record, in manifest order (regression first)."""
    levels = dict(levels) if levels is not None else bucket_levels(manifest)
    pairs: List[QAInstruction] = []
    for record in manifest.records:
        pairs.extend(build_qa_pairs(record, levels[record.video_id], templates, k_by_video[record.video_id], seed))
    log.info("Built %d Q&A pairs for %d videos", len(pairs), len(manifest))
    return pairs


def export_prompts(pairs: Sequence[QAInstruction], path: str | Path) -> Path:
    if not pairs:
        raise ValueError("no Q&A pairs to export")
    path = Path(path)
    with JsonLinesWriter(path, mode="w") as writer:
        for pair in pairs:
            writer.write(pair.to_json())
    log.info("Wrote %d Q&A pairs to %s", len(pairs), path)
    return path


def import_prompts(path: str | Path) -> List[QAInstruction]:
    return [QAInstruction.from_json(obj) for obj in read_json_lines(path)]


def group_by_video(pairs: Sequence[QAInstruction]) -> Dict[str, Dict[Task, QAInstruction]]:
    grouped: Dict[str, Dict[Task, QAInstruction]] = {}
    for pair in pairs:
        grouped.setdefault(pair.video_id, {})[pair.task] = pair
    return grouped
