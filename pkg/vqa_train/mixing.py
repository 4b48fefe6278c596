from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from vqa_core.answers import Task
from vqa_core.errors import MissingTask
from vqa_prompts.types import DatasetManifest, QAInstruction


@dataclass(frozen=True)
class TaskStream:
    """Training pairs for one run; `epoch(e)` gives that epoch's seeded order."""

    pairs: Tuple[QAInstruction, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.pairs)

    def epoch(self, epoch: int) -> List[QAInstruction]:
        order = list(self.pairs)
        random.Random(f"{self.seed}:{epoch}").shuffle(order)
        return order


def mix_tasks(prompts: Sequence[QAInstruction], multi_task: bool, seed: int) -> TaskStream:
    """Regression pairs only, or both tasks interleaved (1:1 as built)."""
    tasks = {p.task for p in prompts}
    if multi_task:
        missing = [t.value for t in Task if t not in tasks]
        if missing:
            raise MissingTask(f"multi-task training needs both tasks; missing: {', '.join(missing)}")
        pairs = tuple(prompts)
    else:
        pairs = tuple(p for p in prompts if p.task is Task.REGRESSION)
        if not pairs:
            raise MissingTask("single-task training needs regression pairs; none found")
    return TaskStream(pairs=pairs, seed=int(seed))


def subsample(manifest: DatasetManifest, fraction: float, seed: int) -> DatasetManifest:
    """ceil(fraction * n) records drawn without replacement; manifest order is kept."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1] (got {fraction})")
    n = len(manifest)
    if fraction == 1.0:
        return manifest
    take = math.ceil(fraction * n)
    chosen = set(random.Random(f"subsample:{seed}").sample(range(n), take))
    return manifest.subset([r.video_id for i, r in enumerate(manifest.records) if i in chosen])


def validation_split(video_ids: Sequence[str], fraction: float, seed: int) -> Tuple[List[str], List[str]]:
    """(train_ids, val_ids) with floor(fraction * n) ids held out for validation."""
    ids = sorted(set(video_ids))
    n_val = int(math.floor(fraction * len(ids)))
    if n_val <= 0 or n_val >= len(ids):
        return ids, []
    held = set(random.Random(f"validation:{seed}").sample(ids, n_val))
    return [v for v in ids if v not in held], [v for v in ids if v in held]
