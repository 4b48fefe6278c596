from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from sklearn.model_selection import KFold

from vqa_core.errors import TooFewSamples
from vqa_prompts.types import DatasetManifest


@dataclass(frozen=True)
class Fold:
    fold_id: int
    train_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]


def kfold_split(manifest: DatasetManifest, k: int, seed: int) -> List[Fold]:
    """Shuffled k-fold split; test folds are disjoint, cover the manifest and differ in size by <= 1."""
    ids = list(manifest.video_ids)
    if k < 2:
        raise ValueError(f"k must be >= 2 (got {k})")
    if len(ids) < k:
        raise TooFewSamples(f"{k}-fold split needs at least {k} records (got {len(ids)})")
    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    folds: List[Fold] = []
    for fold_id, (train_idx, test_idx) in enumerate(splitter.split(np.arange(len(ids)))):
        folds.append(
            Fold(
                fold_id=fold_id,
                train_ids=tuple(ids[i] for i in sorted(train_idx)),
                test_ids=tuple(ids[i] for i in sorted(test_idx)),
            )
        )
    return folds


def folds_to_json(folds: List[Fold]) -> dict:
    return {str(f.fold_id): {"train": list(f.train_ids), "test": list(f.test_ids)} for f in folds}
