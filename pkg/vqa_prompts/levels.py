from __future__ import annotations

from typing import Dict, Iterable, Tuple

from sortedcontainers import SortedList

from vqa_core.answers import LEVEL_ORDER, QualityLevel
from vqa_core.errors import TooFewSamples
from vqa_prompts.types import DatasetManifest, ManifestRecord


def tertile_sizes(n: int) -> Tuple[int, int, int]:
    """(poor, fair, good) bucket sizes; the remainder goes to the lower buckets first."""
    base, rem = divmod(int(n), 3)
    return base + (rem > 0), base + (rem > 1), base


def bucket_levels(manifest: DatasetManifest | Iterable[ManifestRecord]) -> Dict[str, QualityLevel]:
    """Equal three-way split of the MOS-sorted records (ties broken by video_id)."""
    records = manifest.records if isinstance(manifest, DatasetManifest) else tuple(manifest)
    if len(records) < 3:
        raise TooFewSamples(f"tertile bucketing needs at least 3 records (got {len(records)})")

    ordered = SortedList((float(r.mos), r.video_id) for r in records)
    levels: Dict[str, QualityLevel] = {}
    start = 0
    for level, size in zip(LEVEL_ORDER, tertile_sizes(len(ordered))):
        for _, video_id in ordered[start : start + size]:
            levels[video_id] = level
        start += size
    return levels
