"""Dataset manifests: CSV or JSON-lines rows of (video_id, path, mos, split).

Relative paths are resolved against the manifest's directory. A manifest named after a
catalogued benchmark inherits that benchmark's native MOS scale unless it declares one.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from vqa_core.errors import ManifestError, ManifestMissing
from vqa_core.writers import read_json_lines
from vqa_prompts.types import DatasetManifest, ManifestRecord

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("video_id", "path", "mos")


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    n_videos: int
    resolution: str
    duration: str
    scale: Tuple[float, float]

    def to_json(self) -> dict:
        return {**asdict(self), "scale": list(self.scale)}


_CATALOG: Dict[str, DatasetInfo] = {
    "lsvq": DatasetInfo("LSVQ", 38811, "99p-4K", "5-12s", (0.0, 100.0)),
    "konvid-1k": DatasetInfo("KoNViD-1k", 1200, "540p", "8s", (1.0, 5.0)),
    "live-vqc": DatasetInfo("LIVE-VQC", 585, "240p-1080p", "10s", (0.0, 100.0)),
    "youtube-ugc": DatasetInfo("YouTube-UGC", 1500, "360p-4K", "20s", (1.0, 5.0)),
    "live-yt-gaming": DatasetInfo("LIVE-YT-Gaming", 600, "360p-1080p", "8-9s", (0.0, 100.0)),
}


def get_dataset_info(name: str) -> Optional[DatasetInfo]:
    key = (name or "").strip().lower().replace("_", "-")
    return _CATALOG.get(key)


def list_datasets() -> List[DatasetInfo]:
    return [_CATALOG[k] for k in sorted(_CATALOG)]


def _parse_scale(raw: Optional[str | Iterable[float]]) -> Optional[Tuple[float, float]]:
    if raw is None or raw == "":
        return None
    if isinstance(raw, str):
        parts = [p for p in raw.replace(",", ":").split(":") if p.strip()]
    else:
        parts = list(raw)
    if len(parts) != 2:
        raise ManifestError(f"scale must be 'min:max' (got {raw!r})")
    lo, hi = float(parts[0]), float(parts[1])
    if not lo < hi:
        raise ManifestError(f"scale min must be below max (got {lo}, {hi})")
    return lo, hi


def _record(row: Dict, where: str, base_dir: Path) -> ManifestRecord:
    missing = [c for c in REQUIRED_COLUMNS if row.get(c) in (None, "")]
    if missing:
        raise ManifestError(f"{where}: missing {', '.join(missing)}")
    try:
        mos = float(row["mos"])
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{where}: mos {row['mos']!r} is not a number") from exc
    path = Path(str(row["path"]))
    if not path.is_absolute():
        path = base_dir / path
    split = row.get("split") or None
    try:
        return ManifestRecord(video_id=str(row["video_id"]).strip(), path=str(path), mos=mos, split=split)
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from exc


def build_manifest(
    records: Iterable[ManifestRecord],
    name: str = "",
    scale: Optional[Tuple[float, float]] = None,
    source: str = "",
) -> DatasetManifest:
    """Validate ids and scores; the scale defaults to the catalogued one, else the observed range."""
    records = tuple(records)
    if not records:
        raise ManifestError(f"manifest {name or source!r} has no records")
    seen = set()
    for r in records:
        if r.video_id in seen:
            raise ManifestError(f"duplicate video_id {r.video_id!r} in manifest {name or source!r}")
        seen.add(r.video_id)

    if scale is None:
        info = get_dataset_info(name)
        if info is not None:
            scale = info.scale
        else:
            scores = [r.mos for r in records]
            scale = (min(scores), max(scores))
    lo, hi = scale
    for r in records:
        if not lo <= r.mos <= hi:
            raise ManifestError(f"{r.video_id}: mos {r.mos} outside scale [{lo}, {hi}]")
    return DatasetManifest(records=records, scale=(float(lo), float(hi)), name=name, source=source)


def load_manifest(
    path: str | Path,
    name: Optional[str] = None,
    scale: Optional[Tuple[float, float] | str] = None,
) -> DatasetManifest:
    """Read a `.csv` or `.jsonl` manifest. `name` defaults to the file stem."""
    path = Path(path)
    if not path.is_file():
        raise ManifestMissing(f"manifest not found: {path}")
    name = name if name is not None else path.stem
    base_dir = path.parent

    rows: List[Dict] = []
    if path.suffix.lower() in (".jsonl", ".json"):
        try:
            rows = read_json_lines(path)
        except ValueError as exc:
            raise ManifestError(str(exc)) from exc
    else:
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            absent = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
            if absent:
                raise ManifestError(f"{path}: missing columns {', '.join(absent)}")
            rows = list(reader)

    records = [_record(row, f"{path}:{i + 1}", base_dir) for i, row in enumerate(rows)]
    declared = _parse_scale(scale) if scale is not None else None
    if declared is None and rows and "scale" in rows[0]:
        declared = _parse_scale(rows[0]["scale"])
    manifest = build_manifest(records, name=name, scale=declared, source=str(path))
    log.info("Loaded manifest %s: %d records, scale=%s", name, len(manifest), manifest.scale)
    return manifest


def write_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "path", "mos", "split"])
        for r in manifest.records:
            writer.writerow([r.video_id, str(Path(r.path).resolve()), repr(r.mos), r.split or ""])
    return path
