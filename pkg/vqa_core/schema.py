"""Schema/versioning helpers for cache entries and checkpoints."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

SCHEMA_VERSION = 1


def write_schema(path: Path, kind: str, files: Mapping[str, Any]) -> None:
    """Write a `schema.json` describing the artifacts of one cache entry or checkpoint."""
    schema = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "files": dict(files),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(schema, indent=2, sort_keys=True), encoding="utf-8")


def read_schema(path: Path) -> dict:
    obj = json.loads(path.read_text(encoding="utf-8"))
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    return obj
