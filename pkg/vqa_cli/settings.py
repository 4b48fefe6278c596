from __future__ import annotations

import os
from typing import Optional


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        return default


def _env_bool(name: str, default: bool = False) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in ("1", "true", "yes", "y")


def _env_str(name: str, default: Optional[str] = None) -> Optional[str]:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    return raw.strip()


_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# Overrides the config file's paths.cache_dir when set.
CACHE_ROOT = _env_str("VQA_INSTRUCT_CACHE_ROOT")
LOG_DIR = _env_str("VQA_INSTRUCT_LOG_DIR")
LOG_LEVEL = (_env_str("VQA_INSTRUCT_LOG_LEVEL") or "").upper() or None
if LOG_LEVEL not in _LOG_LEVELS:
    LOG_LEVEL = None

# Preprocess decode/encode workers.
WORKERS = max(1, _env_int("VQA_INSTRUCT_WORKERS", 2))
# Seconds between progress lines during preprocessing.
PROGRESS_INTERVAL_S = _env_float("VQA_INSTRUCT_PROGRESS_INTERVAL_S", 10.0)
# Force torch to a single intra-op thread for bit-reproducible runs.
DETERMINISTIC_THREADS = _env_bool("VQA_INSTRUCT_DETERMINISTIC_THREADS", True)
