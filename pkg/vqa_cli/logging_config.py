from __future__ import annotations

import logging
import sys
from pathlib import Path


def setup_run_logging(
    *,
    level: str = "INFO",
    command: str,
    run_id: str,
    base_dir: str | Path = "out/logs",
) -> Path:
    """Configure run-scoped logging for one CLI command.

    Layout:
      <base_dir>/<command>/<run_id>/run.log

    The console handler writes to stderr; stdout carries only the status JSON.
    """
    log_dir = Path(base_dir) / command / run_id
    log_dir.mkdir(parents=True, exist_ok=True)
    log_path = log_dir / "run.log"

    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper(), logging.INFO))
    for h in list(root.handlers):
        root.removeHandler(h)
        if isinstance(h, logging.FileHandler):
            h.close()

    fmt = logging.Formatter("%(asctime)s %(levelname)s %(name)s - %(message)s")
    fh = logging.FileHandler(log_path, encoding="utf-8")
    fh.setFormatter(fmt)
    sh = logging.StreamHandler(sys.stderr)
    sh.setFormatter(fmt)
    root.addHandler(fh)
    root.addHandler(sh)
    return log_path
