from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from vqa_core.schema import write_schema
from vqa_eval.folds import Fold, folds_to_json
from vqa_eval.types import EvalReport

log = logging.getLogger(__name__)

REPORTS_JSON = "reports.json"
REPORTS_TXT = "reports.txt"
FOLDS_JSON = "folds.json"

_COLUMNS = ("dataset", "protocol", "setting", "fold", "n", "srcc", "plcc", "poor", "fair", "good", "total", "fail", "s/video")


def _fmt(value: Optional[float], digits: int = 4) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def _row(report: EvalReport) -> List[str]:
    acc = report.accuracy
    return [
        report.dataset or "-",
        report.protocol,
        report.setting or "-",
        report.fold_id if report.fold_id is not None else "-",
        str(report.n),
        _fmt(report.srcc),
        _fmt(report.plcc),
        _fmt(acc.get("poor")),
        _fmt(acc.get("fair")),
        _fmt(acc.get("good")),
        _fmt(acc.get("total")),
        str(report.parse_failures),
        _fmt(report.runtime_s_per_video, 3),
    ]


def format_table(reports: Sequence[EvalReport]) -> str:
    """Aligned plain-text table, one row per report."""
    rows = [list(_COLUMNS)] + [_row(r) for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def write_reports(
    reports: Sequence[EvalReport],
    out_dir: str | Path,
    folds: Optional[Sequence[Fold]] = None,
) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"reports_json": out_dir / REPORTS_JSON, "reports_txt": out_dir / REPORTS_TXT}
    paths["reports_json"].write_text(
        json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True), encoding="utf-8"
    )
    paths["reports_txt"].write_text(format_table(reports), encoding="utf-8")
    if folds:
        paths["folds_json"] = out_dir / FOLDS_JSON
        paths["folds_json"].write_text(json.dumps(folds_to_json(list(folds)), indent=2), encoding="utf-8")
    write_schema(out_dir / "schema.json", kind="eval_reports", files={k: p.name for k, p in paths.items()})
    log.info("Wrote %d report(s) to %s", len(reports), out_dir)
    return paths


def read_reports(path: str | Path) -> List[EvalReport]:
    path = Path(path)
    if path.is_dir():
        path = path / REPORTS_JSON
    return [EvalReport.from_json(obj) for obj in json.loads(path.read_text(encoding="utf-8"))]
