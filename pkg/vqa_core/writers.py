from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence


class BufferedCSVWriter:
    """Batch rows in memory before writing; the header is written once per file."""

    def __init__(
        self,
        path: str | Path,
        header: Sequence[str] | None = None,
        flush_rows: int = 100,
        mode: str = "a",
    ) -> None:
        if mode not in ("a", "w"):
            raise ValueError(f"mode must be 'a' or 'w' (got {mode!r})")
        self.path = Path(path)
        self.header = list(header) if header else None
        self.flush_rows = max(1, flush_rows)
        self.mode = mode

        self._buffer: list[list[str]] = []
        self._file = None
        self._writer = None

    def _ensure_open(self) -> None:
        if self._file is not None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        is_empty = self.mode == "w" or not self.path.exists() or self.path.stat().st_size == 0
        f = self.path.open(self.mode, encoding="utf-8", newline="")
        try:
            writer = csv.writer(f)
            if self.header and is_empty:
                writer.writerow(self.header)
                f.flush()
        except Exception:
            f.close()
            raise
        self._file = f
        self._writer = writer

    def write_row(self, row: Sequence[Any]) -> None:
        self._ensure_open()
        self._buffer.append(["" if v is None else str(v) for v in row])
        if self._should_flush():
            self.flush()

    def write_rows(self, rows: Iterable[Sequence[Any]]) -> None:
        for row in rows:
            self.write_row(row)

    def flush(self) -> None:
        if not self._buffer or self._writer is None or self._file is None:
            return
        self._writer.writerows(self._buffer)
        self._file.flush()
        self._buffer.clear()

    def close(self) -> None:
        try:
            self.flush()
        finally:
            if self._file is not None:
                self._file.close()
                self._file = None
                self._writer = None

    def _should_flush(self) -> bool:
        return len(self._buffer) >= self.flush_rows

    def __enter__(self) -> "BufferedCSVWriter":
        self._ensure_open()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


class JsonLinesWriter:
    """Buffered UTF-8 JSON-lines writer: one object per line, non-ASCII kept as is."""

    def __init__(self, path: str | Path, flush_lines: int = 1000, mode: str = "w") -> None:
        if mode not in ("a", "w"):
            raise ValueError(f"mode must be 'a' or 'w' (got {mode!r})")
        self.path = Path(path)
        self.flush_lines = max(1, int(flush_lines))
        self.mode = mode
        self.count = 0
        self._buffer: list[str] = []
        self._file = None

    def _ensure_open(self) -> None:
        if self._file is not None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = self.path.open(self.mode, encoding="utf-8", newline="\n")

    def write(self, obj: Mapping[str, Any]) -> None:
        self._ensure_open()
        self._buffer.append(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
        self.count += 1
        if len(self._buffer) >= self.flush_lines:
            self.flush()

    def flush(self) -> None:
        if not self._buffer or self._file is None:
            return
        self._file.writelines(self._buffer)
        self._file.flush()
        self._buffer.clear()

    def close(self) -> None:
        try:
            self.flush()
        finally:
            if self._file is not None:
                self._file.close()
                self._file = None

    def __enter__(self) -> "JsonLinesWriter":
        self._ensure_open()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


def read_json_lines(path: str | Path) -> list[dict]:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON line ({exc.msg})") from exc
    return out
