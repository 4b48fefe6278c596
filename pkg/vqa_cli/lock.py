from __future__ import annotations

import json
import logging
import os
import time
from pathlib import Path

from vqa_core.errors import LockHeld

log = logging.getLogger(__name__)

LOCK_NAME = ".lock"


class DirectoryLock:
    """Advisory `<dir>/.lock` created with O_EXCL; held for the lifetime of one command."""

    def __init__(self, directory: str | Path, command: str) -> None:
        self.directory = Path(directory)
        self.command = command
        self.path = self.directory / LOCK_NAME
        self._fd: int | None = None

    def acquire(self) -> "DirectoryLock":
        self.directory.mkdir(parents=True, exist_ok=True)
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o644)
        except FileExistsError as exc:
            holder = ""
            try:
                holder = self.path.read_text(encoding="utf-8").strip()
            except OSError:
                pass
            raise LockHeld(f"{self.directory} is locked by another command ({holder or 'unknown holder'})") from exc
        os.write(self._fd, json.dumps({"pid": os.getpid(), "command": self.command, "ts": time.time()}).encode("utf-8"))
        return self

    def release(self) -> None:
        if self._fd is None:
            return
        try:
            os.close(self._fd)
        finally:
            self._fd = None
            try:
                self.path.unlink()
            except FileNotFoundError:
                log.warning("Lock file %s vanished before release", self.path)

    def __enter__(self) -> "DirectoryLock":
        return self.acquire()

    def __exit__(self, exc_type, exc, tb) -> None:
        self.release()
