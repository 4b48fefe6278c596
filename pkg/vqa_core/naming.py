from __future__ import annotations

import hashlib
import re

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")
# never produced by the safe alphabet, so suffixed names cannot clash with untouched ids
_DIGEST_SEP = "@"


def video_id_fs(video_id: str) -> str:
    """Normalize a video id for use as a cache directory name.

    Ids made only of `[A-Za-z0-9._-]` are used as-is. Anything else collapses
    separators and spaces to a single underscore and gets a short digest of the
    raw id appended, so two different ids never share a directory.
    """
    if not video_id or not video_id.strip():
        raise ValueError(f"video id {video_id!r} is empty")
    if _UNSAFE.search(video_id) is None and video_id not in (".", ".."):
        return video_id
    cleaned = _UNSAFE.sub("_", video_id.strip()).strip("_.") or "video"
    digest = hashlib.sha1(video_id.encode("utf-8")).hexdigest()[:10]
    return f"{cleaned}{_DIGEST_SEP}{digest}"
