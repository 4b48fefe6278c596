from __future__ import annotations

import json

import numpy as np
import pytest
import torch

from vqa_core.cache import (
    TENSOR_MAGIC,
    CacheEntry,
    collect_features,
    preprocess_video,
    read_tensor,
    write_tensor,
)
from vqa_core.encoders import ToyMotionTemporalBackend, ToyPatchSpatialBackend
from vqa_core.errors import MissingCache, ShapeError
from vqa_core.naming import video_id_fs
from vqa_core.schema import read_schema


@pytest.fixture
def backends():
    return ToyPatchSpatialBackend(output_width=16, patch_size=8), ToyMotionTemporalBackend(output_width=16)


def test_tensor_file_layout(tmp_path):
    data = np.arange(24, dtype=np.float32).reshape(2, 3, 4) / 7.0
    path = tmp_path / "t.f32"
    write_tensor(path, torch.from_numpy(data))
    raw = path.read_bytes()
    assert raw[:4] == TENSOR_MAGIC
    assert len(raw) == 4 + 4 * 4 + 24 * 4
    np.testing.assert_array_equal(read_tensor(path), data)


def test_tensor_file_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.f32"
    bad.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(ShapeError):
        read_tensor(bad)
    truncated = tmp_path / "short.f32"
    write_tensor(truncated, np.ones((4, 4), dtype=np.float32))
    truncated.write_bytes(truncated.read_bytes()[:-4])
    with pytest.raises(ShapeError):
        read_tensor(truncated)


def test_preprocess_writes_a_complete_entry(tmp_path, corpus_dir, synthetic_videos, backends):
    spatial, temporal = backends
    item = synthetic_videos[0]
    path = corpus_dir / "videos" / f"{item.video_id}.avi"
    entry, computed = preprocess_video(path, item.video_id, tmp_path / "cache", spatial, temporal, (32, 32))
    assert computed
    assert entry.is_complete()

    features = entry.load()
    index = entry.load_index()
    # 8 frames at 4 fps: tau = 4, K = 2
    assert (index.tau, index.k, index.source_indices) == (4, 2, (0, 4))
    assert tuple(features.spatial.data.shape) == (2, 16, 16)
    assert tuple(features.temporal.data.shape) == (2, 1, 16)
    assert sorted(p.name for p in entry.keyframes_dir.iterdir()) == ["key_0000.png", "key_0001.png"]
    assert entry.load_key_frames().shape == (2, 32, 32, 3)
    assert read_schema(entry.root / "schema.json")["kind"] == "preprocess_cache"
    meta = json.loads(entry.features_meta_path.read_text(encoding="utf-8"))
    assert meta["spatial_backend"] == "toy-spatial"


def test_preprocess_is_idempotent(tmp_path, corpus_dir, synthetic_videos, backends):
    spatial, temporal = backends
    item = synthetic_videos[1]
    path = corpus_dir / "videos" / f"{item.video_id}.avi"
    entry, _ = preprocess_video(path, item.video_id, tmp_path / "cache", spatial, temporal, (32, 32))
    before = {p: p.stat().st_mtime_ns for p in entry.root.rglob("*") if p.is_file()}

    again, computed = preprocess_video(path, item.video_id, tmp_path / "cache", spatial, temporal, (32, 32))
    assert not computed
    assert {p: p.stat().st_mtime_ns for p in again.root.rglob("*") if p.is_file()} == before

    _, forced = preprocess_video(path, item.video_id, tmp_path / "cache", spatial, temporal, (32, 32), force=True)
    assert forced


def test_backend_change_invalidates_entry(tmp_path, corpus_dir, synthetic_videos, backends):
    spatial, temporal = backends
    item = synthetic_videos[2]
    path = corpus_dir / "videos" / f"{item.video_id}.avi"
    preprocess_video(path, item.video_id, tmp_path / "cache", spatial, temporal, (32, 32))
    other = ToyPatchSpatialBackend(name="toy-spatial-b", output_width=16, patch_size=8, seed=5)
    _, computed = preprocess_video(path, item.video_id, tmp_path / "cache", other, temporal, (32, 32))
    assert computed


def test_incomplete_entry_is_reported(tmp_path):
    entry = CacheEntry(tmp_path, "missing/video")
    assert entry.root.parent == tmp_path
    assert entry.root.name.startswith("missing_video@")
    assert not entry.is_complete()
    with pytest.raises(MissingCache):
        entry.load()


def test_directory_names_are_distinct_per_id():
    ids = ["clip a", "clip_a", "clip/a", "_clip_a", "clip__a", "clip a "]
    names = [video_id_fs(v) for v in ids]
    assert len(set(names)) == len(ids)
    assert video_id_fs("clip_a") == "clip_a"
    assert all("/" not in n and " " not in n for n in names)
    with pytest.raises(ValueError):
        video_id_fs("  ")


def test_lookalike_ids_keep_their_own_features(tmp_path, corpus_dir, synthetic_videos, backends):
    spatial, temporal = backends
    first, second = synthetic_videos[0], synthetic_videos[5]
    cache = tmp_path / "cache"
    a, computed_a = preprocess_video(
        corpus_dir / "videos" / f"{first.video_id}.avi", "clip a", cache, spatial, temporal, (32, 32)
    )
    b, computed_b = preprocess_video(
        corpus_dir / "videos" / f"{second.video_id}.avi", "clip_a", cache, spatial, temporal, (32, 32)
    )
    assert computed_a and computed_b
    assert a.root != b.root
    fa, fb = a.load(), b.load()
    assert (fa.video_id, fb.video_id) == ("clip a", "clip_a")
    assert not torch.equal(fa.spatial.data, fb.spatial.data)


def test_entry_recorded_for_another_id_is_not_reused(tmp_path, corpus_dir, synthetic_videos, backends):
    spatial, temporal = backends
    item = synthetic_videos[3]
    path = corpus_dir / "videos" / f"{item.video_id}.avi"
    entry, _ = preprocess_video(path, "clip_b", tmp_path / "cache", spatial, temporal, (32, 32))
    index = json.loads(entry.chunk_index_path.read_text(encoding="utf-8"))
    index["video_id"] = "someone_else"
    entry.chunk_index_path.write_text(json.dumps(index), encoding="utf-8")

    with pytest.raises(MissingCache, match="someone_else"):
        CacheEntry(tmp_path / "cache", "clip_b").load()
    _, computed = preprocess_video(path, "clip_b", tmp_path / "cache", spatial, temporal, (32, 32))
    assert computed
    assert CacheEntry(tmp_path / "cache", "clip_b").load().index.video_id == "clip_b"


def test_collect_features_covers_every_video(tmp_path, corpus_dir, synthetic_videos, backends):
    spatial, temporal = backends
    pairs = [(v.video_id, corpus_dir / "videos" / f"{v.video_id}.avi") for v in synthetic_videos[:3]]
    features = collect_features(pairs, tmp_path / "cache", spatial, temporal, (32, 32))
    assert list(features) == [vid for vid, _ in pairs]
    assert all(f.k == 2 for f in features.values())
