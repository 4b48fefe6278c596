from __future__ import annotations

import json

import pytest

from vqa_core.errors import ManifestError, ManifestMissing
from vqa_prompts.manifest import get_dataset_info, list_datasets, load_manifest, write_manifest


def _csv(path, rows, header="video_id,path,mos,split"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return path


def test_csv_manifest_resolves_relative_paths(tmp_path):
    path = _csv(tmp_path / "set.csv", ["a,videos/a.mp4,3.2,train", "b,/abs/b.mp4,4.1,"])
    manifest = load_manifest(path)
    assert manifest.name == "set"
    assert manifest.records[0].path == str(tmp_path / "videos" / "a.mp4")
    assert manifest.records[1].path == "/abs/b.mp4"
    assert manifest.records[1].split is None
    assert manifest.scale == (3.2, 4.1)
    assert len(manifest.split("train")) == 1


def test_catalogue_name_sets_the_scale(tmp_path):
    path = _csv(tmp_path / "konvid-1k.csv", ["a,a.mp4,3.2,", "b,b.mp4,4.1,"])
    assert load_manifest(path).scale == (1.0, 5.0)
    assert get_dataset_info("KoNViD_1k").n_videos == 1200
    assert [d.name for d in list_datasets()][0] == "KoNViD-1k"


def test_jsonl_manifest_with_declared_scale(tmp_path):
    path = tmp_path / "set.jsonl"
    rows = [{"video_id": "a", "path": "a.mp4", "mos": 55, "scale": "0:100"}, {"video_id": "b", "path": "b.mp4", "mos": 70}]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    assert load_manifest(path).scale == (0.0, 100.0)


@pytest.mark.parametrize(
    "rows,scale",
    [
        (["a,a.mp4,3.2,", "a,b.mp4,4.1,"], None),
        (["a,a.mp4,not-a-number,"], None),
        (["a,,3.0,"], None),
        (["a,a.mp4,7.0,"], "1:5"),
        (["a,a.mp4,3.0,"], "5:1"),
    ],
)
def test_bad_manifests(tmp_path, rows, scale):
    path = _csv(tmp_path / "bad.csv", rows)
    with pytest.raises(ManifestError):
        load_manifest(path, scale=scale)


def test_missing_columns_and_files(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(_csv(tmp_path / "cols.csv", ["a,3.0"], header="video_id,mos"))
    with pytest.raises(ManifestMissing):
        load_manifest(tmp_path / "absent.csv")


def test_write_then_load_keeps_records(tmp_path):
    source = load_manifest(_csv(tmp_path / "set.csv", ["a,videos/a.mp4,3.25,train", "b,videos/b.mp4,4.5,test"]))
    copy = load_manifest(write_manifest(source, tmp_path / "out" / "copy.csv"))
    assert copy.records == source.records
