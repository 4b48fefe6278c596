"""Pytest configuration for vqa-instruct."""
from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Dict

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

# Keep tests offline and quiet; pretrained backends are never loaded here.
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("VQA_INSTRUCT_WORKERS", "2")
os.environ.setdefault("VQA_INSTRUCT_PROGRESS_INTERVAL_S", "3600")

import torch  # noqa: E402

from vqa_core.cache import VideoFeatures, extract_features  # noqa: E402
from vqa_core.encoders import BackendKind, build_registry  # noqa: E402
from vqa_core.synthetic import make_corpus, write_corpus  # noqa: E402
from vqa_prompts.manifest import build_manifest  # noqa: E402
from vqa_prompts.templates import generate_templates  # noqa: E402
from vqa_prompts.types import DatasetManifest, ManifestRecord  # noqa: E402
from vqa_train.config import TrainConfig  # noqa: E402

torch.set_num_threads(1)


@pytest.fixture
def tiny_config() -> TrainConfig:
    """Geometry small enough for CPU runs in seconds: 32x32 frames, 8x8 patches, 4 temporal tokens."""
    return TrainConfig(
        batch_size=8,
        learning_rate=0.003,
        epochs=2,
        validation_fraction=0.0,
        frame_size=32,
        patch_size=8,
        spatial_width=16,
        temporal_width=16,
        d_model=32,
        n_t=4,
        projector_heads=2,
        decoder_layers=1,
        decoder_heads=2,
        max_answer_len=16,
    )


@pytest.fixture
def synthetic_videos():
    return make_corpus(8, family="A", seed=3)


@pytest.fixture
def corpus_dir(tmp_path, synthetic_videos) -> Path:
    """Eight family-A videos written to disk with a CSV manifest at `<dir>/manifest.csv`."""
    out = tmp_path / "corpus"
    write_corpus(out, synthetic_videos)
    return out


@pytest.fixture
def toy_registry(tiny_config):
    return build_registry(tiny_config.spatial_backend, tiny_config.temporal_backend, **tiny_config.backend_options())


@pytest.fixture
def synthetic_manifest(synthetic_videos) -> DatasetManifest:
    """In-memory manifest over `synthetic_videos`; paths are never opened."""
    return build_manifest(
        [ManifestRecord(video_id=v.video_id, path=f"{v.video_id}.avi", mos=v.mos) for v in synthetic_videos],
        name="synthetic",
    )


@pytest.fixture
def toy_features(tiny_config, toy_registry, synthetic_videos) -> Dict[str, VideoFeatures]:
    """Features for `synthetic_videos` straight from the decoded frames (no cache)."""
    spatial = toy_registry.resolve(tiny_config.spatial_backend, BackendKind.SPATIAL)
    temporal = toy_registry.resolve(tiny_config.temporal_backend, BackendKind.TEMPORAL)
    return {
        v.video_id: extract_features(v.video, spatial, temporal, video_id=v.video_id)[0] for v in synthetic_videos
    }


@pytest.fixture
def toy_templates():
    return generate_templates(40, seed=7)
