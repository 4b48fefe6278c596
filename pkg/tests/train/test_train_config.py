from __future__ import annotations

import pytest

from vqa_core.errors import ConfigError
from vqa_train.config import TrainConfig


def test_defaults_validate():
    config = TrainConfig().validate()
    assert config.projectors_only is False
    assert config.frame_shape == (224, 224)


@pytest.mark.parametrize(
    "changes",
    [
        {"batch_size": 0},
        {"epochs": -1},
        {"data_fraction": 0.0},
        {"data_fraction": 1.5},
        {"validation_fraction": 1.0},
        {"frame_size": 100, "patch_size": 14},
        {"spatial_projector": "conv"},
        {"spatial_width": 30, "projector_heads": 4},
        {"decoder_backend": "gpt"},
        {"decoder_backend": "external"},
        {"d_model": 30, "decoder_heads": 4},
        {"optimizer": "adam"},
        {"tau": 0},
    ],
)
def test_invalid_values(changes):
    with pytest.raises(ConfigError):
        TrainConfig(**changes).validate()


def test_external_decoder_freezes_by_default():
    config = TrainConfig(decoder_backend="external", weights_dir="/models")
    assert config.projectors_only is True
    assert config.replace(train_projectors_only=False).projectors_only is False


def test_from_json_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="learning_rat"):
        TrainConfig.from_json({"learning_rat": 0.1})
    assert TrainConfig.from_json(TrainConfig(n_t=16).to_json()) == TrainConfig(n_t=16)


def test_fingerprint_tracks_every_field():
    base = TrainConfig()
    assert base.fingerprint() == TrainConfig().fingerprint()
    assert base.fingerprint() != base.replace(n_t=16).fingerprint()
    assert base.fingerprint() != base.replace(use_temporal=False).fingerprint()


def test_widths_follow_the_backends_when_unset():
    toy = TrainConfig().validate()
    assert (toy.spatial_dim, toy.temporal_dim) == (32, 64)

    pretrained = TrainConfig(spatial_backend="clip-vit-l14", temporal_backend="slowfast-r50").validate()
    assert (pretrained.spatial_dim, pretrained.temporal_dim) == (1024, 2304)
    options = pretrained.backend_options()
    assert (options["spatial_width"], options["temporal_width"]) == (1024, 2304)


def test_explicit_width_wins_for_toy_backends_only():
    assert TrainConfig(spatial_width=16, temporal_width=8).validate().temporal_dim == 8
    with pytest.raises(ConfigError, match="1024"):
        TrainConfig(spatial_backend="clip-vit-l14", spatial_width=32).validate()
    with pytest.raises(ConfigError, match="2304"):
        TrainConfig(temporal_backend="slowfast-r50", temporal_width=64).validate()


def test_projectors_are_sized_from_the_backend_width():
    from vqa_train.model import build_model, vocabulary_for

    config = TrainConfig(
        spatial_backend="clip-vit-l14",
        temporal_backend="slowfast-r50",
        d_model=32,
        n_t=4,
        decoder_layers=1,
        decoder_heads=2,
    ).validate()
    model = build_model(config, vocabulary_for([], max_images=2))
    assert model.spatial_projector.in_width == 1024
    assert model.temporal_projector.in_width == 2304
