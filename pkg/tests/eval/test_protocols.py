from __future__ import annotations

import pytest

from vqa_core.errors import CheckpointMissing, ConfigError, ManifestError, ManifestMissing
from vqa_core.synthetic import make_corpus, write_corpus
from vqa_eval.protocols import ProtocolManifests, protocol_folds, run_ablation, run_protocol
from vqa_prompts.config import PromptConfig
from vqa_prompts.manifest import load_manifest
from vqa_train.checkpoint import read_checkpoint

PROMPTS = PromptConfig(template_count=20)


@pytest.fixture
def quick_config(tiny_config):
    return tiny_config.replace(epochs=1)


def _corpus(tmp_path, name, n, family, seed):
    videos = make_corpus(n, family=family, seed=seed, prefix=name)
    return load_manifest(write_corpus(tmp_path / name, videos), name=name)


def test_finetune_reports_every_fold_and_the_mean(tmp_path, quick_config):
    dataset = _corpus(tmp_path, "ten", 10, "A", 0)
    manifests = ProtocolManifests(train=dataset)
    reports = run_protocol(
        "finetune", quick_config, manifests, tmp_path / "cache", prompt_config=PROMPTS, k=5, seed=0
    )
    assert [r.fold_id for r in reports] == ["0", "1", "2", "3", "4", "mean"]
    assert all(r.protocol == "finetune" and r.dataset == "ten" for r in reports)
    assert [r.n for r in reports] == [2, 2, 2, 2, 2, 10]

    folds = protocol_folds("finetune", manifests, 5, 0)
    tests = [set(f.test_ids) for f in folds]
    assert set().union(*tests) == set(dataset.video_ids)
    assert sum(len(t) for t in tests) == 10


def test_in_sample_then_ood(tmp_path, quick_config):
    train_set = _corpus(tmp_path, "synA", 8, "A", 1)
    test_set = _corpus(tmp_path, "synB", 6, "B", 2)
    reports = run_protocol(
        "in_sample",
        quick_config,
        ProtocolManifests(train=train_set, test=(test_set,)),
        tmp_path / "cache",
        prompt_config=PROMPTS,
        checkpoint_dir=tmp_path / "ckpt",
    )
    assert [(r.dataset, r.protocol, r.n) for r in reports] == [("synB", "in_sample", 6)]
    assert reports[0].config_fingerprint == quick_config.fingerprint()
    assert read_checkpoint(tmp_path / "ckpt").config == quick_config

    ood = run_protocol(
        "ood",
        quick_config.replace(n_t=16),
        ProtocolManifests(train=train_set, test=(test_set,)),
        tmp_path / "cache",
        prompt_config=PROMPTS,
        checkpoint=tmp_path / "ckpt",
    )
    assert [(r.dataset, r.protocol, r.n) for r in ood] == [("synB", "ood", 6)]
    # the checkpoint's own config wins over the one passed in
    assert ood[0].config_fingerprint == quick_config.fingerprint()

    with pytest.raises(ManifestError):
        run_protocol(
            "ood",
            quick_config,
            ProtocolManifests(train=train_set, test=(train_set,)),
            tmp_path / "cache",
            prompt_config=PROMPTS,
            checkpoint=tmp_path / "ckpt",
        )


def _scores(report):
    return report.srcc, report.plcc, report.accuracy, report.n, report.parse_failures


def test_in_sample_reproduces_its_reports(tmp_path, quick_config):
    train_set = _corpus(tmp_path, "rep", 6, "A", 3)
    manifests = ProtocolManifests(train=train_set)
    first = run_protocol("in_sample", quick_config, manifests, tmp_path / "cache", prompt_config=PROMPTS)
    second = run_protocol("in_sample", quick_config, manifests, tmp_path / "cache", prompt_config=PROMPTS)
    assert [_scores(r) for r in first] == [_scores(r) for r in second]


def test_protocol_preconditions(tmp_path, quick_config):
    some = _corpus(tmp_path, "pre", 3, "A", 4)
    with pytest.raises(CheckpointMissing):
        run_protocol("ood", quick_config, ProtocolManifests(test=(some,)), tmp_path / "cache")
    with pytest.raises(CheckpointMissing):
        run_protocol("ood", quick_config, ProtocolManifests(test=(some,)), tmp_path / "cache", checkpoint=tmp_path / "no")
    with pytest.raises(ManifestMissing):
        run_protocol("in_sample", quick_config, ProtocolManifests(), tmp_path / "cache")
    with pytest.raises(ManifestMissing):
        run_protocol("finetune", quick_config, ProtocolManifests(test=(some,)), tmp_path / "cache")
    with pytest.raises(ConfigError):
        run_protocol("zero_shot", quick_config, ProtocolManifests(train=some), tmp_path / "cache")


def test_ablation_tags_each_setting(tmp_path, quick_config):
    train_set = _corpus(tmp_path, "abl", 6, "A", 5)
    reports = run_ablation(
        "use_temporal",
        [True, False],
        "in_sample",
        quick_config,
        ProtocolManifests(train=train_set),
        tmp_path / "cache",
        prompt_config=PROMPTS,
    )
    assert [r.setting for r in reports] == ["use_temporal=True", "use_temporal=False"]
    assert reports[0].config_fingerprint != reports[1].config_fingerprint
    with pytest.raises(ConfigError):
        run_ablation("epochs", [1], "in_sample", quick_config, ProtocolManifests(train=train_set), tmp_path / "cache")
    with pytest.raises(ConfigError):
        run_ablation("n_t", [], "in_sample", quick_config, ProtocolManifests(train=train_set), tmp_path / "cache")


@pytest.mark.slow
def test_blur_ranking_transfers_across_content(tmp_path, tiny_config):
    train_set = _corpus(tmp_path, "famA", 64, "A", 10)
    test_set = _corpus(tmp_path, "famB", 32, "B", 11)
    config = tiny_config.replace(epochs=30, d_model=64, decoder_layers=2, learning_rate=0.001)
    reports = run_protocol(
        "in_sample",
        config,
        ProtocolManifests(train=train_set, test=(test_set,)),
        tmp_path / "cache",
        prompt_config=PromptConfig(template_count=200),
    )
    assert reports[0].srcc is not None and reports[0].srcc > 0.8
