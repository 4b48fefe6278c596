"""In-sample, out-of-distribution and k-fold fine-tune evaluation runs, plus ablation sweeps."""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from vqa_core.answers import QualityLevel, QualityPrediction, Task
from vqa_core.cache import VideoFeatures, collect_features
from vqa_core.decoder import GenerationOutput
from vqa_core.encoders import BackendKind, BackendRegistry, build_registry
from vqa_core.errors import CheckpointMissing, ConfigError, ManifestError, ManifestMissing
from vqa_eval.folds import Fold, kfold_split
from vqa_eval.types import EvalReport, PredictionPair, PredictionSet, make_report, mean_report
from vqa_prompts.builder import build_dataset, task_questions
from vqa_prompts.config import PromptConfig
from vqa_prompts.levels import bucket_levels
from vqa_prompts.types import DatasetManifest, PromptTemplate, QualityLabel
from vqa_train.checkpoint import load_checkpoint, read_checkpoint
from vqa_train.config import TrainConfig
from vqa_train.mixing import subsample
from vqa_train.model import QualityModel
from vqa_train.trainer import encoder_modules, train

log = logging.getLogger(__name__)

PROTOCOLS = ("in_sample", "ood", "finetune")
ABLATION_AXES = ("use_temporal", "n_t", "spatial_projector", "multi_task", "data_fraction")


@dataclass(frozen=True)
class ProtocolManifests:
    """`train` is the training set (the whole dataset for finetune); `test` are evaluation sets."""

    train: Optional[DatasetManifest] = None
    test: Tuple[DatasetManifest, ...] = ()


class FeatureSource:
    """Backends for one config plus an in-memory view of the preprocess cache."""

    def __init__(self, config: TrainConfig, cache_root: str | Path, registry: Optional[BackendRegistry] = None):
        self.config = config
        self.cache_root = Path(cache_root)
        self.registry = registry or build_registry(
            config.spatial_backend, config.temporal_backend, **config.backend_options()
        )
        self.spatial = self.registry.resolve(config.spatial_backend, BackendKind.SPATIAL)
        self.temporal = self.registry.resolve(config.temporal_backend, BackendKind.TEMPORAL)
        self._features: Dict[str, VideoFeatures] = {}

    @property
    def encoders(self):
        return [self.spatial, self.temporal]

    def for_manifest(self, manifest: DatasetManifest) -> Dict[str, VideoFeatures]:
        missing = [(r.video_id, r.path) for r in manifest.records if r.video_id not in self._features]
        if missing:
            self._features.update(
                collect_features(
                    missing,
                    self.cache_root,
                    self.spatial,
                    self.temporal,
                    self.config.frame_shape,
                    tau=self.config.tau,
                )
            )
        return {vid: self._features[vid] for vid in manifest.video_ids}


def predict_video(
    model: QualityModel,
    features: VideoFeatures,
    questions: Mapping[Task, str],
) -> Tuple[QualityPrediction, int, Dict[Task, GenerationOutput]]:
    """Answer every task question for one video.

    Returns the merged prediction, the parse-failure count and the raw generations.
    """
    merged = QualityPrediction()
    failures = 0
    outputs: Dict[Task, GenerationOutput] = {}
    for task, question in questions.items():
        outputs[task], prediction = model.predict(features, question, task)
        if prediction is None:
            failures += 1
            continue
        merged = merged.merged(prediction)
    return merged, failures, outputs


def evaluate_manifest(
    model: QualityModel,
    manifest: DatasetManifest,
    features: Mapping[str, VideoFeatures],
    templates: Sequence[PromptTemplate],
    prompt_seed: int,
    levels: Optional[Mapping[str, QualityLevel]] = None,
    classify: bool = True,
) -> Tuple[PredictionSet, float]:
    """Predictions for every record plus mean inference seconds per video.

    Levels default to the manifest's own tertiles.
    """
    levels = dict(levels) if levels is not None else bucket_levels(manifest)
    preds = PredictionSet()
    started = time.perf_counter()
    for record in manifest.records:
        feats = features[record.video_id]
        questions = task_questions(templates, record.video_id, feats.k, prompt_seed)
        if not classify:
            del questions[Task.CLASSIFICATION]
        prediction, failures, _ = predict_video(model, feats, questions)
        preds.parse_failures += failures
        preds.add(
            PredictionPair(
                video_id=record.video_id,
                prediction=prediction,
                label=QualityLabel(mos=record.mos, level=levels[record.video_id]),
            )
        )
    elapsed = time.perf_counter() - started
    return preds, elapsed / max(1, len(manifest))


def _train_on(
    config: TrainConfig,
    manifest: DatasetManifest,
    source: FeatureSource,
    templates: Sequence[PromptTemplate],
    prompt_config: PromptConfig,
    levels: Optional[Mapping[str, QualityLevel]] = None,
    model: Optional[QualityModel] = None,
    checkpoint_dir: Optional[Path] = None,
) -> QualityModel:
    manifest = subsample(manifest, config.data_fraction, config.seed)
    features = source.for_manifest(manifest)
    if levels is not None:
        levels = {vid: levels[vid] for vid in manifest.video_ids}
    prompts = build_dataset(
        manifest,
        templates,
        {vid: f.k for vid, f in features.items()},
        prompt_config.seed,
        levels=levels,
    )
    result = train(
        config,
        prompts,
        features,
        model=model,
        encoders=source.encoders,
        templates=templates,
        checkpoint_dir=checkpoint_dir,
    )
    return result.model


def _report(
    model: QualityModel,
    manifest: DatasetManifest,
    source: FeatureSource,
    templates: Sequence[PromptTemplate],
    prompt_config: PromptConfig,
    protocol: str,
    levels: Optional[Mapping[str, QualityLevel]] = None,
    fold_id: Optional[str] = None,
) -> EvalReport:
    preds, runtime = evaluate_manifest(
        model,
        manifest,
        source.for_manifest(manifest),
        templates,
        prompt_config.seed,
        levels=levels,
        classify=model.config.multi_task,
    )
    report = make_report(
        preds,
        dataset=manifest.name,
        protocol=protocol,
        fold_id=fold_id,
        config_fingerprint=model.config.fingerprint(),
        runtime_s_per_video=runtime,
    )
    log.info(
        "%s on %s%s: n=%d srcc=%s plcc=%s acc=%s failures=%d",
        protocol,
        manifest.name or "<unnamed>",
        "" if fold_id is None else f" fold {fold_id}",
        report.n,
        report.srcc,
        report.plcc,
        report.accuracy.get("total"),
        report.parse_failures,
    )
    return report


def _in_sample(config, manifests, source, templates, prompt_config, checkpoint_dir, **_) -> List[EvalReport]:
    if manifests.train is None:
        raise ManifestMissing("in_sample needs a training manifest")
    model = _train_on(config, manifests.train, source, templates, prompt_config, checkpoint_dir=checkpoint_dir)
    targets = list(manifests.test) or [manifests.train]
    return [_report(model, m, source, templates, prompt_config, "in_sample") for m in targets]


def _ood(config, manifests, source, templates, prompt_config, checkpoint, **_) -> List[EvalReport]:
    if checkpoint is None or not Path(checkpoint).exists():
        raise CheckpointMissing(f"ood evaluation needs an existing checkpoint (got {checkpoint})")
    if not manifests.test:
        raise ManifestMissing("ood needs at least one test manifest")
    if manifests.train is not None:
        seen = set(manifests.train.video_ids)
        for m in manifests.test:
            overlap = seen & set(m.video_ids)
            if overlap:
                raise ManifestError(f"ood test set {m.name!r} shares {len(overlap)} video(s) with the training set")
    model = load_checkpoint(checkpoint, encoders=encoder_modules(source.encoders))
    return [_report(model, m, source, templates, prompt_config, "ood") for m in manifests.test]


def _finetune(
    config, manifests, source, templates, prompt_config, checkpoint, checkpoint_dir, k, seed, **_
) -> List[EvalReport]:
    if manifests.train is None:
        raise ManifestMissing("finetune needs a dataset manifest")
    dataset = manifests.train
    levels = bucket_levels(dataset)
    reports: List[EvalReport] = []
    for fold in kfold_split(dataset, k, seed):
        start = None
        if checkpoint is not None:
            start = load_checkpoint(checkpoint, encoders=encoder_modules(source.encoders))
        fold_dir = None if checkpoint_dir is None else Path(checkpoint_dir) / f"fold-{fold.fold_id}"
        model = _train_on(
            config,
            dataset.subset(fold.train_ids),
            source,
            templates,
            prompt_config,
            levels=levels,
            model=start,
            checkpoint_dir=fold_dir,
        )
        test = dataset.subset(fold.test_ids, name=dataset.name)
        reports.append(
            _report(model, test, source, templates, prompt_config, "finetune", levels=levels, fold_id=str(fold.fold_id))
        )
    reports.append(mean_report(reports))
    return reports


_RUNNERS = {"in_sample": _in_sample, "ood": _ood, "finetune": _finetune}


def run_protocol(
    protocol: str,
    config: TrainConfig,
    manifests: ProtocolManifests,
    cache_root: str | Path,
    prompt_config: Optional[PromptConfig] = None,
    checkpoint: Optional[str | Path] = None,
    checkpoint_dir: Optional[str | Path] = None,
    k: int = 5,
    seed: int = 0,
    registry: Optional[BackendRegistry] = None,
) -> List[EvalReport]:
    """Run one protocol and return its reports (finetune appends the mean over folds)."""
    runner = _RUNNERS.get(protocol)
    if runner is None:
        raise ConfigError(f"Unknown protocol {protocol!r}. Available: {', '.join(PROTOCOLS)}")
    if protocol == "ood":
        if checkpoint is None:
            raise CheckpointMissing("ood evaluation needs an existing checkpoint")
        # features must come from the backends the checkpoint was trained with
        config = read_checkpoint(checkpoint).config
    config.validate()
    prompt_config = (prompt_config or PromptConfig()).validate()
    templates = prompt_config.templates()
    source = FeatureSource(config, cache_root, registry)
    log.info("Running %s protocol (fingerprint=%s)", protocol, config.fingerprint()[:12])
    return runner(
        config=config,
        manifests=manifests,
        source=source,
        templates=templates,
        prompt_config=prompt_config,
        checkpoint=checkpoint,
        checkpoint_dir=checkpoint_dir,
        k=k,
        seed=seed,
    )


def protocol_folds(protocol: str, manifests: ProtocolManifests, k: int, seed: int) -> List[Fold]:
    """Fold assignments `run_protocol` uses for the same arguments; empty for non-fold protocols."""
    if protocol != "finetune" or manifests.train is None:
        return []
    return kfold_split(manifests.train, k, seed)


def run_ablation(
    axis: str,
    values: Sequence[Any],
    protocol: str,
    config: TrainConfig,
    manifests: ProtocolManifests,
    cache_root: str | Path,
    **kwargs,
) -> List[EvalReport]:
    """One protocol run per value of `axis`; every report carries `setting="<axis>=<value>"`."""
    if axis not in ABLATION_AXES:
        raise ConfigError(f"Unknown ablation axis {axis!r}. Available: {', '.join(ABLATION_AXES)}")
    if not values:
        raise ConfigError(f"ablation over {axis} needs at least one value")
    reports: List[EvalReport] = []
    for value in values:
        setting = f"{axis}={value}"
        log.info("Ablation setting %s", setting)
        run = run_protocol(protocol, config.replace(**{axis: value}), manifests, cache_root, **kwargs)
        reports.extend(dataclasses.replace(r, setting=setting) for r in run)
    return reports
