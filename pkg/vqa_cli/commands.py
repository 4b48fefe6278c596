"""Subcommand bodies. Each takes a validated RunConfig and returns the outputs for the status JSON."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional

import torch

from vqa_cli import settings
from vqa_cli.lock import DirectoryLock
from vqa_cli.run_config import RunConfig, dump_run_config
from vqa_core.answers import Task
from vqa_core.cache import CacheEntry, preprocess_video
from vqa_core.decoder import dump_traces
from vqa_core.encoders import BackendKind, BackendRegistry, build_registry
from vqa_core.errors import CheckpointMissing, ManifestMissing, MissingCache, PreprocessFailures
from vqa_eval.protocols import FeatureSource, ProtocolManifests, predict_video, protocol_folds, run_ablation, run_protocol
from vqa_eval.reports import write_reports
from vqa_prompts.builder import build_dataset, export_prompts, import_prompts, task_questions
from vqa_prompts.manifest import load_manifest
from vqa_prompts.types import DatasetManifest
from vqa_train.checkpoint import load_checkpoint, read_checkpoint
from vqa_train.config import TrainConfig
from vqa_train.mixing import subsample
from vqa_train.trainer import encoder_modules, train

log = logging.getLogger(__name__)


def _apply_thread_policy() -> None:
    if settings.DETERMINISTIC_THREADS:
        torch.set_num_threads(1)


def _registry(train_config: TrainConfig) -> BackendRegistry:
    return build_registry(train_config.spatial_backend, train_config.temporal_backend, **train_config.backend_options())


def _manifest(config: RunConfig) -> DatasetManifest:
    if not config.paths.manifest:
        raise ManifestMissing("paths.manifest is not set")
    return load_manifest(config.paths.manifest, name=config.paths.manifest_name)


def _test_manifests(config: RunConfig) -> List[DatasetManifest]:
    return [load_manifest(p) for p in config.paths.test_manifests]


def cmd_preprocess(config: RunConfig) -> Dict[str, Any]:
    """Cache chunk index, key frames and features for every manifest video; skips complete entries."""
    manifests = [_manifest(config)] + _test_manifests(config)
    videos: Dict[str, str] = {}
    for manifest in manifests:
        for record in manifest.records:
            videos.setdefault(record.video_id, record.path)

    train_config = config.train
    registry = _registry(train_config)
    spatial = registry.resolve(train_config.spatial_backend, BackendKind.SPATIAL)
    temporal = registry.resolve(train_config.temporal_backend, BackendKind.TEMPORAL)
    workers = config.preprocess.worker_count

    computed = 0
    failed: Dict[str, str] = {}
    last_progress = time.monotonic()
    with DirectoryLock(config.cache_root, "preprocess"):
        log.info("Preprocessing %d videos with %d worker(s) into %s", len(videos), workers, config.cache_root)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(
                    preprocess_video,
                    path,
                    video_id,
                    config.cache_root,
                    spatial,
                    temporal,
                    train_config.frame_shape,
                    train_config.tau,
                    config.preprocess.force,
                ): video_id
                for video_id, path in sorted(videos.items())
            }
            for done, future in enumerate(as_completed(futures), start=1):
                video_id = futures[future]
                try:
                    _, fresh = future.result()
                    computed += int(fresh)
                except Exception as exc:
                    log.error("Preprocessing %s failed: %s", video_id, exc)
                    failed[video_id] = f"{type(exc).__name__}: {exc}"
                now = time.monotonic()
                if now - last_progress >= settings.PROGRESS_INTERVAL_S:
                    log.info("Preprocess progress: %d/%d", done, len(futures))
                    last_progress = now

    if failed:
        raise PreprocessFailures(failed)
    return {
        "cache_dir": str(config.cache_root),
        "videos": len(videos),
        "computed": computed,
        "skipped": len(videos) - computed,
    }


def cmd_build_prompts(config: RunConfig) -> Dict[str, Any]:
    """Two Q&A pairs per manifest record, written as JSON lines."""
    manifest = _manifest(config)
    k_by_video: Dict[str, int] = {}
    missing: List[str] = []
    for record in manifest.records:
        entry = CacheEntry(config.cache_root, record.video_id)
        if not entry.is_complete():
            missing.append(record.video_id)
            continue
        k_by_video[record.video_id] = entry.load_index().k
    if missing:
        raise MissingCache(f"no cache entry for {len(missing)} video(s): {', '.join(missing[:5])}; run preprocess first")

    pairs = build_dataset(manifest, config.prompts.templates(), k_by_video, config.prompts.seed)
    path = export_prompts(pairs, config.paths.prompt_file)
    return {"prompt_file": str(path), "pairs": len(pairs), "videos": len(manifest)}


def cmd_train(config: RunConfig) -> Dict[str, Any]:
    _apply_thread_policy()
    prompt_file = Path(config.paths.prompt_file)
    if not prompt_file.is_file():
        raise MissingCache(f"prompt file not found: {prompt_file}; run build-prompts first")
    prompts = import_prompts(prompt_file)
    if config.train.data_fraction < 1.0:
        kept = set(subsample(_manifest(config), config.train.data_fraction, config.train.seed).video_ids)
        prompts = [p for p in prompts if p.video_id in kept]

    features = {}
    for video_id in sorted({p.video_id for p in prompts}):
        features[video_id] = CacheEntry(config.cache_root, video_id).load()

    registry = _registry(config.train)
    with DirectoryLock(config.paths.checkpoint_dir, "train"):
        result = train(
            config.train,
            prompts,
            features,
            encoders=registry.list(),
            templates=config.prompts.templates(),
            checkpoint_dir=config.paths.checkpoint_dir,
        )
        dump_run_config(config, Path(config.paths.checkpoint_dir) / "run_config.yaml")

    last = result.loss_curve[-1] if result.loss_curve else None
    return {
        "checkpoint": str(result.checkpoint.path),
        "epochs": config.train.epochs,
        "pairs": len(prompts),
        "videos": len(features),
        "final_train_loss": None if last is None else last.train_loss,
        "final_val_loss": None if last is None else last.val_loss,
    }


def _checkpoint_for(config: RunConfig) -> Optional[str]:
    if config.eval.checkpoint:
        return config.eval.checkpoint
    if config.eval.protocol == "ood":
        return config.paths.checkpoint_dir
    return None


def cmd_evaluate(config: RunConfig) -> Dict[str, Any]:
    _apply_thread_policy()
    checkpoint = _checkpoint_for(config)
    if checkpoint is not None and not Path(checkpoint).is_dir():
        raise CheckpointMissing(f"checkpoint not found: {checkpoint}")

    train_manifest = _manifest(config) if config.paths.manifest else None
    manifests = ProtocolManifests(train=train_manifest, test=tuple(_test_manifests(config)))
    kwargs = dict(
        prompt_config=config.prompts,
        checkpoint=checkpoint,
        k=config.eval.k,
        seed=config.eval.seed,
    )
    with DirectoryLock(config.paths.report_dir, "evaluate"):
        if config.eval.ablation_axis:
            reports = run_ablation(
                config.eval.ablation_axis,
                list(config.eval.ablation_values),
                config.eval.protocol,
                config.train,
                manifests,
                config.cache_root,
                **kwargs,
            )
        else:
            reports = run_protocol(config.eval.protocol, config.train, manifests, config.cache_root, **kwargs)
        folds = protocol_folds(config.eval.protocol, manifests, config.eval.k, config.eval.seed)
        paths = write_reports(reports, config.paths.report_dir, folds=folds)

    return {
        "protocol": config.eval.protocol,
        **{name: str(p) for name, p in paths.items()},
        "reports": [
            {"dataset": r.dataset, "fold_id": r.fold_id, "setting": r.setting, "srcc": r.srcc, "plcc": r.plcc}
            for r in reports
        ],
    }


def cmd_predict(config: RunConfig, video: str, video_id: Optional[str] = None) -> Dict[str, Any]:
    """Score one video file with a trained checkpoint."""
    _apply_thread_policy()
    checkpoint = config.eval.checkpoint or config.paths.checkpoint_dir
    ckpt = read_checkpoint(checkpoint)
    source = FeatureSource(ckpt.config, config.cache_root, _registry(ckpt.config))
    model = load_checkpoint(checkpoint, encoders=encoder_modules(source.encoders))

    video_id = video_id or Path(video).stem
    entry, fresh = preprocess_video(
        video,
        video_id,
        config.cache_root,
        source.spatial,
        source.temporal,
        ckpt.config.frame_shape,
        ckpt.config.tau,
    )
    features = entry.load()
    questions = task_questions(config.prompts.templates(), video_id, features.k, config.prompts.seed)
    if not ckpt.config.multi_task:
        questions = {task: q for task, q in questions.items() if task is Task.REGRESSION}
    prediction, failures, outputs = predict_video(model, features, questions)

    if config.paths.trace_file:
        dump_traces(
            Path(config.paths.trace_file),
            [{"video_id": video_id, "task": task.value, **out.to_json()} for task, out in outputs.items()],
        )
    return {
        "video_id": video_id,
        "prediction": prediction.to_json(),
        "parse_failures": failures,
        "cached": not fresh,
        "checkpoint": str(ckpt.path),
    }
