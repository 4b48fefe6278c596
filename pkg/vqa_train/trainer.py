from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import torch

from vqa_core.answers import Task
from vqa_core.cache import VideoFeatures
from vqa_core.encoders import EncoderBackend
from vqa_core.errors import ConfigError, DivergenceError, FreezeViolation, MissingCache
from vqa_prompts.types import PromptTemplate, QAInstruction
from vqa_train.checkpoint import Checkpoint, EpochLoss, save_checkpoint
from vqa_train.config import TrainConfig
from vqa_train.fingerprint import changed, fingerprint_modules
from vqa_train.mixing import mix_tasks, validation_split
from vqa_train.model import QualityModel, build_model, vocabulary_for

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: QualityModel
    loss_curve: List[EpochLoss]
    frozen_fingerprints: Dict[str, str]
    train_video_ids: List[str]
    val_video_ids: List[str]
    checkpoint: Optional[Checkpoint] = None


def encoder_modules(encoders: Sequence[EncoderBackend]) -> Dict[str, EncoderBackend]:
    return {f"encoder:{backend.name}": backend for backend in encoders}


def _optimizer(config: TrainConfig, params) -> torch.optim.Optimizer:
    if config.optimizer == "rmsprop":
        return torch.optim.RMSprop(params, lr=config.learning_rate, momentum=0.0)
    raise ConfigError(f"unsupported optimizer {config.optimizer!r}")


def _mean_loss(model: QualityModel, pairs: Sequence[QAInstruction], features: Mapping[str, VideoFeatures]) -> float:
    if not pairs:
        return float("nan")
    with torch.no_grad():
        total = sum(float(model.loss(features[p.video_id], p)) for p in pairs)
    return total / len(pairs)


def train(
    config: TrainConfig,
    prompts: Sequence[QAInstruction],
    features: Mapping[str, VideoFeatures],
    model: Optional[QualityModel] = None,
    encoders: Sequence[EncoderBackend] = (),
    templates: Sequence[PromptTemplate] = (),
    checkpoint_dir: Optional[str | Path] = None,
) -> TrainResult:
    """Instruction-tune the trainable modules on `prompts` over cached `features`.

    Frozen modules (encoders always, the decoder when `projectors_only`) are fingerprinted
    before and after; any drift raises FreezeViolation.
    """
    config.validate()
    if not prompts:
        raise ConfigError("training set is empty")
    missing = sorted({p.video_id for p in prompts} - set(features))
    if missing:
        raise MissingCache(f"no features for {len(missing)} video(s): {', '.join(missing[:5])}")

    torch.manual_seed(config.seed)
    if model is None:
        model = build_model(config, vocabulary_for(prompts, templates, max_images=config.max_images))
    model.apply_freezing()
    model.train()

    train_ids, val_ids = validation_split([p.video_id for p in prompts], config.validation_fraction, config.seed)
    held = set(val_ids)
    train_pairs = [p for p in prompts if p.video_id not in held]
    val_pairs = [p for p in prompts if p.video_id in held]
    stream = mix_tasks(train_pairs, config.multi_task, config.seed)
    val_stream = [p for p in val_pairs if config.multi_task or p.task is Task.REGRESSION]

    frozen = {**model.frozen_modules(), **encoder_modules(encoders)}
    before = fingerprint_modules(frozen)
    params = [p for m in model.trainable_modules().values() for p in m.parameters() if p.requires_grad]
    if not params:
        raise ConfigError("no trainable parameters")
    optimizer = _optimizer(config, params)

    log.info(
        "Training: pairs=%d (val=%d) epochs=%d batch=%d lr=%g multi_task=%s projectors_only=%s",
        len(stream),
        len(val_stream),
        config.epochs,
        config.batch_size,
        config.learning_rate,
        config.multi_task,
        config.projectors_only,
    )

    curve: List[EpochLoss] = []
    for epoch in range(1, config.epochs + 1):
        order = stream.epoch(epoch)
        epoch_total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad(set_to_none=True)
            losses = [model.loss(features[p.video_id], p) for p in batch]
            loss = torch.stack(losses).mean()
            value = float(loss.detach())
            if not math.isfinite(value):
                raise DivergenceError(f"non-finite loss {value} at epoch {epoch}, batch starting {start}")
            loss.backward()
            torch.nn.utils.clip_grad_norm_(params, config.grad_clip)
            optimizer.step()
            epoch_total += value * len(batch)
        train_loss = epoch_total / len(order)
        val_loss = None
        if val_stream:
            model.eval()
            val_loss = _mean_loss(model, val_stream, features)
            model.train()
        curve.append(EpochLoss(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        log.info(
            "Epoch %d/%d train_loss=%.6f%s",
            epoch,
            config.epochs,
            train_loss,
            "" if val_loss is None else f" val_loss={val_loss:.6f}",
        )

    after = fingerprint_modules(frozen)
    drift = changed(before, after)
    if drift:
        raise FreezeViolation(f"frozen modules changed during training: {', '.join(drift)}")
    model.eval()

    result = TrainResult(
        model=model,
        loss_curve=curve,
        frozen_fingerprints=before,
        train_video_ids=train_ids,
        val_video_ids=val_ids,
    )
    if checkpoint_dir is not None:
        result.checkpoint = save_checkpoint(checkpoint_dir, model, config.epochs, before, curve)
    return result
