"""Checkpoint directory: weights.pt, vocab.txt, config.json, checkpoint.json, loss_curve.csv, schema.json."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import torch

from vqa_core.decoder import Vocabulary
from vqa_core.errors import CheckpointError, CheckpointMissing, ConfigError
from vqa_core.schema import read_schema, write_schema
from vqa_core.writers import BufferedCSVWriter
from vqa_train.config import TrainConfig
from vqa_train.fingerprint import changed, fingerprint_modules
from vqa_train.model import QualityModel, build_model

log = logging.getLogger(__name__)

WEIGHTS = "weights.pt"
VOCAB = "vocab.txt"
CONFIG = "config.json"
META = "checkpoint.json"
LOSS_CURVE = "loss_curve.csv"


@dataclass(frozen=True)
class EpochLoss:
    epoch: int
    train_loss: float
    val_loss: Optional[float] = None


@dataclass(frozen=True)
class Checkpoint:
    path: Path
    config: TrainConfig
    epoch: int
    frozen_fingerprints: Dict[str, str]
    trained_fingerprints: Dict[str, str] = field(default_factory=dict)
    loss_curve: List[EpochLoss] = field(default_factory=list)

    @property
    def config_fingerprint(self) -> str:
        return self.config.fingerprint()


def write_loss_curve(path: Path, curve: Sequence[EpochLoss]) -> None:
    with BufferedCSVWriter(path, header=["epoch", "train_loss", "val_loss"], mode="w") as writer:
        for row in curve:
            writer.write_row(
                [row.epoch, repr(row.train_loss), "" if row.val_loss is None else repr(row.val_loss)]
            )


def read_loss_curve(path: Path) -> List[EpochLoss]:
    if not path.exists():
        return []
    with path.open("r", encoding="utf-8", newline="") as fh:
        return [
            EpochLoss(
                epoch=int(row["epoch"]),
                train_loss=float(row["train_loss"]),
                val_loss=float(row["val_loss"]) if row.get("val_loss") else None,
            )
            for row in csv.DictReader(fh)
        ]


def save_checkpoint(
    path: str | Path,
    model: QualityModel,
    epoch: int,
    frozen_fingerprints: Mapping[str, str],
    loss_curve: Sequence[EpochLoss] = (),
) -> Checkpoint:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    config = model.config

    weights = {name: module.state_dict() for name, module in model.projector_modules().items()}
    if not config.projectors_only or config.decoder_backend == "toy":
        weights["decoder"] = model.decoder.state_dict()
    torch.save(weights, path / WEIGHTS)

    if isinstance(model.codec, Vocabulary):
        model.codec.save(path / VOCAB)
    (path / CONFIG).write_text(
        json.dumps(
            {"train": config.to_json(), "fingerprint": config.fingerprint(), "optimizer": config.optimizer},
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    trained = fingerprint_modules(model.trainable_modules())
    meta = {
        "epoch": int(epoch),
        "frozen_fingerprints": dict(frozen_fingerprints),
        "trained_fingerprints": trained,
    }
    (path / META).write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    write_loss_curve(path / LOSS_CURVE, loss_curve)
    write_schema(
        path / "schema.json",
        kind="checkpoint",
        files={"weights": WEIGHTS, "vocab": VOCAB, "config": CONFIG, "meta": META, "loss_curve": LOSS_CURVE},
    )
    log.info("Saved checkpoint epoch=%d to %s", epoch, path)
    return Checkpoint(
        path=path,
        config=config,
        epoch=int(epoch),
        frozen_fingerprints=dict(frozen_fingerprints),
        trained_fingerprints=trained,
        loss_curve=list(loss_curve),
    )


def read_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not (path / WEIGHTS).exists() or not (path / CONFIG).exists():
        raise CheckpointMissing(f"no checkpoint at {path}")
    try:
        read_schema(path / "schema.json")
        config_obj = json.loads((path / CONFIG).read_text(encoding="utf-8"))
        meta = json.loads((path / META).read_text(encoding="utf-8"))
        config = TrainConfig.from_json(config_obj["train"])
    except (OSError, ValueError, KeyError, ConfigError) as exc:
        raise CheckpointError(f"unreadable checkpoint at {path}: {exc}") from exc
    if config_obj.get("fingerprint") != config.fingerprint():
        raise CheckpointError(f"{path}: config fingerprint does not match its config")
    return Checkpoint(
        path=path,
        config=config,
        epoch=int(meta["epoch"]),
        frozen_fingerprints=dict(meta.get("frozen_fingerprints", {})),
        trained_fingerprints=dict(meta.get("trained_fingerprints", {})),
        loss_curve=read_loss_curve(path / LOSS_CURVE),
    )


def load_checkpoint(path: str | Path, encoders: Optional[Mapping[str, torch.nn.Module]] = None) -> QualityModel:
    """Rebuild the model and verify frozen-module fingerprints against the saved run.

    `encoders` (name -> module) are checked too when given.
    """
    ckpt = read_checkpoint(path)
    vocab = Vocabulary.load(ckpt.path / VOCAB) if (ckpt.path / VOCAB).exists() else None
    model = build_model(ckpt.config, vocab)
    weights = torch.load(ckpt.path / WEIGHTS, map_location="cpu", weights_only=True)
    try:
        for name, module in model.projector_modules().items():
            module.load_state_dict(weights[name])
        if "decoder" in weights:
            model.decoder.load_state_dict(weights["decoder"])
    except (KeyError, RuntimeError) as exc:
        raise CheckpointError(f"{ckpt.path}: weights do not fit the configured model ({exc})") from exc

    current = fingerprint_modules({**model.frozen_modules(), **dict(encoders or {})})
    expected = {k: v for k, v in ckpt.frozen_fingerprints.items() if k in current}
    drift = changed(expected, current)
    if drift:
        raise CheckpointError(f"{ckpt.path}: frozen modules differ from the training run: {', '.join(drift)}")
    model.eval()
    log.info("Loaded checkpoint %s (epoch=%d)", ckpt.path, ckpt.epoch)
    return model
