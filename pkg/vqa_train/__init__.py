"""Instruction tuning of the projectors (and the toy decoder) over Q&A prompts."""

from .checkpoint import Checkpoint, EpochLoss, load_checkpoint, read_checkpoint, save_checkpoint
from .config import TrainConfig
from .mixing import TaskStream, mix_tasks, subsample, validation_split
from .model import QualityModel, build_model, vocabulary_for
from .trainer import TrainResult, train

__all__ = [
    "Checkpoint",
    "EpochLoss",
    "QualityModel",
    "TaskStream",
    "TrainConfig",
    "TrainResult",
    "build_model",
    "load_checkpoint",
    "mix_tasks",
    "read_checkpoint",
    "save_checkpoint",
    "subsample",
    "train",
    "validation_split",
    "vocabulary_for",
]
