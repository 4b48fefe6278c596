"""Correlation metrics, level accuracy, k-fold splits and evaluation protocols."""

from .folds import Fold, kfold_split
from .metrics import level_accuracy, plcc, srcc
from .protocols import ProtocolManifests, evaluate_manifest, run_ablation, run_protocol
from .reports import format_table, read_reports, write_reports
from .types import EvalReport, PredictionPair, PredictionSet, make_report, mean_report

__all__ = [
    "EvalReport",
    "Fold",
    "PredictionPair",
    "PredictionSet",
    "ProtocolManifests",
    "evaluate_manifest",
    "format_table",
    "kfold_split",
    "level_accuracy",
    "make_report",
    "mean_report",
    "plcc",
    "read_reports",
    "run_ablation",
    "run_protocol",
    "srcc",
    "write_reports",
]
