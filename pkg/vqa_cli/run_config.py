"""Declarative run configuration.

Precedence, lowest first: dataclass defaults, the YAML config file, environment
(cache root and log settings), dotted CLI flags such as `--train.epochs 3`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional, Tuple

import yaml

from vqa_cli import settings
from vqa_core.errors import ConfigError
from vqa_eval.protocols import ABLATION_AXES, PROTOCOLS
from vqa_prompts.config import PromptConfig
from vqa_train.config import TrainConfig, from_mapping


@dataclass(frozen=True)
class PathsConfig:
    # dataset manifest (training set, or the whole dataset for finetune)
    manifest: Optional[str] = None
    # catalog name used for the MOS scale when the manifest does not declare one
    manifest_name: Optional[str] = None
    test_manifests: Tuple[str, ...] = ()
    cache_dir: str = "out/cache"
    prompt_file: str = "out/prompts.jsonl"
    checkpoint_dir: str = "out/checkpoint"
    report_dir: str = "out/reports"
    log_dir: str = "out/logs"
    trace_file: Optional[str] = None


@dataclass(frozen=True)
class PreprocessConfig:
    # None: VQA_INSTRUCT_WORKERS
    workers: Optional[int] = None
    force: bool = False

    def validate(self) -> "PreprocessConfig":
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"preprocess.workers must be >= 1 (got {self.workers})")
        return self

    @property
    def worker_count(self) -> int:
        return self.workers or settings.WORKERS


@dataclass(frozen=True)
class EvalConfig:
    protocol: str = "in_sample"
    k: int = 5
    seed: int = 0
    # ood: checkpoint to evaluate (defaults to paths.checkpoint_dir); finetune: optional start point
    checkpoint: Optional[str] = None
    ablation_axis: Optional[str] = None
    ablation_values: Tuple[Any, ...] = ()

    def validate(self) -> "EvalConfig":
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"eval.protocol must be one of {PROTOCOLS} (got {self.protocol!r})")
        if self.k < 2:
            raise ConfigError(f"eval.k must be >= 2 (got {self.k})")
        if self.ablation_axis is not None:
            if self.ablation_axis not in ABLATION_AXES:
                raise ConfigError(f"eval.ablation_axis must be one of {ABLATION_AXES} (got {self.ablation_axis!r})")
            if not self.ablation_values:
                raise ConfigError("eval.ablation_values is empty")
        return self


SECTIONS: Dict[str, type] = {
    "paths": PathsConfig,
    "preprocess": PreprocessConfig,
    "prompts": PromptConfig,
    "eval": EvalConfig,
    "train": TrainConfig,
}
TOP_LEVEL = ("log_level",)


@dataclass(frozen=True)
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    prompts: PromptConfig = field(default_factory=PromptConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    log_level: str = "INFO"

    def validate(self) -> "RunConfig":
        self.preprocess.validate()
        self.prompts.validate()
        self.eval.validate()
        self.train.validate()
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"log_level must be a logging level name (got {self.log_level!r})")
        return self

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def cache_root(self) -> Path:
        return Path(self.paths.cache_dir)


def _coerce(value: Any, type_str: str, key: str) -> Any:
    optional = type_str.startswith("Optional[")
    base = type_str[len("Optional[") : -1] if optional else type_str
    if value is None:
        if optional:
            return None
        if base.startswith("Tuple["):
            return ()
        raise ConfigError(f"{key} may not be null")
    if base.startswith("Tuple["):
        items = list(value) if isinstance(value, (list, tuple)) else [value]
        return tuple(str(v) for v in items) if base == "Tuple[str, ...]" else tuple(items)
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false (got {value!r})")
        return value
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer (got {value!r})")
        return value
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number (got {value!r})")
        return float(value)
    if base == "str":
        if isinstance(value, (list, tuple, dict)):
            raise ConfigError(f"{key} must be a string (got {value!r})")
        return str(value)
    return value


def _section(name: str, data: Any) -> Any:
    cls = SECTIONS[name]
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"config section {name!r} must be a mapping")
    types = {f.name: f.type for f in fields(cls)}
    coerced = {k: _coerce(v, types[k], f"{name}.{k}") if k in types else v for k, v in data.items()}
    return from_mapping(cls, coerced, f"config section {name!r}")


def config_keys() -> Iterator[Tuple[str, Any, str]]:
    """(dotted key, default, type) for every configurable value."""
    defaults = RunConfig()
    for section, cls in SECTIONS.items():
        current = getattr(defaults, section)
        for f in fields(cls):
            yield f"{section}.{f.name}", getattr(current, f.name), str(f.type)
    for name in TOP_LEVEL:
        yield name, getattr(defaults, name), "str"


def parse_flag_value(raw: str) -> Any:
    """CLI values are YAML scalars or flow sequences: `3`, `true`, `null`, `[4, 16]`."""
    try:
        return yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {raw!r}: {exc}") from exc


def _read_file(path: str | Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return dict(data)


def _apply_env(data: Dict[str, Any]) -> None:
    paths = data.get("paths") or {}
    if not isinstance(paths, Mapping):
        return
    paths = dict(paths)
    data["paths"] = paths
    if settings.CACHE_ROOT:
        paths["cache_dir"] = settings.CACHE_ROOT
    if settings.LOG_DIR:
        paths["log_dir"] = settings.LOG_DIR
    if settings.LOG_LEVEL:
        data["log_level"] = settings.LOG_LEVEL


def _apply_overrides(data: Dict[str, Any], overrides: Mapping[str, Any]) -> None:
    for key, value in overrides.items():
        if "." not in key:
            if key not in TOP_LEVEL:
                raise ConfigError(f"unknown config key {key!r}")
            data[key] = value
            continue
        section, name = key.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section {section!r} in {key!r}")
        target = data.get(section) or {}
        target = dict(target)
        target[name] = value
        data[section] = target


def load_run_config(path: Optional[str | Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Compose defaults, file, environment and overrides, then validate."""
    data = _read_file(path) if path else {}
    unknown = sorted(set(data) - set(SECTIONS) - set(TOP_LEVEL))
    if unknown:
        allowed = ", ".join(list(SECTIONS) + list(TOP_LEVEL))
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}. Allowed: {allowed}")
    _apply_env(data)
    _apply_overrides(data, overrides or {})
    kwargs = {name: _section(name, data.get(name)) for name in SECTIONS}
    log_level = _coerce(data.get("log_level", "INFO"), "str", "log_level")
    return RunConfig(**kwargs, log_level=log_level.upper()).validate()


def dump_run_config(config: RunConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = config.to_json()
    for section in data.values():
        if isinstance(section, dict):
            for k, v in section.items():
                if isinstance(v, tuple):
                    section[k] = list(v)
    path.write_text(yaml.safe_dump(data, sort_keys=True), encoding="utf-8")
    return path
