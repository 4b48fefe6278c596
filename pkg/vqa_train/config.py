from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from typing import Any, Mapping, Optional, Type, TypeVar

from vqa_core.encoders import FIXED_WIDTH_BACKENDS, native_width
from vqa_core.errors import ConfigError
from vqa_core.projectors import SpatialProjector

T = TypeVar("T")

DECODER_BACKENDS = ("toy", "external")
OPTIMIZERS = ("rmsprop",)


def from_mapping(cls: Type[T], data: Optional[Mapping[str, Any]], where: str) -> T:
    """Build a config dataclass from a mapping; unknown keys raise ConfigError."""
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}. Allowed: {', '.join(sorted(known))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


@dataclass(frozen=True)
class TrainConfig:
    # optimisation
    batch_size: int = 32
    learning_rate: float = 0.001
    epochs: int = 6
    optimizer: str = "rmsprop"
    grad_clip: float = 1.0
    multi_task: bool = True
    # None: frozen decoder for an external LM, trainable toy decoder otherwise
    train_projectors_only: Optional[bool] = None
    seed: int = 0
    data_fraction: float = 1.0
    validation_fraction: float = 0.1
    # geometry
    frame_size: int = 224
    patch_size: int = 14
    tau: Optional[int] = None
    # None: the backend's native output width
    spatial_width: Optional[int] = None
    temporal_width: Optional[int] = None
    d_model: int = 64
    n_t: int = 64
    use_temporal: bool = True
    spatial_projector: str = "vit"
    projector_heads: int = 4
    max_images: int = 64
    max_answer_len: int = 24
    # backends
    spatial_backend: str = "toy-spatial"
    temporal_backend: str = "toy-motion"
    decoder_backend: str = "toy"
    decoder_layers: int = 2
    decoder_heads: int = 4
    weights_dir: Optional[str] = None
    backend_seed: int = 0

    @classmethod
    def from_json(cls, data: Optional[Mapping[str, Any]]) -> "TrainConfig":
        return from_mapping(cls, data, "train config")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes: Any) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    @property
    def projectors_only(self) -> bool:
        if self.train_projectors_only is None:
            return self.decoder_backend == "external"
        return bool(self.train_projectors_only)

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.frame_size, self.frame_size

    @property
    def spatial_dim(self) -> int:
        return self._width("spatial_width", self.spatial_backend)

    @property
    def temporal_dim(self) -> int:
        return self._width("temporal_width", self.temporal_backend)

    def _width(self, field_name: str, backend: str) -> int:
        explicit = getattr(self, field_name)
        if explicit is not None:
            return explicit
        width = native_width(backend)
        if width is None:
            raise ConfigError(f"train.{field_name} must be set for backend {backend!r}")
        return width

    def backend_options(self) -> dict:
        return {
            "spatial_width": self.spatial_dim,
            "temporal_width": self.temporal_dim,
            "patch_size": self.patch_size,
            "seed": self.backend_seed,
            "weights_dir": self.weights_dir,
        }

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def validate(self) -> "TrainConfig":
        def positive(name: str) -> None:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(f"train.{name} must be positive (got {value!r})")

        for name in (
            "batch_size",
            "frame_size",
            "patch_size",
            "d_model",
            "n_t",
            "projector_heads",
            "decoder_layers",
            "decoder_heads",
            "max_images",
            "max_answer_len",
            "grad_clip",
        ):
            positive(name)
        for name, backend in (("spatial_width", self.spatial_backend), ("temporal_width", self.temporal_backend)):
            value = getattr(self, name)
            if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value <= 0):
                raise ConfigError(f"train.{name} must be a positive integer or null (got {value!r})")
            native = native_width(backend)
            if value is not None and backend.strip().lower() in FIXED_WIDTH_BACKENDS and value != native:
                raise ConfigError(f"train.{name} is {value} but {backend} produces width {native}")
        if self.epochs < 0:
            raise ConfigError(f"train.epochs must be >= 0 (got {self.epochs})")
        if self.learning_rate < 0:
            raise ConfigError(f"train.learning_rate must be >= 0 (got {self.learning_rate})")
        if not 0.0 < self.data_fraction <= 1.0:
            raise ConfigError(f"train.data_fraction must be in (0, 1] (got {self.data_fraction})")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError(f"train.validation_fraction must be in [0, 1) (got {self.validation_fraction})")
        if self.tau is not None and self.tau < 1:
            raise ConfigError(f"train.tau must be >= 1 or null (got {self.tau})")
        if self.frame_size % self.patch_size:
            raise ConfigError(f"train.frame_size {self.frame_size} is not divisible by patch_size {self.patch_size}")
        if self.spatial_projector not in SpatialProjector.VARIANTS:
            raise ConfigError(
                f"train.spatial_projector must be one of {SpatialProjector.VARIANTS} (got {self.spatial_projector!r})"
            )
        if self.spatial_projector == "vit" and self.spatial_dim % self.projector_heads:
            raise ConfigError(
                f"train.spatial_width {self.spatial_dim} is not divisible by projector_heads {self.projector_heads}"
            )
        if self.decoder_backend not in DECODER_BACKENDS:
            raise ConfigError(f"train.decoder_backend must be one of {DECODER_BACKENDS} (got {self.decoder_backend!r})")
        if self.decoder_backend == "toy" and self.d_model % self.decoder_heads:
            raise ConfigError(f"train.d_model {self.d_model} is not divisible by decoder_heads {self.decoder_heads}")
        if self.decoder_backend == "external" and not self.weights_dir:
            raise ConfigError("train.weights_dir is required for the external decoder")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"train.optimizer must be one of {OPTIMIZERS} (got {self.optimizer!r})")
        return self
