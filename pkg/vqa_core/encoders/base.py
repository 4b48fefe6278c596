from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np
import torch
from torch import nn

from vqa_core.errors import BackendError, ShapeError, VQAError
from vqa_core.video import ChunkSet, KeyFrameSet


class BackendKind(str, Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"


@dataclass(frozen=True)
class SpatialFeatures:
    """F_sp: (K, N_p, C_sp) patch features of the key frames."""

    data: torch.Tensor
    patch_size: int
    width: int

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[-1] != self.width:
            raise ShapeError(f"spatial features must be K x N_p x {self.width} (got {tuple(self.data.shape)})")
        if not bool(torch.isfinite(self.data).all()):
            raise ShapeError("spatial features contain non-finite entries")

    @property
    def k(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_patches(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class TemporalFeatures:
    """F_tp: (K, 1, C_tp) per-chunk motion features."""

    data: torch.Tensor
    width: int

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[1] != 1 or self.data.shape[-1] != self.width:
            raise ShapeError(f"temporal features must be K x 1 x {self.width} (got {tuple(self.data.shape)})")
        if not bool(torch.isfinite(self.data).all()):
            raise ShapeError("temporal features contain non-finite entries")

    @property
    def k(self) -> int:
        return int(self.data.shape[0])


class EncoderBackend(nn.Module, ABC):
    """Frozen feature extractor realizing f_sp or f_tp.

    Spatial backends take (K, H, W, 3) uint8 pixels and return (K, N_p, C_sp);
    temporal backends take (K, tau, H, W, 3) uint8 pixels and return (K, 1, C_tp).
    """

    kind: BackendKind
    deterministic: bool = True

    def __init__(self, name: str, output_width: int) -> None:
        super().__init__()
        if output_width < 1:
            raise ValueError(f"output_width must be positive (got {output_width})")
        self.name = name
        self.output_width = int(output_width)

    @abstractmethod
    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def freeze(self) -> "EncoderBackend":
        self.eval()
        self.requires_grad_(False)
        return self

    def describe(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "output_width": self.output_width,
            "deterministic": self.deterministic,
        }


class SpatialBackend(EncoderBackend):
    kind = BackendKind.SPATIAL

    def __init__(self, name: str, output_width: int, patch_size: int) -> None:
        super().__init__(name, output_width)
        if patch_size < 1:
            raise ValueError(f"patch_size must be positive (got {patch_size})")
        self.patch_size = int(patch_size)

    def describe(self) -> dict:
        return {**super().describe(), "patch_size": self.patch_size}


class TemporalBackend(EncoderBackend):
    kind = BackendKind.TEMPORAL


def _run_backend(backend: EncoderBackend, pixels: np.ndarray) -> torch.Tensor:
    batch = torch.from_numpy(np.array(pixels, dtype=np.uint8, copy=True))
    try:
        with torch.no_grad():
            out = backend(batch)
    except VQAError:
        raise
    except Exception as exc:
        raise BackendError(f"backend {backend.name!r} failed: {exc}") from exc
    if not isinstance(out, torch.Tensor):
        raise BackendError(f"backend {backend.name!r} returned {type(out).__name__}, not a tensor")
    return out.detach().to(torch.float32)


def encode_spatial(key_frames: KeyFrameSet, backend: EncoderBackend) -> SpatialFeatures:
    if backend.kind is not BackendKind.SPATIAL:
        raise BackendError(f"backend {backend.name!r} is {backend.kind.value}, expected spatial")
    k, height, width, _ = key_frames.key_frames.shape
    p = backend.patch_size
    if height % p or width % p:
        raise ShapeError(f"frame size {height}x{width} is not divisible by patch size {p}")
    data = _run_backend(backend, key_frames.key_frames)
    expected = (k, (height // p) * (width // p), backend.output_width)
    if tuple(data.shape) != expected:
        raise BackendError(f"backend {backend.name!r} emitted {tuple(data.shape)}, expected {expected}")
    return SpatialFeatures(data=data, patch_size=p, width=backend.output_width)


def encode_temporal(chunks: ChunkSet, backend: EncoderBackend) -> TemporalFeatures:
    if backend.kind is not BackendKind.TEMPORAL:
        raise BackendError(f"backend {backend.name!r} is {backend.kind.value}, expected temporal")
    data = _run_backend(backend, chunks.chunks)
    expected = (chunks.k, 1, backend.output_width)
    if tuple(data.shape) != expected:
        raise BackendError(f"backend {backend.name!r} emitted {tuple(data.shape)}, expected {expected}")
    return TemporalFeatures(data=data, width=backend.output_width)
