"""Projectors aligning visual features with the language-token space.

With `train_projectors_only` these are the only modules that receive gradient updates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import torch
from torch import nn

from vqa_core.encoders.base import SpatialFeatures, TemporalFeatures
from vqa_core.errors import ShapeError
from vqa_core.layers import TransformerBlock, init_affine

TEMPORAL_TOKEN_TIERS = (4, 16, 64, 256)


class Modality(str, Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"
    TEXT = "text"


@dataclass(frozen=True)
class TokenBlock:
    """(L_block, d_model) token embeddings of one modality."""

    tokens: torch.Tensor
    modality: Modality
    # positions of <image-i> / <temporal> anchors inside a text block
    anchors: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.tokens.ndim != 2:
            raise ShapeError(f"token block must be L x d_model (got {tuple(self.tokens.shape)})")
        if self.tokens.shape[0] < 1:
            raise ShapeError(f"{self.modality.value} token block is empty")
        if not bool(torch.isfinite(self.tokens.detach()).all()):
            raise ShapeError(f"{self.modality.value} token block contains non-finite entries")

    @property
    def length(self) -> int:
        return int(self.tokens.shape[0])

    @property
    def width(self) -> int:
        return int(self.tokens.shape[1])


class SpatialProjector(nn.Module):
    """f_ViT: one pre-norm ViT block at width C_sp followed by an affine map to d_model.

    The `mlp` variant drops the ViT block and keeps only the affine map.
    """

    VARIANTS = ("vit", "mlp")

    def __init__(
        self,
        in_width: int,
        d_model: int,
        variant: str = "vit",
        heads: int = 4,
        seed: int = 0,
    ) -> None:
        super().__init__()
        if variant not in self.VARIANTS:
            raise ValueError(f"spatial projector variant must be one of {self.VARIANTS} (got {variant!r})")
        generator = torch.Generator().manual_seed(int(seed))
        self.variant = variant
        self.in_width = int(in_width)
        self.d_model = int(d_model)
        self.block = TransformerBlock(self.in_width, heads, generator) if variant == "vit" else None
        self.out = nn.Linear(self.in_width, self.d_model)
        init_affine(self.out, generator)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        # (K, N_p, C_sp) -> (K, N_p, d_model); attention runs within each key frame
        x = features
        if self.block is not None:
            x = self.block(x)
        return self.out(x)


class TemporalProjector(nn.Module):
    """f_MLP + Mean: one affine map C_tp -> N_t * d_model, averaged over chunks."""

    def __init__(self, in_width: int, d_model: int, n_t: int = 64, seed: int = 0) -> None:
        super().__init__()
        if n_t < 1:
            raise ValueError(f"n_t must be >= 1 (got {n_t})")
        generator = torch.Generator().manual_seed(int(seed) + 7919)
        self.in_width = int(in_width)
        self.d_model = int(d_model)
        self.n_t = int(n_t)
        self.fc = nn.Linear(self.in_width, self.n_t * self.d_model)
        init_affine(self.fc, generator)

    def per_chunk_tokens(self, features: torch.Tensor) -> torch.Tensor:
        # (K, 1, C_tp) -> (K, N_t, d_model)
        k = features.shape[0]
        return self.fc(features.reshape(k, self.in_width)).reshape(k, self.n_t, self.d_model)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        # The affine map commutes with the mean, so the chunk mean is taken on the
        # inputs; summing in sorted order makes the result independent of chunk order.
        k = features.shape[0]
        flat = features.reshape(k, self.in_width)
        mean = torch.sort(flat, dim=0).values.sum(dim=0) / k
        return self.fc(mean).reshape(self.n_t, self.d_model)


def project_spatial(features: SpatialFeatures, proj: SpatialProjector) -> TokenBlock:
    if features.width != proj.in_width:
        raise ShapeError(f"spatial feature width {features.width} != projector input width {proj.in_width}")
    data = features.data.to(next(proj.parameters()).dtype)
    tokens = proj(data)
    return TokenBlock(tokens=tokens.reshape(-1, proj.d_model), modality=Modality.SPATIAL)


def project_temporal(features: TemporalFeatures, proj: TemporalProjector) -> TokenBlock:
    if features.width != proj.in_width:
        raise ShapeError(f"temporal feature width {features.width} != projector input width {proj.in_width}")
    data = features.data.to(next(proj.parameters()).dtype)
    return TokenBlock(tokens=proj(data), modality=Modality.TEMPORAL)
