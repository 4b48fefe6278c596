"""Adapters for pretrained backbones whose weights live outside the repository.

Weights are read from a local directory only; nothing is downloaded. The
`transformers` and `pytorchvideo` packages come from the `pretrained` extra and
are imported lazily so desk-scale runs never need them.
"""

from __future__ import annotations

import logging
from pathlib import Path

import torch
from torch import nn

from vqa_core.encoders.base import SpatialBackend, TemporalBackend
from vqa_core.errors import BackendError

log = logging.getLogger(__name__)

_CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
_CLIP_STD = (0.26862954, 0.26130258, 0.27577711)
_KINETICS_MEAN = (0.45, 0.45, 0.45)
_KINETICS_STD = (0.225, 0.225, 0.225)


def _require_dir(weights_dir: str | Path | None, subdir: str) -> Path:
    if weights_dir is None:
        raise BackendError(f"weights_dir is not configured; expected {subdir!r} under it")
    path = Path(weights_dir) / subdir
    if not path.exists():
        raise BackendError(f"pretrained weights not found: {path}")
    return path


def _normalize(x: torch.Tensor, mean, std) -> torch.Tensor:
    shape = [1] * x.ndim
    shape[-1] = 3
    m = torch.tensor(mean, dtype=x.dtype).reshape(shape)
    s = torch.tensor(std, dtype=x.dtype).reshape(shape)
    return (x - m) / s


class ClipViTBackend(SpatialBackend):
    """CLIP ViT-L/14 patch tokens of the last hidden state (CLS token dropped)."""

    SUBDIR = "clip-vit-large-patch14"

    def __init__(self, weights_dir: str | Path | None, name: str = "clip-vit-l14") -> None:
        path = _require_dir(weights_dir, self.SUBDIR)
        try:
            from transformers import CLIPVisionModel
        except ImportError as exc:
            raise BackendError("clip backend needs the 'pretrained' extra (transformers)") from exc
        model = CLIPVisionModel.from_pretrained(str(path), local_files_only=True)
        super().__init__(name, int(model.config.hidden_size), int(model.config.patch_size))
        self.model = model
        self.freeze()
        log.info("Loaded spatial backend %s from %s", name, path)

    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        x = _normalize(pixels.to(torch.float32) / 255.0, _CLIP_MEAN, _CLIP_STD)
        out = self.model(pixel_values=x.permute(0, 3, 1, 2), interpolate_pos_encoding=True)
        return out.last_hidden_state[:, 1:, :]


class SlowFastBackend(TemporalBackend):
    """SlowFast-R50 pooled slow (2048) and fast (256) features, concatenated per chunk."""

    CHECKPOINT = "SLOWFAST_8x8_R50.pyth"
    ALPHA = 4

    def __init__(self, weights_dir: str | Path | None, name: str = "slowfast-r50") -> None:
        path = _require_dir(weights_dir, self.CHECKPOINT)
        try:
            from pytorchvideo.models.hub import slowfast_r50
        except ImportError as exc:
            raise BackendError("slowfast backend needs the 'pretrained' extra (pytorchvideo)") from exc
        super().__init__(name, 2048 + 256)
        net = slowfast_r50(pretrained=False)
        state = torch.load(path, map_location="cpu")
        net.load_state_dict(state.get("model_state", state))
        blocks = list(net.children())[0]
        self.feature_extraction = nn.Sequential(*[blocks[i] for i in range(5)])
        self.slow_pool = blocks[5].pool[0]
        self.fast_pool = blocks[5].pool[1]
        self.output_pool = blocks[6].output_pool
        self.freeze()
        log.info("Loaded temporal backend %s from %s", name, path)

    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        # (K, tau, H, W, 3) -> (K, 3, tau, H, W)
        x = _normalize(pixels.to(torch.float32) / 255.0, _KINETICS_MEAN, _KINETICS_STD)
        fast = x.permute(0, 4, 1, 2, 3)
        index = torch.linspace(0, fast.shape[2] - 1, max(1, fast.shape[2] // self.ALPHA)).long()
        slow = fast.index_select(2, index)
        slow_feat, fast_feat = self.feature_extraction([slow, fast])
        slow_feat = self.output_pool(self.slow_pool(slow_feat)).flatten(1)
        fast_feat = self.output_pool(self.fast_pool(fast_feat)).flatten(1)
        return torch.cat([slow_feat, fast_feat], dim=-1).unsqueeze(1)
