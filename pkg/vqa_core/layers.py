from __future__ import annotations

import math
from typing import Optional

import torch
from torch import nn


def init_affine(module: nn.Linear, generator: torch.Generator) -> None:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero bias."""
    bound = 1.0 / math.sqrt(module.in_features)
    with torch.no_grad():
        module.weight.copy_((torch.rand(module.weight.shape, generator=generator) * 2.0 - 1.0) * bound)
        if module.bias is not None:
            module.bias.zero_()


class TransformerBlock(nn.Module):
    """Pre-norm self-attention + feed-forward block (4x width MLP, GELU, no dropout)."""

    def __init__(self, width: int, heads: int, generator: torch.Generator, causal: bool = False) -> None:
        super().__init__()
        if width % heads:
            raise ValueError(f"width {width} is not divisible by heads {heads}")
        self.causal = causal
        self.norm_attn = nn.LayerNorm(width)
        self.attn = nn.MultiheadAttention(width, heads, dropout=0.0, batch_first=True)
        self.norm_mlp = nn.LayerNorm(width)
        self.fc_in = nn.Linear(width, 4 * width)
        self.act = nn.GELU()
        self.fc_out = nn.Linear(4 * width, width)

        bound = 1.0 / math.sqrt(width)
        with torch.no_grad():
            self.attn.in_proj_weight.copy_(
                (torch.rand(self.attn.in_proj_weight.shape, generator=generator) * 2.0 - 1.0) * bound
            )
            self.attn.in_proj_bias.zero_()
        init_affine(self.attn.out_proj, generator)
        init_affine(self.fc_in, generator)
        init_affine(self.fc_out, generator)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (B, L, width)
        mask: Optional[torch.Tensor] = None
        if self.causal:
            length = x.shape[1]
            mask = torch.triu(
                torch.full((length, length), float("-inf"), dtype=x.dtype, device=x.device), diagonal=1
            )
        h = self.norm_attn(x)
        attn, _ = self.attn(h, h, h, attn_mask=mask, need_weights=False)
        x = x + attn
        return x + self.fc_out(self.act(self.fc_in(self.norm_mlp(x))))


def sinusoidal_positions(length: int, width: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    position = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(torch.arange(0, width, 2, dtype=torch.float64) * (-math.log(10000.0) / width))
    table = torch.zeros(length, width, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div[: width // 2])
    return table.to(dtype)
