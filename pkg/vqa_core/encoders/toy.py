"""Desk-scale backends that need no pretrained weights.

Both are deterministic: their only weights are fixed orthogonal projections drawn
once from a seeded generator and stored as buffers, never parameters.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from vqa_core.encoders.base import SpatialBackend, TemporalBackend


def orthogonal_projection(rows: int, cols: int, seed: int) -> torch.Tensor:
    """(rows, cols) matrix with orthonormal columns (or rows, when rows < cols)."""
    generator = torch.Generator().manual_seed(int(seed))
    a = torch.randn(max(rows, cols), min(rows, cols), generator=generator, dtype=torch.float64)
    q, r = torch.linalg.qr(a)
    signs = torch.sign(torch.diagonal(r))
    signs[signs == 0] = 1.0
    q = q * signs.unsqueeze(0)
    if rows < cols:
        q = q.T
    return q.to(torch.float32).contiguous()


class ToyPatchSpatialBackend(SpatialBackend):
    """Flattened p x p RGB patches, centered, through a fixed orthogonal map to C_sp."""

    def __init__(
        self,
        name: str = "toy-spatial",
        output_width: int = 32,
        patch_size: int = 14,
        seed: int = 0,
    ) -> None:
        super().__init__(name, output_width, patch_size)
        in_dim = 3 * self.patch_size * self.patch_size
        self.register_buffer("projection", orthogonal_projection(in_dim, self.output_width, seed))

    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        k, height, width, channels = pixels.shape
        p = self.patch_size
        x = pixels.to(torch.float32) / 255.0 - 0.5
        patches = (
            x.reshape(k, height // p, p, width // p, p, channels)
            .permute(0, 1, 3, 2, 4, 5)
            .reshape(k, (height // p) * (width // p), p * p * channels)
        )
        return patches @ self.projection


class ToyMotionTemporalBackend(TemporalBackend):
    """Statistics of absolute inter-frame differences, projected to C_tp.

    Per chunk: per-channel mean and variance of |x_t+1 - x_t| plus the mean and
    variance of the grey-level difference on a GRID x GRID spatial grid.
    """

    GRID = 4

    def __init__(self, name: str = "toy-motion", output_width: int = 64, seed: int = 1) -> None:
        super().__init__(name, output_width)
        self.register_buffer(
            "projection", orthogonal_projection(self.stats_dim, self.output_width, seed)
        )

    @property
    def stats_dim(self) -> int:
        return 2 * 3 + 2 * self.GRID * self.GRID

    def motion_stats(self, pixels: torch.Tensor) -> torch.Tensor:
        k, tau, height, width, channels = pixels.shape
        x = pixels.to(torch.float32) / 255.0
        if tau < 2:
            diffs = torch.zeros((k, 1, height, width, channels), dtype=x.dtype)
        else:
            diffs = (x[:, 1:] - x[:, :-1]).abs()
        steps = diffs.shape[1]

        chan_mean = diffs.mean(dim=(1, 2, 3))
        chan_var = diffs.var(dim=(1, 2, 3), unbiased=False)

        grey = diffs.mean(dim=-1).reshape(k * steps, 1, height, width)
        cell_mean = F.adaptive_avg_pool2d(grey, self.GRID)
        cell_sq = F.adaptive_avg_pool2d(grey * grey, self.GRID)
        cell_var = (cell_sq - cell_mean * cell_mean).clamp_min(0.0)
        cell_mean = cell_mean.reshape(k, steps, -1).mean(dim=1)
        cell_var = cell_var.reshape(k, steps, -1).mean(dim=1)

        return torch.cat([chan_mean, chan_var, cell_mean, cell_var], dim=-1)

    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        stats = self.motion_stats(pixels)
        return (stats @ self.projection).unsqueeze(1)
