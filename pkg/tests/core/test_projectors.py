from __future__ import annotations

import itertools
import random

import pytest
import torch

from vqa_core.encoders import SpatialFeatures, TemporalFeatures
from vqa_core.errors import ShapeError
from vqa_core.projectors import (
    TEMPORAL_TOKEN_TIERS,
    Modality,
    SpatialProjector,
    TemporalProjector,
    project_spatial,
    project_temporal,
)


def _spatial(k: int, n_p: int, width: int, seed: int = 0) -> SpatialFeatures:
    g = torch.Generator().manual_seed(seed)
    return SpatialFeatures(data=torch.randn(k, n_p, width, generator=g), patch_size=8, width=width)


def _temporal(k: int, width: int, seed: int = 0) -> TemporalFeatures:
    g = torch.Generator().manual_seed(seed)
    return TemporalFeatures(data=torch.randn(k, 1, width, generator=g), width=width)


@pytest.mark.parametrize("variant", ["vit", "mlp"])
def test_spatial_projection_shape(variant):
    proj = SpatialProjector(16, 24, variant=variant, heads=2, seed=0)
    block = project_spatial(_spatial(3, 4, 16), proj)
    assert block.modality is Modality.SPATIAL
    assert tuple(block.tokens.shape) == (12, 24)


def test_vit_block_attends_within_a_key_frame():
    proj = SpatialProjector(8, 8, variant="vit", heads=2, seed=1)
    feats = _spatial(2, 4, 8, seed=2)
    both = project_spatial(feats, proj).tokens
    first = project_spatial(SpatialFeatures(data=feats.data[:1], patch_size=8, width=8), proj).tokens
    assert torch.allclose(both[:4], first, atol=1e-6)


@pytest.mark.parametrize("n_t", TEMPORAL_TOKEN_TIERS)
def test_temporal_token_count_for_every_tier(n_t):
    proj = TemporalProjector(12, 8, n_t=n_t, seed=0)
    for k in (1, 3, 7):
        block = project_temporal(_temporal(k, 12, seed=k), proj)
        assert tuple(block.tokens.shape) == (n_t, 8)


def test_temporal_projection_ignores_chunk_order():
    proj = TemporalProjector(10, 6, n_t=4, seed=3)
    feats = _temporal(5, 10, seed=9)
    reference = project_temporal(feats, proj).tokens
    for perm in itertools.islice(itertools.permutations(range(5)), 60):
        shuffled = TemporalFeatures(data=feats.data[list(perm)], width=10)
        assert torch.equal(project_temporal(shuffled, proj).tokens, reference)


def test_temporal_projection_is_the_mean_of_per_chunk_tokens():
    proj = TemporalProjector(10, 6, n_t=4, seed=3).double()
    feats = _temporal(4, 10, seed=1)
    data = feats.data.double()
    expected = proj.per_chunk_tokens(data).mean(dim=0)
    assert torch.allclose(proj(data), expected, atol=1e-12)


def test_width_mismatch_is_shape_error():
    with pytest.raises(ShapeError):
        project_spatial(_spatial(1, 4, 16), SpatialProjector(8, 8, variant="mlp"))
    with pytest.raises(ShapeError):
        project_temporal(_temporal(2, 16), TemporalProjector(8, 8, n_t=4))


def _check_gradients(module: torch.nn.Module, inputs: torch.Tensor, coords: int, seed: int) -> None:
    module = module.double()
    inputs = inputs.double()
    g = torch.Generator().manual_seed(seed)
    weights = torch.randn(module(inputs).shape, generator=g, dtype=torch.float64)

    def objective() -> torch.Tensor:
        return (module(inputs) * weights).sum()

    module.zero_grad()
    objective().backward()
    params = [(name, p) for name, p in module.named_parameters() if p.requires_grad]
    rng = random.Random(seed)
    eps = 1e-6
    for _ in range(coords):
        name, p = rng.choice(params)
        idx = tuple(rng.randrange(s) for s in p.shape)
        analytic = float(p.grad[idx])
        with torch.no_grad():
            original = float(p[idx])
            p[idx] = original + eps
            plus = float(objective())
            p[idx] = original - eps
            minus = float(objective())
            p[idx] = original
        numeric = (plus - minus) / (2 * eps)
        scale = max(abs(analytic), abs(numeric), 1e-3)
        assert abs(analytic - numeric) / scale < 1e-4, f"{name}{idx}: {analytic} vs {numeric}"


@pytest.mark.parametrize("variant", ["vit", "mlp"])
def test_spatial_projector_gradients(variant):
    proj = SpatialProjector(8, 6, variant=variant, heads=2, seed=4)
    _check_gradients(proj, _spatial(2, 3, 8, seed=5).data, coords=50, seed=11)


def test_temporal_projector_gradients():
    proj = TemporalProjector(8, 6, n_t=4, seed=4)
    _check_gradients(proj, _temporal(3, 8, seed=6).data, coords=50, seed=12)
