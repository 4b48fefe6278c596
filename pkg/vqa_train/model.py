"""Trainable assembly: projectors plus the language decoder over cached video features."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import torch
from torch import nn

from vqa_core.answers import QualityPrediction, Task, parse_answer
from vqa_core.cache import VideoFeatures
from vqa_core.decoder import (
    AggregatedSequence,
    ExternalCausalLM,
    GenerationOutput,
    ToyCausalDecoder,
    Vocabulary,
    aggregate_tokens,
    build_vocabulary,
    embed_text,
    generate,
    sequence_loss,
)
from vqa_core.errors import ParseError
from vqa_core.projectors import SpatialProjector, TemporalProjector, project_spatial, project_temporal
from vqa_prompts.templates import template_texts
from vqa_prompts.types import PromptTemplate, QAInstruction
from vqa_train.config import TrainConfig

log = logging.getLogger(__name__)


def vocabulary_for(
    pairs: Sequence[QAInstruction],
    templates: Sequence[PromptTemplate] = (),
    max_images: int = 1,
) -> Vocabulary:
    """Every token of the prompts, answers and template texts, plus placeholders up to `max_images`."""
    texts: List[str] = []
    for pair in pairs:
        texts.append(pair.question)
        texts.append(pair.answer)
    texts.extend(template_texts(list(templates)))
    return build_vocabulary(texts, max_images=max_images)


class QualityModel(nn.Module):
    """Projectors f_ViT / f_MLP and decoder D; encoders stay outside (features are cached)."""

    def __init__(
        self,
        config: TrainConfig,
        spatial_projector: SpatialProjector,
        temporal_projector: Optional[TemporalProjector],
        decoder,
        codec,
    ) -> None:
        super().__init__()
        self.config = config
        self.spatial_projector = spatial_projector
        self.temporal_projector = temporal_projector
        self.decoder = decoder
        self.codec = codec

    @property
    def use_temporal(self) -> bool:
        return self.temporal_projector is not None

    def projector_modules(self) -> Dict[str, nn.Module]:
        modules: Dict[str, nn.Module] = {"spatial_projector": self.spatial_projector}
        if self.temporal_projector is not None:
            modules["temporal_projector"] = self.temporal_projector
        return modules

    def trainable_modules(self) -> Dict[str, nn.Module]:
        modules = self.projector_modules()
        if not self.config.projectors_only:
            modules["decoder"] = self.decoder
        return modules

    def frozen_modules(self) -> Dict[str, nn.Module]:
        return {} if not self.config.projectors_only else {"decoder": self.decoder}

    def apply_freezing(self) -> "QualityModel":
        for module in self.frozen_modules().values():
            module.requires_grad_(False)
        for module in self.trainable_modules().values():
            module.requires_grad_(True)
        return self

    def sequence(self, features: VideoFeatures, question: str, strict: bool = True) -> AggregatedSequence:
        z_sp = project_spatial(features.spatial, self.spatial_projector)
        z_tp = project_temporal(features.temporal, self.temporal_projector) if self.use_temporal else None
        z_text = embed_text(question, self.codec, self.decoder, strict=strict, add_bos=True)
        return aggregate_tokens(z_sp, z_tp, z_text)

    def target_ids(self, answer: str) -> List[int]:
        return list(self.codec.encode(answer, strict=True)) + [self.codec.eos_id]

    def loss(self, features: VideoFeatures, pair: QAInstruction) -> torch.Tensor:
        seq = self.sequence(features, pair.question, strict=True)
        return sequence_loss(seq, self.target_ids(pair.answer), self.decoder)

    def answer(self, features: VideoFeatures, question: str, max_len: Optional[int] = None) -> GenerationOutput:
        seq = self.sequence(features, question, strict=False)
        return generate(seq, self.decoder, max_len or self.config.max_answer_len, self.codec)

    def predict(
        self, features: VideoFeatures, question: str, task: Task
    ) -> Tuple[GenerationOutput, Optional[QualityPrediction]]:
        """Generate and parse; the prediction is None when the text does not parse."""
        out = self.answer(features, question)
        try:
            return out, parse_answer(out.text, task)
        except ParseError:
            log.warning("Unparseable %s answer for %s: %r", Task(task).value, features.video_id, out.text)
            return out, None


def build_model(config: TrainConfig, vocab: Optional[Vocabulary]) -> QualityModel:
    """Seeded projectors and decoder for `config`; `vocab` is required for the toy decoder."""
    config.validate()
    if config.decoder_backend == "external":
        decoder = ExternalCausalLM(Path(config.weights_dir) / "decoder")
        codec = decoder.codec
        d_model = decoder.d_model
    else:
        if vocab is None:
            raise ValueError("the toy decoder needs a vocabulary")
        decoder = ToyCausalDecoder(
            len(vocab),
            d_model=config.d_model,
            layers=config.decoder_layers,
            heads=config.decoder_heads,
            seed=config.seed,
        )
        codec = vocab
        d_model = config.d_model
    spatial = SpatialProjector(
        config.spatial_dim,
        d_model,
        variant=config.spatial_projector,
        heads=config.projector_heads,
        seed=config.seed,
    )
    temporal = (
        TemporalProjector(config.temporal_dim, d_model, n_t=config.n_t, seed=config.seed)
        if config.use_temporal
        else None
    )
    model = QualityModel(config, spatial, temporal, decoder, codec).apply_freezing()
    log.info(
        "Built model: decoder=%s d_model=%d n_t=%s projector=%s projectors_only=%s",
        config.decoder_backend,
        d_model,
        config.n_t if config.use_temporal else "off",
        config.spatial_projector,
        config.projectors_only,
    )
    return model
