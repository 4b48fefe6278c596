from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from pathlib import Path

import torch
from torch import nn

from vqa_core.errors import BackendError, TokenizeError
from vqa_core.layers import TransformerBlock, init_affine, sinusoidal_positions

log = logging.getLogger(__name__)


class DecoderBackend(nn.Module, ABC):
    """Language decoder D: an embedding table plus next-token logits over embeddings."""

    name: str = "decoder"
    external: bool = False

    def __init__(self, vocab_size: int, d_model: int) -> None:
        super().__init__()
        self.vocab_size = int(vocab_size)
        self.d_model = int(d_model)

    @abstractmethod
    def embed(self, token_ids: torch.Tensor) -> torch.Tensor:
        """(L,) ids -> (L, d_model) embeddings."""

    @abstractmethod
    def logits(self, inputs: torch.Tensor) -> torch.Tensor:
        """(L, d_model) input embeddings -> (L, vocab_size) next-token logits."""

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype


class ToyCausalDecoder(DecoderBackend):
    """Small causal transformer trained from scratch at desk scale."""

    name = "toy"

    def __init__(
        self,
        vocab_size: int,
        d_model: int = 64,
        layers: int = 2,
        heads: int = 4,
        seed: int = 0,
    ) -> None:
        super().__init__(vocab_size, d_model)
        generator = torch.Generator().manual_seed(int(seed) + 104729)
        self.token_embedding = nn.Embedding(self.vocab_size, self.d_model)
        with torch.no_grad():
            self.token_embedding.weight.copy_(
                torch.randn(self.token_embedding.weight.shape, generator=generator) * 0.02
            )
        self.blocks = nn.ModuleList(
            [TransformerBlock(self.d_model, heads, generator, causal=True) for _ in range(layers)]
        )
        self.norm = nn.LayerNorm(self.d_model)
        self.lm_head = nn.Linear(self.d_model, self.vocab_size)
        init_affine(self.lm_head, generator)

    def embed(self, token_ids: torch.Tensor) -> torch.Tensor:
        return self.token_embedding(token_ids)

    def logits(self, inputs: torch.Tensor) -> torch.Tensor:
        length = inputs.shape[0]
        x = inputs + sinusoidal_positions(length, self.d_model, inputs.dtype)
        x = x.unsqueeze(0)
        for block in self.blocks:
            x = block(x)
        return self.lm_head(self.norm(x)).squeeze(0)


class ExternalCausalLM(DecoderBackend):
    """Adapter over a local `transformers` causal LM (e.g. an 8B instruct model).

    The model and its tokenizer are read from `model_dir` without network access;
    `codec` exposes the tokenizer through the same encode/decode surface as `Vocabulary`.
    """

    name = "external"
    external = True

    def __init__(self, model_dir: str | Path) -> None:
        path = Path(model_dir)
        if not path.exists():
            raise BackendError(f"external decoder not found: {path}")
        try:
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:
            raise BackendError("external decoder needs the 'pretrained' extra (transformers)") from exc
        model = AutoModelForCausalLM.from_pretrained(str(path), local_files_only=True)
        tokenizer = AutoTokenizer.from_pretrained(str(path), local_files_only=True)
        super().__init__(int(model.config.vocab_size), int(model.config.hidden_size))
        self.model = model
        self.codec = HFTextCodec(tokenizer)
        log.info("Loaded external decoder from %s (d_model=%d)", path, self.d_model)

    def embed(self, token_ids: torch.Tensor) -> torch.Tensor:
        return self.model.get_input_embeddings()(token_ids)

    def logits(self, inputs: torch.Tensor) -> torch.Tensor:
        return self.model(inputs_embeds=inputs.unsqueeze(0)).logits.squeeze(0)


class HFTextCodec:
    """Tokenizer wrapper with the encode/decode/bos/eos surface of `Vocabulary`."""

    def __init__(self, tokenizer) -> None:
        self.tokenizer = tokenizer

    def __len__(self) -> int:
        return len(self.tokenizer)

    @property
    def bos_id(self) -> int:
        return int(self.tokenizer.bos_token_id)

    @property
    def eos_id(self) -> int:
        return int(self.tokenizer.eos_token_id)

    def encode(self, text: str, strict: bool = True):
        ids = self.tokenizer.encode(text, add_special_tokens=False)
        if not ids:
            raise TokenizeError("cannot encode an empty prompt")
        return list(ids)

    def decode(self, ids, skip_specials: bool = True) -> str:
        return self.tokenizer.decode(list(ids), skip_special_tokens=skip_specials)
