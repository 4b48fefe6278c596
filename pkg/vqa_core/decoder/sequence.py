"""Token aggregation, greedy generation and teacher-forced loss over a decoder backend."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F

from vqa_core.decoder.model import DecoderBackend
from vqa_core.decoder.vocab import TEMPORAL_MARKER
from vqa_core.errors import BackendError, ShapeError, TokenizeError, VQAError, WidthMismatch
from vqa_core.projectors import Modality, TokenBlock
from vqa_core.writers import JsonLinesWriter

log = logging.getLogger(__name__)

_ANCHOR_RE = re.compile(r"<image-\d+>")


@dataclass(frozen=True)
class AggregatedSequence:
    """Z_all: spatial block, then temporal block (optional), then text block."""

    tokens: torch.Tensor
    segments: Tuple[Tuple[Modality, int, int], ...]
    anchors: Tuple[int, ...] = ()

    @property
    def length(self) -> int:
        return int(self.tokens.shape[0])

    @property
    def width(self) -> int:
        return int(self.tokens.shape[1])

    @property
    def segment_map(self) -> List[Modality]:
        out: List[Modality] = []
        for modality, start, end in self.segments:
            out.extend([modality] * (end - start))
        return out

    def segment_length(self, modality: Modality) -> int:
        return sum(end - start for m, start, end in self.segments if m is modality)


@dataclass(frozen=True)
class GenerationOutput:
    token_ids: Tuple[int, ...]
    text: str
    per_step_logprobs: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(lp) for lp in self.per_step_logprobs):
            raise BackendError("decoder produced a non-finite log-probability")

    def to_json(self) -> dict:
        return {
            "token_ids": list(self.token_ids),
            "text": self.text,
            "per_step_logprobs": list(self.per_step_logprobs),
        }


def _is_anchor(token: str) -> bool:
    return token == TEMPORAL_MARKER or bool(_ANCHOR_RE.fullmatch(token))


def embed_text(prompt: str, vocab, model: DecoderBackend, strict: bool = True, add_bos: bool = False) -> TokenBlock:
    """Embed a rendered question; one row per token (plus a leading <bos> when `add_bos`)."""
    if not prompt or not prompt.strip():
        raise TokenizeError("cannot encode an empty prompt")
    ids = list(vocab.encode(prompt, strict=strict))
    if add_bos:
        ids = [vocab.bos_id] + ids
    anchors: Tuple[int, ...] = ()
    tokens = getattr(vocab, "tokens", None)
    if tokens is not None:
        anchors = tuple(i for i, token_id in enumerate(ids) if _is_anchor(tokens[token_id]))
    embedded = model.embed(torch.tensor(ids, dtype=torch.long))
    return TokenBlock(tokens=embedded, modality=Modality.TEXT, anchors=anchors)


def aggregate_tokens(
    z_sp: TokenBlock,
    z_tp: Optional[TokenBlock],
    z_text: TokenBlock,
) -> AggregatedSequence:
    """Concatenate along the context axis; `z_tp=None` when the temporal branch is disabled."""
    blocks = [z_sp] + ([z_tp] if z_tp is not None else []) + [z_text]
    expected = (Modality.SPATIAL, Modality.TEMPORAL, Modality.TEXT) if z_tp is not None else (
        Modality.SPATIAL,
        Modality.TEXT,
    )
    for block, modality in zip(blocks, expected):
        if block.modality is not modality:
            raise ShapeError(f"expected a {modality.value} block, got {block.modality.value}")
    widths = {block.width for block in blocks}
    if len(widths) != 1:
        raise WidthMismatch(
            "token blocks disagree on d_model: "
            + ", ".join(f"{b.modality.value}={b.width}" for b in blocks)
        )

    segments = []
    offset = 0
    for block in blocks:
        segments.append((block.modality, offset, offset + block.length))
        offset += block.length
    text_start = segments[-1][1]
    tokens = torch.cat([block.tokens for block in blocks], dim=0)
    return AggregatedSequence(
        tokens=tokens,
        segments=tuple(segments),
        anchors=tuple(text_start + i for i in z_text.anchors),
    )


def _logits(model: DecoderBackend, inputs: torch.Tensor) -> torch.Tensor:
    try:
        return model.logits(inputs)
    except VQAError:
        raise
    except Exception as exc:
        raise BackendError(f"decoder {model.name!r} failed: {exc}") from exc


def generate(seq: AggregatedSequence, model: DecoderBackend, max_len: int, vocab) -> GenerationOutput:
    """Greedy decoding: argmax per step, stop after <eos> or `max_len` tokens."""
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1 (got {max_len})")
    eos_id = vocab.eos_id
    token_ids: List[int] = []
    logprobs: List[float] = []
    with torch.no_grad():
        inputs = seq.tokens.to(model.dtype)
        for _ in range(max_len):
            step = torch.log_softmax(_logits(model, inputs)[-1], dim=-1)
            token_id = int(torch.argmax(step))
            token_ids.append(token_id)
            logprobs.append(float(step[token_id]))
            if token_id == eos_id:
                break
            nxt = model.embed(torch.tensor([token_id], dtype=torch.long)).to(inputs.dtype)
            inputs = torch.cat([inputs, nxt], dim=0)
    return GenerationOutput(
        token_ids=tuple(token_ids),
        text=vocab.decode(token_ids, skip_specials=True),
        per_step_logprobs=tuple(logprobs),
    )


def sequence_loss(seq: AggregatedSequence, target_ids: Sequence[int], model: DecoderBackend) -> torch.Tensor:
    """Mean NLL of `target_ids` given Z_all and the preceding targets (teacher forcing).

    Returns a scalar tensor so the trainer can backpropagate through it.
    """
    if len(target_ids) == 0:
        raise ValueError("target sequence must be nonempty")
    targets = torch.tensor(list(target_ids), dtype=torch.long)
    inputs = seq.tokens.to(model.dtype)
    if len(targets) > 1:
        inputs = torch.cat([inputs, model.embed(targets[:-1]).to(inputs.dtype)], dim=0)
    logits = _logits(model, inputs)
    start = seq.length - 1
    step_logits = logits[start : start + len(targets)]
    return F.cross_entropy(step_logits, targets, reduction="mean")


def dump_traces(path: Path, traces: Iterable[Dict]) -> int:
    """Append generation traces as JSON lines; returns the number written."""
    with JsonLinesWriter(path, mode="a") as writer:
        for trace in traces:
            writer.write(trace)
    n = writer.count
    log.debug("Wrote %d generation traces to %s", n, path)
    return n
