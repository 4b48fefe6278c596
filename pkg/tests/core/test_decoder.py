from __future__ import annotations

import math

import pytest
import torch

from vqa_core.decoder import (
    ToyCausalDecoder,
    Vocabulary,
    aggregate_tokens,
    build_vocabulary,
    embed_text,
    generate,
    sequence_loss,
)
from vqa_core.decoder.model import DecoderBackend
from vqa_core.decoder.vocab import detokenize, tokenize
from vqa_core.errors import ShapeError, TokenizeError, WidthMismatch
from vqa_core.projectors import Modality, TokenBlock

QUESTION = "Rate the quality of this video . <image-1> <image-2> <temporal>"


def _block(length: int, width: int, modality: Modality, seed: int = 0, dtype=torch.float32) -> TokenBlock:
    g = torch.Generator().manual_seed(seed)
    return TokenBlock(tokens=torch.randn(length, width, generator=g, dtype=dtype), modality=modality)


@pytest.mark.parametrize(
    "text",
    [
        "The quality score of the video is 73.4.",
        "The quality score of the video is 5.0.",
        "The quality score of the video is -1.5.",
        "The quality of the video is fair.",
    ],
)
def test_answer_frames_survive_tokenization(text):
    assert detokenize(tokenize(text)) == text


def test_numbers_are_digit_tokens():
    assert tokenize("is 73.4.") == ["is", "7", "3", ".", "4", "."]


def test_vocabulary_layout_and_strict_encoding(tmp_path):
    vocab = build_vocabulary([QUESTION], max_images=3)
    assert vocab.tokens[:4] == ("<pad>", "<bos>", "<eos>", "<temporal>")
    assert vocab.max_images == 3
    with pytest.raises(TokenizeError):
        vocab.encode("Rate the sharpness", strict=True)
    assert vocab.encode("Rate sharpness", strict=False)[-1] == vocab.unk_id
    with pytest.raises(TokenizeError):
        vocab.encode("   ")

    vocab.save(tmp_path / "vocab.txt")
    assert Vocabulary.load(tmp_path / "vocab.txt") == vocab


def test_embed_text_marks_anchor_positions():
    vocab = build_vocabulary([QUESTION], max_images=2)
    decoder = ToyCausalDecoder(len(vocab), d_model=16, layers=1, heads=2, seed=0)
    block = embed_text(QUESTION, vocab, decoder)
    n = len(tokenize(QUESTION))
    assert block.length == n
    assert block.anchors == (n - 3, n - 2, n - 1)
    with_bos = embed_text(QUESTION, vocab, decoder, add_bos=True)
    assert with_bos.length == n + 1
    assert with_bos.anchors == (n - 2, n - 1, n)


def test_aggregate_concatenates_in_modality_order():
    z_sp = _block(6, 8, Modality.SPATIAL, 1)
    z_tp = _block(4, 8, Modality.TEMPORAL, 2)
    z_text = TokenBlock(tokens=torch.zeros(5, 8), modality=Modality.TEXT, anchors=(3, 4))
    seq = aggregate_tokens(z_sp, z_tp, z_text)
    assert seq.length == 15
    assert seq.segment_map == [Modality.SPATIAL] * 6 + [Modality.TEMPORAL] * 4 + [Modality.TEXT] * 5
    assert seq.anchors == (13, 14)
    assert torch.equal(seq.tokens[6:10], z_tp.tokens)


def test_disabling_temporal_only_drops_its_block():
    z_sp = _block(6, 8, Modality.SPATIAL, 1)
    z_text = _block(5, 8, Modality.TEXT, 3)
    full = aggregate_tokens(z_sp, _block(4, 8, Modality.TEMPORAL, 2), z_text)
    ablated = aggregate_tokens(z_sp, None, z_text)
    assert ablated.length == full.length - 4
    assert ablated.segment_length(Modality.TEMPORAL) == 0
    assert torch.equal(ablated.tokens[-5:], full.tokens[-5:])


def test_aggregate_rejects_width_mismatch_and_order():
    with pytest.raises(WidthMismatch):
        aggregate_tokens(_block(2, 8, Modality.SPATIAL), _block(2, 6, Modality.TEMPORAL), _block(2, 8, Modality.TEXT))
    with pytest.raises(ShapeError):
        aggregate_tokens(_block(2, 8, Modality.TEXT), None, _block(2, 8, Modality.SPATIAL))


def _reference_loss(decoder, seq_tokens: torch.Tensor, targets) -> float:
    """Per-position log-softmax NLL, computed position by position."""
    total = 0.0
    context = seq_tokens
    for t, target in enumerate(targets):
        logits = decoder.logits(context)[-1]
        logp = logits - torch.logsumexp(logits, dim=-1)
        total += -float(logp[target])
        context = torch.cat([context, decoder.embed(torch.tensor([target]))], dim=0)
    return total / len(targets)


def test_sequence_loss_matches_reference_on_random_models():
    for seed in range(100):
        g = torch.Generator().manual_seed(seed)
        vocab_size = 12 + seed % 7
        decoder = ToyCausalDecoder(vocab_size, d_model=8, layers=1, heads=2, seed=seed).double().eval()
        length = 3 + seed % 5
        seq = aggregate_tokens(
            _block(length, 8, Modality.SPATIAL, seed, torch.float64),
            None,
            _block(2, 8, Modality.TEXT, seed + 1, torch.float64),
        )
        targets = torch.randint(0, vocab_size, (1 + seed % 4,), generator=g).tolist()
        with torch.no_grad():
            got = float(sequence_loss(seq, targets, decoder))
            expected = _reference_loss(decoder, seq.tokens, targets)
        assert got == pytest.approx(expected, abs=1e-9)


class _UniformDecoder(DecoderBackend):
    def __init__(self, vocab_size: int, d_model: int) -> None:
        super().__init__(vocab_size, d_model)
        self.table = torch.nn.Embedding(vocab_size, d_model).double()

    def embed(self, token_ids):
        return self.table(token_ids)

    def logits(self, inputs):
        return torch.zeros(inputs.shape[0], self.vocab_size, dtype=inputs.dtype)


def test_uniform_logits_loss_is_log_vocab_size():
    decoder = _UniformDecoder(37, 4)
    seq = aggregate_tokens(
        _block(3, 4, Modality.SPATIAL, 0, torch.float64), None, _block(2, 4, Modality.TEXT, 1, torch.float64)
    )
    loss = float(sequence_loss(seq, [5, 9, 2, 36], decoder))
    assert loss == pytest.approx(math.log(37), abs=1e-9)


def test_sequence_loss_is_differentiable():
    decoder = ToyCausalDecoder(10, d_model=8, layers=1, heads=2, seed=0)
    z_sp = TokenBlock(tokens=torch.randn(3, 8, requires_grad=True), modality=Modality.SPATIAL)
    seq = aggregate_tokens(z_sp, None, _block(2, 8, Modality.TEXT))
    sequence_loss(seq, [1, 2], decoder).backward()
    assert z_sp.tokens.grad is not None


def test_generate_is_greedy_and_stops():
    vocab = build_vocabulary(["a b c"], max_images=1)
    decoder = ToyCausalDecoder(len(vocab), d_model=8, layers=1, heads=2, seed=0).eval()
    seq = aggregate_tokens(_block(3, 8, Modality.SPATIAL), None, _block(2, 8, Modality.TEXT, 1))
    out = generate(seq, decoder, max_len=5, vocab=vocab)
    assert 1 <= len(out.token_ids) <= 5
    assert len(out.per_step_logprobs) == len(out.token_ids)
    assert all(lp <= 0.0 for lp in out.per_step_logprobs)

    with torch.no_grad():
        first = int(torch.argmax(decoder.logits(seq.tokens)[-1]))
    assert out.token_ids[0] == first
    if vocab.eos_id in out.token_ids:
        assert out.token_ids[-1] == vocab.eos_id
    assert generate(seq, decoder, max_len=5, vocab=vocab) == out


def test_generate_reproduces_a_forced_answer():
    vocab = build_vocabulary([], max_images=1)
    target = vocab.encode("The quality of the video is good.") + [vocab.eos_id]

    class Scripted(_UniformDecoder):
        def logits(self, inputs):
            step = inputs.shape[0] - 3
            out = torch.zeros(inputs.shape[0], self.vocab_size, dtype=inputs.dtype)
            out[-1, target[min(step, len(target) - 1)]] = 10.0
            return out

    decoder = Scripted(len(vocab), 4)
    seq = aggregate_tokens(
        _block(2, 4, Modality.SPATIAL, 0, torch.float64), None, _block(1, 4, Modality.TEXT, 1, torch.float64)
    )
    out = generate(seq, decoder, max_len=30, vocab=vocab)
    assert list(out.token_ids) == target
    assert out.text == "The quality of the video is good."
