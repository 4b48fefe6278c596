from vqa_core.decoder.model import DecoderBackend, ExternalCausalLM, HFTextCodec, ToyCausalDecoder
from vqa_core.decoder.sequence import (
    AggregatedSequence,
    GenerationOutput,
    aggregate_tokens,
    dump_traces,
    embed_text,
    generate,
    sequence_loss,
)
from vqa_core.decoder.vocab import Vocabulary, build_vocabulary, image_placeholder, tokenize

__all__ = [
    "AggregatedSequence",
    "DecoderBackend",
    "ExternalCausalLM",
    "GenerationOutput",
    "HFTextCodec",
    "ToyCausalDecoder",
    "Vocabulary",
    "aggregate_tokens",
    "build_vocabulary",
    "dump_traces",
    "embed_text",
    "generate",
    "image_placeholder",
    "sequence_loss",
    "tokenize",
]
