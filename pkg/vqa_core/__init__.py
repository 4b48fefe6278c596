"""Pure compute for the VQA pipeline: video decomposition, encoders, projectors, decoder."""

from .answers import QualityLevel, QualityPrediction, Task, parse_answer, render_answer
from .schema import SCHEMA_VERSION, write_schema
from .video import ChunkSet, FrameSequence, KeyFrameSet, load_video, select_key_frames, slice_chunks

__all__ = [
    "ChunkSet",
    "FrameSequence",
    "KeyFrameSet",
    "QualityLevel",
    "QualityPrediction",
    "SCHEMA_VERSION",
    "Task",
    "load_video",
    "parse_answer",
    "render_answer",
    "select_key_frames",
    "slice_chunks",
    "write_schema",
]
