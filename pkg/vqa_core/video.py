from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import cv2
import numpy as np

from vqa_core.errors import DecodeError, EmptyVideo

log = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    view = array.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True)
class FrameSequence:
    """Decoded video: `frames` is an (N, H, W, 3) uint8 RGB array."""

    frames: np.ndarray
    frame_rate: float
    source_id: str = ""

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise ValueError(f"frames must be N x H x W x 3 (got shape {frames.shape})")
        if frames.dtype != np.uint8:
            raise ValueError(f"frames must be uint8 (got {frames.dtype})")
        if frames.shape[0] < 1:
            raise EmptyVideo(f"{self.source_id or 'video'} has zero frames")
        if not (self.frame_rate > 0 and math.isfinite(self.frame_rate)):
            raise ValueError(f"frame_rate must be positive (got {self.frame_rate!r})")
        object.__setattr__(self, "frames", _frozen(frames))

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        return int(self.frames.shape[1]), int(self.frames.shape[2])


@dataclass(frozen=True)
class ChunkSet:
    """K non-overlapping chunks of `tau` frames: `chunks` is (K, tau, H, W, 3)."""

    chunks: np.ndarray
    tau: int

    @property
    def k(self) -> int:
        return int(self.chunks.shape[0])

    def __len__(self) -> int:
        return self.k


@dataclass(frozen=True)
class KeyFrameSet:
    """First frame of every chunk: `key_frames` is (K, H, W, 3)."""

    key_frames: np.ndarray
    source_indices: Tuple[int, ...]

    @property
    def k(self) -> int:
        return int(self.key_frames.shape[0])

    def __len__(self) -> int:
        return self.k


def tau_for_frame_rate(frame_rate: float) -> int:
    """One chunk per second: tau is the frame rate rounded half-up to an integer."""
    if not (frame_rate > 0 and math.isfinite(frame_rate)):
        raise ValueError(f"frame_rate must be positive (got {frame_rate!r})")
    return max(1, int(math.floor(frame_rate + 0.5)))


def load_video(path: str | Path, target_size: Tuple[int, int]) -> FrameSequence:
    """Decode every frame of `path`, resized bilinearly to `target_size` = (H, W).

    Frames are resized at decode time, before any chunk slicing.
    """
    path = Path(path)
    height, width = int(target_size[0]), int(target_size[1])
    if height < 1 or width < 1:
        raise ValueError(f"target_size must be positive (got {target_size!r})")
    if not path.is_file():
        raise DecodeError(f"video not found: {path}")

    cap = cv2.VideoCapture(str(path))
    try:
        if not cap.isOpened():
            raise DecodeError(f"cannot open video: {path}")
        frame_rate = float(cap.get(cv2.CAP_PROP_FPS) or 0.0)
        frames = []
        while True:
            ok, frame = cap.read()
            if not ok or frame is None:
                break
            if frame.shape[0] != height or frame.shape[1] != width:
                frame = cv2.resize(frame, (width, height), interpolation=cv2.INTER_LINEAR)
            frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    finally:
        cap.release()

    if not frames:
        raise EmptyVideo(f"video decoded to zero frames: {path}")
    if not (frame_rate > 0 and math.isfinite(frame_rate)):
        raise DecodeError(f"container reports no usable frame rate: {path}")
    log.debug("Decoded %s frames=%d fps=%.3f", path, len(frames), frame_rate)
    return FrameSequence(frames=np.stack(frames), frame_rate=frame_rate, source_id=path.stem)


def slice_chunks(video: FrameSequence, tau: int) -> ChunkSet:
    """Split into K = floor(N / tau) consecutive chunks; trailing N mod tau frames are dropped."""
    tau = int(tau)
    if tau < 1:
        raise ValueError(f"tau must be >= 1 (got {tau})")
    k = video.n_frames // tau
    if k == 0:
        raise EmptyVideo(
            f"{video.source_id or 'video'} has {video.n_frames} frames, fewer than tau={tau}"
        )
    height, width = video.size
    chunks = video.frames[: k * tau].reshape(k, tau, height, width, 3)
    return ChunkSet(chunks=_frozen(chunks), tau=tau)


def select_key_frames(chunks: ChunkSet) -> KeyFrameSet:
    if chunks.k < 1:
        raise EmptyVideo("cannot select key frames from an empty chunk set")
    key_frames = chunks.chunks[:, 0]
    indices = tuple(chunks.tau * j for j in range(chunks.k))
    return KeyFrameSet(key_frames=_frozen(key_frames), source_indices=indices)
