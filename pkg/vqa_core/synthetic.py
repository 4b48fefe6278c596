"""Procedural video corpus whose ground-truth MOS is a fixed function of blur.

Two content families:
  A  smooth coloured blobs drifting over a gradient background
  B  moving oriented stripes with per-frame grain

Each video gets a Gaussian blur radius; MOS = 90 - 20 * radius (radius in [0, 4]),
rounded to one decimal so rendered answers are exact.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import cv2
import numpy as np

from vqa_core.video import FrameSequence

log = logging.getLogger(__name__)

FAMILIES = ("A", "B")
MAX_BLUR_RADIUS = 4.0


def mos_for_radius(radius: float) -> float:
    return round(90.0 - 20.0 * float(radius), 1)


@dataclass(frozen=True)
class SyntheticVideo:
    video_id: str
    family: str
    blur_radius: float
    mos: float
    video: FrameSequence


def _blobs(rng: np.random.Generator, n_frames: int, size: Tuple[int, int]) -> np.ndarray:
    height, width = size
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = np.stack(
        [
            np.linspace(0.2, 0.5, width)[None, :].repeat(height, 0),
            np.linspace(0.5, 0.2, height)[:, None].repeat(width, 1),
            np.full((height, width), 0.35),
        ],
        axis=-1,
    )
    n_blobs = 3
    start = rng.uniform(0, 1, size=(n_blobs, 2)) * (height, width)
    velocity = rng.uniform(-1.5, 1.5, size=(n_blobs, 2))
    sigma = rng.uniform(0.08, 0.18, size=n_blobs) * min(height, width)
    colour = rng.uniform(0.0, 1.0, size=(n_blobs, 3))
    frames = np.empty((n_frames, height, width, 3), dtype=np.float64)
    for t in range(n_frames):
        frame = base.copy()
        for b in range(n_blobs):
            cy, cx = (start[b] + velocity[b] * t) % (height, width)
            weight = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma[b] ** 2))
            frame = frame * (1.0 - weight[..., None]) + colour[b] * weight[..., None]
        frames[t] = frame
    return frames


def _stripes(rng: np.random.Generator, n_frames: int, size: Tuple[int, int]) -> np.ndarray:
    height, width = size
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    theta = rng.uniform(0, np.pi)
    period = rng.uniform(4.0, 8.0)
    speed = rng.uniform(0.3, 1.0)
    tint = rng.uniform(0.3, 1.0, size=3)
    frames = np.empty((n_frames, height, width, 3), dtype=np.float64)
    for t in range(n_frames):
        phase = 2.0 * np.pi * ((xx * np.cos(theta) + yy * np.sin(theta)) / period + speed * t / period)
        wave = 0.5 + 0.4 * np.sin(phase)
        grain = rng.normal(0.0, 0.05, size=(height, width))
        frames[t] = np.clip(wave + grain, 0.0, 1.0)[..., None] * tint
    return frames


def render_video(
    family: str,
    blur_radius: float,
    seed: int,
    n_frames: int = 8,
    size: Tuple[int, int] = (32, 32),
    frame_rate: float = 4.0,
    video_id: str = "",
) -> FrameSequence:
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES} (got {family!r})")
    rng = np.random.default_rng(seed)
    raw = _blobs(rng, n_frames, size) if family == "A" else _stripes(rng, n_frames, size)
    frames = np.clip(np.rint(raw * 255.0), 0, 255).astype(np.uint8)
    if blur_radius > 0:
        frames = np.stack([cv2.GaussianBlur(f, (0, 0), sigmaX=float(blur_radius)) for f in frames])
    return FrameSequence(frames=frames, frame_rate=frame_rate, source_id=video_id)


def make_corpus(
    n: int,
    family: str = "A",
    seed: int = 0,
    n_frames: int = 8,
    size: Tuple[int, int] = (32, 32),
    frame_rate: float = 4.0,
    prefix: str = "",
) -> List[SyntheticVideo]:
    """`n` videos with blur radii evenly spread over [0, MAX_BLUR_RADIUS] in seeded order."""
    if n < 1:
        raise ValueError(f"n must be >= 1 (got {n})")
    rng = np.random.default_rng(seed)
    radii = np.linspace(0.0, MAX_BLUR_RADIUS, n) if n > 1 else np.array([MAX_BLUR_RADIUS / 2])
    radii = rng.permutation(radii)
    prefix = prefix or f"syn{family}"
    out: List[SyntheticVideo] = []
    for i, radius in enumerate(radii):
        radius = round(float(radius), 3)
        video_id = f"{prefix}_{i:03d}"
        video = render_video(
            family,
            radius,
            seed=int(rng.integers(0, 2**31 - 1)),
            n_frames=n_frames,
            size=size,
            frame_rate=frame_rate,
            video_id=video_id,
        )
        out.append(
            SyntheticVideo(video_id=video_id, family=family, blur_radius=radius, mos=mos_for_radius(radius), video=video)
        )
    return out


def write_video(path: Path, video: FrameSequence) -> Path:
    """Write frames as an MJPG .avi readable by `load_video`."""
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = video.size
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), float(video.frame_rate), (width, height))
    if not writer.isOpened():
        raise OSError(f"cannot open video writer for {path}")
    try:
        for frame in video.frames:
            writer.write(cv2.cvtColor(np.ascontiguousarray(frame), cv2.COLOR_RGB2BGR))
    finally:
        writer.release()
    return path


def write_corpus(
    out_dir: str | Path,
    videos: Sequence[SyntheticVideo],
    manifest_name: str = "manifest.csv",
    split: str = "",
) -> Path:
    """Write every video under `out_dir/videos/` and a CSV manifest next to them."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / manifest_name
    with manifest.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "path", "mos", "split"])
        for item in videos:
            path = write_video(out_dir / "videos" / f"{item.video_id}.avi", item.video)
            writer.writerow([item.video_id, path.relative_to(out_dir).as_posix(), f"{item.mos:.1f}", split])
    log.info("Wrote %d synthetic videos to %s", len(videos), out_dir)
    return manifest
