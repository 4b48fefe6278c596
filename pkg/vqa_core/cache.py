"""On-disk preprocess cache: one directory per video.

Layout under `<cache_root>/<video_id_fs>/`:

    keyframes/key_0000.png ...   lossless RGB key frames
    chunk_index.json             tau, K, source indices, frame rate, geometry
    features/spatial.f32         F_sp (K, N_p, C_sp)
    features/temporal.f32        F_tp (K, 1, C_tp)
    features.json                backend names and widths
    schema.json

Feature tensors use a small binary layout: magic b"VQAF", little-endian uint32 rank,
rank x uint32 dims, then little-endian float32 data in C order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import torch
from PIL import Image

from vqa_core.encoders import (
    EncoderBackend,
    SpatialFeatures,
    TemporalFeatures,
    encode_spatial,
    encode_temporal,
)
from vqa_core.errors import MissingCache, ShapeError
from vqa_core.naming import video_id_fs
from vqa_core.schema import write_schema
from vqa_core.video import (
    FrameSequence,
    KeyFrameSet,
    load_video,
    select_key_frames,
    slice_chunks,
    tau_for_frame_rate,
)

log = logging.getLogger(__name__)

TENSOR_MAGIC = b"VQAF"
_DIM = np.dtype("<u4")
_DATA = np.dtype("<f4")


def write_tensor(path: Path, data: np.ndarray | torch.Tensor) -> None:
    if isinstance(data, torch.Tensor):
        data = data.detach().cpu().numpy()
    array = np.ascontiguousarray(data, dtype=_DATA)
    header = np.array([array.ndim, *array.shape], dtype=_DIM)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(header.tobytes())
        fh.write(array.tobytes(order="C"))


def read_tensor(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:4] != TENSOR_MAGIC:
        raise ShapeError(f"{path}: not a feature tensor (bad magic)")
    rank = int(np.frombuffer(raw, dtype=_DIM, count=1, offset=4)[0])
    dims = tuple(int(d) for d in np.frombuffer(raw, dtype=_DIM, count=rank, offset=8))
    offset = 8 + 4 * rank
    count = int(np.prod(dims)) if dims else 1
    if len(raw) - offset != count * _DATA.itemsize:
        raise ShapeError(f"{path}: payload size does not match header dims {dims}")
    return np.frombuffer(raw, dtype=_DATA, count=count, offset=offset).reshape(dims).astype(np.float32)


@dataclass(frozen=True)
class ChunkIndex:
    video_id: str
    source_path: str
    tau: int
    k: int
    source_indices: Tuple[int, ...]
    frame_rate: float
    n_frames: int
    height: int
    width: int

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["source_indices"] = list(self.source_indices)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ChunkIndex":
        return cls(
            video_id=str(obj["video_id"]),
            source_path=str(obj["source_path"]),
            tau=int(obj["tau"]),
            k=int(obj["k"]),
            source_indices=tuple(int(i) for i in obj["source_indices"]),
            frame_rate=float(obj["frame_rate"]),
            n_frames=int(obj["n_frames"]),
            height=int(obj["height"]),
            width=int(obj["width"]),
        )


@dataclass(frozen=True)
class VideoFeatures:
    """Everything the model needs from one video once preprocessing is done."""

    video_id: str
    spatial: SpatialFeatures
    temporal: TemporalFeatures
    index: ChunkIndex

    @property
    def k(self) -> int:
        return self.spatial.k


def extract_features(
    video: FrameSequence,
    spatial_backend: EncoderBackend,
    temporal_backend: EncoderBackend,
    tau: Optional[int] = None,
    video_id: Optional[str] = None,
    source_path: str = "",
) -> Tuple[VideoFeatures, KeyFrameSet]:
    """Chunk, select key frames and run both encoders on a decoded video."""
    tau = int(tau) if tau else tau_for_frame_rate(video.frame_rate)
    chunks = slice_chunks(video, tau)
    keys = select_key_frames(chunks)
    spatial = encode_spatial(keys, spatial_backend)
    temporal = encode_temporal(chunks, temporal_backend)
    height, width = video.size
    index = ChunkIndex(
        video_id=video_id or video.source_id,
        source_path=source_path,
        tau=tau,
        k=chunks.k,
        source_indices=keys.source_indices,
        frame_rate=float(video.frame_rate),
        n_frames=video.n_frames,
        height=height,
        width=width,
    )
    return VideoFeatures(video_id=index.video_id, spatial=spatial, temporal=temporal, index=index), keys


class CacheEntry:
    """Paths and completeness checks for one cached video."""

    def __init__(self, cache_root: str | Path, video_id: str) -> None:
        self.video_id = video_id
        self.root = Path(cache_root) / video_id_fs(video_id)

    @property
    def keyframes_dir(self) -> Path:
        return self.root / "keyframes"

    @property
    def chunk_index_path(self) -> Path:
        return self.root / "chunk_index.json"

    @property
    def spatial_path(self) -> Path:
        return self.root / "features" / "spatial.f32"

    @property
    def temporal_path(self) -> Path:
        return self.root / "features" / "temporal.f32"

    @property
    def features_meta_path(self) -> Path:
        return self.root / "features.json"

    def is_complete(self) -> bool:
        return all(
            p.exists()
            for p in (self.chunk_index_path, self.features_meta_path, self.spatial_path, self.temporal_path)
        )

    def matches(self, spatial_backend: str, temporal_backend: str) -> bool:
        """True when the entry is complete and was built with the given backends."""
        if not self.is_complete():
            return False
        try:
            meta = json.loads(self.features_meta_path.read_text(encoding="utf-8"))
            owner = json.loads(self.chunk_index_path.read_text(encoding="utf-8")).get("video_id")
        except (OSError, ValueError):
            return False
        if owner != self.video_id:
            log.warning("Cache entry %s belongs to %r, not %r; recomputing", self.root, owner, self.video_id)
            return False
        return meta.get("spatial_backend") == spatial_backend and meta.get("temporal_backend") == temporal_backend

    def write(
        self,
        features: VideoFeatures,
        keys: KeyFrameSet,
        spatial_backend: str,
        temporal_backend: str,
    ) -> None:
        self.keyframes_dir.mkdir(parents=True, exist_ok=True)
        names = []
        for j, frame in enumerate(keys.key_frames):
            name = f"key_{j:04d}.png"
            Image.fromarray(np.ascontiguousarray(frame)).save(self.keyframes_dir / name)
            names.append(name)
        self.chunk_index_path.write_text(
            json.dumps(features.index.to_json(), indent=2, sort_keys=True), encoding="utf-8"
        )
        write_tensor(self.spatial_path, features.spatial.data)
        write_tensor(self.temporal_path, features.temporal.data)
        meta = {
            "spatial_backend": spatial_backend,
            "temporal_backend": temporal_backend,
            "patch_size": features.spatial.patch_size,
            "spatial_width": features.spatial.width,
            "temporal_width": features.temporal.width,
        }
        write_schema(
            self.root / "schema.json",
            kind="preprocess_cache",
            files={
                "keyframes": names,
                "chunk_index": self.chunk_index_path.name,
                "spatial": "features/spatial.f32",
                "temporal": "features/temporal.f32",
                "features": self.features_meta_path.name,
            },
        )
        # features.json last: an interrupted write leaves the entry incomplete
        self.features_meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")

    def load_index(self) -> ChunkIndex:
        if not self.chunk_index_path.exists():
            raise MissingCache(f"no chunk index for {self.video_id!r} under {self.root}")
        return ChunkIndex.from_json(json.loads(self.chunk_index_path.read_text(encoding="utf-8")))

    def load(self) -> VideoFeatures:
        if not self.is_complete():
            raise MissingCache(f"no complete cache entry for {self.video_id!r} under {self.root}")
        meta = json.loads(self.features_meta_path.read_text(encoding="utf-8"))
        spatial = SpatialFeatures(
            data=torch.from_numpy(read_tensor(self.spatial_path).copy()),
            patch_size=int(meta["patch_size"]),
            width=int(meta["spatial_width"]),
        )
        temporal = TemporalFeatures(
            data=torch.from_numpy(read_tensor(self.temporal_path).copy()),
            width=int(meta["temporal_width"]),
        )
        index = self.load_index()
        if index.video_id != self.video_id:
            raise MissingCache(f"cache entry {self.root} holds {index.video_id!r}, not {self.video_id!r}")
        if spatial.k != index.k or temporal.k != index.k:
            raise MissingCache(f"cache entry for {self.video_id!r} is inconsistent (K mismatch)")
        return VideoFeatures(video_id=self.video_id, spatial=spatial, temporal=temporal, index=index)

    def load_key_frames(self) -> np.ndarray:
        index = self.load_index()
        frames = []
        for j in range(index.k):
            with Image.open(self.keyframes_dir / f"key_{j:04d}.png") as img:
                frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
        return np.stack(frames)


def preprocess_video(
    path: str | Path,
    video_id: str,
    cache_root: str | Path,
    spatial_backend: EncoderBackend,
    temporal_backend: EncoderBackend,
    frame_size: Tuple[int, int],
    tau: Optional[int] = None,
    force: bool = False,
) -> Tuple[CacheEntry, bool]:
    """Decode, encode and cache one video. Returns (entry, computed); skips complete entries."""
    entry = CacheEntry(cache_root, video_id)
    if not force and entry.matches(spatial_backend.name, temporal_backend.name):
        log.debug("Cache hit for %s", video_id)
        return entry, False
    video = load_video(path, frame_size)
    features, keys = extract_features(
        video,
        spatial_backend,
        temporal_backend,
        tau=tau,
        video_id=video_id,
        source_path=str(path),
    )
    entry.write(features, keys, spatial_backend.name, temporal_backend.name)
    log.info(
        "Cached %s: frames=%d tau=%d K=%d -> %s",
        video_id,
        video.n_frames,
        features.index.tau,
        features.k,
        entry.root,
    )
    return entry, True


def collect_features(
    videos: Iterable[Tuple[str, str | Path]],
    cache_root: str | Path,
    spatial_backend: EncoderBackend,
    temporal_backend: EncoderBackend,
    frame_size: Tuple[int, int],
    tau: Optional[int] = None,
) -> Dict[str, VideoFeatures]:
    """Features for (video_id, path) pairs, preprocessing entries that are missing or stale."""
    out: Dict[str, VideoFeatures] = {}
    computed = 0
    for video_id, path in videos:
        entry, fresh = preprocess_video(
            path, video_id, cache_root, spatial_backend, temporal_backend, frame_size, tau=tau
        )
        computed += int(fresh)
        out[video_id] = entry.load()
    log.info("Collected features for %d videos (%d computed, %d cached)", len(out), computed, len(out) - computed)
    return out
