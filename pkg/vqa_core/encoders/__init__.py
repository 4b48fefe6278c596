from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from .base import (
    BackendKind,
    EncoderBackend,
    SpatialBackend,
    SpatialFeatures,
    TemporalBackend,
    TemporalFeatures,
    encode_spatial,
    encode_temporal,
)
from .toy import ToyMotionTemporalBackend, ToyPatchSpatialBackend
from vqa_core.errors import DuplicateBackend, UnknownBackend

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BackendKey:
    kind: BackendKind
    name: str


class BackendRegistry:
    """Name -> backend lookup, unique per kind. Populated once, then frozen."""

    def __init__(self) -> None:
        self._backends: Dict[Tuple[BackendKind, str], EncoderBackend] = {}
        self._frozen = False

    def register(self, backend: EncoderBackend) -> BackendKey:
        if self._frozen:
            raise RuntimeError("backend registry is frozen; register backends at startup")
        key = (backend.kind, backend.name)
        if key in self._backends:
            raise DuplicateBackend(f"{backend.kind.value} backend {backend.name!r} is already registered")
        self._backends[key] = backend.freeze()
        log.debug("Registered %s backend %s (width=%d)", backend.kind.value, backend.name, backend.output_width)
        return BackendKey(kind=backend.kind, name=backend.name)

    def resolve(self, name: str, kind: Optional[BackendKind] = None) -> EncoderBackend:
        if kind is not None:
            backend = self._backends.get((BackendKind(kind), name))
            if backend is not None:
                return backend
        else:
            matches = [b for (k, n), b in self._backends.items() if n == name]
            if len(matches) == 1:
                return matches[0]
            if len(matches) > 1:
                raise UnknownBackend(f"backend name {name!r} is ambiguous; pass a kind")
        available = ", ".join(sorted(f"{k.value}:{n}" for k, n in self._backends)) or "none"
        raise UnknownBackend(f"Unknown backend {name!r}. Available: {available}")

    def list(self, kind: Optional[BackendKind] = None) -> List[EncoderBackend]:
        return [
            b
            for (k, _), b in sorted(self._backends.items(), key=lambda item: (item[0][0].value, item[0][1]))
            if kind is None or k is BackendKind(kind)
        ]

    def freeze(self) -> "BackendRegistry":
        self._frozen = True
        return self

    def __contains__(self, name: str) -> bool:
        return any(n == name for _, n in self._backends)


_REGISTRY = BackendRegistry()


def register_backend(backend: EncoderBackend, registry: Optional[BackendRegistry] = None) -> BackendKey:
    return (registry or _REGISTRY).register(backend)


def resolve_backend(
    name: str, kind: Optional[BackendKind] = None, registry: Optional[BackendRegistry] = None
) -> EncoderBackend:
    return (registry or _REGISTRY).resolve(name, kind)


def list_backends(
    kind: Optional[BackendKind] = None, registry: Optional[BackendRegistry] = None
) -> List[EncoderBackend]:
    return (registry or _REGISTRY).list(kind)


def _clip(**options) -> EncoderBackend:
    from .pretrained import ClipViTBackend

    return ClipViTBackend(weights_dir=options.get("weights_dir"))


def _slowfast(**options) -> EncoderBackend:
    from .pretrained import SlowFastBackend

    return SlowFastBackend(weights_dir=options.get("weights_dir"))


# Output widths a run gets when it leaves the width unset. Pretrained widths are fixed by their weights.
NATIVE_WIDTHS: Dict[str, int] = {
    "toy-spatial": 32,
    "toy-motion": 64,
    "clip-vit-l14": 1024,
    "slowfast-r50": 2048 + 256,
}
FIXED_WIDTH_BACKENDS = ("clip-vit-l14", "slowfast-r50")


def native_width(name: str) -> Optional[int]:
    return NATIVE_WIDTHS.get((name or "").strip().lower())


_FACTORIES: Dict[str, Callable[..., EncoderBackend]] = {
    "toy-spatial": lambda **o: ToyPatchSpatialBackend(
        output_width=o.get("spatial_width", 32), patch_size=o.get("patch_size", 14), seed=o.get("seed", 0)
    ),
    "toy-motion": lambda **o: ToyMotionTemporalBackend(
        output_width=o.get("temporal_width", 64), seed=o.get("seed", 0) + 1
    ),
    "clip-vit-l14": _clip,
    "slowfast-r50": _slowfast,
}


def create_backend(name: str, **options) -> EncoderBackend:
    key = (name or "").strip().lower()
    if key not in _FACTORIES:
        raise UnknownBackend(f"Unknown backend {name!r}. Available: {', '.join(sorted(_FACTORIES))}")
    return _FACTORIES[key](**options)


def build_registry(spatial: str, temporal: str, **options) -> BackendRegistry:
    """Create, register and freeze the spatial/temporal pair a run needs."""
    registry = BackendRegistry()
    registry.register(create_backend(spatial, **options))
    registry.register(create_backend(temporal, **options))
    return registry.freeze()


__all__ = [
    "FIXED_WIDTH_BACKENDS",
    "NATIVE_WIDTHS",
    "BackendKey",
    "BackendKind",
    "BackendRegistry",
    "EncoderBackend",
    "SpatialBackend",
    "SpatialFeatures",
    "TemporalBackend",
    "TemporalFeatures",
    "ToyMotionTemporalBackend",
    "ToyPatchSpatialBackend",
    "build_registry",
    "create_backend",
    "encode_spatial",
    "encode_temporal",
    "native_width",
    "list_backends",
    "register_backend",
    "resolve_backend",
]
