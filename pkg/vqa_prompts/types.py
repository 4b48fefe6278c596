from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from vqa_core.answers import QualityLevel, Task


@dataclass(frozen=True)
class PromptTemplate:
    system_prompt: str
    instruction: str
    response_restriction: str
    template_id: int
    # classification variants; `instruction` and `response_restriction` are the regression forms
    classification_instruction: str = ""
    classification_restriction: str = ""

    def __post_init__(self) -> None:
        for name in ("system_prompt", "instruction", "response_restriction"):
            if not getattr(self, name).strip():
                raise ValueError(f"template {self.template_id}: {name} is empty")

    def instruction_for(self, task: Task) -> str:
        if Task(task) is Task.CLASSIFICATION and self.classification_instruction:
            return self.classification_instruction
        return self.instruction

    def restriction_for(self, task: Task) -> str:
        if Task(task) is Task.CLASSIFICATION and self.classification_restriction:
            return self.classification_restriction
        return self.response_restriction


@dataclass(frozen=True)
class QualityLabel:
    mos: float
    level: QualityLevel


@dataclass(frozen=True)
class ManifestRecord:
    video_id: str
    path: str
    mos: float
    split: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.video_id:
            raise ValueError("video_id must be nonempty")
        if not math.isfinite(self.mos):
            raise ValueError(f"{self.video_id}: mos must be finite (got {self.mos!r})")


@dataclass(frozen=True)
class DatasetManifest:
    records: Tuple[ManifestRecord, ...]
    scale: Tuple[float, float]
    name: str = ""
    source: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def video_ids(self) -> Tuple[str, ...]:
        return tuple(r.video_id for r in self.records)

    def by_id(self) -> Dict[str, ManifestRecord]:
        return {r.video_id: r for r in self.records}

    def subset(self, video_ids, name: Optional[str] = None) -> "DatasetManifest":
        """Records whose id is in `video_ids`, kept in manifest order."""
        wanted = set(video_ids)
        return DatasetManifest(
            records=tuple(r for r in self.records if r.video_id in wanted),
            scale=self.scale,
            name=self.name if name is None else name,
            source=self.source,
        )

    def split(self, tag: str) -> "DatasetManifest":
        return DatasetManifest(
            records=tuple(r for r in self.records if r.split == tag),
            scale=self.scale,
            name=f"{self.name}:{tag}" if self.name else tag,
            source=self.source,
        )


@dataclass(frozen=True)
class QAInstruction:
    video_id: str
    task: Task
    question: str
    answer: str
    template_id: int

    def to_json(self) -> dict:
        return {
            "video_id": self.video_id,
            "task": self.task.value,
            "question": self.question,
            "answer": self.answer,
            "template_id": self.template_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QAInstruction":
        return cls(
            video_id=str(obj["video_id"]),
            task=Task(obj["task"]),
            question=str(obj["question"]),
            answer=str(obj["answer"]),
            template_id=int(obj["template_id"]),
        )
