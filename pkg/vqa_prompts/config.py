from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import List

from vqa_core.errors import ConfigError
from vqa_prompts.templates import GRAMMAR_SIZE, generate_templates
from vqa_prompts.types import PromptTemplate


@dataclass(frozen=True)
class PromptConfig:
    template_count: int = 2000
    template_seed: int = 7
    # per-record template draws derive from this seed and the video id
    seed: int = 0

    def validate(self) -> "PromptConfig":
        if not 1 <= self.template_count <= GRAMMAR_SIZE:
            raise ConfigError(f"prompts.template_count must be in [1, {GRAMMAR_SIZE}] (got {self.template_count})")
        return self

    def templates(self) -> List[PromptTemplate]:
        return generate_templates(self.template_count, self.template_seed)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)
