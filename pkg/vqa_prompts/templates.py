"""Rule-based quality-prompt grammar.

An instruction is the slot product opener x verb x target x frame clause, giving
GRAMMAR_SIZE distinct instructions. Each template also fixes a system prompt and the
response restrictions for both tasks.
"""

from __future__ import annotations

import itertools
import logging
import random
from typing import List, Tuple

from vqa_core.answers import Task
from vqa_core.errors import GrammarExhausted
from vqa_prompts.types import PromptTemplate

log = logging.getLogger(__name__)

# (opener, takes_gerund, closing punctuation)
_OPENERS: Tuple[Tuple[str, bool, str], ...] = (
    ("Would you mind", True, "?"),
    ("Could you please", False, "?"),
    ("Can you", False, "?"),
    ("Please", False, "."),
    ("I would like you to", False, "."),
    ("Kindly", False, "."),
    ("Would you be able to", False, "?"),
    ("Could you", False, "?"),
    ("May I ask you to", False, "?"),
    ("I need you to", False, "."),
)

_VERBS: Tuple[Tuple[str, str], ...] = (
    ("assess", "assessing"),
    ("evaluate", "evaluating"),
    ("rate", "rating"),
    ("estimate", "estimating"),
    ("judge", "judging"),
    ("determine", "determining"),
    ("calculate", "calculating"),
    ("measure", "measuring"),
    ("predict", "predicting"),
    ("gauge", "gauging"),
)

# (regression target, classification target)
_TARGETS: Tuple[Tuple[str, str], ...] = (
    ("the video quality score", "the video quality level"),
    ("the quality score of this video", "the quality level of this video"),
    ("the perceptual quality score of the video", "the perceptual quality level of the video"),
    ("a numeric quality score for the video", "a quality level for the video"),
    ("the overall quality score of this clip", "the overall quality level of this clip"),
)

_FRAME_CLAUSES: Tuple[str, ...] = (
    "with the help of these frames",
    "based on the frames below",
    "using the key frames and motion cues provided",
    "from the sampled frames",
    "given the following frames",
)

_SYSTEM_PROMPTS: Tuple[str, ...] = (
    "You are an expert in video quality assessment.",
    "You are a careful assistant that judges the perceptual quality of videos.",
    "You are a video quality rater trained on human opinion scores.",
    "You evaluate videos for sharpness, noise, motion smoothness and overall visual quality.",
    "You are a helpful assistant specialised in assessing the quality of user generated videos.",
)

_REGRESSION_RESTRICTIONS: Tuple[str, ...] = (
    "Answer with one sentence that states the score with one decimal place.",
    "Reply with a single sentence giving the quality score as a number.",
    "Respond only with the quality score sentence.",
)

_CLASSIFICATION_RESTRICTIONS: Tuple[str, ...] = (
    "Answer with one sentence using one of the words poor, fair or good.",
    "Reply with a single sentence naming the quality level as poor, fair or good.",
    "Respond only with the quality level sentence.",
)

GRAMMAR_SIZE = len(_OPENERS) * len(_VERBS) * len(_TARGETS) * len(_FRAME_CLAUSES)


def _instruction(opener: Tuple[str, bool, str], verb: Tuple[str, str], target: str, clause: str) -> str:
    text, gerund, punct = opener
    return f"{text} {verb[1] if gerund else verb[0]} {target} {clause}{punct}"


def generate_templates(count: int, seed: int = 0) -> List[PromptTemplate]:
    """`count` templates with pairwise-distinct instructions, deterministic per seed."""
    count = int(count)
    if count < 1:
        raise ValueError(f"count must be >= 1 (got {count})")
    if count > GRAMMAR_SIZE:
        raise GrammarExhausted(f"grammar yields {GRAMMAR_SIZE} distinct instructions, {count} requested")

    rng = random.Random(seed)
    slots = list(itertools.product(_OPENERS, _VERBS, _TARGETS, _FRAME_CLAUSES))
    rng.shuffle(slots)

    templates: List[PromptTemplate] = []
    for template_id, (opener, verb, target, clause) in enumerate(slots[:count]):
        templates.append(
            PromptTemplate(
                system_prompt=rng.choice(_SYSTEM_PROMPTS),
                instruction=_instruction(opener, verb, target[0], clause),
                response_restriction=rng.choice(_REGRESSION_RESTRICTIONS),
                template_id=template_id,
                classification_instruction=_instruction(opener, verb, target[1], clause),
                classification_restriction=rng.choice(_CLASSIFICATION_RESTRICTIONS),
            )
        )
    log.debug("Generated %d prompt templates (seed=%s)", len(templates), seed)
    return templates


def render_quality_prompt(template: PromptTemplate, task: Task) -> str:
    """System prompt, instruction and response restriction for one task."""
    return " ".join(
        (template.system_prompt, template.instruction_for(task), template.restriction_for(task))
    )


def template_texts(templates: List[PromptTemplate]) -> List[str]:
    """Every string a template can contribute to a question (vocabulary building)."""
    return [render_quality_prompt(t, task) for t in templates for task in Task]
