"""Word-level vocabulary with digit-by-digit numbers.

Tokens are words, single punctuation marks, single digits, the image placeholders
`<image-i>` and the temporal marker `<temporal>`. Detokenization reverses the
spacing rules exactly for the answer sentence frames.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

from vqa_core.errors import TokenizeError

BOS = "<bos>"
EOS = "<eos>"
PAD = "<pad>"
UNK = "<unk>"
TEMPORAL_MARKER = "<temporal>"
SPECIALS = (PAD, BOS, EOS, TEMPORAL_MARKER)

_TOKEN_RE = re.compile(r"<image-\d+>|<temporal>|\d|[A-Za-z]+|[^\sA-Za-z\d]")
_IMAGE_RE = re.compile(r"<image-(\d+)>")
_CLOSING = set(".,;:?!)]")
_OPENING = set("([")

# Always present so any score or level answer is expressible.
_ANSWER_WORDS = ("The", "quality", "score", "of", "the", "video", "is", "poor", "fair", "good", ".", "-")
DIGITS = tuple(str(d) for d in range(10))


def image_placeholder(index: int) -> str:
    return f"<image-{index}>"


def tokenize(text: str) -> List[str]:
    return _TOKEN_RE.findall(text)


def detokenize(tokens: Sequence[str]) -> str:
    out: List[str] = []
    for i, tok in enumerate(tokens):
        if not out:
            out.append(tok)
            continue
        prev = tokens[i - 1]
        glue = (
            tok in _CLOSING
            or prev in _OPENING
            or (tok.isdigit() and prev.isdigit())
            or (tok.isdigit() and prev == "." and i >= 2 and tokens[i - 2].isdigit())
            or (tok.isdigit() and prev == "-" and (i < 2 or not tokens[i - 2].isdigit()))
        )
        out.append(tok if glue else " " + tok)
    return "".join(out)


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token set with a total token <-> id bijection.

    Specials occupy the lowest ids, then image placeholders, then `<unk>` and
    content tokens.
    """

    tokens: Tuple[str, ...]
    _ids: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(ids) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        for special in SPECIALS + (UNK,):
            if special not in ids:
                raise ValueError(f"vocabulary is missing special token {special}")
        object.__setattr__(self, "_ids", ids)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def bos_id(self) -> int:
        return self._ids[BOS]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def max_images(self) -> int:
        return sum(1 for tok in self.tokens if _IMAGE_RE.fullmatch(tok))

    def is_special(self, token_id: int) -> bool:
        tok = self.tokens[token_id]
        return tok in SPECIALS or bool(_IMAGE_RE.fullmatch(tok))

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def encode(self, text: str, strict: bool = True) -> List[int]:
        pieces = tokenize(text)
        if not pieces:
            raise TokenizeError("cannot encode an empty prompt")
        ids: List[int] = []
        for piece in pieces:
            token_id = self._ids.get(piece)
            if token_id is None:
                if strict:
                    raise TokenizeError(f"token {piece!r} is not in the vocabulary")
                token_id = self.unk_id
            ids.append(token_id)
        return ids

    def decode(self, ids: Iterable[int], skip_specials: bool = True) -> str:
        tokens = []
        for token_id in ids:
            token_id = int(token_id)
            if skip_specials and self.is_special(token_id):
                continue
            tokens.append(self.tokens[token_id])
        return detokenize(tokens)

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        lines = path.read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines = lines[:-1]
        return cls(tokens=tuple(lines))


def build_vocabulary(texts: Iterable[str], max_images: int = 1) -> Vocabulary:
    """Collect every token of `texts` plus the answer vocabulary and placeholders 1..max_images."""
    max_images = max(1, int(max_images))
    content: Dict[str, None] = {UNK: None}
    for tok in _ANSWER_WORDS + DIGITS:
        content[tok] = None
    for text in texts:
        for tok in tokenize(text):
            match = _IMAGE_RE.fullmatch(tok)
            if match:
                max_images = max(max_images, int(match.group(1)))
            elif tok not in SPECIALS:
                content[tok] = None
    images = tuple(image_placeholder(i) for i in range(1, max_images + 1))
    return Vocabulary(tokens=SPECIALS + images + tuple(content))
