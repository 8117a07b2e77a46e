"""Character and whitespace tokenizers with exact round-trip guarantees.

Both tokenizers are lossless on whitespace-normalized text (the domain of
normalized KB names): character mode splits into unicode scalar values and
whitespace mode splits on runs of whitespace, detokenizing with single
spaces. Special tokens are multi-character bracketed strings or the marker
words, none of which can appear inside a normalized name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .jsonl import atomic_open

TOKENIZER_KINDS = ("character", "whitespace")


@dataclass(frozen=True)
class SpecialTokens:
    bos: str = "[BOS]"
    eos: str = "[EOS]"
    start: str = "START"
    end: str = "END"
    end_of_name: str = "[EON]"
    sep: str = "[SEP]"

    def as_set(self) -> frozenset[str]:
        return frozenset((self.bos, self.eos, self.start, self.end, self.end_of_name, self.sep))


SPECIALS = SpecialTokens()


@dataclass(frozen=True)
class Tokenizer:
    kind: str = "whitespace"
    specials: SpecialTokens = SPECIALS

    def __post_init__(self):
        if self.kind not in TOKENIZER_KINDS:
            raise ValueError(f"unknown tokenizer kind: {self.kind!r}")

    def tokenize(self, text: str) -> list[str]:
        if self.kind == "character":
            return list(text)
        return text.split()

    def detokenize(self, tokens: Sequence[str]) -> str:
        """Inverse of tokenize; special tokens are stripped."""
        specials = self.specials.as_set()
        content = [t for t in tokens if t not in specials]
        if self.kind == "character":
            return "".join(content)
        return " ".join(content)


def build_vocab(tokenizer: Tokenizer, texts: Iterable[str], include_specials: bool = True) -> dict[str, int]:
    """Token-to-id map over sorted unique tokens, so ids are run-stable."""
    tokens: set[str] = set()
    for text in texts:
        tokens.update(tokenizer.tokenize(text))
    if include_specials:
        tokens.update(tokenizer.specials.as_set())
    return {tok: i for i, tok in enumerate(sorted(tokens))}


def save_vocab(path: str | Path, vocab: dict[str, int]) -> None:
    with atomic_open(path) as fh:
        json.dump(vocab, fh, ensure_ascii=False, indent=0, sort_keys=True)


def load_vocab(path: str | Path) -> dict[str, int]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
