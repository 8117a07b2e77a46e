"""Character 3-gram TF-IDF similarity and target-name selection policies.

The vectorizer slides a 3-character window over the lowercased string with no
padding; strings shorter than 3 characters contribute themselves as a single
gram, so short mentions like "rea" still vectorize. IDF uses the smoothed
form ln((1+N)/(1+df)) + 1 and vectors are L2-normalized, which keeps every
weight strictly positive and the induced argmax well defined.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

POLICY_KINDS = ("tfidf", "shortest", "random")


@dataclass(frozen=True)
class SelectionPolicy:
    """How the training target name is picked from a concept's synonyms."""

    kind: str = "tfidf"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind: {self.kind!r}")
        if (self.kind == "random") != (self.seed is not None):
            raise ValueError("a seed is required for the random policy and only for it")


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Mapping[str, int]
    idf: np.ndarray
    document_count: int


@dataclass(frozen=True)
class SparseVector:
    dim: int
    weights: Mapping[int, float]

    def is_zero(self) -> bool:
        return not self.weights


def char_ngrams(text: str, n: int = 3) -> list[str]:
    """Sliding character n-grams of the lowercased text, whole string if shorter."""
    text = text.lower()
    if len(text) < n:
        return [text] if text else []
    return [text[i:i + n] for i in range(len(text) - n + 1)]


def fit_tfidf(names: Sequence[str]) -> TfidfModel:
    """Fit gram vocabulary and IDF weights over a corpus of names."""
    if not names:
        raise ValueError("cannot fit a TF-IDF model on an empty name list")
    df: Counter[str] = Counter()
    kept = 0
    for name in names:
        grams = set(char_ngrams(name))
        if not grams:
            logger.warning("fit_tfidf: empty name skipped")
            continue
        kept += 1
        df.update(grams)
    if kept == 0:
        raise ValueError("every name was empty")
    vocabulary = {gram: i for i, gram in enumerate(sorted(df))}
    idf = np.empty(len(vocabulary))
    for gram, i in vocabulary.items():
        idf[i] = math.log((1 + kept) / (1 + df[gram])) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, document_count=kept)


def vectorize(model: TfidfModel, text: str) -> SparseVector:
    """TF-IDF vector of a string, L2-normalized; zero vector if fully OOV."""
    tf = Counter(char_ngrams(text))
    weights: dict[int, float] = {}
    for gram in sorted(tf):
        idx = model.vocabulary.get(gram)
        if idx is not None:
            weights[idx] = tf[gram] * float(model.idf[idx])
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0.0:
        return SparseVector(dim=len(model.vocabulary), weights={})
    return SparseVector(dim=len(model.vocabulary), weights={i: w / norm for i, w in weights.items()})


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity in [0, 1]; zero vectors compare as 0."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.is_zero() or b.is_zero():
        return 0.0
    if len(b.weights) < len(a.weights):
        a, b = b, a
    dot = sum(w * b.weights[i] for i, w in sorted(a.weights.items()) if i in b.weights)
    return min(max(dot, 0.0), 1.0)


def _stable_draw(seed: int, mention: str, candidates: Sequence[str]) -> int:
    """Deterministic index draw keyed by seed, mention, and candidate list.

    Keying by the arguments keeps the random policy a pure function, so
    batch order and parallelism cannot change which name is drawn.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode("utf-8"))
    h.update(b"\x00" + mention.encode("utf-8"))
    for cand in candidates:
        h.update(b"\x00" + cand.encode("utf-8"))
    rng = random.Random(int.from_bytes(h.digest(), "little"))
    return rng.randrange(len(candidates))


def select_target(
    mention: str,
    candidates: Sequence[str],
    policy: SelectionPolicy = SelectionPolicy("tfidf"),
    model: TfidfModel | None = None,
) -> str:
    """Pick the training target name from a concept's synonyms.

    tfidf: highest cosine to the mention, fitted over candidates plus the
    mention unless a prefitted model is supplied; shortest: fewest
    characters; random: seed-keyed uniform draw. All ties break to the
    lexicographically smallest name.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if policy.kind == "shortest":
        return min(candidates, key=lambda s: (len(s), s))
    if policy.kind == "random":
        return candidates[_stable_draw(policy.seed, mention, candidates)]
    if model is None:
        model = fit_tfidf(list(candidates) + [mention])
    mention_vec = vectorize(model, mention)
    best_score = -1.0
    best: list[str] = []
    for cand in candidates:
        score = cosine(mention_vec, vectorize(model, cand))
        if score > best_score:
            best_score = score
            best = [cand]
        elif score == best_score:
            best.append(cand)
    return min(best)
