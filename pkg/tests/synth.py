"""Synthetic KB and dataset builders shared by the test suite.

The morphology dataset gives every concept one long descriptive synonym
with a globally unique two-character suffix (a key a character 4-gram can
latch onto) and one four-character abbreviation drawn from a small prefix
pool, so abbreviations collide heavily on their leading characters the way
real short names do. Mentions perturb a middle character of the long
synonym, leaving both ends intact.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from genlink.kb import Concept
from genlink.trainprep import ELSample

LETTERS = string.ascii_lowercase
ABBREV_PREFIX_LETTERS = "vwxyz"

CONTEXT_WORDS = ("case", "noted", "with", "severe", "after", "onset", "of", "mild",
                 "patient", "reported", "signs", "improved", "under", "treatment")


def random_word(rng: random.Random, lo: int = 4, hi: int = 8) -> str:
    return "".join(rng.choice(LETTERS) for _ in range(rng.randint(lo, hi)))


def unique_names(rng: random.Random, count: int, lo: int = 4, hi: int = 10) -> list[str]:
    """Globally distinct random letter strings."""
    seen: set[str] = set()
    out: list[str] = []
    while len(out) < count:
        name = random_word(rng, lo, hi)
        if name not in seen:
            seen.add(name)
            out.append(name)
    return out


def soundness_kb(seed: int = 0, n_concepts: int = 1000,
                 min_synonyms: int = 3, max_synonyms: int = 8) -> list[Concept]:
    """A KB of random single-token names for constraint fuzzing."""
    rng = random.Random(seed)
    sizes = [rng.randint(min_synonyms, max_synonyms) for _ in range(n_concepts)]
    names = unique_names(rng, sum(sizes))
    concepts = []
    cursor = 0
    for i, size in enumerate(sizes):
        concepts.append(Concept(f"C{i:04d}", tuple(names[cursor:cursor + size])))
        cursor += size
    return concepts


def perturb_middle(rng: random.Random, name: str, keep_edges: int = 2) -> str:
    """Replace one character, protecting the first and last ``keep_edges``."""
    pos = rng.randrange(keep_edges, len(name) - keep_edges)
    old = name[pos]
    new = rng.choice([c for c in LETTERS if c != old])
    return name[:pos] + new + name[pos + 1:]


def _context(rng: random.Random) -> tuple[str, str]:
    left = " ".join(rng.choice(CONTEXT_WORDS) for _ in range(2))
    right = " ".join(rng.choice(CONTEXT_WORDS) for _ in range(2))
    return left, right


@dataclass
class MorphologyDataset:
    concepts: list[Concept]
    train: list[ELSample]
    seen_test: list[ELSample]
    trend_test: list[ELSample]


def morphology_dataset(seed: int = 0, n_concepts: int = 500,
                       mentions_per_synonym: int = 3) -> MorphologyDataset:
    """Concepts with one long synonym and one abbreviation, plus mention sets.

    Long synonyms are 10-13 characters bracketed by a globally unique
    2-gram tag; abbreviations are 4 characters over a 25-way shared prefix
    pool, so they collide on their leading characters the way real short
    names do. Training mentions perturb a middle character of each long
    synonym; the seen test replays them; the trend test perturbs a fresh
    position.
    """
    rng = random.Random(seed)
    tags = [a + b for a in LETTERS for b in LETTERS]
    rng.shuffle(tags)
    all_names: set[str] = set()
    concepts: list[Concept] = []
    long_names: list[str] = []
    for i in range(n_concepts):
        # The unique 2-char tag heads and tails the name: the tail is the
        # 4-gram's key into the mention, the head disambiguates the decode.
        while True:
            long_name = tags[i] + random_word(rng, 6, 9) + tags[i]
            if long_name not in all_names:
                break
        all_names.add(long_name)
        while True:
            abbrev = (rng.choice(ABBREV_PREFIX_LETTERS) + rng.choice(ABBREV_PREFIX_LETTERS)
                      + rng.choice(LETTERS) + rng.choice(LETTERS))
            if abbrev not in all_names:
                break
        all_names.add(abbrev)
        concepts.append(Concept(f"M{i:04d}", (long_name, abbrev)))
        long_names.append(long_name)

    train, seen_test, trend_test = [], [], []
    for i, long_name in enumerate(long_names):
        cui = concepts[i].cui
        mentions: list[str] = []
        while len(mentions) < mentions_per_synonym:
            mention = perturb_middle(rng, long_name)
            if mention not in mentions:
                mentions.append(mention)
        for j, mention in enumerate(mentions):
            left, right = _context(rng)
            train.append(ELSample(f"train-{i}-{j}", mention, left, right, frozenset({cui})))
            seen_test.append(ELSample(f"seen-{i}-{j}", mention, left, right, frozenset({cui})))
        while True:
            fresh = perturb_middle(rng, long_name)
            if fresh not in mentions:
                break
        left, right = _context(rng)
        trend_test.append(ELSample(f"trend-{i}", fresh, left, right, frozenset({cui})))
    return MorphologyDataset(concepts=concepts, train=train,
                             seen_test=seen_test, trend_test=trend_test)


def shortest_name_concepts(concepts: list[Concept]) -> list[Concept]:
    """Collapse each concept to its single shortest name (ties lexicographic)."""
    return [Concept(c.cui, (min(c.names, key=lambda n: (len(n), n)),), c.definition)
            for c in concepts]
