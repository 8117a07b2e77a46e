"""Synthetic pretraining-sample construction from KB concepts.

Each sample pairs an encoder-side clause (a synonym marked by START/END
tokens spliced into a template with contextual text) with a decoder-side
clause of the fixed shape "<name_a> is <name_b>". The context is the
concept's definition when present, the leftover synonyms for concepts with
three or more names, and the other (or only) synonym otherwise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .kb import Concept
from .tokens import SPECIALS

CASE_WITH_DEFINITION = "with_definition"
CASE_MULTI_SYNONYM = "multi_synonym"
CASE_SINGLE_SYNONYM = "single_synonym"


@dataclass(frozen=True)
class Template:
    template_id: int
    case: str
    encoder_pattern: str
    decoder_pattern: str = "{mention} is {target}"


TEMPLATES: tuple[Template, ...] = (
    Template(0, CASE_WITH_DEFINITION, "{mention} is defined as {context}"),
    Template(1, CASE_WITH_DEFINITION, "{mention} is described as {context}"),
    Template(2, CASE_WITH_DEFINITION, "{context} are the definitions of {mention}"),
    Template(3, CASE_WITH_DEFINITION, "{context} describe {mention}"),
    Template(4, CASE_WITH_DEFINITION, "{context} define {mention}"),
    Template(5, CASE_MULTI_SYNONYM, "{context} are the synonyms of {mention}"),
    Template(6, CASE_MULTI_SYNONYM, "{context} indicate the same concept as {mention}"),
    Template(7, CASE_MULTI_SYNONYM, "{mention} has synonyms such as {context}"),
    Template(8, CASE_MULTI_SYNONYM, "{mention} refers to the same concepts as {context}"),
    Template(9, CASE_SINGLE_SYNONYM, "{context} is {mention}"),
    Template(10, CASE_SINGLE_SYNONYM, "{context} is the same as {mention}"),
    Template(11, CASE_SINGLE_SYNONYM, "{mention} is {context}"),
    Template(12, CASE_SINGLE_SYNONYM, "{mention} is the same as {context}"),
)

TEMPLATES_BY_CASE: dict[str, tuple[Template, ...]] = {
    case: tuple(t for t in TEMPLATES if t.case == case)
    for case in (CASE_WITH_DEFINITION, CASE_MULTI_SYNONYM, CASE_SINGLE_SYNONYM)
}


@dataclass(frozen=True)
class PretrainSample:
    source: str
    target: str
    cui: str
    template_id: int


def classify_concept(concept: Concept) -> str:
    """Pick the template case: definition presence dominates, then name count."""
    if concept.definition:
        return CASE_WITH_DEFINITION
    if len(concept.names) >= 3:
        return CASE_MULTI_SYNONYM
    return CASE_SINGLE_SYNONYM


def generate_sample(
    concept: Concept,
    rng: random.Random,
    mention_name: str | None = None,
    start_marker: str = SPECIALS.start,
    end_marker: str = SPECIALS.end,
) -> PretrainSample:
    """Build one sample from a concept.

    The marked synonym defaults to a uniform draw; the decoder-side synonym
    is drawn from the remaining names so the two differ whenever the concept
    has at least two. ``mention_name`` forces the marked synonym, which the
    corpus iterator uses to cover every synonym.
    """
    names = concept.names
    case = classify_concept(concept)
    if mention_name is None:
        mention_name = names[rng.randrange(len(names))]
    elif mention_name not in names:
        raise ValueError(f"{mention_name!r} is not a synonym of {concept.cui}")
    others = [n for n in names if n != mention_name]
    target_name = others[rng.randrange(len(others))] if others else mention_name

    if case == CASE_WITH_DEFINITION:
        context = concept.definition
    elif case == CASE_MULTI_SYNONYM:
        context = ", ".join(n for n in names if n not in (mention_name, target_name))
    else:
        context = target_name

    templates = TEMPLATES_BY_CASE[case]
    template = templates[rng.randrange(len(templates))]
    marked = f"{start_marker} {mention_name} {end_marker}"
    source = template.encoder_pattern.format(mention=marked, context=context)
    target = template.decoder_pattern.format(mention=mention_name, target=target_name)
    return PretrainSample(source=source, target=target, cui=concept.cui, template_id=template.template_id)


def generate_corpus(
    concepts: Sequence[Concept],
    epochs_over_synonyms: int = 1,
    seed: int = 0,
    start_marker: str = SPECIALS.start,
    end_marker: str = SPECIALS.end,
) -> Iterator[PretrainSample]:
    """Stream samples: one per synonym serving as the marked name, per epoch.

    Each concept draws from its own generator seeded ``seed ^ ordinal`` so a
    parallel run over concepts would produce the same per-concept streams.
    """
    if epochs_over_synonyms < 1:
        raise ValueError("epochs_over_synonyms must be >= 1")
    for ordinal, concept in enumerate(concepts):
        rng = random.Random(seed ^ ordinal)
        for _ in range(epochs_over_synonyms):
            for name in concept.names:
                yield generate_sample(concept, rng, mention_name=name,
                                      start_marker=start_marker, end_marker=end_marker)


def sample_to_record(sample: PretrainSample) -> dict:
    return {
        "source": sample.source,
        "target": sample.target,
        "cui": sample.cui,
        "template_id": sample.template_id,
    }
