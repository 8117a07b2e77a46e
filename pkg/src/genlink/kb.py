"""Knowledge-base ingestion, normalization, synonym merging, and deduplication.

A KB file is newline-delimited JSON, one concept per line:

    {"cui": str, "names": [str, ...], "definition": str|null}

Loading normalizes every synonym (lowercase, symbol stripping, whitespace
collapse). After deduplication no name belongs to more than one concept, so
the name-to-concept mapping is a function; the non-deduplicated mode keeps
shared names and maps them to every owning concept.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IntegrityError, KbFormatError
from .jsonl import read_records, write_records

logger = logging.getLogger(__name__)

# Characters removed by name normalization. Runs of whitespace left behind
# are collapsed to single spaces afterwards.
STRIP_CHARS = "-,.;:'\"()[]"
_STRIP_TABLE = str.maketrans("", "", STRIP_CHARS)
_WS_RUN = re.compile(r"\s+")


@dataclass(frozen=True, slots=True)
class KbConfig:
    dedup_enabled: bool = True
    lowercase: bool = True
    strip_symbols: bool = True


@dataclass(frozen=True, slots=True)
class Concept:
    """One KB entry: an identifier, its synonym names, and an optional definition."""

    cui: str
    names: tuple[str, ...]
    definition: str | None = None


@dataclass(frozen=True)
class NameIndex:
    """The global name set plus the name-to-concept mapping.

    With ``multi_label=False`` every name maps to exactly one concept and
    construction fails if that does not hold; with ``multi_label=True`` a
    name may map to several concepts (NCBI-style shared synonyms).
    """

    to_concept: Mapping[str, tuple[str, ...]]
    multi_label: bool = False

    @property
    def names(self):
        return self.to_concept.keys()

    def __len__(self) -> int:
        return len(self.to_concept)

    def __contains__(self, name: str) -> bool:
        return name in self.to_concept

    def concepts_of(self, name: str) -> tuple[str, ...]:
        """Map a name to its owning concept id(s); empty tuple if unknown."""
        return self.to_concept.get(name, ())


def normalize_name(name: str, config: KbConfig = KbConfig()) -> str:
    """Normalize one synonym string per the configured rules."""
    out = name
    if config.lowercase:
        out = out.lower()
    if config.strip_symbols:
        out = out.translate(_STRIP_TABLE)
    out = _WS_RUN.sub(" ", out).strip()
    return out


def _normalize_names(raw_names: Sequence[str], config: KbConfig) -> tuple[str, ...]:
    """Normalize names in order, dropping empties and per-concept duplicates."""
    seen: dict[str, None] = {}
    for raw in raw_names:
        name = normalize_name(raw, config)
        if name:
            seen.setdefault(name, None)
    return tuple(seen)


def load_kb(path: str | Path, config: KbConfig = KbConfig()) -> list[Concept]:
    """Load and normalize a KB file.

    Records whose every name normalizes to the empty string are skipped with
    a warning. Malformed lines raise KbFormatError naming the line number.
    """
    concepts: list[Concept] = []
    for lineno, rec in read_records(path):
        cui = rec.get("cui")
        raw_names = rec.get("names")
        if not isinstance(cui, str) or not cui:
            raise KbFormatError(path, lineno, "missing or invalid 'cui'")
        if not isinstance(raw_names, list) or not all(isinstance(n, str) for n in raw_names):
            raise KbFormatError(path, lineno, "'names' must be a list of strings")
        definition = rec.get("definition")
        if definition is not None and not isinstance(definition, str):
            raise KbFormatError(path, lineno, "'definition' must be a string or null")
        names = _normalize_names(raw_names, config)
        if not names:
            logger.warning("%s:%d: concept %s has no usable names after normalization, skipped",
                           path, lineno, cui)
            continue
        concepts.append(Concept(cui=cui, names=names, definition=definition or None))
    return concepts


def save_kb(path: str | Path, concepts: Iterable[Concept], meta: dict | None = None) -> int:
    """Write concepts back out in the KB file schema."""
    records = (
        {"cui": c.cui, "names": list(c.names), "definition": c.definition}
        for c in concepts
    )
    return write_records(path, records, meta=meta)


def merge_synonyms(base: Sequence[Concept], extra: Sequence[Concept]) -> list[Concept]:
    """Union extra synonyms into base concepts, matching on cui.

    Concepts appearing only in ``extra`` are dropped (counted in a log
    summary); base name order is preserved, new names append in extra order.
    Merging the same extra twice equals merging once.
    """
    extra_names: dict[str, list[str]] = {}
    for concept in extra:
        extra_names.setdefault(concept.cui, []).extend(concept.names)
    merged: list[Concept] = []
    matched: set[str] = set()
    for concept in base:
        additions = extra_names.get(concept.cui)
        if additions:
            matched.add(concept.cui)
            names = dict.fromkeys(concept.names)
            for name in additions:
                names.setdefault(name, None)
            merged.append(Concept(concept.cui, tuple(names), concept.definition))
        else:
            merged.append(concept)
    dropped = len(set(extra_names) - matched)
    if dropped:
        logger.info("merge_synonyms: %d extra concept(s) had no matching cui and were dropped", dropped)
    return merged


def _resolve_pair(names_by_cui: dict[str, list[str]], name: str, cui_a: str, cui_b: str) -> None:
    """Remove ``name`` from one of two owning concepts, per the balancing rule.

    The concept with strictly more names loses the name; ties remove from the
    lexicographically larger cui. A removal that would empty a concept is
    redirected to the other; if both would be emptied the name stays with the
    lexicographically smaller cui.
    """
    small, large = sorted((cui_a, cui_b))
    count_small = len(names_by_cui[small])
    count_large = len(names_by_cui[large])
    if count_small > count_large:
        loser = small
    elif count_large > count_small:
        loser = large
    else:
        loser = large
    other = small if loser == large else large
    if len(names_by_cui[loser]) == 1:
        if len(names_by_cui[other]) == 1:
            # Both would be emptied: smaller cui keeps the name.
            loser = large
        else:
            loser = other
    names_by_cui[loser].remove(name)


def deduplicate(concepts: Sequence[Concept]) -> list[Concept]:
    """Remove shared synonyms until every name belongs to exactly one concept.

    Shared names are processed in lexicographic order; for each, owning
    concepts are reduced pairwise (pairs taken in cui order) with name counts
    recomputed after every removal. Concepts left empty are dropped with a
    warning. The output is sorted by cui, so any permutation of the same
    input concepts yields an identical result.
    """
    names_by_cui: dict[str, list[str]] = {}
    definitions: dict[str, str | None] = {}
    for concept in concepts:
        if concept.cui in names_by_cui:
            raise IntegrityError(f"duplicate cui in input: {concept.cui}")
        names_by_cui[concept.cui] = list(concept.names)
        definitions[concept.cui] = concept.definition

    owners: dict[str, set[str]] = {}
    for cui, names in names_by_cui.items():
        for name in names:
            owners.setdefault(name, set()).add(cui)

    for name in sorted(n for n, cs in owners.items() if len(cs) > 1):
        while True:
            holding = sorted(c for c in owners[name] if name in names_by_cui[c])
            if len(holding) <= 1:
                break
            _resolve_pair(names_by_cui, name, holding[0], holding[1])

    result: list[Concept] = []
    dropped = 0
    for cui in sorted(names_by_cui):
        names = names_by_cui[cui]
        if not names:
            dropped += 1
            logger.warning("deduplicate: concept %s lost its every name and was dropped", cui)
            continue
        result.append(Concept(cui, tuple(names), definitions[cui]))
    if dropped:
        logger.warning("deduplicate: dropped %d emptied concept(s)", dropped)
    return result


def build_name_index(concepts: Sequence[Concept], multi_label: bool = False) -> NameIndex:
    """Build the global name set and name-to-concept mapping.

    With ``multi_label=False`` a name owned by two concepts is an integrity
    error (run deduplicate first).
    """
    mapping: dict[str, list[str]] = {}
    for concept in concepts:
        for name in concept.names:
            mapping.setdefault(name, [])
            if concept.cui not in mapping[name]:
                mapping[name].append(concept.cui)
    if not multi_label:
        conflicts = [name for name, cuis in mapping.items() if len(cuis) > 1]
        if conflicts:
            sample = ", ".join(sorted(conflicts)[:5])
            raise IntegrityError(
                f"{len(conflicts)} name(s) map to multiple concepts (e.g. {sample}); "
                "deduplicate the KB or build a multi-label index"
            )
    return NameIndex(
        to_concept={name: tuple(sorted(cuis)) for name, cuis in mapping.items()},
        multi_label=multi_label,
    )


def concepts_by_cui(concepts: Iterable[Concept]) -> dict[str, Concept]:
    return {c.cui: c for c in concepts}
