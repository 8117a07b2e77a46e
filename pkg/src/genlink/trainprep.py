"""Fine-tuning pair construction: mention-in-context sources and prompted targets.

The encoder source is "<left> START <mention> END <right>", lowercased apart
from the marker tokens; the decoder prompt is "<mention> is" and the target
name is chosen from the gold concept's synonyms by the selection policy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import KbFormatError
from .jsonl import read_records
from .kb import Concept
from .textsim import SelectionPolicy, select_target
from .tokens import SPECIALS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ELSample:
    """One linking instance: a mention with contexts and its gold concept id(s)."""

    id: str
    mention: str
    left_context: str
    right_context: str
    gold_cuis: frozenset[str]

    def __post_init__(self):
        if not self.mention:
            raise ValueError(f"sample {self.id}: empty mention")
        if not self.gold_cuis:
            raise ValueError(f"sample {self.id}: empty gold_cuis")


@dataclass(frozen=True)
class TrainPair:
    id: str
    source: str
    target_prompt: str
    target_name: str
    cui: str


@dataclass
class PrepSummary:
    kept: int = 0
    rejected: int = 0
    rejected_ids: list[str] = field(default_factory=list)


def load_samples(path: str | Path) -> list[ELSample]:
    """Load an EL dataset file: {"id","mention","left_context","right_context","gold_cuis"}."""
    samples: list[ELSample] = []
    for lineno, rec in read_records(path):
        try:
            samples.append(ELSample(
                id=str(rec["id"]),
                mention=rec["mention"],
                left_context=rec.get("left_context", "") or "",
                right_context=rec.get("right_context", "") or "",
                gold_cuis=frozenset(rec["gold_cuis"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise KbFormatError(path, lineno, f"bad sample record: {exc}") from exc
    return samples


def build_source(left_context: str, mention: str, right_context: str,
                 start_marker: str = SPECIALS.start, end_marker: str = SPECIALS.end) -> str:
    """Assemble the lowercased encoder input with the mention marked."""
    parts = [left_context.lower().strip(), start_marker, mention.lower().strip(),
             end_marker, right_context.lower().strip()]
    return " ".join(p for p in parts if p)


def build_prompt(mention: str) -> str:
    return f"{mention.lower().strip()} is"


def extract_mention(source: str,
                    start_marker: str = SPECIALS.start, end_marker: str = SPECIALS.end) -> str:
    """Recover the marked mention from an assembled source string."""
    words = source.split()
    try:
        i = words.index(start_marker)
        j = words.index(end_marker, i + 1)
    except ValueError as exc:
        raise ValueError(f"source has no {start_marker}/{end_marker} markers: {source!r}") from exc
    return " ".join(words[i + 1:j])


def prepare_pairs(
    samples: Sequence[ELSample],
    concepts: Mapping[str, Concept],
    policy: SelectionPolicy = SelectionPolicy("tfidf"),
    prompt_enabled: bool = True,
) -> tuple[list[TrainPair], PrepSummary]:
    """Build one training pair per (sample, gold cui).

    Samples referencing a cui absent from the KB are rejected and counted in
    the summary. The target name comes from select_target over the gold
    concept's synonyms, so it always lies in the global name set.
    """
    pairs: list[TrainPair] = []
    summary = PrepSummary()
    for sample in samples:
        missing = [cui for cui in sample.gold_cuis if cui not in concepts]
        if missing:
            summary.rejected += 1
            summary.rejected_ids.append(sample.id)
            logger.warning("sample %s: gold cui(s) %s not in KB, rejected",
                           sample.id, ",".join(sorted(missing)))
            continue
        summary.kept += 1
        mention = sample.mention.lower().strip()
        source = build_source(sample.left_context, sample.mention, sample.right_context)
        prompt = build_prompt(sample.mention) if prompt_enabled else ""
        for cui in sorted(sample.gold_cuis):
            target = select_target(mention, concepts[cui].names, policy)
            pairs.append(TrainPair(id=sample.id, source=source, target_prompt=prompt,
                                   target_name=target, cui=cui))
    return pairs, summary


def pair_to_record(pair: TrainPair) -> dict:
    return {
        "id": pair.id,
        "source": pair.source,
        "prompt": pair.target_prompt,
        "target": pair.target_name,
        "cui": pair.cui,
    }


def load_pairs(path: str | Path) -> list[TrainPair]:
    """Load prepared pairs: {"id","source","prompt","target","cui"}."""
    pairs: list[TrainPair] = []
    for lineno, rec in read_records(path):
        try:
            pairs.append(TrainPair(
                id=str(rec["id"]),
                source=rec["source"],
                target_prompt=rec.get("prompt", ""),
                target_name=rec["target"],
                cui=rec["cui"],
            ))
        except KeyError as exc:
            raise KbFormatError(path, lineno, f"missing field {exc}") from exc
    return pairs
