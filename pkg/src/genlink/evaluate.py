"""Recall@k metrics and sub-population breakdowns over prediction files.

A sample is a hit at k when its gold concept set intersects the first k
distinct predicted concepts. Sub-populations slice the test set by mention
shape (single vs multi word), novelty relative to the training set (unseen
mentions, unseen concepts), whether the mention is itself a KB synonym of
its gold concept, and membership of the gold concept in the 100 most
frequent training concepts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import Counter
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import EvalError
from .jsonl import read_records
from .kb import NameIndex, normalize_name
from .trainprep import ELSample

SUBPOP_SINGLE_WORD = "single_word"
SUBPOP_MULTI_WORD = "multi_word"
SUBPOP_UNSEEN_MENTION = "unseen_mention"
SUBPOP_UNSEEN_CONCEPT = "unseen_concept"
SUBPOP_NOT_DIRECT_MATCH = "not_direct_match"
SUBPOP_TOP100 = "top_100"
SUBPOP_OVERALL = "overall"


@dataclass
class EvalReport:
    recall_at: dict[int, float]
    subpopulations: dict[str, dict[str, float]] = field(default_factory=dict)
    rejected: int = 0
    sample_count: int = 0

    def to_dict(self) -> dict:
        return {
            "recall_at": {str(k): v for k, v in sorted(self.recall_at.items())},
            "subpopulations": self.subpopulations,
            "rejected": self.rejected,
            "sample_count": self.sample_count,
        }


def load_predictions(path: str | Path) -> dict[str, list[str]]:
    """Load predicted concept rankings by sample id from a predictions file."""
    preds: dict[str, list[str]] = {}
    for _, rec in read_records(path):
        preds[str(rec["id"])] = list(rec.get("cuis", []))
    return preds


def _distinct_top(cuis: Sequence[str], k: int) -> list[str]:
    out: list[str] = []
    for cui in cuis:
        if cui not in out:
            out.append(cui)
        if len(out) == k:
            break
    return out


def _hit(predicted: Sequence[str], gold: frozenset[str], k: int) -> bool:
    return any(cui in gold for cui in _distinct_top(predicted, k))


def _join(preds: Mapping[str, Sequence[str]], gold: Sequence[ELSample]) -> None:
    missing = [s.id for s in gold if s.id not in preds]
    if missing:
        shown = ", ".join(missing[:10])
        raise EvalError(f"{len(missing)} gold sample(s) missing from predictions: {shown}")


def recall_at_k(
    preds: Mapping[str, Sequence[str]],
    gold: Sequence[ELSample],
    k: int,
    multi_label: bool = False,
) -> float:
    """Fraction of gold samples whose concept is hit within the top-k distinct predictions."""
    if not gold:
        raise EvalError("empty gold sample list")
    _join(preds, gold)
    if not multi_label:
        multi = [s.id for s in gold if len(s.gold_cuis) > 1]
        if multi:
            raise EvalError(
                f"{len(multi)} sample(s) carry multiple gold concepts; pass multi_label=True"
            )
    hits = sum(1 for s in gold if _hit(preds[s.id], s.gold_cuis, k))
    return hits / len(gold)


def top_frequent_concepts(train: Sequence[ELSample], top_n: int = 100) -> set[str]:
    """The top_n most frequent gold concepts in the training set.

    Ties at the boundary break by lexicographic cui so the set is stable.
    """
    freq: Counter[str] = Counter()
    for sample in train:
        for cui in sample.gold_cuis:
            freq[cui] += 1
    ranked = sorted(freq.items(), key=lambda item: (-item[1], item[0]))
    return {cui for cui, _ in ranked[:top_n]}


def subpopulations(
    samples: Sequence[ELSample],
    train: Sequence[ELSample],
    index: NameIndex,
    top_n: int = 100,
) -> dict[str, set[str]]:
    """Label each sample id with its sub-population memberships.

    Labels are non-exclusive except the single/multi word split. Mentions
    are compared after name normalization; a concept is unseen when none of
    the sample's gold cuis occurs in the training set.
    """
    train_mentions = {normalize_name(s.mention) for s in train}
    train_cuis = {cui for s in train for cui in s.gold_cuis}
    top_cuis = top_frequent_concepts(train, top_n)
    labels: dict[str, set[str]] = {}
    for sample in samples:
        mention = normalize_name(sample.mention)
        out = {SUBPOP_SINGLE_WORD if len(mention.split()) == 1 else SUBPOP_MULTI_WORD}
        if mention not in train_mentions:
            out.add(SUBPOP_UNSEEN_MENTION)
        if not (sample.gold_cuis & train_cuis):
            out.add(SUBPOP_UNSEEN_CONCEPT)
        gold_names = {name for cui in sample.gold_cuis for name in _names_of(index, cui)}
        if mention not in gold_names:
            out.add(SUBPOP_NOT_DIRECT_MATCH)
        if sample.gold_cuis & top_cuis:
            out.add(SUBPOP_TOP100)
        labels[sample.id] = out
    return labels


def _names_of(index: NameIndex, cui: str) -> set[str]:
    return {name for name, cuis in index.to_concept.items() if cui in cuis}


def evaluate(
    preds: Mapping[str, Sequence[str]],
    gold: Sequence[ELSample],
    ks: Sequence[int] = (1, 5),
    multi_label: bool = False,
    train: Sequence[ELSample] | None = None,
    index: NameIndex | None = None,
    top_n: int = 100,
) -> EvalReport:
    """Full report: recall@k for each k, plus sub-population recall@1 when
    a training set and name index are provided."""
    recall = {k: recall_at_k(preds, gold, k, multi_label) for k in ks}
    report = EvalReport(
        recall_at=recall,
        rejected=sum(1 for s in gold if not preds.get(s.id)),
        sample_count=len(gold),
    )
    if train is not None and index is not None:
        labels = subpopulations(gold, train, index, top_n)
        by_pop: dict[str, list[ELSample]] = {}
        for sample in gold:
            for label in labels[sample.id]:
                by_pop.setdefault(label, []).append(sample)
        by_pop[SUBPOP_OVERALL] = list(gold)
        for label in sorted(by_pop):
            members = by_pop[label]
            hits = sum(1 for s in members if _hit(preds[s.id], s.gold_cuis, 1))
            report.subpopulations[label] = {
                "recall_at_1": hits / len(members),
                "sample_size": len(members),
            }
    return report


def aggregate_reports(reports: Sequence[EvalReport]) -> dict:
    """Mean and standard deviation of recall@k across repeated runs."""
    ks = sorted(reports[0].recall_at)
    out: dict[str, dict[str, float]] = {"mean": {}, "std": {}}
    for k in ks:
        values = np.array([r.recall_at[k] for r in reports], dtype=float)
        out["mean"][str(k)] = float(values.mean())
        out["std"][str(k)] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return out
