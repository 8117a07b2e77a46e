"""Fine-tuning pair construction and dataset loading."""

from __future__ import annotations

import json

import pytest

from genlink.kb import Concept, concepts_by_cui
from genlink.textsim import SelectionPolicy
from genlink.trainprep import (
    ELSample,
    build_prompt,
    build_source,
    extract_mention,
    load_samples,
    prepare_pairs,
)

from reference import ref_select_tfidf

KB = concepts_by_cui([
    Concept("C_li", ("lithium", "lithium compounds")),
    Concept("C_ha", ("headache", "cephalgia")),
    Concept("C_ra", ("reactive arthritis", "rea", "reiter syndrome")),
])


def sample(id="s1", mention="lithium", left="treated with", right="carbonate daily",
           gold=("C_li",)):
    return ELSample(id, mention, left, right, frozenset(gold))


class TestBuildSource:
    def test_layout(self):
        assert build_source("treated with", "lithium", "carbonate daily") == \
            "treated with START lithium END carbonate daily"

    def test_lowercases_everything_but_markers(self):
        assert build_source("Treated With", "Lithium", "DAILY") == \
            "treated with START lithium END daily"

    def test_empty_contexts_leave_no_stray_spaces(self):
        assert build_source("", "rea", "") == "START rea END"
        assert build_source("left", "rea", "") == "left START rea END"

    def test_extract_mention_inverts(self):
        source = build_source("a b", "some long mention", "c")
        assert extract_mention(source) == "some long mention"
        with pytest.raises(ValueError):
            extract_mention("no markers here")


class TestPreparePairs:
    def test_lithium_example(self):
        pairs, summary = prepare_pairs([sample()], KB)
        assert summary.kept == 1 and summary.rejected == 0
        (pair,) = pairs
        assert pair.source == "treated with START lithium END carbonate daily"
        assert pair.target_prompt == "lithium is"
        assert pair.target_name == "lithium"
        assert pair.cui == "C_li"
        argmax, _ = ref_select_tfidf("lithium", list(KB["C_li"].names))
        assert pair.target_name in argmax

    def test_prompt_ablation_gives_empty_prompt(self):
        pairs, _ = prepare_pairs([sample()], KB, prompt_enabled=False)
        assert pairs[0].target_prompt == ""

    def test_unknown_cui_rejected_and_counted(self, caplog):
        pairs, summary = prepare_pairs([sample(), sample(id="s2", gold=("C_missing",))], KB)
        assert len(pairs) == 1
        assert summary.rejected == 1
        assert summary.rejected_ids == ["s2"]
        assert any("not in KB" in r.message for r in caplog.records)

    def test_multi_gold_emits_one_pair_per_cui(self):
        pairs, _ = prepare_pairs([sample(id="m", gold=("C_li", "C_ha"))], KB)
        assert [p.cui for p in pairs] == ["C_ha", "C_li"]
        assert all(p.id == "m" for p in pairs)

    def test_pair_count_is_sum_of_gold_sizes(self):
        batch = [sample(id=f"s{i}", gold=("C_li",) if i % 2 else ("C_li", "C_ra"))
                 for i in range(10)]
        pairs, summary = prepare_pairs(batch, KB)
        assert len(pairs) == sum(len(s.gold_cuis) for s in batch)
        assert summary.kept == 10

    def test_target_invariant_name_belongs_to_concept(self):
        batch = [sample(id=f"s{i}", mention=m, gold=(g,))
                 for i, (m, g) in enumerate([("head ache", "C_ha"), ("reiter", "C_ra"),
                                             ("lithum", "C_li")])]
        pairs, _ = prepare_pairs(batch, KB)
        for pair in pairs:
            assert pair.target_name in KB[pair.cui].names
            assert pair.source.count("START") == 1
            assert pair.source.count("END") == 1

    def test_tfidf_output_invariant_to_synonym_order(self):
        reversed_kb = concepts_by_cui([
            Concept("C_ra", tuple(reversed(KB["C_ra"].names))),
        ])
        s = sample(id="x", mention="reiter sindrome", gold=("C_ra",))
        a, _ = prepare_pairs([s], {"C_ra": KB["C_ra"]})
        b, _ = prepare_pairs([s], reversed_kb)
        assert a[0].target_name == b[0].target_name

    def test_policy_switch_changes_targets(self):
        s = sample(id="p", mention="reiter syndrome x", gold=("C_ra",))
        tfidf_pairs, _ = prepare_pairs([s], KB, SelectionPolicy("tfidf"))
        short_pairs, _ = prepare_pairs([s], KB, SelectionPolicy("shortest"))
        assert tfidf_pairs[0].target_name == "reiter syndrome"
        assert short_pairs[0].target_name == "rea"


class TestLoadSamples:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "data.jsonl"
        records = [
            {"id": "a", "mention": "rea", "left_context": "l", "right_context": "r",
             "gold_cuis": ["C_ra"]},
            {"id": "b", "mention": "x", "left_context": "", "right_context": "",
             "gold_cuis": ["C1", "C2"]},
        ]
        path.write_text("".join(json.dumps(r) + "\n" for r in records))
        samples = load_samples(path)
        assert samples[0].mention == "rea"
        assert samples[1].gold_cuis == frozenset({"C1", "C2"})

    def test_validation(self):
        with pytest.raises(ValueError):
            ELSample("bad", "", "l", "r", frozenset({"C1"}))
        with pytest.raises(ValueError):
            ELSample("bad", "m", "l", "r", frozenset())
