"""Generative entity-linking toolkit.

The pipeline: normalize a knowledge base (kb), synthesize pretraining
samples from it (corpus), prepare fine-tuning pairs with similarity-aware
target selection (trainprep, textsim), build a token prefix tree over the
full synonym set (trie, tokens), run constrained beam search with a
pluggable scorer (decoder), and measure recall (evaluate).
"""

__version__ = "0.1.0"

from .kb import (
    Concept,
    KbConfig,
    NameIndex,
    build_name_index,
    concepts_by_cui,
    deduplicate,
    load_kb,
    merge_synonyms,
    normalize_name,
    save_kb,
)
from .textsim import SelectionPolicy, TfidfModel, cosine, fit_tfidf, select_target, vectorize
from .corpus import PretrainSample, Template, TEMPLATES, classify_concept, generate_corpus, generate_sample
from .trainprep import ELSample, TrainPair, build_prompt, build_source, load_samples, prepare_pairs
from .tokens import SpecialTokens, Tokenizer, build_vocab
from .trie import TokenTrie, TrieCursor, build_trie, load_trie, save_trie
from .decoder import (
    BeamHypothesis,
    ExternalScorer,
    NgramScorer,
    OracleScorer,
    Prediction,
    RandomScorer,
    Scorer,
    UniformScorer,
    constrained_beam_search,
    decode_many,
    load_ngram,
    oracle_scorer,
    save_ngram,
    train_ngram,
)
from .evaluate import EvalReport, evaluate, recall_at_k, subpopulations, top_frequent_concepts

__all__ = [
    "__version__",
    "Concept", "KbConfig", "NameIndex", "build_name_index", "concepts_by_cui",
    "deduplicate", "load_kb", "merge_synonyms", "normalize_name", "save_kb",
    "SelectionPolicy", "TfidfModel", "cosine", "fit_tfidf", "select_target", "vectorize",
    "PretrainSample", "Template", "TEMPLATES", "classify_concept", "generate_corpus", "generate_sample",
    "ELSample", "TrainPair", "build_prompt", "build_source", "load_samples", "prepare_pairs",
    "SpecialTokens", "Tokenizer", "build_vocab",
    "TokenTrie", "TrieCursor", "build_trie", "load_trie", "save_trie",
    "BeamHypothesis", "ExternalScorer", "NgramScorer", "OracleScorer", "Prediction",
    "RandomScorer", "Scorer", "UniformScorer", "constrained_beam_search", "decode_many",
    "load_ngram", "oracle_scorer", "save_ngram", "train_ngram",
    "EvalReport", "evaluate", "recall_at_k", "subpopulations", "top_frequent_concepts",
]
