"""Walkthrough: prefix-tree-constrained beam search.

Builds a trie over every synonym, then decodes with three scorers: an
oracle that knows the answer, a uniform scorer, and an adversarial random
scorer. Whatever the scorer does, every decoded name is a real synonym and
maps to a concept, because candidates are restricted to trie edges.
"""

from genlink import (
    Concept,
    RandomScorer,
    Tokenizer,
    UniformScorer,
    build_name_index,
    build_trie,
    constrained_beam_search,
    oracle_scorer,
)

CONCEPTS = [
    Concept("C1", ("reactive arthritis", "rea", "reiter syndrome")),
    Concept("C2", ("rheumatoid arthritis", "ra")),
    Concept("C3", ("reactive airway disease",)),
]


def main():
    tok = Tokenizer("whitespace")
    index = build_name_index(CONCEPTS)
    trie = build_trie(index, tok)
    print(f"trie over {trie.name_count} names, {trie.node_count} nodes")
    print(f"tokens allowed first: {trie.allowed_next([])}")
    print(f"after 'reactive': {trie.allowed_next(['reactive'])}")
    print(f"after 'rea' (a complete name): {trie.allowed_next(['rea'])}\n")

    source = tok.tokenize("patient with START reactive arthritis END of the knee")
    prompt = tok.tokenize("reactive arthritis is")

    oracle = oracle_scorer({tuple(source): tok.tokenize("reactive arthritis")}, tok)
    for label, scorer in (("oracle", oracle), ("uniform", UniformScorer()),
                          ("random adversary", RandomScorer(seed=3, low=-9, high=0))):
        pred = constrained_beam_search(source, prompt, trie, scorer, index, tok, beam_size=3)
        print(f"{label:>16}: names={list(pred.names)}")
        print(f"{'':>16}  cuis={list(pred.cuis)} (every name is in the KB, by construction)")


if __name__ == "__main__":
    main()
