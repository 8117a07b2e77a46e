"""Walkthrough: synthesizing seq2seq pretraining samples from KB entries.

Shows the three concept cases (definition present, 3+ synonyms, 1-2
synonyms), the clause templates drawn for each, and the fixed decoder shape.
"""

from collections import Counter

from genlink import Concept, classify_concept, generate_corpus, generate_sample
import random

CONCEPTS = [
    Concept("C1", ("reactive arthritis", "rea", "reiter syndrome"),
            "an arthritis that develops after an infection"),
    Concept("C2", ("headache", "cephalgia", "cranial pain", "head pain")),
    Concept("C3", ("aspirin", "acetylsalicylic acid")),
    Concept("C4", ("paracetamol",)),
]


def main():
    print("== concept cases ==")
    for c in CONCEPTS:
        print(f"  {c.cui} ({len(c.names)} names, definition={'yes' if c.definition else 'no'})"
              f" -> {classify_concept(c)}")

    print("\n== one sample per concept (seed 7) ==")
    rng = random.Random(7)
    for c in CONCEPTS:
        s = generate_sample(c, rng)
        print(f"  template {s.template_id:2d} | source: {s.source}")
        print(f"               | target: {s.target}")

    print("\n== a small corpus: one sample per synonym per epoch ==")
    samples = list(generate_corpus(CONCEPTS, epochs_over_synonyms=2, seed=0))
    print(f"  {len(samples)} samples from {sum(len(c.names) for c in CONCEPTS)} synonyms x 2 epochs")
    usage = Counter(s.template_id for s in samples)
    print(f"  template ids used: {sorted(usage)}")
    print("  rerunning with the same seed reproduces the stream byte for byte:",
          list(generate_corpus(CONCEPTS, epochs_over_synonyms=2, seed=0)) == samples)


if __name__ == "__main__":
    main()
