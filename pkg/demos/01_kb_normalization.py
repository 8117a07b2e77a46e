"""Walkthrough: loading, normalizing, merging, and deduplicating a KB.

Builds a toy knowledge base in a temp directory, runs it through the same
steps as `genlink kb build`, and prints what changes at each stage.
"""

import json
import tempfile
from pathlib import Path

from genlink import build_name_index, deduplicate, load_kb, merge_synonyms

RAW_KB = [
    {"cui": "C0085435", "names": ["Reiter Syndrome", "Reactive Arthritis", "ReA"],
     "definition": "An arthritis that develops after an infection elsewhere in the body."},
    {"cui": "C0018681", "names": ["Headache", "Cranial Pain"], "definition": None},
    # A shared synonym: "head pain" appears under two concepts on purpose.
    {"cui": "C0018682", "names": ["head pain", "cephalodynia"], "definition": None},
    {"cui": "C0018683", "names": ["head pain"], "definition": None},
]

EXTRA_SYNONYMS = [
    {"cui": "C0018681", "names": ["cephalgia", "head pain"], "definition": None},
    {"cui": "C9999999", "names": ["not in the base KB"], "definition": None},
]


def main():
    workdir = Path(tempfile.mkdtemp(prefix="genlink-demo-"))
    kb_path = workdir / "kb.jsonl"
    extra_path = workdir / "extra.jsonl"
    kb_path.write_text("".join(json.dumps(r) + "\n" for r in RAW_KB))
    extra_path.write_text("".join(json.dumps(r) + "\n" for r in EXTRA_SYNONYMS))

    print("== 1. load + normalize ==")
    concepts = load_kb(kb_path)
    for c in concepts:
        print(f"  {c.cui}: {list(c.names)}")
    print("  (lowercased, symbols stripped, per-concept duplicates gone)\n")

    print("== 2. merge extra synonyms by cui ==")
    concepts = merge_synonyms(concepts, load_kb(extra_path))
    for c in concepts:
        print(f"  {c.cui}: {list(c.names)}")
    print("  (the unmatched cui C9999999 was dropped)\n")

    print("== 3. deduplicate shared names ==")
    concepts = deduplicate(concepts)
    for c in concepts:
        print(f"  {c.cui}: {list(c.names)}")
    print("  ('head pain' now belongs to exactly one concept: the one that had fewer synonyms)\n")

    print("== 4. the name index ==")
    index = build_name_index(concepts)
    print(f"  {len(index)} names total; every one maps to exactly one concept:")
    for name in sorted(index.names)[:6]:
        print(f"    {name!r} -> {index.concepts_of(name)[0]}")


if __name__ == "__main__":
    main()
