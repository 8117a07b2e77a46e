"""Walkthrough: picking the training target name for a mention.

The decoder is trained to emit one synonym of the gold concept. Which one?
The tfidf policy picks the textually closest (by character 3-gram cosine),
which is much easier for a generative model to produce than an arbitrary
canonical name. Compare the policies on a mention with rich synonymy.
"""

from genlink import SelectionPolicy, cosine, fit_tfidf, select_target, vectorize

SYNONYMS = ["reactive arthritis", "rea", "reiter syndrome", "arthritis urethritica",
            "venereal arthritis", "polyarteritis enterica"]


def main():
    mention = "reiter's syndrome"
    print(f"mention: {mention!r}")
    print(f"synonyms of the gold concept: {SYNONYMS}\n")

    model = fit_tfidf(SYNONYMS + [mention])
    mv = vectorize(model, mention)
    print("cosine similarity of each synonym to the mention:")
    for name in sorted(SYNONYMS, key=lambda n: -cosine(mv, vectorize(model, n))):
        print(f"  {cosine(mv, vectorize(model, name)):.3f}  {name}")

    print("\npolicy choices:")
    for policy in (SelectionPolicy("tfidf"), SelectionPolicy("shortest"),
                   SelectionPolicy("random", seed=1)):
        chosen = select_target(mention, SYNONYMS, policy)
        print(f"  {policy.kind:>8}: {chosen!r}")

    print("\nthe tfidf pick tracks the mention's surface form; shortest ignores it;")
    print("random is uniform but seed-keyed, so reruns reproduce the same draw.")


if __name__ == "__main__":
    main()
