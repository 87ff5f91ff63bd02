#!/usr/bin/env python3
"""Show how descriptions are matched with TF-IDF cosine similarity.

Evaluation can credit a prediction whose wording differs from the label, as
long as the description is close enough. This script scores a few
prediction/label pairs and shows where the 0.5 / 0.7 / 0.9 thresholds land,
plus the effect of idf weighting.

Run:  python3 demos/similarity_scoring.py
"""

from scaudit import TfidfCosineScorer

CORPUS = [
    "integer overflow in transfer allows balance manipulation",
    "missing access control lets anyone become owner",
    "block timestamp used as randomness seed for the lottery draw",
    "constructor name typo leaves the contract ownerless",
    "token value diluted by unbounded minting",
]

PAIRS = [
    ("integer overflow in transfer", "integer overflow in transfer"),
    ("integer overflow in transfer", "overflow"),
    ("balance can wrap in transfer due to integer overflow", "integer overflow in transfer"),
    ("anyone can become owner, missing access control", "missing access control lets anyone become owner"),
    ("timestamp randomness", "block timestamp used as randomness seed"),
    ("completely unrelated text", "integer overflow in transfer"),
]

THRESHOLDS = (0.5, 0.7, 0.9)


def main():
    plain = TfidfCosineScorer(CORPUS, use_idf=False)
    idf = TfidfCosineScorer(CORPUS, use_idf=True)

    header = f"{'prediction':52s} {'label':46s} {'tf':>6s} {'tfidf':>6s}  hits at t"
    print(header)
    print("-" * len(header))
    for a, b in PAIRS:
        tf_score = plain.score(a, b)
        idf_score = idf.score(a, b)
        hits = ",".join(str(t) for t in THRESHOLDS if idf_score >= t) or "none"
        print(f"{a:52s} {b:46s} {tf_score:6.3f} {idf_score:6.3f}  {hits}")

    print(
        "\nidf weighting boosts rare, informative words (e.g. 'overflow') and"
        "\ndiscounts common ones, so paraphrases clear the threshold while"
        "\ngeneric text stays below it."
    )


if __name__ == "__main__":
    main()
