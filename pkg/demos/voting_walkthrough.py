#!/usr/bin/env python3
"""Walk through both ensemble voting rules on a tiny three-model example.

Three models audit the same contract and disagree; this script shows how
weighted majority voting and permutation tie-breaking each rank the
candidate (function, vulnerability type) pairs.

Run:  python3 demos/voting_walkthrough.py
"""

from scaudit import (
    AuditRun,
    EnsembleConfig,
    METHOD_PERM_OPT,
    METHOD_WEIGHTED,
    NormalizedFinding,
    VulnType,
    build_vote_matrix,
    perm_opt_vote,
    weighted_vote,
)

MODEL_ORDER = ["codellama", "deepseek", "gemma"]

RUNS = [
    AuditRun(
        "codellama",
        "vault",
        "parsed",
        [
            NormalizedFinding("withdraw", VulnType.ACCESS_CONTROL, "anyone can call withdraw"),
            NormalizedFinding("deposit", VulnType.INTEGER_OVERFLOW, "balance addition can wrap"),
        ],
    ),
    AuditRun(
        "deepseek",
        "vault",
        "parsed",
        [
            NormalizedFinding("deposit", VulnType.INTEGER_OVERFLOW, "unchecked balance += amount"),
            NormalizedFinding("draw", VulnType.BAD_RANDOMNESS, "block timestamp used as seed"),
        ],
    ),
    AuditRun(
        "gemma",
        "vault",
        "parsed",
        [
            NormalizedFinding("withdraw", VulnType.ACCESS_CONTROL, "missing onlyOwner modifier"),
        ],
    ),
]


def show(title, prediction):
    print(f"\n{title}")
    for rank, p in enumerate(prediction.ranked_pairs, start=1):
        print(f"  {rank}. {p.function_key} / {p.vuln_type.value:16s} score={p.score:.3f}  ({p.description})")


def main():
    matrix = build_vote_matrix(RUNS, MODEL_ORDER)
    print(f"contract {matrix.contract_id!r}: {len(matrix.pairs)} candidate pairs from {len(MODEL_ORDER)} models")
    for j, (fk, vt) in enumerate(matrix.pairs):
        voters = [m for i, m in enumerate(MODEL_ORDER) if matrix.votes[i, j]]
        print(f"  ({fk}, {vt.value}) <- votes from {', '.join(voters)}")

    # Weighted voting: each vote counts as the voter's weight. deepseek's high
    # weight drags its unique finding above gemma's duplicate of codellama's.
    weights = {"codellama": 0.25, "deepseek": 0.55, "gemma": 0.20}
    weighted = weighted_vote(matrix, EnsembleConfig(method=METHOD_WEIGHTED, k=3, weights=weights))
    show(f"weighted vote, weights={weights}", weighted)

    # Scale invariance: multiplying every weight by 100 changes scores but
    # never the ranking.
    scaled = weighted_vote(
        matrix,
        EnsembleConfig(method=METHOD_WEIGHTED, k=3, weights={m: w * 100 for m, w in weights.items()}),
    )
    same = [p.pair for p in weighted.ranked_pairs] == [p.pair for p in scaled.ranked_pairs]
    print(f"\nrescaling all weights x100 keeps the order: {same}")

    # Permutation voting: plain vote counts, ties broken by which model in the
    # priority order saw the pair first.
    for permutation in (("deepseek", "codellama", "gemma"), ("gemma", "deepseek", "codellama")):
        perm = perm_opt_vote(matrix, EnsembleConfig(method=METHOD_PERM_OPT, k=3, permutation=permutation))
        show(f"permutation vote, priority {' > '.join(permutation)}", perm)


if __name__ == "__main__":
    main()
