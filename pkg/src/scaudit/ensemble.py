"""Ensemble voting over per-model findings.

Two aggregation rules are provided:

* weighted voting - each model's vote counts with a learned weight (its
  validation hit rate, normalized); ranking is by summed weight.
* permutation-optimized voting - votes are unweighted and ties are broken by
  the earliest model in a learned priority order; the order is found by
  exhaustive search over all permutations on a validation split.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadPermutationError,
    ConfigError,
    DuplicateModelRunError,
    EmptyValidationError,
    MissingFileError,
    TooManyModelsError,
    WeightMissingError,
)
from .parsing import AuditRun, VulnType

MAX_PERMUTATION_MODELS = 8

METHOD_WEIGHTED = "weighted"
METHOD_PERM_OPT = "perm_opt"
SYSTEM_IDS = {METHOD_WEIGHTED: "weighted_ensemble", METHOD_PERM_OPT: "perm_opt_ensemble"}


@dataclass
class VoteMatrix:
    """Binary model x pair vote matrix for one contract."""

    contract_id: str
    pairs: list[tuple[str, VulnType]]
    votes: np.ndarray  # shape (len(model_order), len(pairs)), dtype int8
    model_order: list[str]
    descriptions: dict[tuple[int, int], str] = field(default_factory=dict)

    def column_sum(self, j: int) -> int:
        return int(self.votes[:, j].sum())


@dataclass(frozen=True)
class RankedPair:
    function_key: str
    vuln_type: VulnType
    score: float
    description: str = ""

    @property
    def pair(self) -> tuple[str, VulnType]:
        return (self.function_key, self.vuln_type)


@dataclass
class RankedPrediction:
    contract_id: str
    ranked_pairs: list[RankedPair]
    system_id: str = ""

    def top(self, k: int) -> list[RankedPair]:
        return self.ranked_pairs[:k]


@dataclass(frozen=True)
class EnsembleConfig:
    method: str
    k: int = 5
    weights: dict[str, float] | None = None
    permutation: tuple[str, ...] | None = None

    def validate(self, model_order: list[str]) -> None:
        if self.method not in (METHOD_WEIGHTED, METHOD_PERM_OPT):
            raise ConfigError(f"unknown ensemble method {self.method!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if self.method == METHOD_WEIGHTED:
            if self.weights is None:
                raise WeightMissingError("weighted method requires weights")
            for model in model_order:
                if model not in self.weights:
                    raise WeightMissingError(f"no weight for model {model!r}")
            if any(w < 0 for w in self.weights.values()):
                raise ConfigError("weights must be non-negative")
            if not any(self.weights[m] > 0 for m in model_order):
                raise ConfigError("at least one weight must be positive")
        else:
            if self.permutation is None:
                raise BadPermutationError("perm_opt method requires a permutation")
            if sorted(self.permutation) != sorted(model_order) or len(self.permutation) != len(model_order):
                raise BadPermutationError(
                    f"permutation {list(self.permutation)} is not a bijection over {model_order}"
                )


def build_vote_matrix(runs: list[AuditRun], model_order: list[str]) -> VoteMatrix:
    """Assemble the vote matrix for one contract from per-model audit runs.

    Pairs appear in first-seen order scanning models in model_order; models
    without a parsed run simply contribute an all-zero row.
    """
    order_index = {m: i for i, m in enumerate(model_order)}
    run_by_model: dict[str, AuditRun] = {}
    contract_id = ""
    for run in runs:
        if run.backend_id not in order_index:
            raise ConfigError(f"run for unknown model {run.backend_id!r}")
        if run.backend_id in run_by_model:
            raise DuplicateModelRunError(f"multiple runs for model {run.backend_id!r}")
        if contract_id and run.contract_id != contract_id:
            raise ConfigError(
                f"vote matrix mixes contracts {contract_id!r} and {run.contract_id!r}"
            )
        contract_id = run.contract_id
        run_by_model[run.backend_id] = run
    pairs: list[tuple[str, VulnType]] = []
    pair_index: dict[tuple[str, VulnType], int] = {}
    for model in model_order:
        run = run_by_model.get(model)
        if run is None:
            continue
        for finding in run.findings:
            if finding.pair not in pair_index:
                pair_index[finding.pair] = len(pairs)
                pairs.append(finding.pair)
    votes = np.zeros((len(model_order), len(pairs)), dtype=np.int8)
    descriptions: dict[tuple[int, int], str] = {}
    for model, run in run_by_model.items():
        i = order_index[model]
        for finding in run.findings:
            j = pair_index[finding.pair]
            votes[i, j] = 1
            descriptions[(i, j)] = finding.description
    return VoteMatrix(contract_id, pairs, votes, list(model_order), descriptions)


def weighted_vote(matrix: VoteMatrix, config: EnsembleConfig) -> RankedPrediction:
    """Rank pairs by weight-summed votes; ties fall back to ascending pair.

    Each retained pair carries the description written by its highest-weight
    voter (earliest in model_order on weight ties).
    """
    if config.method != METHOD_WEIGHTED:
        raise ConfigError(f"weighted_vote called with method {config.method!r}")
    config.validate(matrix.model_order)
    weights = config.weights or {}
    ranked: list[tuple[tuple[float, str, str], RankedPair]] = []
    for j, (fk, vt) in enumerate(matrix.pairs):
        score = 0.0
        best_i: int | None = None
        for i, model in enumerate(matrix.model_order):
            if matrix.votes[i, j]:
                score += weights[model]
                if best_i is None or weights[model] > weights[matrix.model_order[best_i]]:
                    best_i = i
        description = matrix.descriptions.get((best_i, j), "") if best_i is not None else ""
        ranked.append(((-score, fk, vt.value), RankedPair(fk, vt, score, description)))
    ranked.sort(key=lambda item: item[0])
    return RankedPrediction(
        matrix.contract_id,
        [pair for _key, pair in ranked[: config.k]],
        system_id=SYSTEM_IDS[METHOD_WEIGHTED],
    )


def perm_opt_vote(matrix: VoteMatrix, config: EnsembleConfig) -> RankedPrediction:
    """Rank pairs by raw vote count, breaking ties by model priority.

    A tied pair wins if its earliest voter sits higher in the permutation;
    residual ties fall back to ascending pair. Descriptions come from the
    earliest-priority voter.
    """
    if config.method != METHOD_PERM_OPT:
        raise ConfigError(f"perm_opt_vote called with method {config.method!r}")
    config.validate(matrix.model_order)
    rank = {model: r for r, model in enumerate(config.permutation or ())}
    ranked: list[tuple[tuple[int, int, str, str], RankedPair]] = []
    for j, (fk, vt) in enumerate(matrix.pairs):
        voters = [i for i in range(len(matrix.model_order)) if matrix.votes[i, j]]
        score = len(voters)
        earliest_i = min(voters, key=lambda i: rank[matrix.model_order[i]])
        earliest_rank = rank[matrix.model_order[earliest_i]]
        description = matrix.descriptions.get((earliest_i, j), "")
        ranked.append(((-score, earliest_rank, fk, vt.value), RankedPair(fk, vt, float(score), description)))
    ranked.sort(key=lambda item: item[0])
    return RankedPrediction(
        matrix.contract_id,
        [pair for _key, pair in ranked[: config.k]],
        system_id=SYSTEM_IDS[METHOD_PERM_OPT],
    )


def single_model_prediction(run: AuditRun, k: int, system_id: str = "") -> RankedPrediction:
    """A single model's own ranking: its first k findings in emission order."""
    pairs = [RankedPair(f.function_key, f.vuln_type, 1.0, f.description) for f in run.findings[:k]]
    return RankedPrediction(run.contract_id, pairs, system_id=system_id or run.backend_id)


def _group_runs(runs: list[AuditRun]) -> dict[str, list[AuditRun]]:
    by_contract: dict[str, list[AuditRun]] = {}
    for run in runs:
        by_contract.setdefault(run.contract_id, []).append(run)
    return by_contract


def model_hit_rates(
    validation_runs: list[AuditRun],
    ground_truth: dict,
    k: int,
    model_order: list[str] | None = None,
) -> dict[str, float]:
    """Per-model top-k direct hit rate over the validation contracts."""
    from . import evaluation  # deferred: evaluation imports this module

    contracts = sorted(ground_truth)
    if not contracts or not validation_runs:
        raise EmptyValidationError("validation split is empty")
    models = model_order or sorted({r.backend_id for r in validation_runs})
    run_lookup = {(r.backend_id, r.contract_id): r for r in validation_runs}
    rates: dict[str, float] = {}
    for model in models:
        hits = 0
        for cid in contracts:
            run = run_lookup.get((model, cid))
            if run is None:
                continue
            prediction = single_model_prediction(run, k)
            if any(evaluation.direct_hit(prediction, label, k) for label in ground_truth[cid]):
                hits += 1
        rates[model] = hits / len(contracts)
    return rates


def learn_weights(
    validation_runs: list[AuditRun],
    ground_truth: dict,
    k: int,
    model_order: list[str] | None = None,
) -> dict[str, float]:
    """Weights are validation hit rates, normalized to sum to one.

    A degenerate all-zero profile falls back to uniform weights so the
    weighted vote stays well-defined.
    """
    rates = model_hit_rates(validation_runs, ground_truth, k, model_order)
    total = sum(rates.values())
    if total == 0.0:
        return {m: 1.0 / len(rates) for m in rates}
    return {m: r / total for m, r in rates.items()}


@dataclass
class PermutationSearchResult:
    permutation: tuple[str, ...]
    hit_rate: float
    candidates_evaluated: int
    k: int


def optimize_permutation(
    validation_runs: list[AuditRun],
    ground_truth: dict,
    k: int,
    model_order: list[str] | None = None,
) -> PermutationSearchResult:
    """Exhaustively search model priority orders on the validation split.

    Scores each permutation by the ensemble's top-k direct hit rate and keeps
    the best; among co-optimal orders the lexicographically smallest index
    sequence (relative to model_order) wins. Guarded to at most
    MAX_PERMUTATION_MODELS models since the search is factorial.
    """
    from . import evaluation  # deferred: evaluation imports this module

    contracts = sorted(ground_truth)
    if not contracts or not validation_runs:
        raise EmptyValidationError("validation split is empty")
    models = list(model_order or sorted({r.backend_id for r in validation_runs}))
    if len(models) > MAX_PERMUTATION_MODELS:
        raise TooManyModelsError(
            f"{len(models)} models exceed the exhaustive-search guard of {MAX_PERMUTATION_MODELS}"
        )
    matrices = {
        cid: build_vote_matrix(runs, models)
        for cid, runs in _group_runs(validation_runs).items()
        if cid in ground_truth
    }
    best_perm: tuple[str, ...] | None = None
    best_rate = -1.0
    candidates = 0
    for perm in itertools.permutations(models):
        candidates += 1
        config = EnsembleConfig(method=METHOD_PERM_OPT, k=k, permutation=perm)
        hits = 0
        for cid in contracts:
            matrix = matrices.get(cid)
            if matrix is None:
                continue
            prediction = perm_opt_vote(matrix, config)
            if any(evaluation.direct_hit(prediction, label, k) for label in ground_truth[cid]):
                hits += 1
        rate = hits / len(contracts)
        if rate > best_rate:  # strict: permutations iterate in lexicographic order
            best_rate = rate
            best_perm = perm
    assert best_perm is not None
    return PermutationSearchResult(best_perm, best_rate, candidates, k)


# --- config / prediction stores ----------------------------------------------


def save_ensemble_config(config: EnsembleConfig, path: str | Path, provenance: dict | None = None) -> None:
    obj: dict = {"method": config.method, "k": config.k}
    if config.weights is not None:
        obj["weights"] = dict(sorted(config.weights.items()))
    if config.permutation is not None:
        obj["permutation"] = list(config.permutation)
    if provenance:
        obj["provenance"] = provenance
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_ensemble_config(path: str | Path) -> EnsembleConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"ensemble config not found: {path}")
    obj = json.loads(path.read_text())
    try:
        return EnsembleConfig(
            method=obj["method"],
            k=int(obj.get("k", 5)),
            weights=obj.get("weights"),
            permutation=tuple(obj["permutation"]) if "permutation" in obj else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed ensemble config {path}: {exc}") from exc


def prediction_to_dict(prediction: RankedPrediction) -> dict:
    return {
        "system_id": prediction.system_id,
        "contract_id": prediction.contract_id,
        "ranked": [
            {
                "function_key": p.function_key,
                "vuln_type": p.vuln_type.value,
                "score": p.score,
                "description": p.description,
            }
            for p in prediction.ranked_pairs
        ],
    }


def prediction_from_dict(obj: dict) -> RankedPrediction:
    pairs = [
        RankedPair(p["function_key"], VulnType(p["vuln_type"]), float(p["score"]), p.get("description", ""))
        for p in obj.get("ranked", [])
    ]
    return RankedPrediction(obj["contract_id"], pairs, system_id=obj.get("system_id", ""))


def write_predictions(path: str | Path, predictions: list[RankedPrediction]) -> None:
    lines = [
        json.dumps(prediction_to_dict(p), sort_keys=True, separators=(",", ":")) for p in predictions
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_predictions(path: str | Path) -> list[RankedPrediction]:
    text = Path(path).read_text()
    return [prediction_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
