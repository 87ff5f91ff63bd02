"""Scoring predictions against ground truth.

Hit rates are reported at each top-k cutoff under two matching modes: direct
(exact function key + vulnerability type) and cosine (description similarity
at or above a threshold). Contracts without a usable prediction count as
misses so failed backends hurt the score instead of shrinking the sample.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import GroundTruthLabel
from .ensemble import RankedPrediction, VoteMatrix
from .errors import ConfigError, MismatchedContractSetsError
from .parsing import DISPLAY_NAMES, VulnType, normalize_function_name
from .similarity import SimilarityScorer

MODE_DIRECT = "direct"
MODE_COSINE = "cosine"
METRIC_DIRECT = "top_k_direct"
METRIC_COSINE = "top_k_cosine"

NO_PREDICTION = "NoPrediction"
CONFUSION_AXES = tuple(t.value for t in VulnType) + (NO_PREDICTION,)

SCENARIO_BOTH_WRONG = "both_wrong"
SCENARIO_SINGLE_ONLY = "single_only"
SCENARIO_ENSEMBLE_ONLY = "ensemble_only"
SCENARIO_BOTH_RIGHT = "both_right"
SCENARIOS = (SCENARIO_BOTH_WRONG, SCENARIO_SINGLE_ONLY, SCENARIO_ENSEMBLE_ONLY, SCENARIO_BOTH_RIGHT)


@dataclass(frozen=True)
class EvalConfig:
    ks: tuple[int, ...] = (1, 5)
    thresholds: tuple[float, ...] = (0.5, 0.7, 0.9)
    match_modes: tuple[str, ...] = (MODE_DIRECT, MODE_COSINE)

    def validate(self) -> None:
        if not self.ks or any(not isinstance(k, int) or k < 1 for k in self.ks):
            raise ConfigError("ks must be positive integers")
        if list(self.ks) != sorted(self.ks):
            raise ConfigError("ks must be sorted ascending")
        if any(not 0.0 < t <= 1.0 for t in self.thresholds):
            raise ConfigError("thresholds must lie in (0, 1]")
        if list(self.thresholds) != sorted(self.thresholds):
            raise ConfigError("thresholds must be sorted ascending")
        if not self.match_modes or any(m not in (MODE_DIRECT, MODE_COSINE) for m in self.match_modes):
            raise ConfigError(f"match_modes must be a non-empty subset of ({MODE_DIRECT}, {MODE_COSINE})")


def truth_text(label: GroundTruthLabel) -> str:
    """Description to score against; falls back to the type's display name."""
    return label.description if label.description.strip() else DISPLAY_NAMES[label.vulnerability_type]


def direct_hit(prediction: RankedPrediction | None, truth: GroundTruthLabel, k: int) -> bool:
    """True when any top-k pair matches the label's function key and type."""
    if prediction is None:
        return False
    want = (normalize_function_name(truth.function_name), truth.vulnerability_type)
    return any(p.pair == want for p in prediction.top(k))


def cosine_hit(
    prediction: RankedPrediction | None,
    truth: GroundTruthLabel,
    k: int,
    threshold: float,
    scorer: SimilarityScorer,
) -> bool:
    """True when any top-k description scores >= threshold against the label."""
    if prediction is None:
        return False
    target = truth_text(truth)
    return any(scorer.score(p.description, target) >= threshold for p in prediction.top(k))


@dataclass(frozen=True)
class MetricRow:
    system_id: str
    metric: str
    k: int
    threshold: float | None
    hits: int
    n: int

    @property
    def hit_rate(self) -> float:
        return self.hits / self.n if self.n else 0.0


def evaluate(
    predictions_by_system: dict[str, dict[str, RankedPrediction]],
    truths: dict[str, list[GroundTruthLabel]],
    config: EvalConfig,
    scorer: SimilarityScorer | None = None,
) -> list[MetricRow]:
    """Hit rates per system, mode, k (and threshold for cosine).

    Rows come back in a fixed order: system id, then metric name, then k,
    then threshold - so two identical runs render identical tables.
    """
    config.validate()
    if MODE_COSINE in config.match_modes and scorer is None:
        raise ConfigError("cosine mode requires a similarity scorer")
    contracts = sorted(truths)
    n = len(contracts)
    rows: list[MetricRow] = []
    for system_id in sorted(predictions_by_system):
        predictions = predictions_by_system[system_id]
        for metric in sorted((METRIC_COSINE, METRIC_DIRECT)):
            mode = MODE_COSINE if metric == METRIC_COSINE else MODE_DIRECT
            if mode not in config.match_modes:
                continue
            thresholds: tuple[float | None, ...] = config.thresholds if mode == MODE_COSINE else (None,)
            for k in config.ks:
                for t in thresholds:
                    hits = 0
                    for cid in contracts:
                        prediction = predictions.get(cid)
                        labels = truths[cid]
                        if mode == MODE_DIRECT:
                            hit = any(direct_hit(prediction, lbl, k) for lbl in labels)
                        else:
                            hit = any(cosine_hit(prediction, lbl, k, t, scorer) for lbl in labels)
                        hits += 1 if hit else 0
                    rows.append(MetricRow(system_id, metric, k, t, hits, n))
    return rows


@dataclass
class ConfusionMatrix:
    """Counts of top-1 predicted type per true type; one increment per contract."""

    axes: tuple[str, ...]
    counts: np.ndarray

    @property
    def grand_total(self) -> int:
        return int(self.counts.sum())

    def at(self, true_type: str, predicted_type: str) -> int:
        return int(self.counts[self.axes.index(true_type), self.axes.index(predicted_type)])


def confusion(
    predictions: dict[str, RankedPrediction],
    truths: dict[str, list[GroundTruthLabel]],
) -> ConfusionMatrix:
    """Tally each contract's first label against the system's top-1 type.

    Empty or missing predictions land in the NoPrediction column, so the
    grand total always equals the number of evaluated contracts.
    """
    counts = np.zeros((len(CONFUSION_AXES), len(CONFUSION_AXES)), dtype=np.int64)
    index = {name: i for i, name in enumerate(CONFUSION_AXES)}
    for cid in sorted(truths):
        labels = truths[cid]
        if not labels:
            continue
        true_name = labels[0].vulnerability_type.value
        prediction = predictions.get(cid)
        if prediction is None or not prediction.ranked_pairs:
            pred_name = NO_PREDICTION
        else:
            pred_name = prediction.ranked_pairs[0].vuln_type.value
        counts[index[true_name], index[pred_name]] += 1
    return ConfusionMatrix(CONFUSION_AXES, counts)


@dataclass(frozen=True)
class ScenarioRecord:
    contract_id: str
    scenario: str
    agreement: int
    vuln_type: VulnType


def _matched_pair(
    prediction: RankedPrediction, truths: list[GroundTruthLabel], k: int
) -> tuple[str, VulnType] | None:
    wanted = {(normalize_function_name(lbl.function_name), lbl.vulnerability_type) for lbl in truths}
    for p in prediction.top(k):
        if p.pair in wanted:
            return p.pair
    return None


def scenario_analysis(
    single_predictions: dict[str, RankedPrediction],
    ensemble_predictions: dict[str, RankedPrediction],
    truths: dict[str, list[GroundTruthLabel]],
    vote_matrices: dict[str, VoteMatrix],
    k: int,
) -> list[ScenarioRecord]:
    """Partition contracts by who got them right, with model-agreement counts.

    Agreement is the vote count on the ensemble's matching pair (or its top-1
    pair when nothing matched; 0 for an empty prediction), which shows how
    much consensus sat behind each outcome.
    """
    contracts = sorted(truths)
    for name, keys in (("single", single_predictions), ("ensemble", ensemble_predictions)):
        if set(keys) != set(contracts):
            raise MismatchedContractSetsError(
                f"{name} predictions cover {len(keys)} contracts, ground truth covers {len(contracts)}"
            )
    if not set(contracts) <= set(vote_matrices):
        raise MismatchedContractSetsError("vote matrices do not cover the evaluated contracts")
    records: list[ScenarioRecord] = []
    for cid in contracts:
        labels = truths[cid]
        single_right = any(direct_hit(single_predictions[cid], lbl, k) for lbl in labels)
        ensemble_right = any(direct_hit(ensemble_predictions[cid], lbl, k) for lbl in labels)
        scenario = {
            (False, False): SCENARIO_BOTH_WRONG,
            (True, False): SCENARIO_SINGLE_ONLY,
            (False, True): SCENARIO_ENSEMBLE_ONLY,
            (True, True): SCENARIO_BOTH_RIGHT,
        }[(single_right, ensemble_right)]
        ensemble_pred = ensemble_predictions[cid]
        matrix = vote_matrices[cid]
        pair = _matched_pair(ensemble_pred, labels, k)
        if pair is None and ensemble_pred.ranked_pairs:
            pair = ensemble_pred.ranked_pairs[0].pair
        if pair is None:
            agreement = 0
            vuln_type = VulnType.OTHER
        else:
            agreement = matrix.column_sum(matrix.pairs.index(pair)) if pair in matrix.pairs else 0
            vuln_type = pair[1]
        records.append(ScenarioRecord(cid, scenario, agreement, vuln_type))
    return records


def scenario_counts(records: list[ScenarioRecord]) -> dict[str, int]:
    counts = Counter(r.scenario for r in records)
    return {s: counts.get(s, 0) for s in SCENARIOS}
