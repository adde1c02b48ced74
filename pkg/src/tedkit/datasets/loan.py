"""Synthetic HELOC-style applications labeled by two three-literal "good" rules.

Rule 1 (NumSatisfactoryTrades >= 23): ExternalRiskEstimate >= 70 and
NetFractionRevolvingBurden <= 63. Rule 2 (trades <= 22): ERE >= 76 and
NFRB <= 78. The trades count picks the rule, so the rules are mutually
exclusive; a delinquent applicant is explained by the branch and by which of
the two remaining literals failed.
"""

from __future__ import annotations

from enum import StrEnum

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from tedkit.datasets.base import Dataset
from tedkit.errors import DatasetError

logger = structlog.get_logger(__name__)

FEATURE_NAMES: tuple[str, ...] = ("trades", "ere", "nfrb", "n0", "n1", "n2", "n3", "n4")
N_NOISE = 5

TRADES_SPLIT = 23
RULE1_ERE_MIN, RULE1_NFRB_MAX = 70, 63
RULE2_ERE_MIN, RULE2_NFRB_MAX = 76, 78


class LoanLabel(StrEnum):
    GOOD = "good"
    DELINQUENT = "delinquent"


class LoanExplanation(StrEnum):
    GOOD_RULE1 = "GoodRule1"
    GOOD_RULE2 = "GoodRule2"
    HI_TRADES_ERE_VIOLATED = "HiTrades_EREViolated"
    HI_TRADES_NFRB_VIOLATED = "HiTrades_NFRBViolated"
    HI_TRADES_BOTH_VIOLATED = "HiTrades_BothViolated"
    LO_TRADES_ERE_VIOLATED = "LoTrades_EREViolated"
    LO_TRADES_NFRB_VIOLATED = "LoTrades_NFRBViolated"
    LO_TRADES_BOTH_VIOLATED = "LoTrades_BothViolated"

    @property
    def label(self) -> LoanLabel:
        if self in (LoanExplanation.GOOD_RULE1, LoanExplanation.GOOD_RULE2):
            return LoanLabel.GOOD
        return LoanLabel.DELINQUENT


LABEL_NAMES: tuple[str, ...] = tuple(label.value for label in LoanLabel)
EXPLANATION_NAMES: tuple[str, ...] = tuple(e.value for e in LoanExplanation)
_LABEL_IDS = {label: i for i, label in enumerate(LoanLabel)}
_EXPLANATION_IDS = {e: i for i, e in enumerate(LoanExplanation)}

_VIOLATIONS = {
    (True, True): (
        LoanExplanation.HI_TRADES_BOTH_VIOLATED,
        LoanExplanation.LO_TRADES_BOTH_VIOLATED,
    ),
    (True, False): (
        LoanExplanation.HI_TRADES_ERE_VIOLATED,
        LoanExplanation.LO_TRADES_ERE_VIOLATED,
    ),
    (False, True): (
        LoanExplanation.HI_TRADES_NFRB_VIOLATED,
        LoanExplanation.LO_TRADES_NFRB_VIOLATED,
    ),
}


class LoanRecord(BaseModel):
    """One application. Only the first three fields influence the label."""

    model_config = ConfigDict(frozen=True)

    num_satisfactory_trades: int = Field(..., ge=0)
    external_risk_estimate: int = Field(..., ge=0, le=100)
    net_fraction_revolving_burden: int = Field(..., ge=0, le=200)
    noise_features: tuple[float, ...] = (0.0,) * N_NOISE

    def to_features(self) -> np.ndarray:
        return np.array(
            [
                self.num_satisfactory_trades,
                self.external_risk_estimate,
                self.net_fraction_revolving_burden,
                *self.noise_features,
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_features(cls, row: np.ndarray | list[float]) -> LoanRecord:
        values = np.asarray(row, dtype=np.float64).tolist()
        if len(values) != len(FEATURE_NAMES):
            raise DatasetError(f"expected {len(FEATURE_NAMES)} loan features, got {len(values)}")
        return cls(
            num_satisfactory_trades=int(values[0]),
            external_risk_estimate=int(values[1]),
            net_fraction_revolving_burden=int(values[2]),
            noise_features=tuple(values[3:]),
        )


def rule_label(record: LoanRecord) -> tuple[LoanLabel, LoanExplanation]:
    """Label and explanation assigned by the trades-selected rule."""
    high = record.num_satisfactory_trades >= TRADES_SPLIT
    ere_min, nfrb_max = (RULE1_ERE_MIN, RULE1_NFRB_MAX) if high else (RULE2_ERE_MIN, RULE2_NFRB_MAX)
    ere_bad = record.external_risk_estimate < ere_min
    nfrb_bad = record.net_fraction_revolving_burden > nfrb_max
    if not ere_bad and not nfrb_bad:
        return LoanLabel.GOOD, LoanExplanation.GOOD_RULE1 if high else LoanExplanation.GOOD_RULE2
    hi_reason, lo_reason = _VIOLATIONS[(ere_bad, nfrb_bad)]
    return LoanLabel.DELINQUENT, hi_reason if high else lo_reason


def _rule_columns(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`rule_label` over the three rule columns -> (label ids, explanation ids)."""
    trades, ere, nfrb = features[:, 0], features[:, 1], features[:, 2]
    high = trades >= TRADES_SPLIT
    ere_bad = np.where(high, ere < RULE1_ERE_MIN, ere < RULE2_ERE_MIN)
    nfrb_bad = np.where(high, nfrb > RULE1_NFRB_MAX, nfrb > RULE2_NFRB_MAX)
    explanations = np.empty(len(features), dtype=np.int64)
    for is_high in (True, False):
        branch = high == is_high
        good = LoanExplanation.GOOD_RULE1 if is_high else LoanExplanation.GOOD_RULE2
        explanations[branch & ~ere_bad & ~nfrb_bad] = _EXPLANATION_IDS[good]
        for (e_bad, n_bad), reasons in _VIOLATIONS.items():
            mask = branch & (ere_bad == e_bad) & (nfrb_bad == n_bad)
            explanations[mask] = _EXPLANATION_IDS[reasons[0 if is_high else 1]]
    good_ids = [
        _EXPLANATION_IDS[LoanExplanation.GOOD_RULE1],
        _EXPLANATION_IDS[LoanExplanation.GOOD_RULE2],
    ]
    labels = np.where(
        np.isin(explanations, good_ids),
        _LABEL_IDS[LoanLabel.GOOD],
        _LABEL_IDS[LoanLabel.DELINQUENT],
    )
    return labels.astype(np.int64), explanations


def _draw_features(n: int, rng: np.random.Generator) -> np.ndarray:
    """Rule fields centred near the thresholds so all eight explanations occur."""
    trades = np.clip(np.rint(rng.normal(21.0, 8.0, n)), 0, 60)
    ere = np.clip(np.rint(rng.normal(72.0, 10.0, n)), 30, 99)
    nfrb = np.clip(np.rint(rng.normal(55.0, 30.0, n)), 0, 200)
    noise = np.round(rng.uniform(0.0, 100.0, (n, N_NOISE)), 2)
    return np.column_stack([trades, ere, nfrb, noise])


def _loan_dataset(
    features: np.ndarray,
    labels: np.ndarray,
    explanations: np.ndarray | None,
    meta: dict[str, object],
) -> Dataset:
    return Dataset(
        features=features,
        labels=labels,
        label_names=LABEL_NAMES,
        feature_names=FEATURE_NAMES,
        explanations=explanations,
        explanation_names=EXPLANATION_NAMES,
        kind="loan",
        meta=meta,
    )


def generate_synthetic(n: int, seed: int) -> Dataset:
    """*n* seeded applications with rule-consistent labels and explanations.

    Raises:
        DatasetError: If ``n < 1``.
    """
    if n < 1:
        raise DatasetError("n must be at least 1")
    rng = np.random.default_rng(seed)
    features = _draw_features(n, rng)
    labels, explanations = _rule_columns(features)
    dataset = _loan_dataset(features, labels, explanations, {"seed": seed, "n": n})
    logger.info("loan.generated", n=n, seed=seed, explanations=dataset.explanation_counts())
    return dataset


def generate_raw(n: int, seed: int, disagreement: float = 0.28) -> Dataset:
    """Applications whose recorded outcome disagrees with the rules on a fraction of rows.

    Emulates observed repayment data that the rules only partly explain. No
    explanations are attached; exactly ``round(disagreement * n)`` labels differ
    from :func:`rule_label`.

    Raises:
        DatasetError: If ``n < 1`` or *disagreement* is outside ``[0, 1]``.
    """
    if n < 1:
        raise DatasetError("n must be at least 1")
    if not 0.0 <= disagreement <= 1.0:
        raise DatasetError("disagreement must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    features = _draw_features(n, rng)
    labels, _ = _rule_columns(features)
    flipped = rng.choice(n, size=round(disagreement * n), replace=False)
    labels[flipped] = 1 - labels[flipped]
    dataset = _loan_dataset(
        features, labels, None, {"seed": seed, "n": n, "disagreement": disagreement}
    )
    logger.info("loan.generated_raw", n=n, seed=seed, flipped=len(flipped))
    return dataset


def _require_rule_columns(dataset: Dataset) -> None:
    if dataset.feature_names[:3] != FEATURE_NAMES[:3]:
        raise DatasetError(
            f"loan rules need columns {FEATURE_NAMES[:3]}, got {dataset.feature_names[:3]}"
        )
    if tuple(dataset.label_names) != LABEL_NAMES:
        raise DatasetError(f"loan labels must be {LABEL_NAMES}, got {dataset.label_names}")


def relabel_for_consistency(dataset: Dataset) -> tuple[Dataset, int]:
    """Replace every label and explanation with the rule outcome.

    Returns:
        ``(relabeled TED dataset, number of labels that changed)``.
    """
    _require_rule_columns(dataset)
    labels, explanations = _rule_columns(dataset.features)
    flips = int(np.count_nonzero(labels != dataset.labels))
    relabeled = _loan_dataset(dataset.features, labels, explanations, dict(dataset.meta))
    logger.info("loan.relabeled", instances=len(dataset), flips=flips)
    return relabeled, flips


def rule_fidelity(dataset: Dataset) -> float:
    """Fraction of instances whose label agrees with the rules."""
    _require_rule_columns(dataset)
    if len(dataset) == 0:
        raise DatasetError("no instances")
    labels, _ = _rule_columns(dataset.features)
    return float(np.mean(labels == dataset.labels))
