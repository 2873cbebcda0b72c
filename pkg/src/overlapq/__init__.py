"""Overlap times of customer pairs in a two-station M/M/inf tandem queue:
closed forms, Monte Carlo estimators and independent verification paths."""

from overlapq.analytic import (
    CrossPairTail,
    MomentSet,
    RectangleProbs,
    Variant,
    conjecture_joint_tail,
    cross_pair_tail,
    joint_same_pair_tail,
    marginal_station1_tail,
    marginal_station2_tail,
    moments,
    rectangle_probabilities,
    sum_tail,
)
from overlapq.model import (
    CaseId,
    Ordering,
    PairGeometry,
    RateParams,
    Regime,
    Threshold,
    classify_case,
    validate_params,
)
from overlapq.simulator import (
    TailEstimate,
    Trajectory,
    conjecture_check,
    estimate_cross_pair_tail,
    estimate_moments,
    estimate_sum_tail,
    extract_overlap,
    simulate_tandem,
)

__all__ = [
    "CaseId", "CrossPairTail", "MomentSet", "Ordering", "PairGeometry", "RateParams",
    "RectangleProbs", "Regime", "TailEstimate", "Threshold", "Trajectory", "Variant",
    "classify_case", "conjecture_check", "conjecture_joint_tail", "cross_pair_tail",
    "estimate_cross_pair_tail", "estimate_moments", "estimate_sum_tail", "extract_overlap",
    "joint_same_pair_tail", "marginal_station1_tail", "marginal_station2_tail", "moments",
    "rectangle_probabilities", "simulate_tandem", "sum_tail", "validate_params",
]
