"""Confusion-matrix statistics for change-detection scoring.

Rates are fractions internally; `composites_from_rates` takes percentages,
matching how published detection tables are usually quoted.  Division
policy: a perfectly specific detector gets an infinite positive likelihood
ratio; a ratio whose denominator class is entirely absent raises
UndefinedRateError instead of smuggling in a NaN or silent zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidInputError, UndefinedRateError


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise InvalidInputError("confusion counts must be nonnegative")
        if self.tp + self.fp + self.tn + self.fn < 1:
            raise InvalidInputError("confusion counts must total at least 1")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class MetricsReport:
    """All derived rates as fractions; likelihood ratios unbounded above."""

    sensitivity: float
    specificity: float
    false_positive_rate: float
    false_negative_rate: float
    youden: float
    precision: float
    positive_likelihood: float
    negative_likelihood: float
    f_measure: float
    accuracy: float

    def as_dict(self) -> dict[str, float]:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "false_positive_rate": self.false_positive_rate,
            "false_negative_rate": self.false_negative_rate,
            "youden": self.youden,
            "precision": self.precision,
            "positive_likelihood": self.positive_likelihood,
            "negative_likelihood": self.negative_likelihood,
            "f_measure": self.f_measure,
            "accuracy": self.accuracy,
        }


class Composites(NamedTuple):
    youden: float
    positive_likelihood: float
    negative_likelihood: float
    f_measure: float


def metrics_from_counts(c: ConfusionCounts) -> MetricsReport:
    """Full report from raw counts.

    Sensitivity and specificity require both classes to be present.  With
    no positive predictions (tp + fp = 0) precision is reported as 0.0;
    the F-measure then collapses to 0 as well, which keeps it inside its
    min/max(precision, sensitivity) envelope.
    """
    if c.tp + c.fn == 0:
        raise UndefinedRateError("no positive ground truth (tp + fn = 0); sensitivity undefined")
    if c.tn + c.fp == 0:
        raise UndefinedRateError("no negative ground truth (tn + fp = 0); specificity undefined")
    sens = c.tp / (c.tp + c.fn)
    spec = c.tn / (c.tn + c.fp)
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    accuracy = (c.tp + c.tn) / c.total

    if spec == 1.0:
        plr = math.inf
    else:
        plr = sens / (1.0 - spec)
    if spec == 0.0:
        raise UndefinedRateError("specificity is 0; negative likelihood undefined")
    nlr = (1.0 - sens) / spec
    f = 2.0 * precision * sens / (precision + sens) if precision + sens else 0.0

    return MetricsReport(
        sensitivity=sens,
        specificity=spec,
        false_positive_rate=1.0 - spec,
        false_negative_rate=1.0 - sens,
        youden=sens + spec - 1.0,
        precision=precision,
        positive_likelihood=plr,
        negative_likelihood=nlr,
        f_measure=f,
        accuracy=accuracy,
    )


def composites_from_rates(sensitivity: float, specificity: float, precision: float) -> Composites:
    """Derived columns from percentage rates.

    Returns Youden's index (dimensionless), the likelihood ratios, and the
    F-measure in percent.
    """
    for name, value in (("sensitivity", sensitivity), ("specificity", specificity), ("precision", precision)):
        if not (0.0 <= value <= 100.0):
            raise InvalidInputError(f"{name} must be a percentage in [0, 100], got {value}")
    youden = (sensitivity + specificity) / 100.0 - 1.0
    if specificity == 100.0:
        plr = math.inf
    else:
        plr = sensitivity / (100.0 - specificity)
    if specificity == 0.0:
        raise UndefinedRateError("specificity is 0; negative likelihood undefined")
    nlr = (100.0 - sensitivity) / specificity
    f = (
        2.0 * precision * sensitivity / (precision + sensitivity)
        if precision + sensitivity
        else 0.0
    )
    return Composites(youden=youden, positive_likelihood=plr, negative_likelihood=nlr, f_measure=f)
