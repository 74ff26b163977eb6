"""Single-cell math: bilevel weight assignment, voltage divider, threshold.

A cell compares one block of pixel voltages against a memorized block.  At
training time each input conductance is set to one of two levels depending
on whether the pixel sits above the frame mean ``x_a``; at test time the
weighted divider voltage

    x0 = sum(x_i * g_i) / (w_0 + sum(g_i))

is thresholded: output 1 (match) while x0 stays below ``t_a``, 0 (change)
once it rises past it.  Both the weight rule and the threshold also exist
in smooth logistic form, which is what the hard rules converge to at large
steepness.

Note on naming: the "high" label w_h is the level assigned to
above-average pixels; with the default values it is numerically the
*smaller* conductance (1e-7 S vs 1e-5 S), which is what makes a trained
cell blind to bright-to-dark changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, SingularThresholdError

HARD = "hard"
SOFT = "soft"


@dataclass
class CellParams:
    """Conductance levels, threshold, and logistic steepness for one cell.

    w_h : conductance assigned to above-average inputs, siemens
    w_l : conductance assigned to the rest, siemens
    w_0 : constant divider leg, siemens
    t_a : threshold on the divider voltage, volts
    b, b1 : logistic steepness of the soft weight rule / soft threshold
    mode : "hard" (default pipeline) or "soft"
    """

    w_h: float = 1e-7
    w_l: float = 1e-5
    w_0: float = 2e-5
    t_a: float = 0.5
    b: float = 100.0
    b1: float = 100.0
    mode: str = HARD

    def __post_init__(self):
        if not (self.w_h > 0 and self.w_l > 0 and self.w_0 > 0):
            raise InvalidInputError("conductances w_h, w_l, w_0 must be positive")
        # t_a = 0 is allowed so threshold sweeps can include the degenerate
        # flag-everything point; the soft threshold itself still needs t_a > 0.
        if not (math.isfinite(self.t_a) and self.t_a >= 0):
            raise InvalidInputError(f"threshold t_a must be nonnegative, got {self.t_a}")
        if not (self.b > 1 and self.b1 > 1):
            raise InvalidInputError("logistic steepness b and b1 must exceed 1")
        if self.mode not in (HARD, SOFT):
            raise InvalidInputError(f"mode must be 'hard' or 'soft', got {self.mode!r}")


@dataclass
class CellWeights:
    """Per-input conductances of one cell, siemens."""

    g: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        if self.g.ndim != 1 or self.g.size == 0:
            raise InvalidInputError("weights must be a nonempty 1-D conductance vector")


@dataclass
class CellOutput:
    x0: float
    xout: float


def _check_inputs(x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError("input vector must be nonempty and 1-D")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise InvalidInputError("input voltages must be finite and nonnegative")
    return x


def assign_weights_hard(x: Sequence[float], x_a: float, params: CellParams) -> CellWeights:
    """Bilevel rule: g_i = w_h where x_i > x_a (strict), else w_l."""
    x = _check_inputs(x)
    if not (math.isfinite(x_a) and x_a >= 0):
        raise InvalidInputError(f"x_a must be finite and nonnegative, got {x_a}")
    return CellWeights(np.where(x > x_a, params.w_h, params.w_l))


def assign_weights_soft(x: Sequence[float], x_a: float, params: CellParams) -> CellWeights:
    """Logistic relaxation of the bilevel rule.

    g_i = w_h / (1 + b * exp(-(x_i / x_a) * ln b)) + w_l

    The exponent rate is fixed by requiring the midpoint value
    w_h/2 + w_l at x_i = x_a.  Natural logarithm throughout.
    """
    x = _check_inputs(x)
    if x_a == 0:
        raise SingularThresholdError("soft weight assignment needs x_a > 0")
    if not (math.isfinite(x_a) and x_a > 0):
        raise InvalidInputError(f"x_a must be finite and positive, got {x_a}")
    c = -math.log(params.b) / x_a
    g = params.w_h / (1.0 + params.b * np.exp(c * x)) + params.w_l
    return CellWeights(g)


def divider_output(x: Sequence[float], w: CellWeights, params: CellParams) -> float:
    """Weighted divider node voltage sum(x_i*g_i) / (w_0 + sum(g_i)).

    Sums are exactly rounded (math.fsum), so the result does not depend on
    input ordering.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != w.g.size or x.size == 0:
        raise InvalidInputError(
            f"inputs and weights must be matched nonempty vectors, got {x.size} vs {w.g.size}"
        )
    num = math.fsum(x * w.g)
    den = params.w_0 + math.fsum(w.g)
    return num / den


def threshold_hard(x0: float, params: CellParams) -> float:
    """Inverter decision: 1 V while x0 < t_a (strict), else 0 V."""
    if not math.isfinite(x0):
        raise InvalidInputError(f"x0 must be finite, got {x0}")
    return 1.0 if x0 < params.t_a else 0.0


def threshold_soft(x0: float, params: CellParams) -> float:
    """Logistic threshold, strictly decreasing in x0 and equal to 1/2 at t_a.

    b1 * exp(-(x0/t_a) * ln b1) / (1 + b1 * exp(-(x0/t_a) * ln b1))
    """
    if params.t_a == 0:
        raise SingularThresholdError("soft threshold needs t_a > 0")
    e = params.b1 * math.exp(-(x0 / params.t_a) * math.log(params.b1))
    return e / (1.0 + e)


def threshold_soft_merged(x: Sequence[float], w: CellWeights, params: CellParams) -> float:
    """Soft output computed in one shot from inputs and weights.

    Algebraically identical to threshold_soft(divider_output(...)): the
    divider denominator and the ln(b1) factor fold into a single exponent
    rate beta = ln(b1) / (t_a * (w_0 + sum(g_i))) applied to the raw
    weighted sum.
    """
    x = np.asarray(x, dtype=float)
    if x.size != w.g.size or x.size == 0:
        raise InvalidInputError("inputs and weights must be matched nonempty vectors")
    beta = math.log(params.b1) / (params.t_a * (params.w_0 + math.fsum(w.g)))
    e = params.b1 * math.exp(-beta * math.fsum(x * w.g))
    return e / (1.0 + e)


def evaluate_cell(x: Sequence[float], w: CellWeights, params: CellParams) -> CellOutput:
    """Divider plus threshold, picking hard or soft per params.mode."""
    x0 = divider_output(x, w, params)
    if params.mode == SOFT:
        xout = threshold_soft(x0, params)
    else:
        xout = threshold_hard(x0, params)
    return CellOutput(x0=x0, xout=xout)
