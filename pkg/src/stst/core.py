"""Closed-form mathematics of the constant stopping boundary.

A score walk S_i (partial sums of weighted feature evaluations) is compared
against a constant stop threshold tau placed at distance
m = sqrt(0.5 * var(S_n) * ln(1/delta)) from the prediction threshold theta.
For a driftless walk pinned at theta, the probability of crossing tau before
the end is exp(-2*tau*(tau - theta)/var(S_n)); placing tau at distance m from
theta = 0 makes that probability exactly delta.

All formulas are stated for the canonical upward-crossing orientation
(theta < tau, tau > 0). Rules that reject below theta are reflected onto that
form before evaluation; the reflection tau' = 2*theta - tau is exact at
theta = 0 and a small-theta approximation otherwise.
"""

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DegenerateRuleError, ParameterError

__all__ = [
    "Direction",
    "ConfidenceParams",
    "StoppingRule",
    "crossing_magnitude",
    "make_stopping_rule",
    "crossing_probability",
    "canonical_upward",
    "rule_crossing_probability",
    "expected_stop_bound",
]


class Direction(Enum):
    """Which side of theta an early stop predicts."""

    REJECT_BELOW = "reject_below"  # stop when S_i < tau, tau < theta, predict -1
    REJECT_ABOVE = "reject_above"  # stop when S_i > tau, tau > theta, predict +1


@dataclass(frozen=True)
class ConfidenceParams:
    """Target stop-error rate and variance of the full score.

    delta: acceptable probability of stopping on the wrong side, in (0, 1].
    variance: var(S_n) in squared score units, > 0.
    """

    delta: float
    variance: float

    def __post_init__(self):
        if math.isnan(self.delta) or not 0.0 < self.delta <= 1.0:
            raise ParameterError(f"delta must be in (0, 1], got {self.delta!r}")
        if math.isnan(self.variance) or math.isinf(self.variance) or self.variance <= 0.0:
            raise ParameterError(f"variance must be positive and finite, got {self.variance!r}")


@dataclass(frozen=True)
class StoppingRule:
    """Constant decision boundary: predict against theta, stop early at tau.

    An infinite tau on the rejection side (-inf for REJECT_BELOW, +inf for
    REJECT_ABOVE) is the documented no-stop sentinel; any other non-finite
    value is rejected.
    """

    theta: float
    tau: float
    direction: Direction

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ParameterError(f"theta must be finite, got {self.theta!r}")
        if math.isnan(self.tau):
            raise ParameterError("tau must not be NaN")
        if self.direction is Direction.REJECT_BELOW:
            if not self.tau < self.theta:
                raise DegenerateRuleError(
                    f"REJECT_BELOW requires tau < theta, got tau={self.tau!r} theta={self.theta!r}"
                )
            if math.isinf(self.tau) and self.tau > 0:
                raise ParameterError("tau = +inf is not valid for REJECT_BELOW")
        else:
            if not self.tau > self.theta:
                raise DegenerateRuleError(
                    f"REJECT_ABOVE requires tau > theta, got tau={self.tau!r} theta={self.theta!r}"
                )
            if math.isinf(self.tau) and self.tau < 0:
                raise ParameterError("tau = -inf is not valid for REJECT_ABOVE")

    @property
    def never_stops(self) -> bool:
        return math.isinf(self.tau)


def crossing_magnitude(params: ConfidenceParams) -> float:
    """Distance from theta to the stop threshold for a target stop-error rate.

    m = sqrt(variance * ln(1/sqrt(delta))) = sqrt(0.5 * variance * ln(1/delta)).
    Zero iff delta = 1; strictly decreasing in delta, increasing in variance.
    """
    # -0.5*log(delta) avoids the cancellation in log(1/sqrt(delta)) near delta = 1
    return math.sqrt(params.variance * (-0.5 * math.log(params.delta)))


def make_stopping_rule(
    theta: float,
    params: ConfidenceParams,
    direction: Direction,
    exact: bool = False,
) -> StoppingRule:
    """Place the stop threshold at the delta-calibrated distance from theta.

    Default mode uses tau = theta -/+ crossing_magnitude, which preserves the
    delta guarantee exactly at theta = 0 and approximately for small theta.
    With exact=True, tau is instead the root of
    exp(-2*t*(t - theta)/variance) = delta on the upward form, which restores
    the guarantee for any theta.
    """
    if not math.isfinite(theta):
        raise ParameterError(f"theta must be finite, got {theta!r}")
    if params.delta == 1.0:
        raise DegenerateRuleError("delta = 1 puts tau on theta; no strict rule exists")
    if exact:
        # t^2 - theta*t - 0.5*variance*ln(1/delta) = 0, upward root
        half_log = -0.5 * math.log(params.delta)
        upward = 0.5 * (theta + math.sqrt(theta * theta + 4.0 * params.variance * half_log))
        offset = upward - theta
    else:
        offset = crossing_magnitude(params)
    if direction is Direction.REJECT_BELOW:
        return StoppingRule(theta=theta, tau=theta - offset, direction=direction)
    return StoppingRule(theta=theta, tau=theta + offset, direction=direction)


def crossing_probability(tau: float, theta: float, variance: float) -> float:
    """Probability that a driftless walk pinned at theta crosses tau.

    exp(-2*tau*(tau - theta)/variance), on the upward orientation: requires
    theta < tau and tau > 0 (endpoint below the boundary, boundary above the
    start). Callers holding a REJECT_BELOW rule reflect it first; see
    canonical_upward.
    """
    if math.isnan(variance) or variance <= 0.0:
        raise ParameterError(f"variance must be positive, got {variance!r}")
    if not tau > theta:
        raise ParameterError(
            f"requires theta < tau (endpoint already beyond the boundary): tau={tau!r} theta={theta!r}"
        )
    if not tau > 0.0:
        raise ParameterError(f"requires tau > 0 (boundary above the walk start), got {tau!r}")
    return math.exp(-2.0 * tau * (tau - theta) / variance)


def canonical_upward(rule: StoppingRule) -> tuple[float, float]:
    """Map a rule to the upward-crossing form, returning (tau, theta).

    REJECT_ABOVE rules are already upward. REJECT_BELOW rules are reflected
    about theta (tau' = 2*theta - tau); the driftless walk is symmetric about
    its pinned endpoint at theta = 0, where the reflection is exact.
    """
    if rule.direction is Direction.REJECT_ABOVE:
        return rule.tau, rule.theta
    return 2.0 * rule.theta - rule.tau, rule.theta


def rule_crossing_probability(rule: StoppingRule, variance: float) -> float:
    """crossing_probability evaluated on a rule's canonical upward form."""
    tau, theta = canonical_upward(rule)
    return crossing_probability(tau, theta, variance)


def expected_stop_bound(params: ConfidenceParams, step_bound: float, drift: float) -> float:
    """Upper estimate of the mean number of terms before an upward crossing.

    (crossing_magnitude + k) / drift, for steps bounded by k with positive
    per-step mean. Scales as sqrt(n) when variance grows linearly in n.
    """
    if math.isnan(drift) or drift <= 0.0:
        raise ParameterError(f"drift must be positive, got {drift!r}")
    if math.isnan(step_bound) or step_bound < 0.0:
        raise ParameterError(f"step bound must be nonnegative, got {step_bound!r}")
    return (crossing_magnitude(params) + step_bound) / drift
