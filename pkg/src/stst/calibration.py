"""Estimate the drift correction mu, the score variance, and stop-error rates.

Centering each term on its class-conditional mean makes the conditioned score
walk driftless, which is what the constant-boundary calibration assumes. The
class to center on is the one opposite the rejection direction: when early
stopping rejects negatives, mu comes from positives, so the surviving class
walks like a bridge.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import CalibrationError, DegenerateDataError, ParameterError, UndefinedRateError
from .predictor import Prediction, WeightedModel, term_matrix

__all__ = [
    "CalibrationReport",
    "estimate_mu",
    "estimate_variance",
    "calibrate",
    "measure_stop_error",
]


@dataclass(frozen=True, eq=False)
class CalibrationReport:
    """Per-term corrections plus the estimated full-score variance."""

    mu: np.ndarray
    variance_hat: float
    n_calibration: int
    class_used: int

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        if not self.variance_hat > 0.0:
            raise ParameterError(f"variance_hat must be positive, got {self.variance_hat!r}")
        if self.n_calibration < 2:
            raise ParameterError(f"n_calibration must be >= 2, got {self.n_calibration}")
        if self.class_used not in (1, -1):
            raise ParameterError(f"class_used must be +1 or -1, got {self.class_used!r}")


def _class_rows(dataset: Dataset, class_used: int, minimum: int) -> np.ndarray:
    if class_used not in (1, -1):
        raise ParameterError(f"class_used must be +1 or -1, got {class_used!r}")
    sel = np.nonzero(dataset.y == class_used)[0]
    if sel.size < minimum:
        raise CalibrationError(
            f"need at least {minimum} calibration example(s) of class {class_used:+d}, found {sel.size}"
        )
    return sel


def _raw_matrix(model: WeightedModel, X: np.ndarray) -> np.ndarray:
    # raw evaluator values: the unit-weight, zero-mu view of the term matrix
    probe = WeightedModel(
        weights=np.ones(model.n),
        mu=np.zeros(model.n),
        theta=model.theta,
        dim=model.dim,
        indices=model.indices,
        support_vectors=model.support_vectors,
        kernel=model.kernel,
    )
    return term_matrix(probe, X)


def estimate_mu(model: WeightedModel, calibration_set: Dataset, class_used: int) -> np.ndarray:
    """Per-term mean raw evaluator value over the chosen class."""
    sel = _class_rows(calibration_set, class_used, minimum=1)
    X = calibration_set.dense_rows(sel)
    return _raw_matrix(model, X).mean(axis=0)


def estimate_variance(
    model: WeightedModel,
    calibration_set: Dataset,
    class_used: int,
    mode: str = "score",
) -> float:
    """Unbiased estimate of var(S_n) over the chosen class.

    "score" (default): sample variance of the corrected full scores, which
    needs no independence assumption. "per_term": sum of w_i^2 * var(raw_i),
    valid when terms are independent (e.g. after a random permutation).
    """
    if mode not in ("score", "per_term"):
        raise ParameterError(f"unknown variance mode {mode!r}")
    sel = _class_rows(calibration_set, class_used, minimum=2)
    X = calibration_set.dense_rows(sel)
    if mode == "score":
        scores = term_matrix(model, X).sum(axis=1)
        var = float(np.var(scores, ddof=1))
    else:
        raw = _raw_matrix(model, X)
        var = float(np.sum(model.weights**2 * np.var(raw, axis=0, ddof=1)))
    if var == 0.0:
        raise DegenerateDataError(
            f"calibration scores of class {class_used:+d} have zero variance; stopping rule undefined"
        )
    return var


def calibrate(
    model: WeightedModel,
    calibration_set: Dataset,
    class_used: int,
    mode: str = "score",
) -> tuple[WeightedModel, CalibrationReport]:
    """Estimate mu and variance, returning the corrected model and a report."""
    mu = estimate_mu(model, calibration_set, class_used)
    corrected = model.with_mu(mu)
    variance = estimate_variance(corrected, calibration_set, class_used, mode=mode)
    n_cal = int((calibration_set.y == class_used).sum())
    report = CalibrationReport(mu=mu, variance_hat=variance, n_calibration=n_cal, class_used=class_used)
    return corrected, report


def measure_stop_error(
    attentive: Sequence[Prediction],
    full: Sequence[Prediction],
    condition: int,
) -> float:
    """Fraction of condition-class examples flipped by early stopping.

    Both lists must cover the same examples in the same order; the denominator
    is the set of examples the full pass labeled as `condition`.
    """
    if condition not in (1, -1):
        raise ParameterError(f"condition must be +1 or -1, got {condition!r}")
    if len(attentive) != len(full):
        raise ParameterError(
            f"prediction lists are misaligned: {len(attentive)} attentive vs {len(full)} full"
        )
    denom = 0
    flipped = 0
    for a, f in zip(attentive, full):
        if f.label != condition:
            continue
        denom += 1
        if a.stopped_early and a.label != f.label:
            flipped += 1
    if denom == 0:
        raise UndefinedRateError(f"no examples with full label {condition:+d}; stop-error rate undefined")
    return flipped / denom
