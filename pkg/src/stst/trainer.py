"""Stochastic-gradient linear SVM training and kernel-model import.

The linear trainer follows the standard stochastic subgradient recipe for the
regularized hinge objective: at step t a random example is drawn, the weight
vector decays by (1 - 1/t), and hinge violations add eta_t * y * x with
eta_t = 1/(lambda*t). No projection step is applied. The bias is trained as
an extra always-1 coordinate but folded into the model's prediction threshold
(theta = -bias) rather than kept as a term: a constant term has zero variance
and would break the random-walk picture that early stopping relies on.
"""

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ModelFormatError, ParameterError, TrainingError
from .predictor import WeightedModel, coordinate_model, full_predict, load_model, load_verification

__all__ = [
    "TrainConfig",
    "train_linear",
    "hinge_objective",
    "import_kernel_model",
]


@dataclass(frozen=True)
class TrainConfig:
    lambda_reg: float
    epochs: int
    seed: int
    use_bias: bool = True

    def __post_init__(self):
        if not self.lambda_reg > 0.0 or math.isinf(self.lambda_reg):
            raise ParameterError(f"lambda_reg must be positive and finite, got {self.lambda_reg!r}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")


def train_linear(train: Dataset, config: TrainConfig) -> WeightedModel:
    """Train a linear model by seeded stochastic subgradient descent.

    Deterministic given config.seed. The returned coordinate model has one
    term per feature, mu = 0 (calibrate separately), and theta = -bias.
    """
    if len(np.unique(train.y)) < 2:
        raise TrainingError("training set contains a single class")
    m, dim = train.n_examples, train.dim
    rng = np.random.default_rng(config.seed)
    lam = config.lambda_reg
    # w is kept as scale * v so the per-step decay is O(1)
    v = np.zeros(dim)
    v_bias = 0.0
    scale = 1.0
    t = 0
    for _ in range(config.epochs):
        for _ in range(m):
            t += 1
            j = int(rng.integers(m))
            x = train.row(j)
            y = float(train.y[j])
            margin = y * scale * (v @ x + (v_bias if config.use_bias else 0.0))
            eta = 1.0 / (lam * t)
            scale *= 1.0 - 1.0 / t
            if scale == 0.0:  # only at t = 1
                scale = 1.0
                v[:] = 0.0
                v_bias = 0.0
            if margin < 1.0:
                v += (eta * y / scale) * x
                if config.use_bias:
                    v_bias += eta * y / scale
    weights = scale * v
    bias = scale * v_bias if config.use_bias else 0.0
    return coordinate_model(weights, theta=-bias, dim=dim)


def hinge_objective(model: WeightedModel, dataset: Dataset, lambda_reg: float) -> float:
    """Regularized hinge objective of a trained linear model on a dataset."""
    if model.indices is None:
        raise ParameterError("hinge objective is defined for coordinate models")
    w = np.zeros(model.dim)
    w[model.indices] = model.weights
    bias = -model.theta
    margins = dataset.y * (dataset.dense() @ w + bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return float(0.5 * lambda_reg * (w @ w + bias * bias) + hinge)


def import_kernel_model(path, rel_tol: float = 1e-6) -> WeightedModel:
    """Load an externally trained kernel model and verify bundled scores.

    The container may carry a verification set (inputs plus the exporter's
    decision values, net of any intercept the exporter folded into theta).
    When present, the loaded model's full scores must match within rel_tol
    relative; disagreement rejects the import.
    """
    model = load_model(path)
    if not model.is_kernel:
        raise ModelFormatError("container holds a coordinate model, not a kernel model")
    payload = load_verification(path)
    if payload is not None:
        inputs, expected = payload
        got = np.array([full_predict(model, x).reported_score for x in inputs])
        denom = np.maximum(np.abs(expected), 1e-30)
        worst = float(np.max(np.abs(got - expected) / denom)) if got.size else 0.0
        if not np.allclose(got, expected, rtol=rel_tol, atol=1e-12):
            raise ModelFormatError(
                f"imported model disagrees with exporter scores (max relative error {worst:.3e})"
            )
    return model
