"""Early-stopping, budgeted, and full evaluation of weighted score sums.

A model is an ordered list of weighted terms. Each term evaluates either one
raw coordinate of the input (coordinate models) or a kernel value against a
stored support vector (kernel models), corrected by a per-term mean mu:

    value_i(x) = w_i * (raw_i(x) - mu_i),    S_i = value_1 + ... + value_i

Attentive prediction walks the terms in order and stops at the first partial
sum strictly beyond the rule's stop threshold; budgeted prediction always
evaluates a fixed count. All evaluation paths share one accumulation scheme
(sequential cumulative sum over term values), so reduced forms agree with the
full predictor bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from .core import Direction, StoppingRule
from .errors import ModelFormatError, ParameterError

__all__ = [
    "KernelSpec",
    "WeightedModel",
    "Prediction",
    "coordinate_model",
    "kernel_model",
    "score_term",
    "attentive_predict",
    "two_sided_predict",
    "budgeted_predict",
    "full_predict",
    "permute_terms",
    "term_matrix",
    "prefix_score_matrix",
    "attentive_from_prefix",
    "budgeted_from_prefix",
    "full_from_prefix",
    "save_model",
    "load_model",
]

# Terms evaluated per lazy chunk in the per-example predictors. Large enough
# to amortize numpy dispatch, small enough that an early stop saves real work
# on kernel models.
_CHUNK = 64

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class KernelSpec:
    """Kernel kind and parameters for kernel models."""

    kind: str  # "linear" | "rbf"
    sigma: float | None = None  # rbf width, feature units

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ParameterError(f"unsupported kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.sigma is None or not (self.sigma > 0.0) or math.isinf(self.sigma):
                raise ParameterError(f"rbf kernel requires sigma > 0, got {self.sigma!r}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def rbf(cls, sigma: float) -> "KernelSpec":
        return cls("rbf", sigma)


@dataclass(frozen=True, eq=False)
class WeightedModel:
    """Ordered weighted terms over coordinates or support vectors.

    Term order is the evaluation order; reordering is only ever done through
    permute_terms. mu defaults to zeros, which leaves scores uncorrected;
    attentive stopping on uncorrected (drifting) scores is permitted but voids
    the delta calibration of the stopping rule.
    """

    weights: np.ndarray  # (n,)
    mu: np.ndarray  # (n,)
    theta: float  # prediction threshold bundled with the trained model
    dim: int  # expected feature-vector length
    indices: np.ndarray | None = None  # (n,) coordinate per term
    support_vectors: np.ndarray | None = None  # (n, dim)
    kernel: KernelSpec | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.asarray(self.mu, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mu", m)
        if w.ndim != 1 or w.size < 1:
            raise ParameterError("weights must be a nonempty 1-d array")
        if m.shape != w.shape:
            raise ParameterError(f"mu shape {m.shape} does not match weights shape {w.shape}")
        if not math.isfinite(self.theta):
            raise ParameterError(f"theta must be finite, got {self.theta!r}")
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        has_coords = self.indices is not None
        has_kernel = self.support_vectors is not None or self.kernel is not None
        if has_coords == has_kernel:
            raise ParameterError("model must have either coordinate indices or support vectors + kernel")
        if has_coords:
            idx = np.asarray(self.indices, dtype=np.intp)
            object.__setattr__(self, "indices", idx)
            if idx.shape != w.shape:
                raise ParameterError("indices must align with weights")
            if idx.size and (idx.min() < 0 or idx.max() >= self.dim):
                raise ParameterError("coordinate indices must lie in [0, dim)")
        else:
            if self.support_vectors is None or self.kernel is None:
                raise ParameterError("kernel models need both support vectors and a kernel spec")
            sv = np.asarray(self.support_vectors, dtype=np.float64)
            object.__setattr__(self, "support_vectors", sv)
            if sv.shape != (w.size, self.dim):
                raise ParameterError(
                    f"support vectors must have shape (n, dim) = ({w.size}, {self.dim}), got {sv.shape}"
                )

    @property
    def n(self) -> int:
        return int(self.weights.size)

    @property
    def is_kernel(self) -> bool:
        return self.kernel is not None

    def with_mu(self, mu: np.ndarray) -> "WeightedModel":
        return replace(self, mu=np.asarray(mu, dtype=np.float64))

    def with_theta(self, theta: float) -> "WeightedModel":
        return replace(self, theta=float(theta))


def coordinate_model(
    weights,
    *,
    mu=None,
    theta: float = 0.0,
    indices=None,
    dim: int | None = None,
) -> WeightedModel:
    """Model whose term i reads raw coordinate indices[i] (default i)."""
    w = np.asarray(weights, dtype=np.float64)
    if indices is None:
        indices = np.arange(w.size)
    if dim is None:
        dim = int(np.max(indices)) + 1 if w.size else 1
    if mu is None:
        mu = np.zeros_like(w)
    return WeightedModel(weights=w, mu=mu, theta=theta, dim=int(dim), indices=indices)


def kernel_model(
    weights,
    support_vectors,
    kernel: KernelSpec,
    *,
    mu=None,
    theta: float = 0.0,
) -> WeightedModel:
    """Model whose term i evaluates kernel(support_vectors[i], x)."""
    w = np.asarray(weights, dtype=np.float64)
    sv = np.asarray(support_vectors, dtype=np.float64)
    if sv.ndim != 2:
        raise ParameterError("support vectors must be a 2-d array")
    if mu is None:
        mu = np.zeros_like(w)
    return WeightedModel(
        weights=w, mu=mu, theta=theta, dim=int(sv.shape[1]), support_vectors=sv, kernel=kernel
    )


@dataclass(frozen=True)
class Prediction:
    """Outcome of one predict call.

    stopped_early implies terms_evaluated < n and reported_score equal to the
    rule's tau (early-stopped predictions carry no magnitude).
    """

    label: int  # +1 or -1
    reported_score: float
    terms_evaluated: int
    stopped_early: bool


def _check_x(model: WeightedModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.dim:
        raise ParameterError(f"feature vector must have shape ({model.dim},), got {x.shape}")
    return x


def _raw_chunk(model: WeightedModel, x: np.ndarray, a: int, b: int) -> np.ndarray:
    """Raw evaluator values for terms [a, b) on one example."""
    if model.indices is not None:
        return x[model.indices[a:b]]
    sv = model.support_vectors[a:b]
    if model.kernel.kind == "linear":
        return sv @ x
    sq = cdist(sv, x[None, :], "sqeuclidean")[:, 0]
    return np.exp(-sq / (2.0 * model.kernel.sigma**2))


def _term_chunk(model: WeightedModel, x: np.ndarray, a: int, b: int) -> np.ndarray:
    return model.weights[a:b] * (_raw_chunk(model, x, a, b) - model.mu[a:b])


def score_term(model: WeightedModel, i: int, x) -> float:
    """Corrected weighted value of term i (0-based): w_i * (raw_i(x) - mu_i)."""
    if not 0 <= i < model.n:
        raise ParameterError(f"term index {i} outside [0, {model.n})")
    x = _check_x(model, x)
    return float(_term_chunk(model, x, i, i + 1)[0])


def _label_at(score: float, theta: float) -> int:
    # scores below theta are the negative class; ties go positive
    return 1 if score >= theta else -1


def attentive_predict(
    model: WeightedModel,
    x,
    rule: StoppingRule,
    check_stride: int = 1,
) -> Prediction:
    """Evaluate terms in order, stopping at the first strict boundary crossing.

    REJECT_BELOW stops at the first checked i < n with S_i < tau and predicts
    -1; REJECT_ABOVE stops on S_i > tau and predicts +1. Boundary-touching
    partial sums continue. With check_stride = c the crossing test runs only
    at term counts divisible by c, which can only delay stopping. A crossing
    first seen at the final term is not an early stop: all terms were already
    evaluated, so the full score and sign label are reported.
    """
    x = _check_x(model, x)
    if check_stride < 1:
        raise ParameterError(f"check_stride must be >= 1, got {check_stride}")
    n = model.n
    below = rule.direction is Direction.REJECT_BELOW
    values = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        b = min(filled + _CHUNK, n)
        values[filled:b] = _term_chunk(model, x, filled, b)
        if not rule.never_stops:
            # prefix over everything so far keeps sequential summation order
            prefix = np.cumsum(values[:b])
            seg = prefix[filled:b]
            crossed = seg < rule.tau if below else seg > rule.tau
            # 1-based term counts for this segment; only i < n can stop early
            counts = np.arange(filled + 1, b + 1)
            crossed &= (counts % check_stride == 0) & (counts < n)
            hit = np.nonzero(crossed)[0]
            if hit.size:
                i = int(counts[hit[0]])
                return Prediction(
                    label=-1 if below else 1,
                    reported_score=rule.tau,
                    terms_evaluated=i,
                    stopped_early=True,
                )
        filled = b
    score = float(np.cumsum(values)[-1])
    return Prediction(
        label=_label_at(score, rule.theta),
        reported_score=score,
        terms_evaluated=n,
        stopped_early=False,
    )


def two_sided_predict(
    model: WeightedModel,
    x,
    below: StoppingRule,
    above: StoppingRule,
) -> Prediction:
    """Stop on whichever of two opposite-sided rules crosses first.

    Both rules must share theta. The combined stop-error rate is only
    union-bounded by the two rules' individual deltas.
    """
    if below.direction is not Direction.REJECT_BELOW or above.direction is not Direction.REJECT_ABOVE:
        raise ParameterError("two_sided_predict needs one REJECT_BELOW and one REJECT_ABOVE rule")
    if below.theta != above.theta:
        raise ParameterError("two-sided rules must share theta")
    x = _check_x(model, x)
    n = model.n
    values = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        b = min(filled + _CHUNK, n)
        values[filled:b] = _term_chunk(model, x, filled, b)
        prefix = np.cumsum(values[:b])
        seg = prefix[filled:b]
        counts = np.arange(filled + 1, b + 1)
        live = counts < n
        low = (seg < below.tau) & live
        high = (seg > above.tau) & live
        hit = np.nonzero(low | high)[0]
        if hit.size:
            k = hit[0]
            stopped_low = bool(low[k])
            return Prediction(
                label=-1 if stopped_low else 1,
                reported_score=below.tau if stopped_low else above.tau,
                terms_evaluated=int(counts[k]),
                stopped_early=True,
            )
        filled = b
    score = float(np.cumsum(values)[-1])
    return Prediction(_label_at(score, below.theta), score, n, False)


def budgeted_predict(model: WeightedModel, x, b: int, theta: float) -> Prediction:
    """Evaluate exactly the first b terms and label sign(S_b - theta)."""
    x = _check_x(model, x)
    n = model.n
    if not 1 <= b <= n:
        raise ParameterError(f"budget must be in [1, {n}], got {b}")
    values = np.empty(b, dtype=np.float64)
    filled = 0
    while filled < b:
        hi = min(filled + _CHUNK, b)
        values[filled:hi] = _term_chunk(model, x, filled, hi)
        filled = hi
    score = float(np.cumsum(values)[-1])
    return Prediction(
        label=_label_at(score, theta),
        reported_score=score,
        terms_evaluated=b,
        stopped_early=b < n,
    )


def full_predict(model: WeightedModel, x, theta: float | None = None) -> Prediction:
    """Evaluate every term; alias for budgeted_predict with b = n."""
    if theta is None:
        theta = model.theta
    return budgeted_predict(model, x, model.n, theta)


def permute_terms(model: WeightedModel, seed: int) -> WeightedModel:
    """Reorder terms (and their mu entries) by a seeded uniform permutation."""
    perm = np.random.default_rng(seed).permutation(model.n)
    kwargs = dict(weights=model.weights[perm], mu=model.mu[perm])
    if model.indices is not None:
        kwargs["indices"] = model.indices[perm]
    else:
        kwargs["support_vectors"] = model.support_vectors[perm]
    return replace(model, **kwargs)


# -- batch evaluation -------------------------------------------------------
#
# The sweep harness scores whole test sets at once: term_matrix builds the
# (examples, terms) corrected value matrix, prefix_score_matrix its running
# sums, and the *_from_prefix scanners turn one prefix matrix into Prediction
# lists for any number of rules without re-evaluating terms. Rows are
# independent, so these are safe to shard across workers.


def _check_X(model: WeightedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ParameterError(f"feature matrix must have shape (m, {model.dim}), got {X.shape}")
    return X


def term_matrix(model: WeightedModel, X) -> np.ndarray:
    """Corrected weighted term values for every example: shape (m, n)."""
    X = _check_X(model, X)
    if model.indices is not None:
        raw = X[:, model.indices]
    elif model.kernel.kind == "linear":
        raw = X @ model.support_vectors.T
    else:
        sq = cdist(X, model.support_vectors, "sqeuclidean")
        raw = np.exp(-sq / (2.0 * model.kernel.sigma**2))
    return model.weights * (raw - model.mu)


def prefix_score_matrix(model: WeightedModel, X) -> np.ndarray:
    """Running partial scores S_1..S_n per example: shape (m, n)."""
    return np.cumsum(term_matrix(model, X), axis=1)


def attentive_from_prefix(
    prefix: np.ndarray,
    rule: StoppingRule,
    check_stride: int = 1,
) -> list[Prediction]:
    """Attentive predictions for every row of a prefix-score matrix."""
    if check_stride < 1:
        raise ParameterError(f"check_stride must be >= 1, got {check_stride}")
    m, n = prefix.shape
    below = rule.direction is Direction.REJECT_BELOW
    full_scores = prefix[:, -1]
    if rule.never_stops or n == 1:  # a single term can never stop early
        stopped = np.zeros(m, dtype=bool)
        first = np.ones(m, dtype=np.int64)
    else:
        crossed = prefix[:, : n - 1] < rule.tau if below else prefix[:, : n - 1] > rule.tau
        if check_stride > 1:
            counts = np.arange(1, n)
            crossed = crossed & (counts % check_stride == 0)
        stopped = crossed.any(axis=1)
        first = crossed.argmax(axis=1) + 1  # 1-based term count, valid where stopped
    out = []
    stop_label = -1 if below else 1
    for j in range(m):
        if stopped[j]:
            out.append(Prediction(stop_label, rule.tau, int(first[j]), True))
        else:
            s = float(full_scores[j])
            out.append(Prediction(_label_at(s, rule.theta), s, n, False))
    return out


def budgeted_from_prefix(prefix: np.ndarray, b: int, theta: float) -> list[Prediction]:
    """Budgeted predictions at budget b for every row of a prefix matrix."""
    m, n = prefix.shape
    if not 1 <= b <= n:
        raise ParameterError(f"budget must be in [1, {n}], got {b}")
    scores = prefix[:, b - 1]
    return [
        Prediction(_label_at(float(s), theta), float(s), b, b < n)
        for s in scores
    ]


def full_from_prefix(prefix: np.ndarray, theta: float) -> list[Prediction]:
    return budgeted_from_prefix(prefix, prefix.shape[1], theta)


# -- serialization ----------------------------------------------------------
#
# Models travel as .npz containers. Arrays are stored as float64 without any
# textual formatting, so a save/load round trip reproduces scores bit for
# bit. Optional verify_inputs/verify_scores arrays let an exporter bundle its
# own decision values for post-load verification (see trainer.import_kernel_model).


def save_model(
    model: WeightedModel,
    path,
    verify_inputs: np.ndarray | None = None,
    verify_scores: np.ndarray | None = None,
) -> None:
    payload = {
        "format_version": np.int64(MODEL_FORMAT_VERSION),
        "kind": np.str_("kernel" if model.is_kernel else "coordinate"),
        "weights": model.weights,
        "mu": model.mu,
        "theta": np.float64(model.theta),
        "dim": np.int64(model.dim),
    }
    if model.is_kernel:
        payload["support_vectors"] = model.support_vectors
        payload["kernel_kind"] = np.str_(model.kernel.kind)
        payload["sigma"] = np.float64(model.kernel.sigma if model.kernel.sigma is not None else -1.0)
    else:
        payload["indices"] = model.indices.astype(np.int64)
    if verify_inputs is not None or verify_scores is not None:
        if verify_inputs is None or verify_scores is None:
            raise ParameterError("verification inputs and scores must be provided together")
        vx = np.asarray(verify_inputs, dtype=np.float64)
        vs = np.asarray(verify_scores, dtype=np.float64)
        if vx.ndim != 2 or vx.shape[0] != vs.shape[0]:
            raise ParameterError("verification inputs and scores must align row for row")
        payload["verify_inputs"] = vx
        payload["verify_scores"] = vs
    np.savez(path, **payload)


def load_model(path) -> WeightedModel:
    """Load a model container; raises ModelFormatError on anything malformed."""
    try:
        with np.load(path, allow_pickle=False) as z:
            data = {k: z[k] for k in z.files}
    except (OSError, ValueError) as exc:
        raise ModelFormatError(f"cannot read model container {path!r}: {exc}") from exc
    for key in ("format_version", "kind", "weights", "mu", "theta", "dim"):
        if key not in data:
            raise ModelFormatError(f"model container missing field {key!r}")
    version = int(data["format_version"])
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    kind = str(data["kind"])
    try:
        if kind == "coordinate":
            if "indices" not in data:
                raise ModelFormatError("coordinate model container missing indices")
            return WeightedModel(
                weights=data["weights"],
                mu=data["mu"],
                theta=float(data["theta"]),
                dim=int(data["dim"]),
                indices=data["indices"],
            )
        if kind == "kernel":
            for key in ("support_vectors", "kernel_kind", "sigma"):
                if key not in data:
                    raise ModelFormatError(f"kernel model container missing field {key!r}")
            kernel_kind = str(data["kernel_kind"])
            sigma = float(data["sigma"])
            spec = KernelSpec(kernel_kind, sigma if kernel_kind == "rbf" else None)
            return WeightedModel(
                weights=data["weights"],
                mu=data["mu"],
                theta=float(data["theta"]),
                dim=int(data["dim"]),
                support_vectors=data["support_vectors"],
                kernel=spec,
            )
    except ParameterError as exc:
        raise ModelFormatError(f"invalid model container: {exc}") from exc
    raise ModelFormatError(f"unknown model kind {kind!r}")


def load_verification(path) -> tuple[np.ndarray, np.ndarray] | None:
    """Return (inputs, scores) bundled in a container, or None if absent."""
    try:
        with np.load(path, allow_pickle=False) as z:
            if "verify_inputs" not in z.files:
                return None
            return z["verify_inputs"], z["verify_scores"]
    except (OSError, ValueError, KeyError) as exc:
        raise ModelFormatError(f"cannot read verification payload from {path!r}: {exc}") from exc
