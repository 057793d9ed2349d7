"""Monte-Carlo checks of the boundary-crossing math on synthetic walks.

Three experiments back the three analytic claims:

  * empirical_bridge_crossing measures the probability that a walk pinned at
    its endpoint crosses a constant boundary, against exp(-2*tau*(tau-theta)/var).
  * empirical_stop_error measures the sign-conditioned crossing rate with the
    boundary placed by crossing_magnitude, against the nominal delta.
  * empirical_stopping_time measures the mean first-crossing time of a
    positive-drift walk, against the (magnitude + k)/drift upper estimate and
    Wald's identity.

Trials are processed in fixed-size batches, each driven by its own child of
one seed sequence; aggregation is pure counting, so results are identical for
any execution order or degree of parallelism over batches.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfidenceParams, crossing_magnitude
from .errors import InsufficientAcceptanceError, ParameterError

__all__ = [
    "WalkSpec",
    "CrossingEstimate",
    "StoppingTimeSummary",
    "simulate_walk",
    "empirical_bridge_crossing",
    "empirical_bridge_crossing_grid",
    "empirical_stop_error",
    "empirical_stop_error_grid",
    "empirical_stopping_time",
    "TheoryRow",
    "write_theory_rows",
    "THEORY_COLUMNS",
]

_BATCH = 4096

_STEP_KINDS = ("gaussian", "rademacher", "uniform")


@dataclass(frozen=True)
class WalkSpec:
    """A seeded random walk: n steps of drift plus scaled symmetric noise.

    step selects the noise law; scale is its parameter (standard deviation
    for gaussian, magnitude for rademacher, half-width for uniform). Every
    step adds drift on top of the noise.
    """

    n: int
    step: str = "gaussian"
    scale: float = 1.0
    drift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if self.step not in _STEP_KINDS:
            raise ParameterError(f"step must be one of {_STEP_KINDS}, got {self.step!r}")
        if not self.scale > 0.0 or math.isinf(self.scale):
            raise ParameterError(f"scale must be positive and finite, got {self.scale!r}")
        if not math.isfinite(self.drift):
            raise ParameterError(f"drift must be finite, got {self.drift!r}")

    @property
    def step_variance(self) -> float:
        if self.step == "uniform":
            return self.scale**2 / 3.0
        return self.scale**2

    @property
    def total_variance(self) -> float:
        return self.n * self.step_variance

    @property
    def step_bound(self) -> float:
        """Bound k on |step|; infinite for gaussian noise."""
        if self.step == "gaussian":
            return math.inf
        return abs(self.drift) + self.scale


def _draw_steps(rng: np.random.Generator, spec: WalkSpec, size) -> np.ndarray:
    if spec.step == "gaussian":
        noise = spec.scale * rng.standard_normal(size)
    elif spec.step == "rademacher":
        noise = spec.scale * (2.0 * rng.integers(0, 2, size=size) - 1.0)
    else:
        noise = rng.uniform(-spec.scale, spec.scale, size=size)
    return spec.drift + noise


def _batches(seed: int, trials: int):
    n_batches = (trials + _BATCH - 1) // _BATCH
    children = np.random.SeedSequence(seed).spawn(n_batches)
    done = 0
    for child in children:
        count = min(_BATCH, trials - done)
        done += count
        yield np.random.default_rng(child), count


def simulate_walk(spec: WalkSpec) -> np.ndarray:
    """One path of prefix sums S_1..S_n, deterministic given spec.seed."""
    rng = np.random.default_rng(spec.seed)
    return np.cumsum(_draw_steps(rng, spec, spec.n))


@dataclass(frozen=True)
class CrossingEstimate:
    """A conditioned crossing-rate estimate with its binomial standard error."""

    probability_hat: float
    trials_used: int
    accepted: int
    standard_error: float

    def __post_init__(self):
        if self.accepted > self.trials_used:
            raise ParameterError("accepted cannot exceed trials_used")


def _estimate(crossed: int, accepted: int, trials: int) -> CrossingEstimate:
    p = crossed / accepted
    se = math.sqrt(p * (1.0 - p) / accepted)
    return CrossingEstimate(probability_hat=p, trials_used=trials, accepted=accepted, standard_error=se)


def empirical_bridge_crossing_grid(
    spec: WalkSpec,
    taus,
    theta: float = 0.0,
    band: float | None = None,
    trials: int = 100_000,
    mode: str = "rejection",
) -> list[CrossingEstimate]:
    """Estimate P(crossing tau before the end | endpoint pinned near theta).

    One path ensemble is shared by every tau in the grid (crossing indicators
    nest, so the estimates are positively coupled but individually unbiased).

    Parameters
    ----------
    spec : WalkSpec
        Must be driftless; the pinned-endpoint claim is for driftless walks.
    taus : sequence of float
        Boundaries, each strictly above theta.
    band : float, optional
        Rejection half-width around theta for endpoint acceptance. Defaults
        to 0.1 * sqrt(total variance). Ignored in exact mode.
    mode : {"rejection", "exact"}
        "rejection" keeps walks whose endpoint lands within the band.
        "exact" (gaussian steps only) pins the endpoint by the bridge
        construction B_i = W_i - (i/n)(W_n - theta), so every trial counts.

    Crossing means max over i < n of S_i >= tau, matching a first crossing
    strictly before the endpoint.
    """
    taus = [float(t) for t in taus]
    if spec.drift != 0.0:
        raise ParameterError("bridge crossing requires a driftless walk spec")
    if any(t <= theta for t in taus):
        raise ParameterError(f"every tau must exceed theta={theta!r}")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if mode not in ("rejection", "exact"):
        raise ParameterError(f"unknown mode {mode!r}")
    if mode == "exact" and spec.step != "gaussian":
        raise ParameterError("exact bridge construction requires gaussian steps")
    if band is None:
        band = 0.1 * math.sqrt(spec.total_variance)
    if mode == "rejection" and not band > 0.0:
        raise ParameterError(f"band must be positive, got {band!r}")

    crossed = np.zeros(len(taus), dtype=np.int64)
    accepted = 0
    frac = None
    for rng, count in _batches(spec.seed, trials):
        steps = _draw_steps(rng, spec, (count, spec.n))
        paths = np.cumsum(steps, axis=1)
        if mode == "exact":
            if frac is None or frac.shape[0] != spec.n:
                frac = np.arange(1, spec.n + 1) / spec.n
            paths = paths - frac * (paths[:, -1:] - theta)
            kept = paths
            accepted += count
        else:
            keep = np.abs(paths[:, -1] - theta) <= band
            kept = paths[keep]
            accepted += int(keep.sum())
        if kept.shape[0] == 0:
            continue
        if spec.n == 1:
            continue  # no index strictly before the endpoint
        path_max = kept[:, :-1].max(axis=1)
        for k, tau in enumerate(taus):
            crossed[k] += int((path_max >= tau).sum())
    if accepted == 0:
        raise InsufficientAcceptanceError(
            f"no trials accepted out of {trials}; widen the band (={band!r}) or add trials"
        )
    return [_estimate(int(c), accepted, trials) for c in crossed]


def empirical_bridge_crossing(
    spec: WalkSpec,
    tau: float,
    theta: float = 0.0,
    band: float | None = None,
    trials: int = 100_000,
    mode: str = "rejection",
) -> CrossingEstimate:
    return empirical_bridge_crossing_grid(spec, [tau], theta, band, trials, mode)[0]


def empirical_stop_error_grid(
    spec: WalkSpec,
    deltas,
    theta: float = 0.0,
    trials: int = 100_000,
) -> list[CrossingEstimate]:
    """Measure P(crossing the delta-calibrated boundary | endpoint below theta).

    For each delta the boundary is theta + crossing_magnitude(delta, var(S_n))
    and acceptance is the bare sign condition S_n < theta (no band). One path
    ensemble is shared across the delta grid.
    """
    deltas = [float(d) for d in deltas]
    if spec.drift != 0.0:
        raise ParameterError("stop-error calibration requires a driftless walk spec")
    if any(not 0.0 < d <= 1.0 for d in deltas):
        raise ParameterError("every delta must lie in (0, 1]")
    taus = [
        theta + crossing_magnitude(ConfidenceParams(delta=d, variance=spec.total_variance))
        for d in deltas
    ]
    crossed = np.zeros(len(taus), dtype=np.int64)
    accepted = 0
    for rng, count in _batches(spec.seed, trials):
        steps = _draw_steps(rng, spec, (count, spec.n))
        paths = np.cumsum(steps, axis=1)
        keep = paths[:, -1] < theta
        kept = paths[keep]
        accepted += int(keep.sum())
        if kept.shape[0] == 0 or spec.n == 1:
            continue
        path_max = kept[:, :-1].max(axis=1)
        for k, tau in enumerate(taus):
            crossed[k] += int((path_max >= tau).sum())
    if accepted == 0:
        raise InsufficientAcceptanceError(f"no trials with endpoint below theta out of {trials}")
    return [_estimate(int(c), accepted, trials) for c in crossed]


def empirical_stop_error(
    spec: WalkSpec,
    delta: float,
    theta: float = 0.0,
    trials: int = 100_000,
) -> CrossingEstimate:
    return empirical_stop_error_grid(spec, [delta], theta, trials)[0]


@dataclass(frozen=True)
class StoppingTimeSummary:
    """First-crossing-time statistics of a positive-drift walk.

    Paths that never cross are censored at T = n and included in the mean;
    censored_fraction reports how often that happened. wald_gap is the mean
    of S_T - T*drift, which has expectation exactly zero for the capped
    stopping time, with wald_gap_se its standard error.
    """

    tau: float
    mean_time: float
    se_time: float
    median_time: float
    max_time: int
    censored_fraction: float
    mean_endpoint: float
    wald_gap: float
    wald_gap_se: float
    trials: int


def empirical_stopping_time(spec: WalkSpec, delta: float, trials: int = 10_000) -> StoppingTimeSummary:
    """Measure T = first i with S_i >= crossing_magnitude(delta, var(S_n)).

    Requires positive drift. Bounded step kinds (rademacher, uniform) match
    the bounded-increment assumption behind the (magnitude + k)/drift
    estimate; gaussian steps are accepted but carry no bound.
    """
    if not spec.drift > 0.0:
        raise ParameterError("stopping-time experiment requires positive drift")
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    if trials < 2:
        raise ParameterError("trials must be >= 2")
    tau = crossing_magnitude(ConfidenceParams(delta=delta, variance=spec.total_variance))
    times = np.empty(trials, dtype=np.int64)
    endpoints = np.empty(trials, dtype=np.float64)
    censored = 0
    done = 0
    for rng, count in _batches(spec.seed, trials):
        steps = _draw_steps(rng, spec, (count, spec.n))
        paths = np.cumsum(steps, axis=1)
        hit = paths >= tau
        any_hit = hit.any(axis=1)
        t = np.where(any_hit, hit.argmax(axis=1) + 1, spec.n)
        censored += int((~any_hit).sum())
        times[done : done + count] = t
        endpoints[done : done + count] = paths[np.arange(count), t - 1]
        done += count
    mean_t = float(times.mean())
    se_t = float(times.std(ddof=1) / math.sqrt(trials))
    residual = endpoints - times * spec.drift
    return StoppingTimeSummary(
        tau=tau,
        mean_time=mean_t,
        se_time=se_t,
        median_time=float(np.median(times)),
        max_time=int(times.max()),
        censored_fraction=censored / trials,
        mean_endpoint=float(endpoints.mean()),
        wald_gap=float(residual.mean()),
        wald_gap_se=float(residual.std(ddof=1) / math.sqrt(trials)),
        trials=trials,
    )


# -- CSV emission ------------------------------------------------------------

THEORY_COLUMNS = (
    "experiment",
    "n",
    "delta",
    "tau",
    "theta",
    "trials",
    "accepted",
    "estimate",
    "stderr",
    "closed_form",
)


@dataclass(frozen=True)
class TheoryRow:
    """One experiment result in the fixed CSV column order."""

    experiment: str
    n: int
    delta: float | None
    tau: float
    theta: float
    trials: int
    accepted: int
    estimate: float
    stderr: float
    closed_form: float

    def as_csv_fields(self) -> list[str]:
        return [
            self.experiment,
            str(self.n),
            "" if self.delta is None else repr(float(self.delta)),
            repr(float(self.tau)),
            repr(float(self.theta)),
            str(self.trials),
            str(self.accepted),
            repr(float(self.estimate)),
            repr(float(self.stderr)),
            repr(float(self.closed_form)),
        ]


def write_theory_rows(rows, stream) -> None:
    stream.write(",".join(THEORY_COLUMNS) + "\n")
    for row in rows:
        stream.write(",".join(row.as_csv_fields()) + "\n")
