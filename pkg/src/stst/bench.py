"""Benchmark harness: threshold sweeps, matched-budget comparison, PR curves,
and the theory verification suite.

A sweep scores the whole test set once (one prefix matrix), then replays the
attentive scan for each stop threshold on a grid between the lowest observed
partial score and theta. Each attentive pass is paired with a budgeted pass
whose budget is the attentive pass's mean evaluated-term count, rounded
half-to-even. Early-stopped predictions all report the stop threshold itself
as their score, so PR curves over attentive scores show a cliff at tau.

Per-example work inside a pass is vectorized and rows are independent; passes
are sequential because each budgeted pass depends on its attentive partner.
"""

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .calibration import measure_stop_error
from .core import ConfidenceParams, Direction, StoppingRule, expected_stop_bound
from .data import Dataset
from .errors import ParameterError, UndefinedRateError
from .predictor import (
    WeightedModel,
    attentive_from_prefix,
    budgeted_from_prefix,
    full_from_prefix,
    prefix_score_matrix,
)
from .simulator import (
    TheoryRow,
    WalkSpec,
    empirical_bridge_crossing_grid,
    empirical_stop_error_grid,
    empirical_stopping_time,
)

__all__ = [
    "SweepRecord",
    "run_sweep",
    "sweep_csv",
    "SWEEP_COLUMNS",
    "PRPoint",
    "precision_recall",
    "pr_csv",
    "TheoryConfig",
    "run_theory_suite",
    "theory_csv",
]


@dataclass(frozen=True)
class SweepRecord:
    """One benchmark row: a full, attentive, or budgeted pass over the test set.

    wall_time is informational only and never serialized; evaluated-term
    counts are the machine-independent cost metric.
    """

    mode: str  # "full" | "attentive" | "budgeted"
    tau: float | None
    budget: int | None
    theta: float
    tp: int
    fp: int
    tn: int
    fn: int
    mean_terms: float
    stop_error_rate: float
    wall_time: float


def _confusion(pred_labels: np.ndarray, truth: np.ndarray) -> tuple[int, int, int, int]:
    pos = truth == 1
    pred_pos = pred_labels == 1
    tp = int((pred_pos & pos).sum())
    fp = int((pred_pos & ~pos).sum())
    tn = int((~pred_pos & ~pos).sum())
    fn = int((~pred_pos & pos).sum())
    return tp, fp, tn, fn


def _labels(preds) -> np.ndarray:
    return np.array([p.label for p in preds], dtype=np.int64)


def _grid_values(prefix: np.ndarray, theta: float, grid) -> np.ndarray:
    low = float(prefix.min())
    if not low < theta:
        raise ParameterError(
            f"no partial score below theta={theta!r}; nothing to sweep (min partial {low!r})"
        )
    if grid == "exhaustive":
        per_example_min = prefix.min(axis=1)
        values = np.unique(per_example_min)
        values = values[values < theta]
        if values.size == 0:
            raise ParameterError("exhaustive grid is empty below theta")
        return values
    points = int(grid)
    if points < 1:
        raise ParameterError(f"grid must be >= 1 point, got {grid!r}")
    # theta itself is excluded: tau = theta is a degenerate rule
    return np.linspace(low, theta, num=points, endpoint=False)


def run_sweep(
    model: WeightedModel,
    test: Dataset,
    theta: float,
    grid=50,
    condition: int = 1,
) -> list[SweepRecord]:
    """Full pass, then an (attentive, budgeted) record pair per grid point.

    The sweep rejects below: each grid tau sits under theta and stops predict
    -1. Stop-error rates for both modes are measured against the single full
    pass, conditioned on full label == condition (default +1, the class
    opposite the rejection direction).
    """
    if not np.any(model.mu):
        warnings.warn("model mu is all zero; sweeping uncorrected scores voids the delta calibration")
    t0 = time.perf_counter()
    prefix = prefix_score_matrix(model, test.dense())
    n = prefix.shape[1]
    full_preds = full_from_prefix(prefix, theta)
    full_labels = _labels(full_preds)
    full_time = time.perf_counter() - t0

    tp, fp, tn, fn = _confusion(full_labels, test.y)
    records = [
        SweepRecord(
            mode="full",
            tau=None,
            budget=None,
            theta=theta,
            tp=tp,
            fp=fp,
            tn=tn,
            fn=fn,
            mean_terms=float(n),
            stop_error_rate=0.0,
            wall_time=full_time,
        )
    ]

    for tau in _grid_values(prefix, theta, grid):
        t0 = time.perf_counter()
        rule = StoppingRule(theta=theta, tau=float(tau), direction=Direction.REJECT_BELOW)
        att_preds = attentive_from_prefix(prefix, rule)
        att_labels = _labels(att_preds)
        mean_terms = float(np.mean([p.terms_evaluated for p in att_preds]))
        att_err = measure_stop_error(att_preds, full_preds, condition)
        att_time = time.perf_counter() - t0
        tp, fp, tn, fn = _confusion(att_labels, test.y)
        records.append(
            SweepRecord(
                mode="attentive",
                tau=float(tau),
                budget=None,
                theta=theta,
                tp=tp,
                fp=fp,
                tn=tn,
                fn=fn,
                mean_terms=mean_terms,
                stop_error_rate=att_err,
                wall_time=att_time,
            )
        )

        t0 = time.perf_counter()
        budget = min(max(round(mean_terms), 1), n)
        bud_preds = budgeted_from_prefix(prefix, budget, theta)
        bud_labels = _labels(bud_preds)
        bud_err = measure_stop_error(bud_preds, full_preds, condition) if budget < n else 0.0
        bud_time = time.perf_counter() - t0
        tp, fp, tn, fn = _confusion(bud_labels, test.y)
        records.append(
            SweepRecord(
                mode="budgeted",
                tau=None,
                budget=budget,
                theta=theta,
                tp=tp,
                fp=fp,
                tn=tn,
                fn=fn,
                mean_terms=float(budget),
                stop_error_rate=bud_err,
                wall_time=bud_time,
            )
        )
    return records


SWEEP_COLUMNS = (
    "mode",
    "tau",
    "budget",
    "theta",
    "tp",
    "fp",
    "tn",
    "fn",
    "mean_terms",
    "stop_error_rate",
)


def sweep_csv(records, stream) -> None:
    """Serialize sweep records; wall_time is deliberately omitted so output
    is byte-identical across runs with the same flags and seeds."""
    stream.write(",".join(SWEEP_COLUMNS) + "\n")
    for r in records:
        fields = [
            r.mode,
            "" if r.tau is None else repr(float(r.tau)),
            "" if r.budget is None else str(int(r.budget)),
            repr(float(r.theta)),
            str(r.tp),
            str(r.fp),
            str(r.tn),
            str(r.fn),
            repr(float(r.mean_terms)),
            repr(float(r.stop_error_rate)),
        ]
        stream.write(",".join(fields) + "\n")


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float


def precision_recall(scores, truth) -> list[PRPoint]:
    """PR curve points from per-example scores, descending threshold order.

    An example is predicted positive when its score >= threshold; thresholds
    run over the distinct observed scores.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.int64)
    if scores.shape != truth.shape or scores.ndim != 1:
        raise ParameterError("scores and truth labels must be aligned 1-d arrays")
    positives = int((truth == 1).sum())
    if positives == 0:
        raise UndefinedRateError("no positive examples in truth; recall undefined")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    tp_cum = np.cumsum(truth[order] == 1)
    # last occurrence of each distinct score = the point where threshold == s
    boundary = np.nonzero(np.diff(s) != 0)[0]
    cut = np.concatenate([boundary, [s.size - 1]])
    points = []
    for k in cut:
        tp = int(tp_cum[k])
        predicted = int(k) + 1
        points.append(
            PRPoint(threshold=float(s[k]), precision=tp / predicted, recall=tp / positives)
        )
    return points


def pr_csv(points, stream) -> None:
    stream.write("threshold,precision,recall\n")
    for p in points:
        stream.write(f"{float(p.threshold)!r},{float(p.precision)!r},{float(p.recall)!r}\n")


@dataclass(frozen=True)
class TheoryConfig:
    """Grids and trial counts for the three verification experiments.

    Defaults match the acceptance-scale runs: unit-total-variance gaussian
    walks of 2000 steps for the bridge and calibration checks, and
    drift-0.1 rademacher walks (scale 0.1, steps in {0, 0.2}) for the
    stopping-time scaling.
    """

    n: int = 2000
    bridge_taus: tuple = (0.5, 1.0, 1.5, 2.0)
    bridge_trials: int = 100_000
    bridge_mode: str = "exact"
    bridge_seed: int = 20_240_001
    stop_error_deltas: tuple = (0.05, 0.1, 0.2)
    stop_error_trials: int = 120_000
    stop_error_seed: int = 20_240_002
    stopping_ns: tuple = (100, 1_000, 10_000)
    stopping_delta: float = 0.1
    stopping_scale: float = 0.1
    stopping_drift: float = 0.1
    stopping_trials: int = 10_000
    stopping_seed: int = 20_240_003


def run_theory_suite(config: TheoryConfig = TheoryConfig()) -> list[tuple[TheoryRow, bool]]:
    """Run all three experiments; each row carries its acceptance verdict.

    Pass rules: bridge rows agree with the closed form within
    max(0.02, 4 standard errors); calibration rows land in [0.5, 1.5] times
    the nominal delta; stopping-time rows are censored on fewer than 1% of
    trials, Wald rows balance within 3 standard errors, and the aggregate
    log-log slope row lies in [0.4, 0.6].
    """
    results: list[tuple[TheoryRow, bool]] = []

    # 1. pinned-endpoint crossing probability vs closed form
    scale = math.sqrt(1.0 / config.n)  # unit total variance
    spec = WalkSpec(n=config.n, step="gaussian", scale=scale, seed=config.bridge_seed)
    estimates = empirical_bridge_crossing_grid(
        spec, config.bridge_taus, theta=0.0, trials=config.bridge_trials, mode=config.bridge_mode
    )
    for tau, est in zip(config.bridge_taus, estimates):
        closed = math.exp(-2.0 * tau * tau)
        ok = abs(est.probability_hat - closed) <= max(0.02, 4.0 * est.standard_error)
        results.append(
            (
                TheoryRow(
                    experiment="bridge_crossing",
                    n=config.n,
                    delta=None,
                    tau=float(tau),
                    theta=0.0,
                    trials=est.trials_used,
                    accepted=est.accepted,
                    estimate=est.probability_hat,
                    stderr=est.standard_error,
                    closed_form=closed,
                ),
                ok,
            )
        )

    # 2. sign-conditioned stop-error vs nominal delta
    spec = WalkSpec(n=config.n, step="gaussian", scale=scale, seed=config.stop_error_seed)
    estimates = empirical_stop_error_grid(
        spec, config.stop_error_deltas, theta=0.0, trials=config.stop_error_trials
    )
    for delta, est in zip(config.stop_error_deltas, estimates):
        tau = math.sqrt(-0.5 * math.log(delta))
        ok = 0.5 * delta <= est.probability_hat <= 1.5 * delta
        results.append(
            (
                TheoryRow(
                    experiment="stop_error",
                    n=config.n,
                    delta=float(delta),
                    tau=tau,
                    theta=0.0,
                    trials=est.trials_used,
                    accepted=est.accepted,
                    estimate=est.probability_hat,
                    stderr=est.standard_error,
                    closed_form=float(delta),
                ),
                ok,
            )
        )

    # 3. stopping-time scaling, Wald identity, and the sqrt(n) slope
    log_n = []
    log_t = []
    for i, n in enumerate(config.stopping_ns):
        spec = WalkSpec(
            n=n,
            step="rademacher",
            scale=config.stopping_scale,
            drift=config.stopping_drift,
            seed=config.stopping_seed + i,
        )
        summary = empirical_stopping_time(spec, config.stopping_delta, trials=config.stopping_trials)
        bound = expected_stop_bound(
            ConfidenceParams(delta=config.stopping_delta, variance=spec.total_variance),
            step_bound=spec.step_bound,
            drift=spec.drift,
        )
        censor_ok = summary.censored_fraction < 0.01
        results.append(
            (
                TheoryRow(
                    experiment="stopping_time",
                    n=n,
                    delta=config.stopping_delta,
                    tau=summary.tau,
                    theta=0.0,
                    trials=summary.trials,
                    accepted=summary.trials - round(summary.censored_fraction * summary.trials),
                    estimate=summary.mean_time,
                    stderr=summary.se_time,
                    closed_form=bound,
                ),
                censor_ok,
            )
        )
        wald_ok = abs(summary.wald_gap) <= 3.0 * summary.wald_gap_se
        results.append(
            (
                TheoryRow(
                    experiment="wald_identity",
                    n=n,
                    delta=config.stopping_delta,
                    tau=summary.tau,
                    theta=0.0,
                    trials=summary.trials,
                    accepted=summary.trials,
                    estimate=summary.wald_gap,
                    stderr=summary.wald_gap_se,
                    closed_form=0.0,
                ),
                wald_ok,
            )
        )
        log_n.append(math.log(n))
        log_t.append(math.log(summary.mean_time))
    slope = float(np.polyfit(log_n, log_t, 1)[0])
    results.append(
        (
            TheoryRow(
                experiment="stopping_time_slope",
                n=0,
                delta=config.stopping_delta,
                tau=0.0,
                theta=0.0,
                trials=config.stopping_trials * len(config.stopping_ns),
                accepted=config.stopping_trials * len(config.stopping_ns),
                estimate=slope,
                stderr=0.0,
                closed_form=0.5,
            ),
            0.4 <= slope <= 0.6,
        )
    )
    return results


def theory_csv(results, stream) -> None:
    """Theory-suite CSV: the simulator column set plus a passed flag."""
    from .simulator import THEORY_COLUMNS

    stream.write(",".join(THEORY_COLUMNS + ("passed",)) + "\n")
    for row, ok in results:
        stream.write(",".join(row.as_csv_fields() + [("true" if ok else "false")]) + "\n")
