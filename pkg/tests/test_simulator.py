import math

import numpy as np
import pytest
from scipy.stats import norm

from stst import (
    WalkSpec,
    empirical_bridge_crossing,
    empirical_stop_error,
    empirical_stopping_time,
    simulate_walk,
)
from stst.errors import InsufficientAcceptanceError, ParameterError
from stst.simulator import (
    TheoryRow,
    empirical_bridge_crossing_grid,
    empirical_stop_error_grid,
    write_theory_rows,
)


class TestSimulateWalk:
    def test_deterministic(self):
        spec = WalkSpec(n=20, step="gaussian", scale=0.5, drift=0.1, seed=8)
        assert np.array_equal(simulate_walk(spec), simulate_walk(spec))

    def test_rademacher_single_step_support(self):
        values = {simulate_walk(WalkSpec(n=1, step="rademacher", scale=1.0, seed=s))[0] for s in range(40)}
        assert values == {-1.0, 1.0}

    def test_moments_within_three_se(self):
        # E[S_n] = n*drift, Var(S_n) = n*scale^2 for gaussian steps
        n, drift, scale, trials = 80, 0.2, 0.7, 2000
        endpoints = np.array(
            [simulate_walk(WalkSpec(n=n, step="gaussian", scale=scale, drift=drift, seed=s))[-1] for s in range(trials)]
        )
        se_mean = scale * math.sqrt(n) / math.sqrt(trials)
        assert abs(endpoints.mean() - n * drift) <= 3 * se_mean
        var = endpoints.var(ddof=1)
        se_var = n * scale**2 * math.sqrt(2.0 / (trials - 1))
        assert abs(var - n * scale**2) <= 3 * se_var

    def test_uniform_step_variance(self):
        spec = WalkSpec(n=10, step="uniform", scale=3.0)
        assert spec.step_variance == pytest.approx(3.0, rel=1e-12)

    def test_invalid_specs(self):
        with pytest.raises(ParameterError):
            WalkSpec(n=0)
        with pytest.raises(ParameterError):
            WalkSpec(n=1, step="levy")
        with pytest.raises(ParameterError):
            WalkSpec(n=1, scale=0.0)


def unit_variance_spec(n=2000, seed=0):
    return WalkSpec(n=n, step="gaussian", scale=math.sqrt(1.0 / n), seed=seed)


class TestBridgeCrossing:
    def test_exact_mode_matches_closed_form(self):
        est = empirical_bridge_crossing(unit_variance_spec(seed=2), tau=1.0, trials=30_000, mode="exact")
        target = math.exp(-2.0)
        assert est.accepted == 30_000
        assert abs(est.probability_hat - target) <= max(0.02, 4 * est.standard_error)

    def test_rejection_mode_matches_closed_form(self):
        est = empirical_bridge_crossing(
            unit_variance_spec(n=1000, seed=3), tau=1.0, trials=80_000, mode="rejection"
        )
        target = math.exp(-2.0)
        assert est.accepted < est.trials_used
        assert abs(est.probability_hat - target) <= max(0.02, 4 * est.standard_error)

    def test_modes_agree_within_three_combined_se(self):
        exact = empirical_bridge_crossing(unit_variance_spec(n=500, seed=4), tau=1.0, trials=30_000, mode="exact")
        reject = empirical_bridge_crossing(
            unit_variance_spec(n=500, seed=5), tau=1.0, trials=80_000, mode="rejection"
        )
        combined = math.hypot(exact.standard_error, reject.standard_error)
        assert abs(exact.probability_hat - reject.probability_hat) <= 3 * combined

    def test_unreachable_boundary_gives_zero(self):
        spec = WalkSpec(n=8, step="rademacher", scale=1.0, seed=6)
        est = empirical_bridge_crossing(spec, tau=9.0, theta=0.0, band=0.5, trials=5_000)
        assert est.probability_hat == 0.0
        assert est.standard_error == 0.0

    def test_scale_invariance_same_seeds(self):
        # doubling the step scale, tau, and band rescales paths exactly
        spec1 = WalkSpec(n=300, step="gaussian", scale=0.25, seed=7)
        spec2 = WalkSpec(n=300, step="gaussian", scale=0.5, seed=7)
        a = empirical_bridge_crossing(spec1, tau=0.8, band=0.3, trials=20_000)
        b = empirical_bridge_crossing(spec2, tau=1.6, band=0.6, trials=20_000)
        assert a.probability_hat == b.probability_hat
        assert a.accepted == b.accepted

    def test_nesting_in_tau(self):
        ests = empirical_bridge_crossing_grid(
            unit_variance_spec(n=400, seed=8), taus=[0.5, 1.0, 1.5, 2.0], trials=20_000, mode="exact"
        )
        probs = [e.probability_hat for e in ests]
        assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_insufficient_acceptance(self):
        # endpoints of a two-step unit rademacher walk are in {-2, 0, 2}
        spec = WalkSpec(n=2, step="rademacher", scale=1.0, seed=9)
        with pytest.raises(InsufficientAcceptanceError):
            empirical_bridge_crossing(spec, tau=1.5, theta=1.0, band=0.5, trials=2_000)

    def test_preconditions(self):
        spec = WalkSpec(n=10, step="gaussian", scale=1.0, drift=0.5, seed=0)
        with pytest.raises(ParameterError):
            empirical_bridge_crossing(spec, tau=1.0, trials=100)
        with pytest.raises(ParameterError):
            empirical_bridge_crossing(WalkSpec(n=10, seed=0), tau=-1.0, theta=0.0, trials=100)
        with pytest.raises(ParameterError):
            empirical_bridge_crossing(WalkSpec(n=10, step="rademacher", seed=0), tau=1.0, trials=100, mode="exact")

    def test_determinism(self):
        spec = unit_variance_spec(n=500, seed=10)
        a = empirical_bridge_crossing(spec, tau=1.0, trials=10_000, mode="exact")
        b = empirical_bridge_crossing(spec, tau=1.0, trials=10_000, mode="exact")
        assert a == b


class TestStopError:
    def test_delta_one_boundary_always_crossed(self):
        # tau = theta: a walk conditioned to end below zero has essentially
        # surely been at or above zero somewhere before the end
        est = empirical_stop_error(unit_variance_spec(n=1000, seed=11), delta=1.0, trials=20_000)
        assert est.probability_hat > 0.9

    def test_rate_against_sign_conditioned_closed_form(self):
        # independent oracle by the reflection principle:
        # P(max >= tau and S_n < 0) = P(S_n > 2 tau), so the conditioned rate
        # for a continuous bridge is 2 * (1 - Phi(2 tau)); the discrete walk
        # undershoots slightly. This sits near 0.31 * delta, far below the
        # nominal delta, which is exact only under endpoint pinning.
        delta = 0.1
        tau = math.sqrt(-0.5 * math.log(delta))
        oracle = 2.0 * norm.sf(2.0 * tau)
        assert oracle == pytest.approx(0.03188, abs=2e-4)
        est = empirical_stop_error(unit_variance_spec(seed=12), delta=delta, trials=40_000)
        assert abs(est.probability_hat - oracle) <= max(0.01, 4 * est.standard_error)
        assert est.probability_hat < delta

    def test_rate_nested_in_delta(self):
        ests = empirical_stop_error_grid(
            unit_variance_spec(n=500, seed=13), deltas=[0.05, 0.1, 0.2, 0.5], trials=20_000
        )
        rates = [e.probability_hat for e in ests]
        assert all(a <= b for a, b in zip(rates, rates[1:]))

    def test_acceptance_counts_sign_conditioning(self):
        est = empirical_stop_error(unit_variance_spec(n=200, seed=14), delta=0.1, trials=10_000)
        # about half the walks end below zero
        assert 0.4 * est.trials_used <= est.accepted <= 0.6 * est.trials_used

    def test_preconditions(self):
        with pytest.raises(ParameterError):
            empirical_stop_error(WalkSpec(n=10, drift=0.1, seed=0), delta=0.1, trials=100)
        with pytest.raises(ParameterError):
            empirical_stop_error(WalkSpec(n=10, seed=0), delta=1.5, trials=100)


class TestStoppingTime:
    def test_certain_crossing_at_first_step(self):
        # step lower bound (drift - scale = 2) exceeds tau, so T = 1 always
        spec = WalkSpec(n=4, step="rademacher", scale=1.0, drift=3.0, seed=15)
        summary = empirical_stopping_time(spec, delta=0.5, trials=500)
        assert summary.tau < 2.0
        assert summary.mean_time == 1.0
        assert summary.censored_fraction == 0.0

    def test_wald_identity_within_three_se(self):
        spec = WalkSpec(n=2000, step="rademacher", scale=0.1, drift=0.1, seed=16)
        summary = empirical_stopping_time(spec, delta=0.1, trials=5_000)
        assert abs(summary.wald_gap) <= 3 * summary.wald_gap_se
        # equivalent statement: E[S_T]/E[X] tracks E[T]
        assert summary.mean_endpoint / spec.drift == pytest.approx(
            summary.mean_time, abs=3 * summary.wald_gap_se / spec.drift
        )

    def test_censoring_reported(self):
        # drift far too weak to reach the boundary within n steps
        spec = WalkSpec(n=50, step="rademacher", scale=0.01, drift=0.0001, seed=17)
        summary = empirical_stopping_time(spec, delta=0.1, trials=2_000)
        assert summary.censored_fraction > 0.5
        assert summary.max_time == 50

    def test_determinism(self):
        spec = WalkSpec(n=500, step="uniform", scale=0.2, drift=0.05, seed=18)
        assert empirical_stopping_time(spec, 0.2, trials=2_000) == empirical_stopping_time(spec, 0.2, trials=2_000)

    def test_requires_positive_drift(self):
        with pytest.raises(ParameterError):
            empirical_stopping_time(WalkSpec(n=10, seed=0), delta=0.1, trials=100)


class TestTheoryRows:
    def test_csv_layout(self):
        import io

        row = TheoryRow(
            experiment="bridge_crossing",
            n=100,
            delta=None,
            tau=1.0,
            theta=0.0,
            trials=10,
            accepted=10,
            estimate=0.5,
            stderr=0.1,
            closed_form=0.45,
        )
        buf = io.StringIO()
        write_theory_rows([row], buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "experiment,n,delta,tau,theta,trials,accepted,estimate,stderr,closed_form"
        assert lines[1].startswith("bridge_crossing,100,,1.0,0.0,10,10,0.5,")
