import math

import numpy as np
import pytest
from scipy.stats import poisson

from semimix.errors import (
    HypothesisViolatedError,
    ParameterDomainError,
    PathExplosionError,
)
from semimix.mittag_leffler import ml_pgf, ml_tail
from semimix.renewal import (
    ExponentialWaiting,
    MittagLefflerWaiting,
    ParetoWaiting,
    PmfEstimate,
    TailAssumptionParams,
    TaylorRemainderConstants,
    certify_power_tail,
    count_events,
    estimate_counting_pmf,
    parse_waiting_model,
    sample_waiting_time,
    simulate_counting,
    small_count_bounds,
    tail_probability,
    verify_tail_assumption,
)

from oracles import ks_critical, ks_statistic


class TestSamplers:
    def test_exponential_mean(self, rng):
        draws = ExponentialWaiting(1.0).sample(rng, 100_000)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - 1.0) <= 3 * se

    def test_pareto_mean_beta_two(self, rng):
        # mean is beta/(beta-1) = 2 for beta = 2, t_min = 1
        draws = ParetoWaiting(2.0, 1.0).sample(rng, 100_000)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - 2.0) <= 3 * se

    def test_pareto_heavy_tail_mass(self, rng):
        draws = ParetoWaiting(0.5, 1.0).sample(rng, 100_000)
        emp = (draws > 100.0).mean()
        se = math.sqrt(0.1 * 0.9 / draws.size)
        assert abs(emp - 0.1) <= 3 * se

    def test_pareto_ks(self, rng):
        model = ParetoWaiting(1.5, 2.0)
        draws = model.sample(rng, 10_000)
        stat = ks_statistic(draws, lambda t: 1.0 - model.tail(t))
        assert stat < ks_critical(draws.size, 0.01)

    def test_scalar_sampler(self, rng):
        x = sample_waiting_time(MittagLefflerWaiting(0.5), rng)
        assert isinstance(x, float) and x > 0

    def test_parse_labels_roundtrip(self):
        for spec in ("ml:0.5", "pareto:0.5,1", "exp:2"):
            assert parse_waiting_model(spec).label().startswith(spec.split(":")[0])
        with pytest.raises(ParameterDomainError):
            parse_waiting_model("weibull:1")


class TestTails:
    def test_at_zero(self):
        for model in (MittagLefflerWaiting(0.5), ParetoWaiting(1.0), ExponentialWaiting(2.0)):
            assert tail_probability(model, 0.0) == 1.0

    def test_pareto_exact(self):
        assert tail_probability(ParetoWaiting(0.5, 1.0), 4.0) == pytest.approx(0.5)
        assert tail_probability(ParetoWaiting(0.5, 1.0), 0.5) == 1.0

    def test_ml_delegates(self):
        assert tail_probability(MittagLefflerWaiting(0.5), 4.0) == pytest.approx(
            ml_tail(0.5, 4.0), rel=1e-14
        )


class TestTailAssumption:
    def test_pareto_holds_with_equality(self):
        model = ParetoWaiting(0.7, 1.0)
        params = TailAssumptionParams(c1=1.0, c2=1.0, t0=1.0, beta=0.7)
        report = verify_tail_assumption(model, params, np.geomspace(1.5, 1e4, 50))
        assert report.holds

    def test_exponential_fails_lower_bound(self):
        model = ExponentialWaiting(1.0)
        params = TailAssumptionParams(c1=0.5, c2=2.0, t0=1.0, beta=1.0)
        report = verify_tail_assumption(model, params, np.geomspace(2.0, 100.0, 20))
        assert not report.holds
        worst = report.violations[-1]
        assert worst["tail"] < worst["lower"]

    def test_ml_certified_envelope_holds(self):
        model = MittagLefflerWaiting(0.5)
        params = certify_power_tail(model)
        grid = np.geomspace(params.t0 * 1.01, 1e4, 60)
        report = verify_tail_assumption(model, params, grid)
        assert report.holds
        assert params.c1 <= params.c2

    def test_grid_below_t0_rejected(self):
        params = TailAssumptionParams(c1=1.0, c2=1.0, t0=1.0, beta=1.0)
        with pytest.raises(ParameterDomainError):
            verify_tail_assumption(ParetoWaiting(1.0), params, np.array([0.5]))


class TestCounting:
    def test_no_events_before_first_draw(self, rng):
        # Pareto waits are at least t_min, so a shorter horizon has no events
        path = simulate_counting(ParetoWaiting(1.0, 10.0), 5.0, rng)
        assert path.count == 0
        assert path.event_times.size == 0

    def test_poisson_control_band(self):
        counts = count_events(ExponentialWaiting(1.0), 1000.0, 2000, seed=5)
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - 1000.0) <= 3 * se

    def test_ml_mean_count(self):
        counts = count_events(MittagLefflerWaiting(0.5), 4.0, 30_000, seed=6)
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - 4.0 / math.sqrt(math.pi)) <= 3 * se

    def test_event_cap(self, rng):
        with pytest.raises(PathExplosionError):
            simulate_counting(ExponentialWaiting(1.0), 10_000.0, rng, cap=100)


class TestPmf:
    def test_poisson_entrywise(self):
        pmf = estimate_counting_pmf(ExponentialWaiting(1.0), 2.0, 20, 30_000, seed=8)
        ref = poisson.pmf(np.arange(21), 2.0)
        mask = ref > 1e-4
        z = np.abs(pmf.probabilities - ref)[mask] / np.maximum(pmf.std_errors[mask], 1e-12)
        assert z.max() <= 3.0

    def test_mass_accounting_exact(self):
        pmf = estimate_counting_pmf(MittagLefflerWaiting(0.7), 5.0, 4, 2000, seed=9)
        assert pmf.probabilities.sum() + pmf.mass_beyond == pytest.approx(1.0, abs=1e-12)
        assert pmf.prob_below(2) == pytest.approx(pmf.probabilities[:2].sum())
        assert pmf.prob_above(pmf.n_max) == pytest.approx(pmf.mass_beyond)

    def test_adaptive_support(self):
        pmf = estimate_counting_pmf(ExponentialWaiting(1.0), 2.0, None, 20_000, seed=10)
        assert pmf.mass_beyond < 1e-4 or pmf.n_max >= 15

    def test_thread_count_invariance(self):
        a = estimate_counting_pmf(MittagLefflerWaiting(0.5), 5.0, None, 12_000, seed=11, threads=1)
        b = estimate_counting_pmf(MittagLefflerWaiting(0.5), 5.0, None, 12_000, seed=11, threads=4)
        assert np.array_equal(a.probabilities, b.probabilities)
        assert a.mass_beyond == b.mass_beyond

    def test_reps_floor(self):
        with pytest.raises(ParameterDomainError):
            estimate_counting_pmf(ExponentialWaiting(1.0), 1.0, None, 500, seed=1)

    def test_pgf_cross_check(self):
        beta, t, lam = 0.7, 5.0, 0.5
        pmf = estimate_counting_pmf(MittagLefflerWaiting(beta), t, None, 50_000, seed=12)
        ns = np.arange(pmf.n_max + 1)
        est = float(np.sum(lam ** ns * pmf.probabilities))
        second = float(np.sum(lam ** (2 * ns) * pmf.probabilities))
        se = math.sqrt(max(second - est ** 2, 0.0) / pmf.replications)
        remainder = lam ** pmf.n_max * pmf.mass_beyond
        ref = ml_pgf(beta, lam, t).real
        assert abs(est - ref) <= 3 * se + remainder


class TestSmallCountBounds:
    PARAMS = TailAssumptionParams(c1=1.0, c2=1.0, t0=1.0, beta=1.0)

    def test_reference_values(self):
        res = small_count_bounds(self.PARAMS, 2, 10.0)
        assert res.lower == pytest.approx(0.16)
        assert res.upper == pytest.approx(0.48)
        assert res.c0 == pytest.approx(1.0)

    def test_hypothesis_violated(self):
        with pytest.raises(HypothesisViolatedError):
            small_count_bounds(self.PARAMS, 2, 3.9)

    def test_ordering_near_boundary(self):
        res = small_count_bounds(self.PARAMS, 3, 6.1)
        assert 0.0 <= res.lower <= res.upper

    def test_vanishing_at_large_t(self):
        near = small_count_bounds(self.PARAMS, 2, 100.0)
        far = small_count_bounds(self.PARAMS, 2, 10_000.0)
        assert far.upper < near.upper / 50
        assert far.lower < near.lower / 50

    def test_custom_constant_override(self):
        res = small_count_bounds(self.PARAMS, 2, 10.0, TaylorRemainderConstants(c0=2.0))
        assert res.c0 == 2.0
        assert res.lower == pytest.approx(0.2 - 2.0 * 4 / 100)

    def test_monte_carlo_sandwich_single_config(self):
        # Pareto(1, 1) at t = 10, K = 2: exact tail computed in-range
        counts = count_events(ParetoWaiting(1.0, 1.0), 10.0, 100_000, seed=13)
        est = (counts < 2).mean()
        se = math.sqrt(est * (1 - est) / counts.size)
        res = small_count_bounds(self.PARAMS, 2, 10.0)
        assert res.lower - 3 * se <= est <= res.upper + 3 * se


class TestPmfValidation:
    def test_inconsistent_mass_rejected(self):
        with pytest.raises(ParameterDomainError):
            PmfEstimate(
                t=1.0, model=ExponentialWaiting(1.0),
                probabilities=np.array([0.5, 0.2]), std_errors=np.zeros(2),
                replications=1000, mass_beyond=0.1, seed=0,
            )
