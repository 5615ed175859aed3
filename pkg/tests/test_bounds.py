import math

import numpy as np
import pytest

from semimix.bounds import (
    BoundInputs,
    build_bound_inputs,
    expected_tv_mixing_bounds,
    heavy_tail_mixing_upper,
    mgf_split_bound,
    ml_count_lower_tail,
    ml_mixing_upper,
    paley_zygmund_lower,
    tv_window_upper,
)
from semimix.chains import (
    CouplingStats,
    PowerCache,
    row_tv_to,
    stationary_distribution,
    validate_stochastic,
)
from semimix.errors import ParameterDomainError
from semimix.mittag_leffler import ml_pgf, theta_star
from semimix.process import make_process
from semimix.renewal import (
    MittagLefflerWaiting,
    TailAssumptionParams,
    count_events,
    estimate_counting_pmf,
)

UNIT_TAIL = TailAssumptionParams(c1=1.0, c2=1.0, t0=1.0, beta=1.0)


def inputs_for(beta=1.0, eps=0.1, tail=UNIT_TAIL, t_half=4, ell=1.0, alpha=None,
               t_alpha=None):
    return BoundInputs(
        beta=beta, eps=eps, tail=tail, embedded_time_half_eps=t_half,
        coupling=CouplingStats(ell_star=ell), alpha=alpha,
        embedded_time_eps_alpha=t_alpha,
    )


class TestHeavyTailUpper:
    def test_reference_arithmetic(self):
        # (2*(1+1)/0.1)^1 * 4^2 = 640 against the short branch 2*4 = 8
        rep = heavy_tail_mixing_upper(inputs_for())
        assert rep.value == pytest.approx(640.0)
        assert rep.constituents["tail_branch"] == pytest.approx(640.0)
        assert rep.constituents["hypothesis_branch"] == pytest.approx(8.0)

    def test_monotone_in_eps(self):
        loose = heavy_tail_mixing_upper(inputs_for(eps=0.5))
        tight = heavy_tail_mixing_upper(inputs_for(eps=0.05))
        assert loose.value < tight.value

    def test_eps_scaling_on_fixed_branch(self):
        beta = 0.5
        tail = TailAssumptionParams(c1=1.0, c2=1.0, t0=1.0, beta=beta)
        a = heavy_tail_mixing_upper(inputs_for(beta=beta, eps=0.1, tail=tail))
        b = heavy_tail_mixing_upper(inputs_for(beta=beta, eps=0.05, tail=tail))
        assert b.value / a.value == pytest.approx(2.0 ** (1.0 / beta), rel=1e-12)

    def test_reproducible_from_constituents(self):
        rep = heavy_tail_mixing_upper(inputs_for(beta=0.5, eps=0.07,
                                                 tail=TailAssumptionParams(0.4, 0.9, 2.0, 0.5)))
        c = rep.constituents
        assert rep.value == pytest.approx(max(c["tail_branch"], c["hypothesis_branch"]))
        rebuilt = (2 * (c["c_plus"] + c["c0"]) / c["eps"]) ** (1 / c["beta"]) * \
            c["embedded_time_half_eps"] ** (1 + 1 / c["beta"])
        assert c["tail_branch"] == pytest.approx(rebuilt)


class TestMlUpper:
    def test_reference_constituents(self):
        rep = ml_mixing_upper(inputs_for(beta=0.5, eps=0.05,
                                         tail=TailAssumptionParams(0.4, 0.7, 1.0, 0.5)))
        th = 1.0 - math.sqrt(math.pi / 2.0 - 1.0)
        c_beta = (1.0 + (1.0 - th) ** -2) * math.gamma(1.5)
        assert rep.constituents["theta_star"] == pytest.approx(th, rel=1e-12)
        assert rep.constituents["c_beta"] == pytest.approx(c_beta, rel=1e-12)
        assert rep.constituents["c_beta"] == pytest.approx(2.438841901847315, rel=1e-12)

    def test_value_reproduces(self):
        rep = ml_mixing_upper(inputs_for(beta=0.5, eps=0.05,
                                         tail=TailAssumptionParams(0.4, 0.7, 1.0, 0.5),
                                         ell=2.0))
        c = rep.constituents
        rebuilt = (max(c["c_beta"], c["coupling_branch"]) * 2 * c["tail_prefactor"]
                   / c["eps"]) ** (1 / c["beta"])
        assert rep.value == pytest.approx(rebuilt)

    def test_eps_scaling(self):
        tail = TailAssumptionParams(0.4, 0.7, 1.0, 0.5)
        a = ml_mixing_upper(inputs_for(beta=0.5, eps=0.1, tail=tail))
        b = ml_mixing_upper(inputs_for(beta=0.5, eps=0.05, tail=tail))
        assert b.value / a.value == pytest.approx(4.0, rel=1e-12)

    def test_domain_error_at_beta_one(self):
        with pytest.raises(ParameterDomainError):
            ml_mixing_upper(inputs_for(beta=1.0))


class TestPaleyZygmund:
    def test_capped_at_one(self):
        assert paley_zygmund_lower(0.5, 1e9, 0.0) <= 1.0

    def test_limit_at_theta_star(self):
        # at theta* the deviation from 1 is exactly (1 + (1-theta*)^-2)/mean
        for beta, t in ((0.5, 1e6), (0.8, 1e6)):
            th = theta_star(beta)
            nbar = t ** beta / math.gamma(1 + beta)
            deviation = (1 + (1 - th) ** -2) / nbar
            val = paley_zygmund_lower(beta, t, th)
            assert abs(val - 1.0 / (1.0 + deviation)) < 1e-12
        assert paley_zygmund_lower(0.8, 1e6, theta_star(0.8)) == pytest.approx(1.0, abs=1e-3)
        assert paley_zygmund_lower(0.5, 1e8, theta_star(0.5)) == pytest.approx(1.0, abs=1e-3)

    def test_dominated_by_simulation(self):
        th = theta_star(0.5)
        bound = paley_zygmund_lower(0.5, 20.0, th)
        counts = count_events(MittagLefflerWaiting(0.5), 20.0, 50_000, seed=71)
        nbar = 20.0 ** 0.5 / math.gamma(1.5)
        emp = (counts >= th * nbar).mean()
        se = math.sqrt(emp * (1 - emp) / counts.size)
        assert emp >= bound - 3 * se


class TestCountLowerTail:
    def test_reference_value(self):
        assert ml_count_lower_tail(0.5, 100.0) == pytest.approx(0.2438841901847315, rel=1e-12)

    def test_power_law_halving(self):
        assert ml_count_lower_tail(0.5, 400.0) == pytest.approx(
            ml_count_lower_tail(0.5, 100.0) / 2.0, rel=1e-12
        )


class TestMgfSplit:
    def test_dominates_exact_pgf(self):
        ell = 1.0
        th = theta_star(0.5)
        rep = mgf_split_bound(0.5, 50.0, th, ell)
        exact = ml_pgf(0.5, math.exp(-1.0 / (math.e * ell)), 50.0).real
        assert rep.value >= exact

    def test_vanishes_at_large_t(self):
        th = theta_star(0.5)
        assert mgf_split_bound(0.5, 1e8, th, 1.0).value < 1e-3

    def test_degenerate_theta(self):
        rep = mgf_split_bound(0.5, 50.0, 0.0, 1.0)
        assert rep.constituents["exponential_term"] == 1.0
        assert rep.value >= 1.0


class TestTvWindow:
    def setup_method(self):
        self.p = make_process(validate_stochastic(
            [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.25, 0.25, 0.5]]
        ), MittagLefflerWaiting(0.7))
        self.t = 10.0
        self.pmf = estimate_counting_pmf(self.p.waiting, self.t, None, 30_000, seed=81)
        self.cache = PowerCache(self.p.chain)

    def test_dominates_actual_tv(self):
        from semimix.process import transition_matrix_series

        est = transition_matrix_series(self.p, self.t, self.pmf, self.cache)
        pi = stationary_distribution(self.p.chain).weights
        actual = row_tv_to(est.matrix, pi).max()
        rep = tv_window_upper(self.p, 2, 20, self.t, self.pmf, self.cache)
        assert actual <= rep.value + 0.01

    def test_large_l_kills_third_term(self):
        rep = tv_window_upper(self.p, 2, self.pmf.n_max, self.t, self.pmf, self.cache)
        assert rep.constituents["prob_above_l"] <= self.pmf.mass_beyond + 1e-12

    def test_degenerate_m(self):
        pi = stationary_distribution(self.p.chain).weights
        rep = tv_window_upper(self.p, 0, 5, self.t, self.pmf, self.cache)
        assert rep.value >= row_tv_to(np.eye(3), pi).max()

    def test_window_order_enforced(self):
        with pytest.raises(ParameterDomainError):
            tv_window_upper(self.p, 5, 5, self.t, self.pmf, self.cache)


class TestExpectedTvBounds:
    def test_lower_below_upper(self):
        for eps in (0.3, 0.1, 0.01, 0.001):
            lower, upper = expected_tv_mixing_bounds(
                inputs_for(beta=0.5, eps=eps,
                           tail=TailAssumptionParams(1.0, 1.0, 1.0, 0.5),
                           alpha=0.5, t_alpha=2)
            )
            assert lower.value < upper.value

    def test_vacuous_certificate_flagged(self):
        # quadratic certificate peaks at c1^2/(4 C0) = 0.25 < eps^(1-alpha)
        lower, _ = expected_tv_mixing_bounds(
            inputs_for(beta=0.5, eps=0.5, tail=TailAssumptionParams(1.0, 1.0, 1.0, 0.5),
                       alpha=0.5, t_alpha=2)
        )
        assert lower.value == 0.0
        assert not lower.hypothesis_ok

    def test_eps_scaling_asymptotics(self):
        # at small eps the certified time grows like eps^((alpha-1)/beta)
        tail = TailAssumptionParams(1.0, 1.0, 1.0, 0.5)
        alpha, beta = 0.5, 0.5
        lo1, _ = expected_tv_mixing_bounds(
            inputs_for(beta=beta, eps=1e-5, tail=tail, alpha=alpha, t_alpha=6))
        lo2, _ = expected_tv_mixing_bounds(
            inputs_for(beta=beta, eps=4e-5, tail=tail, alpha=alpha, t_alpha=6))
        ratio = lo1.value / lo2.value
        expected = (1e-5 / 4e-5) ** ((alpha - 1.0) / beta)
        assert ratio == pytest.approx(expected, rel=0.05)

    def test_missing_alpha_rejected(self):
        with pytest.raises(ParameterDomainError):
            expected_tv_mixing_bounds(inputs_for(beta=0.5,
                                                 tail=TailAssumptionParams(1, 1, 1, 0.5)))


class TestBuildInputs:
    def test_wiring(self):
        q = [[0.75, 0.25], [0.25, 0.75]]
        inputs = build_bound_inputs(q, MittagLefflerWaiting(0.5), eps=0.1, alpha=0.5)
        assert inputs.embedded_time_half_eps == 5  # 0.5^n <= 0.05 first at n = 5
        assert inputs.embedded_time_eps_alpha == 2  # 0.5^n <= 0.316 first at n = 2
        assert inputs.coupling.ell_star > 0
        assert inputs.tail.beta == 0.5
        rep = ml_mixing_upper(inputs)
        assert math.isfinite(rep.value) and rep.value > 0
