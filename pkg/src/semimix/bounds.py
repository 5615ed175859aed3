"""Explicit bound evaluators for continuous and expected-TV mixing times.

Every evaluator returns a report carrying the bound value plus the named
intermediate quantities it was assembled from, so a value can always be
reproduced from its constituents.  Vacuous bounds are flagged, never raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .chains import CouplingStats, PowerCache
from .errors import InconsistentInputError, ParameterDomainError
from .mittag_leffler import fractional_poisson_moments, theta_star
from .process import SemiMarkovProcess
from .renewal import (
    PmfEstimate,
    TailAssumptionParams,
    TaylorRemainderConstants,
    DEFAULT_REMAINDER,
)


@dataclass(frozen=True)
class BoundInputs:
    """Everything the closed-form mixing bounds consume, in one place."""

    beta: float
    eps: float
    tail: TailAssumptionParams
    embedded_time_half_eps: int
    coupling: CouplingStats
    alpha: float | None = None
    embedded_time_eps_alpha: int | None = None
    remainder: TaylorRemainderConstants = DEFAULT_REMAINDER

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ParameterDomainError("eps must lie in (0, 1)")
        if self.beta <= 0:
            raise ParameterDomainError("beta must be positive")
        if self.embedded_time_half_eps < 1:
            raise ParameterDomainError("embedded mixing time must be positive")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ParameterDomainError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    constituents: dict
    hypothesis_ok: bool = True


def heavy_tail_mixing_upper(inputs: BoundInputs) -> BoundReport:
    """Upper bound on the continuous mixing time from a power-tail envelope.

    value = max( (2 (c+ + C0)/eps)^(1/beta) * T^(1 + 1/beta),
                 max(t0, (2 c2)^(1/beta)) * T )
    with T the embedded eps/2 mixing time.  The proof chain's prefactor
    reads c1 where its own counting bound supplies c2, so the conservative
    c+ = max(c1, c2) is used; both variants are reported.
    """
    b = inputs.beta
    tail = inputs.tail
    T = inputs.embedded_time_half_eps
    c0 = inputs.remainder.resolve(tail.c1, tail.c2)
    c_plus = max(tail.c1, tail.c2)
    branch_tail = (2.0 * (c_plus + c0) / inputs.eps) ** (1.0 / b) * T ** (1.0 + 1.0 / b)
    branch_tail_literal = (2.0 * (tail.c1 + c0) / inputs.eps) ** (1.0 / b) * T ** (1.0 + 1.0 / b)
    branch_hyp = max(tail.t0, (2.0 * tail.c2) ** (1.0 / b)) * T
    value = max(branch_tail, branch_hyp)
    return BoundReport(
        name="heavy_tail_mixing_upper",
        value=value,
        constituents={
            "beta": b,
            "eps": inputs.eps,
            "embedded_time_half_eps": T,
            "c1": tail.c1,
            "c2": tail.c2,
            "t0": tail.t0,
            "c0": c0,
            "c_plus": c_plus,
            "tail_branch": branch_tail,
            "tail_branch_literal_c1": branch_tail_literal,
            "hypothesis_branch": branch_hyp,
        },
    )


def ml_mixing_upper(inputs: BoundInputs) -> BoundReport:
    """Sharper mixing-time upper bound for Mittag-Leffler waits.

    value = ( max(C_b, e Gamma(1+b) ell*/theta*) * 2 c1 / eps )^(1/beta)
    where C_b = (1 + (1-theta*)^-2) Gamma(1+b) and c1 is the coupling tail
    prefactor.
    """
    b = inputs.beta
    if b >= 1.0:
        raise ParameterDomainError("the Mittag-Leffler bound needs beta in (0, 1)")
    th = theta_star(b)
    gamma1b = float(sc.gamma(1.0 + b))
    c_beta = (1.0 + (1.0 - th) ** -2) * gamma1b
    coupling_branch = math.e * gamma1b * inputs.coupling.ell_star / th
    prefactor = inputs.coupling.tail_prefactor
    value = (max(c_beta, coupling_branch) * 2.0 * prefactor / inputs.eps) ** (1.0 / b)
    return BoundReport(
        name="ml_mixing_upper",
        value=value,
        constituents={
            "beta": b,
            "eps": inputs.eps,
            "theta_star": th,
            "c_beta": c_beta,
            "ell_star": inputs.coupling.ell_star,
            "coupling_branch": coupling_branch,
            "tail_prefactor": prefactor,
        },
    )


def paley_zygmund_lower(beta: float, t: float, theta: float) -> float:
    """Second-moment lower bound for P{N(t) >= theta * mean}.

    Evaluates 1 / ((1-theta)^-2 excess + (1 + (1-theta)^-2)/mean), capped at
    one.  At theta = theta*(beta) the first denominator term is exactly one,
    so the bound tends to one as t grows.
    """
    if not 0.0 <= theta < 1.0:
        raise ParameterDomainError("theta must lie in [0, 1)")
    if t <= 0:
        raise ParameterDomainError("t must be positive")
    moments = fractional_poisson_moments(beta, t)
    w = (1.0 - theta) ** -2
    value = 1.0 / (w * moments.ml_factor + (1.0 + w) / moments.mean)
    return min(1.0, value)


def ml_count_lower_tail(beta: float, t: float) -> float:
    """Claimed bound C_b / t^b on P{N(t) <= theta* mean}.

    C_b = (1 + (1-theta*)^-2) Gamma(1+b).  Note the t^(-b) decay cannot hold
    for large t (the scaled count has a non-degenerate limit law with
    positive mass below theta*); the dominance tests exercise this honestly.
    """
    if t <= 0:
        raise ParameterDomainError("t must be positive")
    th = theta_star(beta)
    c_beta = (1.0 + (1.0 - th) ** -2) * float(sc.gamma(1.0 + beta))
    return c_beta / t ** beta


def mgf_split_bound(beta: float, t: float, theta: float, ell_star: float) -> BoundReport:
    """Two-term bound on E exp(-N(t)/(e ell*)).

    Splits at theta * mean: the small-count mass (bounded through the
    second-moment inequality) plus the exponential factor at the split.
    """
    if ell_star <= 0:
        raise ParameterDomainError("ell_star must be positive for the split bound")
    if not 0.0 <= theta < 1.0:
        raise ParameterDomainError("theta must lie in [0, 1)")
    small_count = 1.0 - paley_zygmund_lower(beta, t, theta)
    exponent = theta * t ** beta / (math.e * float(sc.gamma(1.0 + beta)) * ell_star)
    exp_term = math.exp(-exponent)
    return BoundReport(
        name="mgf_split_bound",
        value=small_count + exp_term,
        constituents={
            "beta": beta,
            "t": t,
            "theta": theta,
            "ell_star": ell_star,
            "small_count_term": small_count,
            "exponential_term": exp_term,
            "mgf_argument": math.exp(-1.0 / (math.e * ell_star)),
        },
    )


def tv_window_upper(
    p: SemiMarkovProcess,
    m: int,
    l: int,
    t: float,
    pmf: PmfEstimate,
    powers: PowerCache | None = None,
) -> BoundReport:
    """Three-term TV bound through a counting window [M, L].

    max over starts of P{N_t < M} + ||q^(M) - pi|| + ||q^(L) - pi|| P{N_t > L}.
    """
    if m >= l:
        raise ParameterDomainError("need M < L")
    if m < 0:
        raise ParameterDomainError("M must be nonnegative")
    if pmf.t != t or pmf.model != p.waiting:
        raise InconsistentInputError("pmf was computed for a different horizon or model")
    cache = powers or PowerCache(p.chain)
    below = pmf.prob_below(m)
    above = pmf.prob_above(l)
    tv_m = cache.tv_rows(m)
    tv_l = cache.tv_rows(l)
    per_start = below + tv_m + tv_l * above
    i = int(np.argmax(per_start))
    return BoundReport(
        name="tv_window_upper",
        value=float(per_start[i]),
        constituents={
            "t": t,
            "m": m,
            "l": l,
            "argmax_start": i,
            "prob_below_m": below,
            "prob_above_l": above,
            "tv_at_m": float(tv_m[i]),
            "tv_at_l": float(tv_l[i]),
        },
    )


def expected_tv_mixing_bounds(inputs: BoundInputs) -> tuple[BoundReport, BoundReport]:
    """Sandwich for the expected-TV mixing time.

    The upper bound reuses the heavy-tail argument.  The lower bound
    certifies times t where the small-count sandwich guarantees
    P{N_t < M} >= eps^(1-alpha) at M = half the embedded eps^alpha mixing
    time; when the quadratic certificate cannot reach that level the bound
    degenerates to zero and is flagged, not erased.
    """
    if inputs.alpha is None or inputs.embedded_time_eps_alpha is None:
        raise ParameterDomainError("alpha and the eps^alpha embedded time are required")
    b = inputs.beta
    tail = inputs.tail
    alpha = inputs.alpha
    upper_base = heavy_tail_mixing_upper(inputs)
    upper = BoundReport(
        name="expected_tv_mixing_upper",
        value=upper_base.value,
        constituents=upper_base.constituents,
        hypothesis_ok=upper_base.hypothesis_ok,
    )

    m = max(1, inputs.embedded_time_eps_alpha // 2)
    target = inputs.eps ** (1.0 - alpha)
    c0 = inputs.remainder.resolve(tail.c1, tail.c2)
    peak = tail.c1 ** 2 / (4.0 * c0)
    constituents = {
        "beta": b,
        "eps": inputs.eps,
        "alpha": alpha,
        "m": m,
        "embedded_time_eps_alpha": inputs.embedded_time_eps_alpha,
        "target_probability": target,
        "c0": c0,
        "max_certifiable_probability": peak,
        # the infinite-mean case carries the extra t^beta growth condition;
        # with finite-mean tails the hypothesis floor alone suffices
        "beta_below_one": b < 1.0,
    }
    hypothesis_floor = max(tail.t0, (2.0 * tail.c2) ** (1.0 / b)) * m
    if target >= peak:
        # The quadratic lower certificate c1 u - C0 u^2 tops out below the
        # needed level; no time is certified.
        return (
            BoundReport("expected_tv_mixing_lower", 0.0, constituents, hypothesis_ok=False),
            upper,
        )
    u = (tail.c1 - math.sqrt(tail.c1 ** 2 - 4.0 * c0 * target)) / (2.0 * c0)
    t_lower = (m / u) ** (1.0 / b)
    constituents["u_root"] = u
    constituents["hypothesis_floor"] = hypothesis_floor
    ok = t_lower > hypothesis_floor
    return (
        BoundReport("expected_tv_mixing_lower", t_lower if ok else 0.0,
                    constituents, hypothesis_ok=ok),
        upper,
    )


def build_bound_inputs(
    chain,
    waiting,
    eps: float,
    alpha: float | None = None,
    tail: TailAssumptionParams | None = None,
    remainder: TaylorRemainderConstants = DEFAULT_REMAINDER,
    aggregation: str = "sum",
) -> BoundInputs:
    """Assemble bound inputs from a chain and waiting model.

    Computes the embedded mixing times and the coupling constant, and
    certifies the power-tail envelope when one is not supplied.
    """
    from .chains import StochasticMatrix, coupling_hitting_expectation, embedded_mixing_time
    from .renewal import certify_power_tail

    q = chain if isinstance(chain, StochasticMatrix) else StochasticMatrix(np.asarray(chain, float))
    params = tail or certify_power_tail(waiting)
    t_half = embedded_mixing_time(q, eps / 2.0, aggregation)
    t_alpha = None
    if alpha is not None:
        t_alpha = embedded_mixing_time(q, eps ** alpha, aggregation)
    return BoundInputs(
        beta=params.beta,
        eps=eps,
        tail=params,
        embedded_time_half_eps=max(1, t_half),
        coupling=coupling_hitting_expectation(q),
        alpha=alpha,
        embedded_time_eps_alpha=max(1, t_alpha) if t_alpha is not None else None,
        remainder=remainder,
    )
