"""Mittag-Leffler function, random variates and related constants.

The one-parameter function E_b(z) = sum_k z^k / Gamma(1 + b k) is evaluated
by region: power series on a disk, algebraic asymptotic expansion for large
|z| in the left half plane, and an exact exponential-mixture quadrature on
the negative real axis wherever the first two cannot reach their accuracy
targets in double precision.  Everything here is pure; samplers take an
explicit generator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc
from scipy.integrate import quad

from .errors import (
    EvaluationOverflowError,
    NotConvergedError,
    ParameterDomainError,
    RegionNotSupportedError,
)

_EPS = np.finfo(float).eps
_SERIES_TARGET = 1e-10  # relative accuracy promised inside the series disk
_ASYMPTOTIC_TARGET = 1e-8  # relative accuracy promised beyond it


@dataclass(frozen=True)
class MLEvalConfig:
    """Numerical controls for the function evaluator."""

    series_radius: float = 5.0
    series_tol: float = 1e-14
    asymptotic_terms: int = 20
    max_series_terms: int = 2000

    def __post_init__(self):
        if self.series_radius <= 0:
            raise ParameterDomainError("series_radius must be positive")
        if not 0 < self.series_tol < 1:
            raise ParameterDomainError("series_tol must lie in (0, 1)")
        if self.asymptotic_terms < 1 or self.max_series_terms < 1:
            raise ParameterDomainError("term counts must be positive")


DEFAULT_CONFIG = MLEvalConfig()


def _check_beta(beta: float, open_right: bool = False) -> float:
    hi_ok = beta < 1.0 if open_right else beta <= 1.0
    if not (0.0 < beta and hi_ok):
        rng = "(0, 1)" if open_right else "(0, 1]"
        raise ParameterDomainError(f"beta={beta!r} outside {rng}")
    return float(beta)


def _series_eval(beta: float, z: complex, cfg: MLEvalConfig):
    """Kahan-summed power series; returns (value, converged, max |term|).

    Term magnitudes are built in log space: z^k can overflow double
    precision long before the Gamma factor tames the term itself.
    """
    on_axis = z.imag == 0.0
    log_r = math.log(abs(z))
    phase = cmath.phase(z)
    total = 1.0 + 0.0j
    comp = 0.0 + 0.0j
    max_abs = 1.0
    below = 0
    for k in range(1, cfg.max_series_terms + 1):
        log_mag = k * log_r - sc.gammaln(1.0 + beta * k)
        if log_mag > 705.0:
            raise EvaluationOverflowError(f"series term overflow at k={k}")
        mag = math.exp(log_mag)
        if on_axis:
            sign = 1.0 if z.real > 0 or k % 2 == 0 else -1.0
            term = complex(sign * mag, 0.0)
        else:
            ang = k * phase
            term = complex(mag * math.cos(ang), mag * math.sin(ang))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        max_abs = max(max_abs, mag)
        if mag <= cfg.series_tol * max(abs(total), 1e-300):
            below += 1
            if below >= 2:
                return total, True, max_abs
        else:
            below = 0
    return total, False, max_abs


def _asymptotic_eval(beta: float, z: complex, cfg: MLEvalConfig):
    """Algebraic expansion -sum_k z^{-k}/Gamma(1-b k), optimally truncated.

    Terms whose Gamma argument hits a pole vanish (rgamma is zero there);
    truncation happens at the smallest-modulus nonzero term, whose size also
    serves as the error estimate.
    """
    zinv = 1.0 / z
    power = 1.0 + 0.0j
    terms = []
    for k in range(1, cfg.asymptotic_terms + 1):
        power *= zinv
        terms.append(-power * sc.rgamma(1.0 - beta * k))
    mags = [abs(t) for t in terms]
    nonzero = [(m, i) for i, m in enumerate(mags) if m > 0.0]
    if not nonzero:
        return 0.0 + 0.0j, math.inf
    err, cut = min(nonzero)
    value = sum(terms[: cut + 1])
    return value, err


def _neg_axis_integral(beta: float, x: float) -> float:
    """E_b(-x) for x > 0, 0 < b < 1, via the exponential-mixture form.

    The function is completely monotone there, a mixture of exponentials
    whose mixing density is explicit; the substituted integral below has an
    argument-independent integrand scale, so fixed-tolerance quadrature
    delivers uniform relative accuracy for any x.
    """
    spb = math.sin(math.pi * beta)
    cpb = math.cos(math.pi * beta)
    w_hi = 708.0 ** beta

    def integrand(w):
        u = w / x
        return math.exp(-w ** (1.0 / beta)) / (u * u + 2.0 * u * cpb + 1.0)

    # Denominator dip sits at -x cos(pi b) when beta > 1/2; flag it for quad.
    w_dip = -x * cpb
    points = [w_dip] if 0.0 < w_dip < w_hi else None
    val, _ = quad(integrand, 0.0, w_hi, points=points, limit=400, epsabs=1e-280, epsrel=5e-14)
    return spb / (math.pi * beta * x) * val


def _evaluate(beta: float, z: complex, cfg: MLEvalConfig):
    """Returns (value, regime) with regime in exp/series/asymptotic/integral."""
    beta = _check_beta(beta)
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParameterDomainError("z must be finite")
    if beta == 1.0:
        if z.real > 709.0:
            raise EvaluationOverflowError("exp(z) overflows double precision")
        return cmath.exp(z), "exp"
    if z == 0:
        return 1.0 + 0.0j, "series"
    on_neg_axis = z.imag == 0.0 and z.real < 0.0
    r = abs(z)
    if r <= cfg.series_radius:
        value, converged, max_abs = _series_eval(beta, z, cfg)
        noise = 4.0 * _EPS * max_abs / max(abs(value), 1e-300)
        if converged and noise <= _SERIES_TARGET:
            return value, "series"
        if on_neg_axis:
            return complex(_neg_axis_integral(beta, -z.real)), "integral"
        if not converged:
            raise NotConvergedError(
                f"series not converged within {cfg.max_series_terms} terms at z={z!r}"
            )
        return value, "series"
    if z.real >= 0.0:
        raise RegionNotSupportedError(
            f"|z|={r:.3g} beyond series radius with Re(z) >= 0 is not implemented"
        )
    value, err = _asymptotic_eval(beta, z, cfg)
    rel = err / max(abs(value), 1e-300)
    if on_neg_axis and rel > _ASYMPTOTIC_TARGET:
        return complex(_neg_axis_integral(beta, -z.real)), "integral"
    return value, "asymptotic"


def ml_function(beta: float, z: complex, cfg: MLEvalConfig | None = None) -> complex:
    """E_beta(z) for beta in (0, 1], complex z."""
    value, _ = _evaluate(beta, z, cfg or DEFAULT_CONFIG)
    return value


def ml_eval_detailed(beta: float, z: complex, cfg: MLEvalConfig | None = None):
    """(value, regime) pair; regime names the evaluation region used."""
    return _evaluate(beta, z, cfg or DEFAULT_CONFIG)


def ml_tail(beta: float, t: float, cfg: MLEvalConfig | None = None) -> float:
    """Survival function E_beta(-t^beta) of the Mittag-Leffler law."""
    if t < 0:
        raise ParameterDomainError("t must be nonnegative")
    if t == 0:
        return 1.0
    value = ml_function(beta, -(t ** beta), cfg)
    return float(min(1.0, max(0.0, value.real)))


def ml_sample_array(beta: float, rng: np.random.Generator, size) -> np.ndarray:
    """Draws with survival function E_beta(-t^beta), two uniforms per draw.

    Uses the exact uniform-ratio formula; at beta = 1 it degenerates to the
    unit exponential and only one uniform is consumed per draw.
    """
    _check_beta(beta)
    if beta == 1.0:
        u = rng.random(size)
        while True:
            zero = u == 0.0
            if not np.any(zero):
                break
            u[zero] = rng.random(int(zero.sum()))
        return -np.log(u)
    u = rng.random(size)
    v = rng.random(size)
    while True:
        bad = (u == 0.0) | (v == 0.0) | (v == 1.0)
        if not np.any(bad):
            break
        k = int(bad.sum())
        u[bad] = rng.random(k)
        v[bad] = rng.random(k)
    w = math.pi * beta
    return -np.log(u) * (np.sin(w) / np.tan(w * v) - np.cos(w)) ** (1.0 / beta)


def ml_sample(beta: float, rng: np.random.Generator) -> float:
    """One Mittag-Leffler variate."""
    return float(ml_sample_array(beta, rng, None))


def count_variance_excess(beta: float) -> float:
    """beta B(beta, 1/2) / 2^(2 beta - 1) - 1.

    Relative variance excess of the heavy-tailed counting process over the
    Poisson case: Var N(t) = mean + mean^2 * excess.  Decreasing in beta,
    zero at beta = 1.
    """
    _check_beta(beta)
    return max(0.0, float(beta * sc.beta(beta, 0.5) / 2.0 ** (2.0 * beta - 1.0) - 1.0))


@dataclass(frozen=True)
class FractionalPoissonMoments:
    """First two moments of the counting process with ML(beta) waits."""

    beta: float
    t: float
    mean: float
    second_moment: float
    variance: float
    ml_factor: float


def fractional_poisson_moments(beta: float, t: float) -> FractionalPoissonMoments:
    """mean = t^b / Gamma(1+b); second moment = mean + mean^2 (factor + 1)."""
    _check_beta(beta)
    if t < 0:
        raise ParameterDomainError("t must be nonnegative")
    mean = t ** beta * sc.rgamma(1.0 + beta)
    factor = count_variance_excess(beta)
    second = mean + mean * mean * factor + mean * mean
    return FractionalPoissonMoments(
        beta=beta,
        t=t,
        mean=float(mean),
        second_moment=float(second),
        variance=float(second - mean * mean),
        ml_factor=factor,
    )


def theta_star(beta: float) -> float:
    """Unique root in (0,1) of (1-theta)^(-2) * variance excess = 1.

    Closed form 1 - sqrt(excess); only defined for beta strictly below 1,
    where the excess is strictly positive.
    """
    _check_beta(beta, open_right=True)
    return 1.0 - math.sqrt(count_variance_excess(beta))


def ml_pgf(beta: float, lam: complex, t: float, cfg: MLEvalConfig | None = None) -> complex:
    """Probability generating function E[lam^N(t)] = E_beta((lam-1) t^beta)."""
    lam = complex(lam)
    if abs(lam) > 1.0 + 1e-9:
        raise ParameterDomainError(f"|lam|={abs(lam):.6g} exceeds 1")
    if t < 0:
        raise ParameterDomainError("t must be nonnegative")
    if t == 0 or lam == 1.0:
        return 1.0 + 0.0j
    return ml_function(beta, (lam - 1.0) * t ** beta, cfg)


def pgf_tail_coefficient(beta: float, lam: complex) -> complex:
    """Leading coefficient of the t^(-beta) decay of the pgf at fixed lam.

    Annotation only: E_beta((lam-1) t^beta) ~ coefficient * t^(-beta).
    """
    _check_beta(beta, open_right=True)
    return 1.0 / ((1.0 - complex(lam)) * sc.gamma(1.0 - beta))
