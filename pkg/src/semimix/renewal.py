"""Waiting-time models, renewal counting simulation and counting bounds.

Three inter-event laws: Mittag-Leffler (the heavy-tailed case of interest),
Pareto (exact power tail) and exponential (light-tail control).  Counting
paths are simulated in replication blocks with index-derived streams, so a
fixed master seed gives bit-identical results for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from . import streams
from .errors import (
    HypothesisViolatedError,
    ParameterDomainError,
    PathExplosionError,
)
from .mittag_leffler import ml_sample_array, ml_tail

DEFAULT_EVENT_CAP = 10_000_000


@dataclass(frozen=True)
class MittagLefflerWaiting:
    """Waits with survival function E_beta(-t^beta); infinite mean for beta < 1."""

    beta: float

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ParameterDomainError(f"beta={self.beta!r} outside (0, 1]")

    def tail(self, t: float) -> float:
        return ml_tail(self.beta, t)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return ml_sample_array(self.beta, rng, size)

    def label(self) -> str:
        return f"ml:{self.beta:g}"


@dataclass(frozen=True)
class ParetoWaiting:
    """P{T > t} = min(1, (t_min / t)^beta); draws via inverse CDF."""

    beta: float
    t_min: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ParameterDomainError("beta must be positive")
        if self.t_min <= 0:
            raise ParameterDomainError("t_min must be positive")

    def tail(self, t: float) -> float:
        if t <= self.t_min:
            return 1.0
        return (self.t_min / t) ** self.beta

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        u = rng.random(size)
        while True:
            zero = u == 0.0
            if not np.any(zero):
                break
            u[zero] = rng.random(int(zero.sum()))
        return self.t_min * u ** (-1.0 / self.beta)

    def label(self) -> str:
        return f"pareto:{self.beta:g},{self.t_min:g}"


@dataclass(frozen=True)
class ExponentialWaiting:
    """Unit control case: exponential waits make the counting process Poisson."""

    rate: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ParameterDomainError("rate must be positive")

    def tail(self, t: float) -> float:
        return math.exp(-self.rate * t)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        u = rng.random(size)
        while True:
            zero = u == 0.0
            if not np.any(zero):
                break
            u[zero] = rng.random(int(zero.sum()))
        return -np.log(u) / self.rate

    def label(self) -> str:
        return f"exp:{self.rate:g}"


WaitingTimeModel = MittagLefflerWaiting | ParetoWaiting | ExponentialWaiting


def parse_waiting_model(spec: str) -> WaitingTimeModel:
    """Parse compact model strings: ``ml:0.5``, ``pareto:0.5,1.0``, ``exp:2``."""
    kind, _, args = spec.partition(":")
    kind = kind.strip().lower()
    vals = [float(x) for x in args.split(",")] if args else []
    if kind in ("ml", "mittag-leffler", "mittagleffler"):
        return MittagLefflerWaiting(*vals)
    if kind == "pareto":
        return ParetoWaiting(*vals)
    if kind in ("exp", "exponential"):
        return ExponentialWaiting(*vals) if vals else ExponentialWaiting()
    raise ParameterDomainError(f"unknown waiting model {spec!r}")


def sample_waiting_time(model: WaitingTimeModel, rng: np.random.Generator) -> float:
    """One draw from the inter-event law."""
    return float(model.sample(rng, None))


def tail_probability(model: WaitingTimeModel, t: float) -> float:
    """Exact survival function of the inter-event law."""
    if t < 0:
        raise ParameterDomainError("t must be nonnegative")
    if t == 0:
        return 1.0
    return float(model.tail(t))


def expected_count(model: WaitingTimeModel, t: float) -> float:
    """Rough expected event count by horizon t, used to size draw chunks."""
    if isinstance(model, ExponentialWaiting):
        return model.rate * t
    if isinstance(model, MittagLefflerWaiting):
        return t ** model.beta * sc.rgamma(1.0 + model.beta)
    b = model.beta
    if b > 1:
        mean = model.t_min * b / (b - 1.0)
        return t / mean
    scaled = max(t / model.t_min, 1.0)
    return math.sin(math.pi * b) / (math.pi * b) * scaled ** b + 1.0


@dataclass(frozen=True)
class RenewalPath:
    """Event times of one renewal path up to a horizon."""

    event_times: np.ndarray
    horizon: float
    count: int

    def __post_init__(self):
        times = np.asarray(self.event_times, dtype=float)
        if times.size and (np.any(np.diff(times) <= 0) or times[0] <= 0):
            raise ParameterDomainError("event times must be strictly increasing and positive")
        if self.count != int((times <= self.horizon).sum()):
            raise ParameterDomainError("count does not match events within the horizon")
        times = times.copy()
        times.setflags(write=False)
        object.__setattr__(self, "event_times", times)


def simulate_counting(
    model: WaitingTimeModel,
    t: float,
    rng: np.random.Generator,
    cap: int = DEFAULT_EVENT_CAP,
) -> RenewalPath:
    """Simulate one counting path: all event times at or below the horizon."""
    if t <= 0:
        raise ParameterDomainError("horizon must be positive")
    chunks = []
    total = 0.0
    count = 0
    while True:
        block = np.cumsum(model.sample(rng, 256)) + total
        inside = int((block <= t).sum())
        count += inside
        if count > cap:
            raise PathExplosionError(f"event count exceeded cap {cap}")
        chunks.append(block[:inside])
        if inside < block.size:
            break
        total = block[-1]
    times = np.concatenate(chunks) if chunks else np.empty(0)
    return RenewalPath(event_times=times, horizon=t, count=count)


_CHUNK_BUDGET = 2_000_000  # draws per round, keeps peak memory ~tens of MB


def _count_block(model: WaitingTimeModel, t: float, gen: np.random.Generator,
                 m: int, cap: int) -> np.ndarray:
    counts = np.zeros(m, dtype=np.int64)
    totals = np.zeros(m)
    alive = np.arange(m)
    need = int(1.5 * expected_count(model, t)) + 8
    first = True
    while alive.size:
        target = need if first else max(64, need // 4)
        chunk = max(8, min(target, _CHUNK_BUDGET // alive.size))
        block = model.sample(gen, (alive.size, chunk))
        cum = totals[alive, None] + np.cumsum(block, axis=1)
        counts[alive] += (cum <= t).sum(axis=1)
        if counts.max() > cap:
            raise PathExplosionError(f"event count exceeded cap {cap}")
        totals[alive] = cum[:, -1]
        alive = alive[cum[:, -1] <= t]
        first = False
    return counts


def count_events(
    model: WaitingTimeModel,
    t: float,
    reps: int,
    seed: int,
    threads: int = 1,
    cap: int = DEFAULT_EVENT_CAP,
) -> np.ndarray:
    """N(t) over `reps` independent replications (blocked, deterministic)."""
    if t <= 0:
        raise ParameterDomainError("horizon must be positive")
    parts = streams.map_blocks(
        lambda gen, m: _count_block(model, t, gen, m, cap),
        reps, seed, streams.DOMAIN_COUNTING, threads,
    )
    return streams.concat_blocks(parts)


@dataclass(frozen=True)
class PmfEstimate:
    """Monte Carlo pmf of N(t) with binomial standard errors.

    `probabilities[n]` estimates P{N(t) = n} for n = 0..n_max and
    `mass_beyond` the remainder, so the masses add to one exactly.
    """

    t: float
    model: WaitingTimeModel
    probabilities: np.ndarray
    std_errors: np.ndarray
    replications: int
    mass_beyond: float
    seed: int

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        se = np.asarray(self.std_errors, dtype=float)
        if p.shape != se.shape:
            raise ParameterDomainError("probabilities and std_errors shapes differ")
        if np.any(p < 0) or self.mass_beyond < 0:
            raise ParameterDomainError("negative probability mass")
        if abs(p.sum() + self.mass_beyond - 1.0) > 1e-12:
            raise ParameterDomainError("masses do not add to 1")
        p = p.copy(); p.setflags(write=False)
        se = se.copy(); se.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "std_errors", se)

    @property
    def n_max(self) -> int:
        return self.probabilities.shape[0] - 1

    def prob_below(self, k: int) -> float:
        """Estimated P{N(t) < k}."""
        return float(self.probabilities[: max(0, min(k, self.n_max + 1))].sum())

    def prob_above(self, k: int) -> float:
        """Estimated P{N(t) > k}."""
        if k >= self.n_max:
            return float(self.mass_beyond)
        return float(self.probabilities[k + 1:].sum() + self.mass_beyond)


def estimate_counting_pmf(
    model: WaitingTimeModel,
    t: float,
    n_max: int | None = None,
    reps: int = 100_000,
    seed: int = 0,
    threads: int = 1,
    cap: int = DEFAULT_EVENT_CAP,
    tail_mass_target: float = 1e-4,
) -> PmfEstimate:
    """Estimate P{N(t) = n} by simulation.

    With `n_max` None, the support is grown until the estimated mass beyond
    it drops below `tail_mass_target` (or the observed maximum is reached).
    """
    if reps < 1000:
        raise ParameterDomainError("reps must be at least 10^3")
    counts = count_events(model, t, reps, seed, threads, cap)
    freq = np.bincount(counts)
    if n_max is None:
        tail = 1.0 - np.cumsum(freq) / reps
        small = np.flatnonzero(tail < tail_mass_target)
        n_max = int(small[0]) if small.size else len(freq) - 1
    width = min(n_max + 1, len(freq))
    probs = np.zeros(n_max + 1)
    probs[:width] = freq[:width] / reps
    beyond = 1.0 - probs.sum()
    se = np.sqrt(probs * (1.0 - probs) / reps)
    return PmfEstimate(
        t=t, model=model, probabilities=probs, std_errors=se,
        replications=reps, mass_beyond=beyond, seed=seed,
    )


@dataclass(frozen=True)
class TailAssumptionParams:
    """Power-tail envelope: c1/t^beta <= P{T > t} <= c2/t^beta past t0."""

    c1: float
    c2: float
    t0: float
    beta: float

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0 or self.t0 <= 0 or self.beta <= 0:
            raise ParameterDomainError("tail parameters must be positive")
        if self.c1 > self.c2:
            raise ParameterDomainError("need c1 <= c2")


@dataclass(frozen=True)
class TailCheckReport:
    holds: bool
    violations: list


def verify_tail_assumption(
    model: WaitingTimeModel,
    params: TailAssumptionParams,
    grid: np.ndarray,
) -> TailCheckReport:
    """Check the power-tail envelope at every grid point using exact tails."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= params.t0):
        raise ParameterDomainError("grid points must exceed t0")
    violations = []
    rtol = 1e-12  # equality cases (exact power laws) must not fail by an ulp
    for t in grid:
        tail = tail_probability(model, float(t))
        lo = params.c1 / t ** params.beta
        hi = params.c2 / t ** params.beta
        if not lo * (1.0 - rtol) <= tail <= hi * (1.0 + rtol):
            margin = lo - tail if tail < lo else tail - hi
            violations.append({"t": float(t), "tail": tail, "lower": lo,
                               "upper": hi, "margin": float(margin)})
    return TailCheckReport(holds=not violations, violations=violations)


def certify_power_tail(
    model: WaitingTimeModel,
    t_hi: float = 1e4,
    points: int = 400,
    slack: float = 0.05,
) -> TailAssumptionParams:
    """Empirical envelope constants from a pre-scan of the exact tail.

    Pareto is exact (c1 = c2 = t_min^beta past t_min).  For the
    Mittag-Leffler law the scan brackets F(t) t^beta on a log grid starting
    where the product is within 25% of its limit; the certificate is over
    the scanned range, not an analytic proof for all t.
    """
    if isinstance(model, ParetoWaiting):
        c = model.t_min ** model.beta
        return TailAssumptionParams(c1=c, c2=c, t0=model.t_min, beta=model.beta)
    if isinstance(model, ExponentialWaiting):
        raise ParameterDomainError("exponential waits have no power-tail envelope")
    beta = model.beta
    if beta >= 1.0:
        raise ParameterDomainError("ML power-tail certification needs beta < 1")
    limit = sc.rgamma(1.0 - beta)
    grid = np.geomspace(0.5, t_hi, points)
    prod = np.array([tail_probability(model, float(t)) * t ** beta for t in grid])
    close = np.abs(prod / limit - 1.0) < 0.25
    if not np.any(close):
        raise ParameterDomainError("tail never entered the power-law window on the scan grid")
    start = int(np.flatnonzero(close)[0])
    window = prod[start:]
    return TailAssumptionParams(
        c1=(1.0 - slack) * float(window.min()),
        c2=(1.0 + slack) * float(window.max()),
        t0=float(grid[start]),
        beta=beta,
    )


@dataclass(frozen=True)
class TaylorRemainderConstants:
    """Explicit remainder constants for the small-count sandwich.

    The upper side uses -log(1-x) <= x + x^2 on [0, 1/2] (c_up = 1), the
    lower side e^(-u) <= 1 - u + u^2/2 (c_low = 1/2); the combined constant
    is c0 = max(c2^2 c_up, c1^2 c_low) unless overridden.
    """

    c_up: float = 1.0
    c_low: float = 0.5
    c0: float | None = None

    def resolve(self, c1: float, c2: float) -> float:
        if self.c0 is not None:
            return self.c0
        return max(c2 * c2 * self.c_up, c1 * c1 * self.c_low)


DEFAULT_REMAINDER = TaylorRemainderConstants()


@dataclass(frozen=True)
class CountingWindowBounds:
    """Two-sided bound on P{N(t) < K} under the power-tail envelope."""

    lower: float
    upper: float
    c0: float
    hypothesis_threshold: float


def small_count_bounds(
    params: TailAssumptionParams,
    k: int,
    t: float,
    constants: TaylorRemainderConstants = DEFAULT_REMAINDER,
) -> CountingWindowBounds:
    """Sandwich c1 K/t^b - C0 K^2/t^(2b) <= P{N(t) < K} <= c2 K^(1+b)/t^b + C0 K^(1+2b)/t^(2b).

    Requires t > max(t0, (2 c2)^(1/beta)) * K; the lower value is clamped at
    zero and the upper at one for reporting.
    """
    if k < 1:
        raise ParameterDomainError("K must be a positive integer")
    b = params.beta
    threshold = max(params.t0, (2.0 * params.c2) ** (1.0 / b)) * k
    if t <= threshold:
        raise HypothesisViolatedError(
            f"need t > {threshold:.6g} for K={k}, got t={t:.6g}"
        )
    c0 = constants.resolve(params.c1, params.c2)
    tb = t ** b
    t2b = tb * tb
    lower = params.c1 * k / tb - c0 * k * k / t2b
    upper = params.c2 * k ** (1.0 + b) / tb + c0 * k ** (1.0 + 2.0 * b) / t2b
    return CountingWindowBounds(
        lower=max(0.0, lower),
        upper=min(1.0, upper),
        c0=c0,
        hypothesis_threshold=threshold,
    )
