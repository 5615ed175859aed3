"""The time-changed chain X(t) = X_{N(t)} and its mixing behaviour.

Transition matrices at a given horizon come by three independent routes
(series over the counting pmf, spectral via the probability generating
function at each eigenvalue, and direct Monte Carlo over paths), plus the
total-variation profile, the continuous mixing time and the expected-TV
variant used for lower bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import streams
from .chains import (
    PowerCache,
    ProbabilityVector,
    SpectralDecomposition,
    StochasticMatrix,
    aggregate_tv,
    require_ergodic,
    row_tv_to,
    spectral_decomposition,
    stationary_distribution,
)
from .errors import (
    InconsistentInputError,
    NotConvergedError,
    NotReachedError,
    ParameterDomainError,
    UnsupportedWaitingModelError,
)
from .mittag_leffler import MLEvalConfig, ml_pgf
from .renewal import (
    DEFAULT_EVENT_CAP,
    ExponentialWaiting,
    MittagLefflerWaiting,
    PmfEstimate,
    WaitingTimeModel,
    estimate_counting_pmf,
    simulate_counting,
    tail_probability,
)

ROUTES = ("series", "spectral", "monte_carlo")


@dataclass(frozen=True)
class SemiMarkovProcess:
    """Embedded chain + common waiting-time law + initial distribution."""

    chain: StochasticMatrix
    waiting: WaitingTimeModel
    initial: ProbabilityVector

    def __post_init__(self):
        require_ergodic(self.chain)
        if len(self.initial) != self.chain.n_states:
            raise ParameterDomainError("initial distribution dimension mismatch")

    @property
    def n_states(self) -> int:
        return self.chain.n_states


def make_process(chain, waiting, initial=None) -> SemiMarkovProcess:
    """Convenience constructor; defaults to the uniform initial distribution."""
    q = chain if isinstance(chain, StochasticMatrix) else StochasticMatrix(np.asarray(chain, float))
    if initial is None:
        init = ProbabilityVector(np.full(q.n_states, 1.0 / q.n_states))
    elif isinstance(initial, ProbabilityVector):
        init = initial
    else:
        init = ProbabilityVector(np.asarray(initial, float))
    return SemiMarkovProcess(chain=q, waiting=waiting, initial=init)


@dataclass(frozen=True)
class SamplePath:
    """One simulated trajectory: jump times and embedded states."""

    jump_times: np.ndarray
    states: np.ndarray
    horizon: float

    @property
    def state_at_horizon(self) -> int:
        return int(self.states[-1])

    @property
    def count(self) -> int:
        return self.jump_times.shape[0]


def simulate_path(
    p: SemiMarkovProcess,
    horizon: float,
    rng: np.random.Generator,
    cap: int = DEFAULT_EVENT_CAP,
) -> SamplePath:
    """Simulate X(t) up to the horizon; states[k] is the state after event k."""
    if horizon <= 0:
        raise ParameterDomainError("horizon must be positive")
    start = int(rng.choice(p.n_states, p=p.initial.weights))
    renewal = simulate_counting(p.waiting, horizon, rng, cap)
    states = np.empty(renewal.count + 1, dtype=np.int64)
    states[0] = start
    cum = np.cumsum(p.chain.entries, axis=1)
    for k in range(renewal.count):
        u = rng.random()
        states[k + 1] = min(int((cum[states[k]] < u).sum()), p.n_states - 1)
    return SamplePath(jump_times=renewal.event_times, states=states, horizon=horizon)


@dataclass(frozen=True)
class TransitionEstimate:
    """Matrix of P{X(t) = j | X(0) = i} with route metadata."""

    t: float
    matrix: np.ndarray
    route: str
    std_errors: np.ndarray | None = None
    truncation_error: float | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if np.any(m < -1e-8):
            raise ParameterDomainError("transition estimate has a significantly negative entry")
        if self.route in ("series", "spectral"):
            bad = np.abs(m.sum(axis=1) - 1.0) > 1e-8
            if np.any(bad):
                raise ParameterDomainError("row sums deviate from 1 beyond 1e-8")
        m = np.clip(m, 0.0, 1.0)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def transition_matrix_series(
    p: SemiMarkovProcess,
    t: float,
    pmf: PmfEstimate,
    powers: PowerCache | None = None,
) -> TransitionEstimate:
    """Sum of n-step matrices weighted by the estimated counting pmf.

    The n = 0 weight is the pmf's own estimate, cross-checked against the
    analytic waiting tail; the mass beyond the pmf support is assigned to
    the largest cached power, which perturbs entries by at most that mass
    (reported as `truncation_error`).
    """
    if pmf.t != t or pmf.model != p.waiting:
        raise InconsistentInputError("pmf was computed for a different horizon or model")
    tail = tail_probability(p.waiting, t)
    p0 = float(pmf.probabilities[0])
    reps = pmf.replications
    tol = 3.0 * max(float(pmf.std_errors[0]), math.sqrt(tail * (1 - tail) / reps)) + 10.0 / reps
    if abs(p0 - tail) > tol:
        raise InconsistentInputError(
            f"pmf P(N=0)={p0:.6g} disagrees with the analytic tail {tail:.6g} beyond {tol:.2g}"
        )
    cache = powers or PowerCache(p.chain)
    out = np.zeros((p.n_states, p.n_states))
    for n, prob in enumerate(pmf.probabilities):
        if prob:
            out += prob * cache.power(n)
    out += pmf.mass_beyond * cache.power(pmf.n_max)
    return TransitionEstimate(
        t=t, matrix=out, route="series", truncation_error=float(pmf.mass_beyond)
    )


def _pgf_at(p: SemiMarkovProcess, lam: complex, t: float, cfg: MLEvalConfig | None) -> complex:
    if isinstance(p.waiting, MittagLefflerWaiting):
        return ml_pgf(p.waiting.beta, lam, t, cfg)
    if isinstance(p.waiting, ExponentialWaiting):
        return np.exp(p.waiting.rate * t * (lam - 1.0))
    raise UnsupportedWaitingModelError(
        f"spectral route needs a closed-form pgf; {p.waiting.label()} has none"
    )


def transition_matrix_spectral(
    p: SemiMarkovProcess,
    t: float,
    decomposition: SpectralDecomposition | None = None,
    cfg: MLEvalConfig | None = None,
    imag_warn: float = 1e-8,
) -> TransitionEstimate:
    """Rows pi + sum over secondary modes of the pgf at each eigenvalue."""
    if t < 0:
        raise ParameterDomainError("t must be nonnegative")
    dec = decomposition or spectral_decomposition(p.chain)
    g = np.ones(p.n_states, dtype=complex)
    for k in range(1, p.n_states):
        g[k] = _pgf_at(p, complex(dec.eigenvalues[k]), t, cfg)
    m = (dec.right_matrix * g[None, :]) @ dec.left_matrix
    resid = float(np.max(np.abs(m.imag))) if p.n_states > 1 else 0.0
    if resid > imag_warn:
        warnings.warn(f"imaginary residue {resid:.3e} stripped from spectral route")
    return TransitionEstimate(t=t, matrix=m.real, route="spectral")


def _evolve_states(chain_cum: np.ndarray, counts: np.ndarray, start: int,
                   gen: np.random.Generator) -> np.ndarray:
    n = chain_cum.shape[0]
    states = np.full(counts.shape[0], start, dtype=np.int64)
    top = int(counts.max()) if counts.size else 0
    for step in range(1, top + 1):
        act = counts >= step
        k = int(act.sum())
        u = gen.random(k)
        rows = chain_cum[states[act]]
        states[act] = np.minimum((rows < u[:, None]).sum(axis=1), n - 1)
    return states


def transition_matrix_monte_carlo(
    p: SemiMarkovProcess,
    t: float,
    reps: int = 20_000,
    seed: int = 0,
    threads: int = 1,
    cap: int = DEFAULT_EVENT_CAP,
) -> TransitionEstimate:
    """Empirical rows from `reps` paths per start state."""
    if reps < 1000:
        raise ParameterDomainError("reps must be at least 10^3")
    if t <= 0:
        raise ParameterDomainError("horizon must be positive")
    from .renewal import _count_block

    n = p.n_states
    chain_cum = np.cumsum(p.chain.entries, axis=1)
    matrix = np.empty((n, n))
    errors = np.empty((n, n))
    for i in range(n):
        def block(gen, m, _start=i):
            counts = _count_block(p.waiting, t, gen, m, cap)
            states = _evolve_states(chain_cum, counts, _start, gen)
            return np.bincount(states, minlength=n)
        parts = streams.map_blocks(
            block, reps, streams.derived_seed(seed, i), streams.DOMAIN_CHAIN, threads
        )
        freq = np.sum(parts, axis=0)
        row = freq / reps
        matrix[i] = row
        errors[i] = np.sqrt(row * (1.0 - row) / reps)
    return TransitionEstimate(t=t, matrix=matrix, route="monte_carlo", std_errors=errors)


def empirical_state_histogram(
    p: SemiMarkovProcess,
    t: float,
    start: int,
    reps: int = 10_000,
    seed: int = 0,
    threads: int = 1,
    cap: int = DEFAULT_EVENT_CAP,
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical distribution of X(t) from one start state, with SEs."""
    if not 0 <= start < p.n_states:
        raise ParameterDomainError("start state out of range")
    from .renewal import _count_block

    n = p.n_states
    chain_cum = np.cumsum(p.chain.entries, axis=1)

    def block(gen, m):
        counts = _count_block(p.waiting, t, gen, m, cap)
        states = _evolve_states(chain_cum, counts, start, gen)
        return np.bincount(states, minlength=n)

    parts = streams.map_blocks(block, reps, seed, streams.DOMAIN_CHAIN, threads)
    freq = np.sum(parts, axis=0)
    row = freq / reps
    return row, np.sqrt(row * (1.0 - row) / reps)


@dataclass(frozen=True)
class TvProfile:
    times: np.ndarray
    values: np.ndarray
    route: str
    aggregation: str


def _tv_evaluator(p, route, aggregation, reps, seed, threads, cfg=None):
    """Returns tv(t); Monte Carlo inputs are re-seeded per t so repeated
    evaluation at the same horizon reproduces the same value."""
    pi = stationary_distribution(p.chain)
    cache = PowerCache(p.chain, pi)
    piw = pi.weights
    if route == "spectral":
        dec = spectral_decomposition(p.chain)

        def tv_at(t: float) -> float:
            est = transition_matrix_spectral(p, t, dec, cfg)
            return aggregate_tv(row_tv_to(est.matrix, piw), aggregation)
    elif route == "series":

        def tv_at(t: float) -> float:
            pmf = estimate_counting_pmf(
                p.waiting, t, None, reps, streams.derived_seed(seed, streams.float_key(t)),
                threads,
            )
            est = transition_matrix_series(p, t, pmf, cache)
            return aggregate_tv(row_tv_to(est.matrix, piw), aggregation)
    elif route == "monte_carlo":

        def tv_at(t: float) -> float:
            est = transition_matrix_monte_carlo(
                p, t, reps, streams.derived_seed(seed, streams.float_key(t)), threads
            )
            return aggregate_tv(row_tv_to(est.matrix, piw), aggregation)
    else:
        raise ParameterDomainError(f"unknown route {route!r}")
    return tv_at


def tv_profile(
    p: SemiMarkovProcess,
    times,
    route: str = "spectral",
    aggregation: str = "sum",
    reps: int = 20_000,
    seed: int = 0,
    threads: int = 1,
    cfg: MLEvalConfig | None = None,
    decay_factor: float = 10.0,
    check_decay: bool = True,
) -> TvProfile:
    """Aggregated TV distance to stationarity along a time grid.

    When the grid spans at least two decades the last value must sit below
    the first by `decay_factor`, a cheap convergence sanity check.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(times < 0):
        raise ParameterDomainError("need a nonnegative, nonempty time grid")
    tv_at = _tv_evaluator(p, route, aggregation, reps, seed, threads, cfg)
    pi = stationary_distribution(p.chain).weights
    values = np.empty(times.size)
    for idx, t in enumerate(times):
        if t == 0:
            values[idx] = aggregate_tv(row_tv_to(np.eye(p.n_states), pi), aggregation)
        else:
            values[idx] = tv_at(float(t))
    pos = times[times > 0]
    if check_decay and pos.size >= 2 and pos.max() / pos.min() >= 100.0:
        if values[-1] > values[0] / decay_factor:
            raise NotConvergedError(
                f"profile failed to decay by {decay_factor}x over the grid "
                f"({values[0]:.3g} -> {values[-1]:.3g})"
            )
    return TvProfile(times=times, values=values, route=route, aggregation=aggregation)


@dataclass(frozen=True)
class SearchGrid:
    t_min: float = 1e-2
    t_max: float = 1e8
    points_per_decade: int = 8

    def times(self) -> np.ndarray:
        decades = math.log10(self.t_max / self.t_min)
        n = max(2, int(round(decades * self.points_per_decade)) + 1)
        return np.geomspace(self.t_min, self.t_max, n)


@dataclass(frozen=True)
class CertifiedTime:
    """A threshold time together with the evidence backing it."""

    time: float
    eps: float
    margin: float
    grid: np.ndarray
    values: np.ndarray
    recheck: tuple[float, float]
    route: str
    aggregation: str


def _search_threshold(tv_at, eps: float, grid: np.ndarray, route, aggregation) -> CertifiedTime:
    values = np.array([tv_at(float(t)) for t in grid])
    ok = values <= eps
    suffix = np.logical_and.accumulate(ok[::-1])[::-1]
    hits = np.flatnonzero(suffix)
    if hits.size == 0:
        raise NotReachedError(
            f"criterion tv <= {eps} never persisted on the grid (min tail value "
            f"{values[-1]:.4g}); enlarge t_max"
        )
    i = int(hits[0])
    t_star = float(grid[i])
    if i > 0:
        mid = math.sqrt(grid[i - 1] * grid[i])
        if tv_at(mid) <= eps:
            t_star = mid
    v_at = tv_at(t_star)
    v_later = tv_at(2.0 * t_star)
    if v_at > eps or v_later > eps:
        raise NotReachedError(
            f"re-certification failed at t={t_star:.6g}: tv(t)={v_at:.4g}, tv(2t)={v_later:.4g}"
        )
    return CertifiedTime(
        time=t_star, eps=eps, margin=eps - v_at, grid=grid, values=values,
        recheck=(v_at, v_later), route=route, aggregation=aggregation,
    )


def continuous_mixing_time(
    p: SemiMarkovProcess,
    eps: float,
    route: str = "spectral",
    search: SearchGrid = SearchGrid(),
    aggregation: str = "sum",
    reps: int = 20_000,
    seed: int = 0,
    threads: int = 1,
    cfg: MLEvalConfig | None = None,
) -> CertifiedTime:
    """Smallest grid time where the aggregated TV stays at or below eps.

    The criterion must persist across every later grid point (the profile is
    not provably monotone); the reported time is refined by one bisection
    step between the bracketing neighbours and re-checked at t and 2t.
    """
    if not 0 < eps < 1:
        raise ParameterDomainError("eps must lie in (0, 1)")
    tv_at = _tv_evaluator(p, route, aggregation, reps, seed, threads, cfg)
    return _search_threshold(tv_at, eps, search.times(), route, aggregation)


@dataclass(frozen=True)
class ExpectedTvEstimate:
    """Monte Carlo estimate of max_i E || q^(N_t)_{i,.} - pi ||."""

    t: float
    value: float
    per_state: np.ndarray
    std_errors: np.ndarray
    replications: int


def expected_tv_distance(
    p: SemiMarkovProcess,
    t: float,
    reps: int = 20_000,
    seed: int = 0,
    powers: PowerCache | None = None,
    threads: int = 1,
    cap: int = DEFAULT_EVENT_CAP,
) -> ExpectedTvEstimate:
    """Average (over N_t draws) of the exact n-step TV, maximised over starts.

    The TV at each drawn power comes from the shared power cache; powers past
    the point where every row distance falls below 1e-14 are collapsed, so
    the cache stays bounded by the embedded mixing scale.
    """
    if reps < 1000:
        raise ParameterDomainError("reps must be at least 10^3")
    from .renewal import count_events

    cache = powers or PowerCache(p.chain)
    counts = count_events(
        p.waiting, t, reps,
        streams.derived_seed(seed, streams.DOMAIN_EXPECTED_TV, streams.float_key(t)),
        threads, cap,
    )
    uniq, inverse = np.unique(counts, return_inverse=True)
    rows = np.empty((uniq.size, p.n_states))
    cutoff = None
    for j, n in enumerate(uniq):
        n = int(n)
        if cutoff is not None and n >= cutoff:
            rows[j] = cache.tv_rows(cutoff)
            continue
        rows[j] = cache.tv_rows(n)
        if cutoff is None and rows[j].max() < 1e-14:
            cutoff = n
    samples = rows[inverse]  # (reps, n_states)
    per_state = samples.mean(axis=0)
    ses = samples.std(axis=0, ddof=1) / math.sqrt(reps)
    return ExpectedTvEstimate(
        t=t, value=float(per_state.max()), per_state=per_state,
        std_errors=ses, replications=reps,
    )


def tilde_mixing_time(
    p: SemiMarkovProcess,
    eps: float,
    reps: int = 20_000,
    search: SearchGrid = SearchGrid(),
    seed: int = 0,
    threads: int = 1,
) -> CertifiedTime:
    """Threshold time for the expected-TV distance, with the same
    persistence guard and re-certification as the plain mixing time."""
    if not 0 < eps < 1:
        raise ParameterDomainError("eps must lie in (0, 1)")
    cache = PowerCache(p.chain)

    def tv_at(t: float) -> float:
        return expected_tv_distance(p, t, reps, seed, cache, threads).value

    return _search_threshold(tv_at, eps, search.times(), "expected_tv", "max")


def ehrenfest_chain(d: int, laziness: float) -> StochasticMatrix:
    """Lazy urn chain on {0..d}: hold with the laziness probability, else
    move one uniformly chosen ball.  Reversible with Binomial(d, 1/2)
    stationary law; aperiodic and irreducible for laziness in (0, 1)."""
    if d < 1:
        raise ParameterDomainError("d must be at least 1")
    if not 0.0 < laziness < 1.0:
        raise ParameterDomainError("laziness must lie in (0, 1)")
    n = d + 1
    q = np.zeros((n, n))
    for k in range(n):
        q[k, k] = laziness
        if k > 0:
            q[k, k - 1] = (1.0 - laziness) * k / d
        if k < d:
            q[k, k + 1] = (1.0 - laziness) * (d - k) / d
    return StochasticMatrix(q)


@dataclass(frozen=True)
class MixingReport:
    """Bundle of mixing estimates and bound values for one configuration."""

    eps: float
    embedded_time: int
    continuous_time: float | None
    tilde_time: float | None
    bounds: dict
    grid: np.ndarray
    aggregation: str = "sum"
