"""Finite discrete Markov chain linear algebra.

Validation of stochastic matrices, stationary distributions, n-step
transitions, total variation distance, embedded mixing times, spectral
analysis and the expected meeting time of two independent copies of the
chain (the constant driving the coupling tail bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    NegativeEntryError,
    NonSquareError,
    NotConvergedError,
    NotDiagonalizableError,
    PeriodicChainError,
    ReducibleChainError,
    RowSumError,
    SingularSystemError,
)

ROW_SUM_TOL = 1e-12
ROW_RENORM_TOL = 1e-9


@dataclass(frozen=True)
class StochasticMatrix:
    """Validated row-stochastic matrix."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NonSquareError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise NonSquareError("matrix must have dimension >= 1")
        if np.any(a < 0):
            i, j = np.argwhere(a < 0)[0]
            raise NegativeEntryError(f"negative entry {a[i, j]!r} at ({i}, {j})")
        sums = a.sum(axis=1)
        bad = np.abs(sums - 1.0) > ROW_RENORM_TOL
        if np.any(bad):
            raise RowSumError(f"row sums {sums[bad]} deviate from 1 beyond {ROW_RENORM_TOL}")
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            a = a / sums[:, None]
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n_states(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other: "StochasticMatrix") -> "StochasticMatrix":
        return StochasticMatrix(self.entries @ other.entries)


@dataclass(frozen=True)
class ProbabilityVector:
    """Nonnegative vector summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise DimensionMismatchError(f"expected a vector, got shape {w.shape}")
        if np.any(w < 0):
            raise NegativeEntryError("probability vector has a negative entry")
        s = w.sum()
        if abs(s - 1.0) > ROW_RENORM_TOL:
            raise RowSumError(f"vector sums to {s!r}, not 1")
        if abs(s - 1.0) > ROW_SUM_TOL:
            w = w / s
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition Q = right @ diag(eigenvalues) @ left.

    Rows of `left_matrix` are left eigenvectors; `right_matrix` is its
    inverse (columns are right eigenvectors).  When the unit eigenvalue is
    simple, the first left row is the stationary distribution and the first
    right column is all ones.
    """

    eigenvalues: np.ndarray
    left_matrix: np.ndarray
    right_matrix: np.ndarray

    @property
    def second_modulus(self) -> float:
        if self.eigenvalues.size < 2:
            return 0.0
        return float(np.abs(self.eigenvalues[1]))


@dataclass(frozen=True)
class CouplingStats:
    """Worst-case expected meeting time of two independent copies.

    `ell_star` is max_i of the expected diagonal hitting time of the product
    chain started from (delta_i, pi).  The meeting-time tail is bounded by
    ``tail_prefactor * exp(-tail_rate * n)``; the prefactor e and rate
    1/(e*ell_star) come from the block Markov-inequality argument.
    """

    ell_star: float
    tail_prefactor: float = math.e
    tail_rate: float = field(default=math.nan)

    def __post_init__(self):
        if self.ell_star < 0:
            raise NegativeEntryError("ell_star must be nonnegative")
        if math.isnan(self.tail_rate):
            rate = math.inf if self.ell_star == 0 else 1.0 / (math.e * self.ell_star)
            object.__setattr__(self, "tail_rate", rate)


def validate_stochastic(raw) -> StochasticMatrix:
    """Validate a raw square array as a transition matrix.

    Rows are renormalized only when within 1e-9 of summing to one; anything
    further off raises RowSumError.
    """
    return StochasticMatrix(np.asarray(raw, dtype=float))


def _support(q: StochasticMatrix) -> np.ndarray:
    return q.entries > 0.0


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    while frontier:
        nxt = adj[frontier].any(axis=0) & ~seen
        seen |= nxt
        frontier = list(np.flatnonzero(nxt))
    return seen


def is_irreducible(q: StochasticMatrix) -> bool:
    adj = _support(q)
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())


def period(q: StochasticMatrix) -> int:
    """Period of an irreducible chain (gcd of cycle lengths)."""
    if not is_irreducible(q):
        raise ReducibleChainError("period is defined per communicating class")
    adj = _support(q)
    n = q.n_states
    level = np.full(n, -1, dtype=int)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in range(n):
        for v in np.flatnonzero(adj[u]):
            g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g) if g else 1


def is_aperiodic(q: StochasticMatrix) -> bool:
    return period(q) == 1


def require_ergodic(q: StochasticMatrix) -> None:
    if not is_irreducible(q):
        raise ReducibleChainError("chain has more than one communicating class")
    if period(q) != 1:
        raise PeriodicChainError(f"chain has period {period(q)}")


def stationary_distribution(q: StochasticMatrix) -> ProbabilityVector:
    """Unique solution of pi Q = pi, sum(pi) = 1 for an irreducible chain."""
    if not is_irreducible(q):
        raise ReducibleChainError("stationary distribution needs an irreducible chain")
    n = q.n_states
    a = np.vstack([q.entries.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    if np.any(pi < -1e-12):
        raise SingularSystemError("stationary solve produced negative mass")
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    if np.max(np.abs(pi @ q.entries - pi)) > 1e-10:
        raise SingularSystemError("stationary residual above 1e-10")
    return ProbabilityVector(pi)


def n_step(q: StochasticMatrix, n: int) -> StochasticMatrix:
    """Q**n by repeated squaring; Q**0 is the identity."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return StochasticMatrix(np.linalg.matrix_power(q.entries, n))


def tv_distance(mu: ProbabilityVector, nu: ProbabilityVector) -> float:
    """Half the L1 distance between two probability vectors."""
    if len(mu) != len(nu):
        raise DimensionMismatchError(f"lengths {len(mu)} and {len(nu)} differ")
    return 0.5 * float(np.abs(mu.weights - nu.weights).sum())


def row_tv_to(matrix: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Vector of per-row total variation distances to pi."""
    return 0.5 * np.abs(matrix - pi[None, :]).sum(axis=1)


def aggregate_tv(rows: np.ndarray, aggregation: str) -> float:
    if aggregation == "sum":
        return float(rows.sum())
    if aggregation == "max":
        return float(rows.max())
    raise ValueError(f"unknown aggregation {aggregation!r}")


class PowerCache:
    """Incrementally cached powers of Q and their row-TV distances to pi.

    Shared read-only across the series route, the windowed TV bound and the
    expected-TV estimator so one pass of matrix products serves all of them.
    """

    def __init__(self, q: StochasticMatrix, pi: ProbabilityVector | None = None):
        self.q = q
        self.pi = pi if pi is not None else stationary_distribution(q)
        self._powers = [np.eye(q.n_states)]
        self._tv = [row_tv_to(self._powers[0], self.pi.weights)]

    def _extend(self, n: int) -> None:
        while len(self._powers) <= n:
            p = self._powers[-1] @ self.q.entries
            self._powers.append(p)
            self._tv.append(row_tv_to(p, self.pi.weights))

    def power(self, n: int) -> np.ndarray:
        self._extend(n)
        return self._powers[n]

    def tv_rows(self, n: int) -> np.ndarray:
        self._extend(n)
        return self._tv[n]


def embedded_mixing_time(
    q: StochasticMatrix,
    eps: float,
    aggregation: str = "sum",
    n_max: int = 100_000,
) -> int:
    """Smallest n with the aggregated row TV to pi at or below eps.

    Sum aggregation adds the per-start-state distances; max takes the worst
    start state.  The scan starts at n = 0 (identity), so a vacuous eps can
    return 0.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    require_ergodic(q)
    pi = stationary_distribution(q).weights
    p = np.eye(q.n_states)
    for n in range(n_max + 1):
        if aggregate_tv(row_tv_to(p, pi), aggregation) <= eps:
            return n
        p = p @ q.entries
    raise NotConvergedError(f"aggregated TV still above {eps} at n_max={n_max}")


def spectral_decomposition(
    q: StochasticMatrix, cond_threshold: float = 1e8
) -> SpectralDecomposition:
    """Eigendecomposition with eigenvalues sorted by descending modulus.

    When the unit eigenvalue is simple, the unit right eigenvector is scaled
    to all ones; inverting then makes the first left row the stationary
    distribution and the bilinear pairing the identity.  Diagonalizability
    is decided by the conditioning of the eigenvector matrix.
    """
    a = q.entries
    lam, v = np.linalg.eig(a)
    order = np.lexsort((-lam.imag, -lam.real, -np.abs(lam)))
    lam = lam[order]
    v = v[:, order]
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise NotDiagonalizableError(f"eigenvector condition number {cond:.3e}")
    unit_simple = lam.size < 2 or abs(lam[1]) < 1.0 - 1e-10
    if unit_simple:
        # Q 1 = 1 exactly for a validated matrix, so the scaling is exact.
        v = v.copy()
        v[:, 0] = 1.0
    left = np.linalg.inv(v)
    recon_err = np.max(np.abs((v * lam[None, :]) @ left - a))
    if recon_err > 1e-9:
        raise NotDiagonalizableError(f"reconstruction error {recon_err:.3e}")
    return SpectralDecomposition(eigenvalues=lam, left_matrix=left, right_matrix=v)


def spectral_gap(q: StochasticMatrix, cond_threshold: float = 1e8) -> float:
    """1 - |lambda_2| for an ergodic diagonalizable chain."""
    require_ergodic(q)
    dec = spectral_decomposition(q, cond_threshold)
    return 1.0 - dec.second_modulus


def is_reversible(q: StochasticMatrix, tol: float = 1e-10) -> bool:
    """Detailed balance check pi_i q_ij = pi_j q_ji within tol."""
    pi = stationary_distribution(q).weights
    flow = pi[:, None] * q.entries
    return bool(np.max(np.abs(flow - flow.T)) <= tol)


def mixing_time_sandwich(q: StochasticMatrix, eps: float, c_q: float = 1.0) -> dict:
    """Spectral-gap mixing-time sandwich, reported for reversible chains.

    Returns the gap together with the lower bound
    ``(1/gap - 1) |log(2 eps)|`` and the upper coefficient
    ``(1/gap) c_q |log eps|``; the bounds are only meaningful (and only
    reported as applicable) when detailed balance holds.
    """
    gap = spectral_gap(q)
    rev = is_reversible(q)
    out = {"gap": gap, "reversible": rev}
    if rev and 0 < eps < 1:
        out["lower"] = (1.0 / gap - 1.0) * abs(math.log(2 * eps))
        out["upper"] = (1.0 / gap) * c_q * abs(math.log(eps))
    return out


def coupling_hitting_expectation(q: StochasticMatrix) -> CouplingStats:
    """Expected diagonal hitting time of the independent product chain.

    Solves h(x,y) = 1 + sum_{x',y'} q_{xx'} q_{yy'} h(x',y') off the
    diagonal with h = 0 on it, then returns
    ell_star = max_i sum_y pi_y h(i, y).
    """
    require_ergodic(q)
    n = q.n_states
    if n == 1:
        return CouplingStats(ell_star=0.0)
    pi = stationary_distribution(q).weights
    kron = np.kron(q.entries, q.entries)
    off = [i * n + j for i in range(n) for j in range(n) if i != j]
    m = np.eye(len(off)) - kron[np.ix_(off, off)]
    try:
        h_off = np.linalg.solve(m, np.ones(len(off)))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("product-chain hitting system is singular") from exc
    if not np.all(np.isfinite(h_off)) or np.any(h_off < 0):
        raise SingularSystemError("product-chain hitting solve produced invalid values")
    h = np.zeros((n, n))
    for val, idx in zip(h_off, off):
        h[divmod(idx, n)] = val
    ell = float(max(h[i] @ pi for i in range(n)))
    return CouplingStats(ell_star=ell)
