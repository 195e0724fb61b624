"""Measurements over game traces and their aggregation across simulations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import GameTrace

Z95 = 1.96


class InsufficientData(ValueError):
    pass


def shares(trace: GameTrace) -> np.ndarray:
    """Fraction of game rounds won by each firm; sums to 1."""
    return np.bincount(trace.firm, minlength=trace.n_firms) / trace.T


def market_share(trace: GameTrace, firm: int) -> float:
    return float(np.count_nonzero(trace.firm == firm)) / trace.T


def eeog(choices: Sequence[int] | GameTrace) -> int:
    """Effective end of game: the last round ``t`` (1-based) whose agent chose
    a different firm than agent ``t - 1``; 0 when nobody ever switched."""
    c = np.asarray(choices.firm if isinstance(choices, GameTrace) else choices)
    switches = np.flatnonzero(c[1:] != c[:-1])
    return int(switches[-1]) + 2 if len(switches) else 0


def market_regret(arms: Sequence[int], mu: Sequence[float],
                  prefix_arms: Sequence[int] | None = None) -> float:
    """``horizon * max(mu) - sum(mu[a_t])``; ``prefix_arms`` (warm-start and
    monopoly agents) are counted too when given."""
    mu = np.asarray(mu, dtype=float)
    arms = np.asarray(arms, dtype=np.int64)
    if prefix_arms is not None and len(prefix_arms):
        arms = np.concatenate([np.asarray(prefix_arms, dtype=np.int64), arms])
    if len(arms) == 0:
        raise ValueError("no arm choices")
    return math.fsum(mu.max() - mu[arms])


def trace_regret(trace: GameTrace, mu: Sequence[float], include_prefix: bool = False) -> float:
    prefix = np.concatenate(trace.warm_arms) if include_prefix and trace.warm_arms else None
    return market_regret(trace.arm, mu, prefix)


def regret_curve(arms: Sequence[int], mu: Sequence[float], offset: float = 0.0) -> np.ndarray:
    """Cumulative market regret after each round, starting from ``offset``."""
    mu = np.asarray(mu, dtype=float)
    return offset + np.cumsum(mu.max() - mu[np.asarray(arms)])


def welfare(trace: GameTrace, mu: Sequence[float]) -> float:
    """Mean expected reward per game-round agent."""
    mu = np.asarray(mu, dtype=float)
    return float(mu[trace.arm].mean())


def ci95(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Normal-approximation half width, ``1.96 * sqrt(var / N)``, population variance."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    return Z95 * np.sqrt(values.var(axis=axis) / n)


@dataclass
class CellSummary:
    N: int
    mean: float
    ci95: float
    variance: float
    eeog_mean: float
    eeog_median: float


def aggregate_cell(shares: Sequence[float], eeogs: Sequence[int]) -> CellSummary:
    s = np.asarray(shares, dtype=float)
    e = np.asarray(eeogs, dtype=float)
    if len(s) < 2:
        raise InsufficientData(f"need at least 2 simulations, got {len(s)}")
    if len(e) != len(s):
        raise ValueError("shares and eeogs differ in length")
    var = float(s.var())
    return CellSummary(
        N=len(s),
        mean=float(s.mean()),
        ci95=Z95 * math.sqrt(var / len(s)),
        variance=var,
        eeog_mean=float(e.mean()),
        eeog_median=float(np.median(e)),
    )


@dataclass
class TrajectorySeries:
    value: np.ndarray
    ci95: np.ndarray

    def __len__(self) -> int:
        return len(self.value)


def mean_trajectory(scores: np.ndarray) -> TrajectorySeries:
    """Per-round mean over simulations of an (N, T) array."""
    scores = np.asarray(scores, dtype=float)
    return TrajectorySeries(scores.mean(axis=0), ci95(scores))


def relative_reputation(scores_a: np.ndarray, scores_b: np.ndarray) -> TrajectorySeries:
    """Per round, the fraction of simulations where A's reputation beats B's,
    ties counting one half. Inputs are (N, T), row ``i`` of both on the same
    mean reward vector and table."""
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"mismatched trace collections {a.shape} vs {b.shape}")
    wins = (a > b) + 0.5 * (a == b)
    return mean_trajectory(wins)


def exploration_disadvantage_period(series: TrajectorySeries | Sequence[float],
                                    after: int = 0) -> tuple[int, int] | None:
    """First run of rounds (1-based, inclusive) where the value sits below 1/2,
    ignoring the first ``after`` rounds; ``None`` if there is none."""
    v = np.asarray(series.value if isinstance(series, TrajectorySeries) else series)
    below = np.flatnonzero(v[after:] < 0.5)
    if not len(below):
        return None
    start = int(below[0]) + after
    above = np.flatnonzero(v[start:] >= 0.5)
    end = start + int(above[0]) - 1 if len(above) else len(v) - 1
    return start + 1, end + 1


@dataclass
class Snapshot:
    t: int
    values: np.ndarray
    counts: np.ndarray
    edges: np.ndarray


def reputation_snapshot(scores: np.ndarray, t: int, bins: int | np.ndarray = 20,
                        value_range: tuple[float, float] = (0.0, 1.0)) -> Snapshot:
    """Histogram across simulations of the reputation at round ``t`` (1-based)."""
    scores = np.asarray(scores, dtype=float)
    if not 1 <= t <= scores.shape[1]:
        raise ValueError(f"round {t} outside 1..{scores.shape[1]}")
    values = scores[:, t - 1]
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    return Snapshot(t, values, counts, edges)


def difference_snapshot(scores_a: np.ndarray, scores_b: np.ndarray, t: int,
                        bins: int | np.ndarray = 40) -> Snapshot:
    """Histogram of reputation differences A - B at round ``t``."""
    diff = np.asarray(scores_a, dtype=float) - np.asarray(scores_b, dtype=float)
    return reputation_snapshot(diff, t, bins, value_range=(-1.0, 1.0))


def find_pure_nash(matrix: np.ndarray, ranks: Sequence[int] | None = None,
                   tol: float = 0.0, col_payoff: np.ndarray | None = None) -> list[tuple[int, int]]:
    """Pure equilibria ``(i, j)`` of a two-player game where the row player
    earns ``matrix[i, j]``.

    Without ``col_payoff`` the game is symmetric: the column player playing
    ``j`` against ``i`` earns ``matrix[j, i]``. Payoffs within ``tol`` count
    as ties, and a tied player prefers the strategy with the lower rank (the
    less advanced algorithm). Strategy ``i``'s rank defaults to ``i``.
    """
    R = np.asarray(matrix, dtype=float)
    n = R.shape[0]
    if R.ndim != 2 or R.shape != (n, n) or n == 0 or not np.all(np.isfinite(R)):
        raise ValueError("payoff matrix must be a finite square array")
    C = R.T if col_payoff is None else np.asarray(col_payoff, dtype=float)
    if C.shape != R.shape:
        raise ValueError("column payoffs must match the row payoffs in shape")
    ranks = list(range(n)) if ranks is None else list(ranks)
    if len(ranks) != n:
        raise ValueError("one rank per strategy")

    def keeps(payoff: np.ndarray, own: int) -> bool:
        # payoff[k]: what the player would earn switching to k
        for k in range(n):
            if k == own:
                continue
            gain = payoff[k] - payoff[own]
            if gain > tol or (abs(gain) <= tol and ranks[k] < ranks[own]):
                return False
        return True

    return [(i, j) for i in range(n) for j in range(n)
            if keeps(R[:, j], i) and keeps(C[i, :], j)]


def weakly_dominant(matrix: np.ndarray, tol: float = 0.0, minimize: bool = False) -> list[int]:
    """Strategies (rows) at least as good as every alternative against every
    column, within ``tol``. ``minimize`` flips the sense, e.g. for an
    incumbent choosing the column that minimizes the entrant's share."""
    S = np.asarray(matrix, dtype=float)
    if minimize:
        S = -S.T
    return [i for i in range(S.shape[0]) if np.all(S[i] >= S - tol)]
