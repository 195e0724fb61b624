"""Beta-Bernoulli posteriors and the three bandit policies (DG, DEG, TS).

The random-number consumption order here is a contract: the compiled kernel
in ``_kernel`` replays exactly the same draws, so both engines produce
identical traces from identical generators.

    DG   no draw, unless the argmax is tied: one ``integers(0, n_tied)``
    DEG  one ``random()``; if below epsilon one ``integers(0, K)``,
         otherwise the DG rule
    TS   one ``beta(alpha, beta)`` per arm in arm order, then the DG
         tie rule on the samples
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import InvalidConfig

PRIOR_ALPHA = 1.0
PRIOR_BETA = 1.0
DEFAULT_DEG_EPSILON = 0.05

# Tie-break policies. Arms default to the lowest index (what a plain argmax
# does); agents choosing between firms break ties uniformly.
TIE_UNIFORM = "uniform"
TIE_LOWEST = "lowest"


class Algo(IntEnum):
    """Algorithm tags; the integer value doubles as the kernel code and the
    sophistication rank used for equilibrium tie-breaking (lower = simpler)."""

    DG = 0
    DEG = 1
    TS = 2


@dataclass(frozen=True)
class AlgorithmKind:
    tag: Algo
    epsilon: float = DEFAULT_DEG_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "tag", Algo(self.tag))
        if self.tag is Algo.DEG and not 0.0 < self.epsilon < 1.0:
            raise InvalidConfig(f"DEG epsilon must lie in (0, 1), got {self.epsilon}")

    @classmethod
    def parse(cls, text: str) -> "AlgorithmKind":
        """Parse ``"DG"``, ``"TS"``, ``"DEG"`` or ``"DEG:0.1"``."""
        name, _, eps = text.strip().upper().partition(":")
        try:
            tag = Algo[name]
        except KeyError:
            raise InvalidConfig(f"unknown algorithm {text!r}") from None
        if eps:
            return cls(tag, float(eps))
        return cls(tag)

    @property
    def name(self) -> str:
        return self.tag.name

    def __str__(self) -> str:
        if self.tag is Algo.DEG and self.epsilon != DEFAULT_DEG_EPSILON:
            return f"DEG:{self.epsilon:g}"
        return self.tag.name


DG = AlgorithmKind(Algo.DG)
DEG = AlgorithmKind(Algo.DEG)
TS = AlgorithmKind(Algo.TS)


@dataclass
class BetaPosterior:
    alpha: float = PRIOR_ALPHA
    beta: float = PRIOR_BETA

    @property
    def successes(self) -> int:
        return int(self.alpha - PRIOR_ALPHA)

    @property
    def failures(self) -> int:
        return int(self.beta - PRIOR_BETA)


def posterior_mean(p: BetaPosterior) -> float:
    return p.alpha / (p.alpha + p.beta)


def posterior_sample(p: BetaPosterior, rng: np.random.Generator) -> float:
    return rng.beta(p.alpha, p.beta)


@dataclass
class AlgorithmState:
    kind: AlgorithmKind
    posteriors: list[BetaPosterior] = field(default_factory=list)
    tie_break: str = TIE_LOWEST

    @property
    def K(self) -> int:
        return len(self.posteriors)

    def means(self) -> np.ndarray:
        return np.array([posterior_mean(p) for p in self.posteriors])

    def reset(self) -> None:
        """Forget all observations (back to the fake prior)."""
        self.posteriors = [BetaPosterior() for _ in self.posteriors]


def init_algorithm_state(
    kind: AlgorithmKind, K: int, tie_break: str = TIE_LOWEST
) -> AlgorithmState:
    if K < 1:
        raise InvalidConfig(f"need at least one arm, got K={K}")
    if tie_break not in (TIE_UNIFORM, TIE_LOWEST):
        raise InvalidConfig(f"unknown tie-break policy {tie_break!r}")
    return AlgorithmState(kind, [BetaPosterior() for _ in range(K)], tie_break)


def argmax_with_ties(values: np.ndarray, rng: np.random.Generator, tie_break: str = TIE_UNIFORM) -> int:
    """Index of a maximal entry; ties resolved per ``tie_break``.

    Uniform tie-breaking consumes one ``integers`` draw only when the
    maximum is shared.
    """
    tied = np.flatnonzero(values == values.max())
    if len(tied) == 1 or tie_break == TIE_LOWEST:
        return int(tied[0])
    return int(tied[rng.integers(0, len(tied))])


def select_arm(state: AlgorithmState, rng: np.random.Generator) -> int:
    tag = state.kind.tag
    if tag is Algo.TS:
        alphas = np.array([p.alpha for p in state.posteriors])
        betas = np.array([p.beta for p in state.posteriors])
        return argmax_with_ties(rng.beta(alphas, betas), rng, state.tie_break)
    if tag is Algo.DEG and rng.random() < state.kind.epsilon:
        return int(rng.integers(0, state.K))
    return argmax_with_ties(state.means(), rng, state.tie_break)


def observe(state: AlgorithmState, arm: int, reward: int) -> AlgorithmState:
    """Conjugate update of one arm's posterior, in place; returns ``state``."""
    if not 0 <= arm < state.K:
        raise IndexError(f"arm {arm} out of range for K={state.K}")
    if reward == 1:
        state.posteriors[arm].alpha += 1.0
    elif reward == 0:
        state.posteriors[arm].beta += 1.0
    else:
        raise ValueError(f"reward must be 0 or 1, got {reward!r}")
    return state
