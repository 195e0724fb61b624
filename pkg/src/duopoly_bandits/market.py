"""The competition game: reputation windows, agent choice, warm starts and
regimes (monopoly, permanent duopoly, temporary monopoly and its two
advantage ablations, N-firm markets).

Two engines run the same game. ``Market`` is the plain-Python reference,
driven step by step through the operations below; ``_kernel.play`` is a
compiled replay of it for sweeps. Both consume each firm's algorithm stream
and the agents' stream in the same order, so they produce identical traces.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .bandit_core import (
    TIE_LOWEST,
    TIE_UNIFORM,
    AlgorithmKind,
    AlgorithmState,
    argmax_with_ties,
    init_algorithm_state,
    observe,
    select_arm,
)
from .errors import InvalidConfig
from .instances import RealizationTable
from .seeding import RngBundle


class ReputationWindow:
    """Sliding window over the last ``capacity`` rewards a firm delivered."""

    def __init__(self, capacity: int = 100):
        if capacity < 1:
            raise InvalidConfig(f"window capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.contents: deque[int] = deque(maxlen=capacity)
        self.total = 0

    def push(self, reward: int) -> None:
        if len(self.contents) == self.capacity:
            self.total -= self.contents[0]
        self.contents.append(reward)
        self.total += reward

    def __len__(self) -> int:
        return len(self.contents)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ReputationWindow) and self.capacity == other.capacity
                and list(self.contents) == list(other.contents))


class EmptyWindow(RuntimeError):
    pass


def reputation_score(window: ReputationWindow) -> float:
    if not window.contents:
        raise EmptyWindow("reputation of a firm that has served nobody is undefined")
    return window.total / len(window.contents)


@dataclass(frozen=True)
class ChoiceRule:
    """HardMax (``epsilon == 0``) or HardMax-with-randomness."""

    epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise InvalidConfig(f"HMR epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def name(self) -> str:
        return "HMR" if self.epsilon > 0 else "HM"


HARDMAX = ChoiceRule()


def HMR(epsilon: float) -> ChoiceRule:
    if epsilon <= 0:
        raise InvalidConfig(f"HMR epsilon must lie in (0, 1), got {epsilon}")
    return ChoiceRule(epsilon)


def choose_firm(rule: ChoiceRule, scores: Sequence[float], rng: np.random.Generator,
                tie_break: str = TIE_UNIFORM) -> int:
    """Index of the firm the arriving agent picks.

    A lone firm is returned without touching ``rng``. Under HMR one
    ``random()`` decides whether the agent picks uniformly (one more
    ``integers`` draw); otherwise it takes a max-reputation firm.
    """
    if len(scores) == 0:
        raise ValueError("no firms to choose from")
    if len(scores) == 1:
        return 0
    if rule.epsilon > 0 and rng.random() < rule.epsilon:
        return int(rng.integers(0, len(scores)))
    return argmax_with_ties(np.asarray(scores, dtype=float), rng, tie_break)


class RegimeKind(Enum):
    MONOPOLY = "monopoly"
    DUOPOLY = "duopoly"
    TEMPORARY_MONOPOLY = "temp-monopoly"
    MULTI_FIRM = "multi-firm"


class Variant(Enum):
    FULL = "full"
    DATA = "data"  # monopoly rounds train the posterior only
    REPUTATION = "reputation"  # monopoly rounds fill the window only

    @classmethod
    def parse(cls, text: str) -> "Variant":
        aliases = {"full": cls.FULL, "data": cls.DATA, "data-advantage": cls.DATA,
                   "reputation": cls.REPUTATION, "reputation-advantage": cls.REPUTATION,
                   "rep": cls.REPUTATION}
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise InvalidConfig(f"unknown variant {text!r}") from None


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    X: int = 0
    variant: Variant = Variant.FULL
    F: int = 2

    def __post_init__(self):
        if self.X < 0:
            raise InvalidConfig(f"monopoly length X must be >= 0, got {self.X}")
        if self.kind is RegimeKind.MULTI_FIRM and self.F < 2:
            raise InvalidConfig(f"multi-firm market needs F >= 2, got {self.F}")

    @property
    def n_firms(self) -> int:
        return {RegimeKind.MONOPOLY: 1, RegimeKind.DUOPOLY: 2,
                RegimeKind.TEMPORARY_MONOPOLY: 2}.get(self.kind, self.F)


MONOPOLY = Regime(RegimeKind.MONOPOLY)
DUOPOLY = Regime(RegimeKind.DUOPOLY)


def temporary_monopoly(X: int, variant: Variant = Variant.FULL) -> Regime:
    """Firm 1 is the incumbent, firm 0 the entrant."""
    return Regime(RegimeKind.TEMPORARY_MONOPOLY, X=X, variant=variant)


def multi_firm(F: int) -> Regime:
    return Regime(RegimeKind.MULTI_FIRM, F=F)


INCUMBENT = 1


@dataclass(frozen=True)
class GameConfig:
    firms: tuple[AlgorithmKind, ...]
    regime: Regime = DUOPOLY
    T: int = 2000
    T0: int = 20
    M: int = 100
    rule: ChoiceRule = HARDMAX
    # Arms tie to the lowest index (plain argmax); agents tie uniformly.
    arm_tie_break: str = TIE_LOWEST
    agent_tie_break: str = TIE_UNIFORM
    # Entrant warms up on rows X..X+T0-1, alongside the incumbent's last
    # warm-start rounds; False puts it on rows 0..T0-1.
    entrant_after_monopoly: bool = True

    def __post_init__(self):
        object.__setattr__(self, "firms", tuple(self.firms))
        if self.T < 1:
            raise InvalidConfig(f"T must be >= 1, got {self.T}")
        if self.T0 < 1:
            raise InvalidConfig(f"T0 must be >= 1 so every window is seeded, got {self.T0}")
        if self.M < 1:
            raise InvalidConfig(f"M must be >= 1, got {self.M}")
        if len(self.firms) != self.regime.n_firms:
            raise InvalidConfig(
                f"{self.regime.kind.value} needs {self.regime.n_firms} firms, got {len(self.firms)}")
        for policy in (self.arm_tie_break, self.agent_tie_break):
            if policy not in (TIE_UNIFORM, TIE_LOWEST):
                raise InvalidConfig(f"unknown tie-break policy {policy!r}")

    @property
    def n_firms(self) -> int:
        return len(self.firms)

    def monopoly_rounds(self, firm: int) -> int:
        if self.regime.kind is RegimeKind.TEMPORARY_MONOPOLY and firm == INCUMBENT:
            return self.regime.X
        return 0

    def warm_rounds(self, firm: int) -> int:
        return self.monopoly_rounds(firm) + self.T0

    def first_warm_row(self, firm: int) -> int:
        if (self.entrant_after_monopoly and self.regime.kind is RegimeKind.TEMPORARY_MONOPOLY
                and firm != INCUMBENT):
            return self.regime.X
        return 0

    @property
    def rows_needed(self) -> int:
        """Smallest ``t_max`` a table must have for this game."""
        return max(self.first_warm_row(f) + self.warm_rounds(f) for f in range(self.n_firms))

    def check_table(self, table: RealizationTable) -> None:
        if table.K < 1:
            raise InvalidConfig("empty table")
        if self.rows_needed > table.t_max:
            raise InvalidConfig(
                f"warm start needs {self.rows_needed} rows but table reserves t_max={table.t_max}")
        if self.T > table.horizon:
            raise InvalidConfig(f"T={self.T} exceeds the table's {table.horizon} game rows")


@dataclass
class FirmState:
    algo: AlgorithmState
    window: ReputationWindow
    served: int = 0


@dataclass
class GameTrace:
    firm: np.ndarray  # (T,) chosen firm per game round
    arm: np.ndarray  # (T,) arm played
    reward: np.ndarray  # (T,) realized 0/1 reward
    scores: np.ndarray  # (T, F) reputations each agent saw before choosing
    warm_arms: list[np.ndarray] = field(default_factory=list)  # per firm
    warm_rewards: list[np.ndarray] = field(default_factory=list)

    @property
    def T(self) -> int:
        return len(self.firm)

    @property
    def n_firms(self) -> int:
        return self.scores.shape[1]

    def same_as(self, other: "GameTrace") -> bool:
        return (np.array_equal(self.firm, other.firm) and np.array_equal(self.arm, other.arm)
                and np.array_equal(self.reward, other.reward)
                and np.array_equal(self.scores, other.scores)
                and len(self.warm_arms) == len(other.warm_arms)
                and all(np.array_equal(a, b) for a, b in zip(self.warm_arms, other.warm_arms))
                and all(np.array_equal(a, b) for a, b in zip(self.warm_rewards, other.warm_rewards)))


def warm_start_firm(firm: FirmState, table: RealizationTable, start_row: int, rounds: int,
                    feed_reputation: bool, feed_posterior: bool, rng: np.random.Generator,
                    log: list | None = None) -> FirmState:
    """Serve ``rounds`` uncontested agents reading table rows from ``start_row``."""
    if start_row + rounds > table.t_max:
        raise InvalidConfig(
            f"warm start rows {start_row}..{start_row + rounds - 1} overrun t_max={table.t_max}")
    W = table.W
    for r in range(start_row, start_row + rounds):
        arm = select_arm(firm.algo, rng)
        reward = int(W[r, arm])
        if feed_posterior:
            observe(firm.algo, arm, reward)
        if feed_reputation:
            firm.window.push(reward)
        firm.served += 1
        if log is not None:
            log.append((arm, reward))
    return firm


class Market:
    """Reference engine. ``warm_start()`` then ``step()`` T times, or ``run()``."""

    def __init__(self, cfg: GameConfig, table: RealizationTable, rngs: RngBundle):
        cfg.check_table(table)
        if len(rngs.firms) != cfg.n_firms:
            raise InvalidConfig(f"{cfg.n_firms} firms but {len(rngs.firms)} algorithm streams")
        self.cfg = cfg
        self.table = table
        self.rngs = rngs
        self.firms = [
            FirmState(init_algorithm_state(kind, table.K, cfg.arm_tie_break),
                      ReputationWindow(cfg.M))
            for kind in cfg.firms
        ]
        self.warm_logs: list[list[tuple[int, int]]] = [[] for _ in cfg.firms]
        self.t = 0

    def warm_start(self) -> None:
        variant = self.cfg.regime.variant
        for f, firm in enumerate(self.firms):
            X, T0 = self.cfg.monopoly_rounds(f), self.cfg.T0
            start = self.cfg.first_warm_row(f)
            rng, log = self.rngs.firms[f], self.warm_logs[f]
            if X:
                warm_start_firm(firm, self.table, start, X, feed_reputation=variant is not Variant.DATA,
                                feed_posterior=True, rng=rng, log=log)
                if variant is Variant.REPUTATION:
                    firm.algo.reset()
            warm_start_firm(firm, self.table, start + X, T0, True, True, rng, log)

    def scores(self) -> list[float]:
        return [reputation_score(f.window) for f in self.firms]

    def step(self) -> tuple[int, int, int, list[float]]:
        if self.t >= self.cfg.T:
            raise RuntimeError("game is over")
        scores = self.scores()
        f = choose_firm(self.cfg.rule, scores, self.rngs.agent, self.cfg.agent_tie_break)
        firm = self.firms[f]
        arm = select_arm(firm.algo, self.rngs.firms[f])
        reward = int(self.table.W[self.table.t_max + self.t, arm])
        observe(firm.algo, arm, reward)
        firm.window.push(reward)
        firm.served += 1
        self.t += 1
        return f, arm, reward, scores

    def run(self) -> GameTrace:
        self.warm_start()
        T, F = self.cfg.T, self.cfg.n_firms
        firm = np.empty(T, np.int64)
        arm = np.empty(T, np.int64)
        reward = np.empty(T, np.uint8)
        scores = np.empty((T, F))
        for t in range(T):
            firm[t], arm[t], reward[t], scores[t] = self.step()
        return GameTrace(
            firm, arm, reward, scores,
            warm_arms=[np.array([a for a, _ in log], np.int64) for log in self.warm_logs],
            warm_rewards=[np.array([r for _, r in log], np.uint8) for log in self.warm_logs],
        )


def run_competition(cfg: GameConfig, table: RealizationTable, rngs: RngBundle,
                    engine: str = "kernel") -> GameTrace:
    """Play one game. ``engine`` is ``"kernel"`` (compiled) or ``"python"``."""
    if engine == "python":
        return Market(cfg, table, rngs).run()
    if engine != "kernel":
        raise InvalidConfig(f"unknown engine {engine!r}")
    from . import _kernel

    return _kernel.run(cfg, table, rngs)


@dataclass
class IsolationTrace:
    scores: np.ndarray  # (T,) reputation seen at the start of each round
    arm: np.ndarray
    reward: np.ndarray


def run_isolation(kind: AlgorithmKind, table: RealizationTable, T: int, T0: int,
                  rng: np.random.Generator, M: int = 100, engine: str = "kernel",
                  arm_tie_break: str = TIE_LOWEST) -> IsolationTrace:
    """One firm, no competitor, same row addressing as the game."""
    cfg = GameConfig((kind,), MONOPOLY, T=T, T0=T0, M=M, arm_tie_break=arm_tie_break)
    trace = run_competition(cfg, table, RngBundle(agent=rng, firms=(rng,)), engine)
    return IsolationTrace(trace.scores[:, 0], trace.arm, trace.reward)
