"""Experiment sweeps: which games to play, running them (optionally across
worker processes) and reducing per-simulation results to report rows.

Every simulation is addressed by (cell, mrv index) and draws only from streams
keyed by that address, so the reduction is identical for any worker count.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable

import numpy as np

from . import metrics
from .bandit_core import Algo, AlgorithmKind
from .errors import InvalidConfig
from .instances import InstanceBank, MabInstanceKind
from .market import (
    DUOPOLY,
    MONOPOLY,
    ChoiceRule,
    GameConfig,
    Regime,
    RegimeKind,
    Variant,
    multi_firm,
    run_competition,
    temporary_monopoly,
)
from .seeding import RngBundle

log = logging.getLogger(__name__)

FAMILIES = ("isolation", "duopoly", "temp-monopoly", "advantage", "hmr", "multi-firm", "welfare")


@dataclass
class SweepSpec:
    instances: list[str] = field(default_factory=lambda: ["heavy-tail", "needle-in-haystack", "uniform"])
    K: int = 10
    N: int = 1000
    T: int = 2000
    M: int = 100
    T0: list[int] = field(default_factory=lambda: [20, 250, 500])
    algorithms: list[str] = field(default_factory=lambda: ["TS", "DEG", "DG"])
    pairs: list[str] = field(default_factory=lambda: ["TS-DG", "TS-DEG", "DG-DEG"])
    deg_epsilon: float = 0.05
    # temporary monopoly and the advantage ablations
    X: list[int] = field(default_factory=lambda: [50, 200, 300, 500])
    advantage_X: list[int] = field(default_factory=lambda: [200, 500])
    variants: list[str] = field(default_factory=lambda: ["data", "reputation"])
    entry_T0: int = 20
    entrant_after_monopoly: bool = True  # entrant warms up on rows X..X+T0-1
    # HardMax with randomness
    hmr_epsilon: list[float] = field(default_factory=lambda: [0.1])
    hmr_T: list[int] = field(default_factory=lambda: [2000, 5000, 10000])
    hmr_T0: int = 20
    # all-DG markets with more firms
    firm_counts: list[int] = field(default_factory=lambda: [2, 3, 4, 5, 6, 7, 8])
    multi_T0: int = 20
    # performance in isolation
    isolation_T0: int = 1
    snapshot_t: list[int] = field(default_factory=lambda: [100, 500, 1000, 2000])
    snapshot_bins: int = 20
    # equilibrium profiles for the welfare comparison
    welfare_X: int = 200
    welfare_T0: int = 20
    nash_tol: float = 0.03
    arm_tie_break: str = "lowest"
    seed: int = 0
    out: str = "results"
    threads: int = 1
    raw: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.N < 1:
            raise InvalidConfig(f"N must be >= 1, got {self.N}")
        for name in ("K", "T", "M", "entry_T0", "hmr_T0", "multi_T0", "isolation_T0", "welfare_T0"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")
        if any(t < 1 for t in self.T0 + self.hmr_T):
            raise InvalidConfig("warm starts and horizons must be >= 1")
        if any(x < 0 for x in self.X + self.advantage_X + [self.welfare_X]):
            raise InvalidConfig("monopoly lengths X must be >= 0")
        if any(f < 2 for f in self.firm_counts):
            raise InvalidConfig("multi-firm markets need at least 2 firms")
        if not all(0 < e < 1 for e in self.hmr_epsilon):
            raise InvalidConfig("HMR epsilons must lie in (0, 1)")
        self.kinds()
        self.algorithm_kinds()
        self.pair_kinds()
        for v in self.variants:
            Variant.parse(v)

    def kinds(self) -> list[MabInstanceKind]:
        return [MabInstanceKind.parse(name, self.K) for name in self.instances]

    def algo(self, name: str) -> AlgorithmKind:
        kind = AlgorithmKind.parse(name)
        if kind.tag is Algo.DEG and ":" not in name:
            kind = AlgorithmKind(Algo.DEG, self.deg_epsilon)
        return kind

    def algorithm_kinds(self) -> list[AlgorithmKind]:
        return [self.algo(a) for a in self.algorithms]

    def pair_kinds(self) -> list[tuple[AlgorithmKind, AlgorithmKind]]:
        out = []
        for p in self.pairs:
            a, sep, b = p.partition("-")
            if not sep:
                raise InvalidConfig(f"pair {p!r} should look like 'TS-DG'")
            out.append((self.algo(a), self.algo(b)))
        return out

    @property
    def t_max(self) -> int:
        """Warm-start rows reserved in every table: the longest warm start any
        family of this spec can ask for, so all families share row offsets."""
        return max(
            max(self.T0), self.entry_T0 + max(self.X + self.advantage_X, default=0),
            self.hmr_T0, self.multi_T0, self.isolation_T0, self.welfare_T0 + self.welfare_X,
        )

    def horizon(self, families: Iterable[str]) -> int:
        return max([self.T] + (self.hmr_T if "hmr" in families else []))


@dataclass(frozen=True)
class Cell:
    family: str
    kind: MabInstanceKind
    cfg: GameConfig
    label: str = ""  # free-form tag, e.g. a welfare profile name

    @property
    def codes(self) -> list[int]:
        return [int(k.tag) for k in self.cfg.firms]


def _cells_isolation(spec: SweepSpec) -> list[Cell]:
    return [Cell("isolation", kind, GameConfig((alg,), MONOPOLY, spec.T, spec.isolation_T0, spec.M,
                                                arm_tie_break=spec.arm_tie_break))
            for kind in spec.kinds() for alg in spec.algorithm_kinds()]


def _cells_duopoly(spec: SweepSpec) -> list[Cell]:
    return [Cell("duopoly", kind, GameConfig(pair, DUOPOLY, spec.T, T0, spec.M,
                                              arm_tie_break=spec.arm_tie_break))
            for kind in spec.kinds() for pair in spec.pair_kinds() for T0 in spec.T0]


def _entry_cells(spec: SweepSpec, family: str, xs: list[int], variants: list[Variant]) -> list[Cell]:
    algs = spec.algorithm_kinds()
    return [Cell(family, kind, GameConfig((entrant, incumbent), temporary_monopoly(X, v), spec.T,
                                          spec.entry_T0, spec.M, arm_tie_break=spec.arm_tie_break,
                                          entrant_after_monopoly=spec.entrant_after_monopoly))
            for kind in spec.kinds() for v in variants for X in xs
            for entrant in algs for incumbent in algs]


def _cells_temp(spec: SweepSpec) -> list[Cell]:
    return _entry_cells(spec, "temp-monopoly", spec.X, [Variant.FULL])


def _cells_advantage(spec: SweepSpec) -> list[Cell]:
    return _entry_cells(spec, "advantage", spec.advantage_X, [Variant.parse(v) for v in spec.variants])


def _cells_hmr(spec: SweepSpec) -> list[Cell]:
    rules = [ChoiceRule()] + [ChoiceRule(e) for e in spec.hmr_epsilon]
    return [Cell("hmr", kind, GameConfig(pair, DUOPOLY, T, spec.hmr_T0, spec.M, rule,
                                          arm_tie_break=spec.arm_tie_break))
            for kind in spec.kinds() for T in spec.hmr_T for rule in rules
            for pair in spec.pair_kinds()]


def _cells_multi(spec: SweepSpec) -> list[Cell]:
    dg = spec.algo("DG")
    return [Cell("multi-firm", kind, GameConfig((dg,) * F, multi_firm(F), spec.T, spec.multi_T0,
                                                 spec.M, arm_tie_break=spec.arm_tie_break))
            for kind in spec.kinds() for F in spec.firm_counts]


WELFARE_PROFILES = ("monopoly-DG", "monopoly-TS", "duopoly-DG-DG", "temp-monopoly-DG-TS")


def _cells_welfare(spec: SweepSpec) -> list[Cell]:
    dg, ts = spec.algo("DG"), spec.algo("TS")
    T, T0, M, tie = spec.T, spec.welfare_T0, spec.M, spec.arm_tie_break
    profiles = {
        "monopoly-DG": GameConfig((dg,), MONOPOLY, T, T0, M, arm_tie_break=tie),
        "monopoly-TS": GameConfig((ts,), MONOPOLY, T, T0, M, arm_tie_break=tie),
        "duopoly-DG-DG": GameConfig((dg, dg), DUOPOLY, T, T0, M, arm_tie_break=tie),
        # entrant DG (firm 0), incumbent TS (firm 1)
        "temp-monopoly-DG-TS": GameConfig((dg, ts), temporary_monopoly(spec.welfare_X), T, T0, M,
                                          arm_tie_break=tie,
                                          entrant_after_monopoly=spec.entrant_after_monopoly),
    }
    return [Cell("welfare", kind, cfg, name) for kind in spec.kinds() for name, cfg in profiles.items()]


CELL_BUILDERS: dict[str, Callable[[SweepSpec], list[Cell]]] = {
    "isolation": _cells_isolation,
    "duopoly": _cells_duopoly,
    "temp-monopoly": _cells_temp,
    "advantage": _cells_advantage,
    "hmr": _cells_hmr,
    "multi-firm": _cells_multi,
    "welfare": _cells_welfare,
}


@dataclass
class SimResult:
    shares: np.ndarray
    eeog: int
    regret: float
    regret_prefix: float
    welfare: float
    scores: np.ndarray | None = None  # isolation: reputation per round
    regret_curve: np.ndarray | None = None  # welfare: cumulative regret incl. prefix


@dataclass
class CellResult:
    cell: Cell
    sims: list[SimResult]

    @property
    def shares(self) -> np.ndarray:
        return np.array([s.shares for s in self.sims])

    @property
    def eeogs(self) -> np.ndarray:
        return np.array([s.eeog for s in self.sims])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.sims])

    def stack(self, name: str) -> np.ndarray:
        return np.stack([getattr(s, name) for s in self.sims])

    def summary(self, firm: int = 0) -> metrics.CellSummary:
        s, e = self.shares[:, firm], self.eeogs
        if len(s) == 1:  # single simulation: no spread to report
            return metrics.CellSummary(1, float(s[0]), 0.0, 0.0, float(e[0]), float(e[0]))
        return metrics.aggregate_cell(s, e)


def simulate(cell: Cell, bank: InstanceBank, i: int, master_seed: int) -> SimResult:
    rngs = RngBundle.derive(master_seed, cell.kind.key, i, cell.codes)
    trace = run_competition(cell.cfg, bank.tables[i], rngs)
    mu = bank.mrvs[i]
    regret = metrics.trace_regret(trace, mu)
    regret_prefix = metrics.trace_regret(trace, mu, include_prefix=True)
    res = SimResult(metrics.shares(trace), metrics.eeog(trace), regret, regret_prefix,
                    metrics.welfare(trace, mu))
    if cell.family == "isolation":
        res.scores = trace.scores[:, 0].copy()
    elif cell.family == "welfare":
        res.regret_curve = metrics.regret_curve(trace.arm, mu, offset=regret_prefix - regret)
    return res


# Shared with forked workers; set by run_cells before the pool starts.
_CONTEXT: dict = {}


def _run_chunk(task: tuple[int, int, int]) -> list[SimResult]:
    c, start, stop = task
    cell = _CONTEXT["cells"][c]
    bank = _CONTEXT["banks"][cell.kind.key]
    return [simulate(cell, bank, i, _CONTEXT["seed"]) for i in range(start, stop)]


def draw_banks(spec: SweepSpec, cells: list[Cell], horizon: int) -> dict[tuple, InstanceBank]:
    banks = {}
    for cell in cells:
        if cell.kind.key not in banks:
            log.info("drawing %d %s instances (K=%d)", spec.N, cell.kind.name, cell.kind.K)
            banks[cell.kind.key] = InstanceBank.draw(cell.kind, spec.N, horizon, spec.t_max, spec.seed)
    return banks


def run_cells(spec: SweepSpec, cells: list[Cell], banks: dict[tuple, InstanceBank],
              chunk: int = 50) -> list[CellResult]:
    tasks = [(c, s, min(s + chunk, spec.N)) for c in range(len(cells)) for s in range(0, spec.N, chunk)]
    _CONTEXT.update(cells=cells, banks=banks, seed=spec.seed)
    try:
        if spec.threads == 1:
            chunks = [_run_chunk(t) for t in tasks]
        else:
            with ProcessPoolExecutor(spec.threads, mp_context=mp.get_context("fork")) as pool:
                chunks = list(pool.map(_run_chunk, tasks))
    finally:
        _CONTEXT.clear()
    results = [CellResult(cell, []) for cell in cells]
    for (c, _, _), sims in zip(tasks, chunks):
        results[c].sims.extend(sims)
    return results


def run_family(spec: SweepSpec, family: str, banks: dict | None = None) -> list[CellResult]:
    if family not in CELL_BUILDERS:
        raise InvalidConfig(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    cells = CELL_BUILDERS[family](spec)
    if banks is None:
        banks = draw_banks(spec, cells, spec.horizon([family]))
    log.info("%s: %d cells x %d simulations", family, len(cells), spec.N)
    return run_cells(spec, cells, banks)


def with_overrides(spec: SweepSpec, **changes) -> SweepSpec:
    known = {f.name for f in fields(SweepSpec)}
    bad = set(changes) - known
    if bad:
        raise InvalidConfig(f"unknown setting(s): {', '.join(sorted(bad))}")
    return replace(spec, **{k: v for k, v in changes.items() if v is not None})
