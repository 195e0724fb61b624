"""MAB problem instances and the pre-drawn realization tables.

A realization table holds ``t_max + T`` rows of 0/1 rewards. Warm-start
round ``r`` (0-based) of any firm reads row ``r``; game round ``t``
(0-based) reads row ``t_max + t``. The same table serves every experiment on
its mean reward vector, so algorithm comparisons are not confounded by
reward noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import seeding
from .errors import InvalidConfig


class InstanceTag(IntEnum):
    NEEDLE = 0
    UNIFORM = 1
    HEAVY_TAIL = 2


_ALIASES = {
    "needle": InstanceTag.NEEDLE,
    "needle-in-haystack": InstanceTag.NEEDLE,
    "nih": InstanceTag.NEEDLE,
    "uniform": InstanceTag.UNIFORM,
    "heavy-tail": InstanceTag.HEAVY_TAIL,
    "heavytail": InstanceTag.HEAVY_TAIL,
    "ht": InstanceTag.HEAVY_TAIL,
}

_NAMES = {
    InstanceTag.NEEDLE: "needle-in-haystack",
    InstanceTag.UNIFORM: "uniform",
    InstanceTag.HEAVY_TAIL: "heavy-tail",
}


@dataclass(frozen=True)
class MabInstanceKind:
    tag: InstanceTag
    K: int = 10
    # Shape knobs; defaults give the standard instance definitions.
    needle_mean: float = 0.7
    haystack_mean: float = 0.5
    uniform_low: float = 0.25
    uniform_high: float = 0.75
    beta_shape: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "tag", InstanceTag(self.tag))
        if self.K < 1:
            raise InvalidConfig(f"need at least one arm, got K={self.K}")

    @classmethod
    def parse(cls, text: str, K: int = 10) -> "MabInstanceKind":
        try:
            return cls(_ALIASES[text.strip().lower()], K)
        except KeyError:
            raise InvalidConfig(f"unknown instance kind {text!r}") from None

    @property
    def name(self) -> str:
        return _NAMES[self.tag]

    @property
    def key(self) -> tuple[int, int]:
        """Stream key; knobs left at their defaults keep it stable."""
        return (int(self.tag), self.K)


def draw_mrv(kind: MabInstanceKind, rng: np.random.Generator) -> np.ndarray:
    """One mean reward vector ``mu`` of length ``kind.K``."""
    if kind.tag is InstanceTag.NEEDLE:
        mu = np.full(kind.K, kind.haystack_mean)
        mu[rng.integers(0, kind.K)] = kind.needle_mean
        return mu
    if kind.tag is InstanceTag.UNIFORM:
        return rng.uniform(kind.uniform_low, kind.uniform_high, size=kind.K)
    return rng.beta(kind.beta_shape, kind.beta_shape, size=kind.K)


@dataclass(frozen=True)
class RealizationTable:
    W: np.ndarray  # (rows, K) uint8
    t_max: int

    def __post_init__(self):
        self.W.setflags(write=False)
        if self.t_max < 0 or self.t_max > self.W.shape[0]:
            raise InvalidConfig(f"t_max={self.t_max} outside table with {self.W.shape[0]} rows")

    @property
    def rows(self) -> int:
        return self.W.shape[0]

    @property
    def K(self) -> int:
        return self.W.shape[1]

    @property
    def horizon(self) -> int:
        """Number of game rounds the table can serve."""
        return self.rows - self.t_max

    def dump_csv(self, path) -> None:
        np.savetxt(path, self.W, fmt="%d", delimiter=",")


def build_realization_table(
    mu: np.ndarray, rows: int, rng: np.random.Generator, t_max: int = 0
) -> RealizationTable:
    """Independent Bernoulli(mu[a]) draws.

    Rows are generated in order from one uniform stream, so a longer table
    drawn from the same seed extends a shorter one row-for-row.
    """
    if rows < 1:
        raise InvalidConfig(f"table needs at least one row, got {rows}")
    mu = np.asarray(mu, dtype=float)
    W = (rng.random((rows, len(mu))) < mu).astype(np.uint8)
    return RealizationTable(W, t_max)


def reward_at(table: RealizationTable, row: int, arm: int) -> int:
    if not (0 <= row < table.rows and 0 <= arm < table.K):
        raise IndexError(f"(row={row}, arm={arm}) outside {table.rows}x{table.K} table")
    return int(table.W[row, arm])


@dataclass
class InstanceBank:
    """The N mean reward vectors of one instance kind and their tables.

    Drawn once from ``(master_seed, kind.key, index)`` and reused by every
    experiment family, which is what makes cross-experiment comparisons
    paired.
    """

    kind: MabInstanceKind
    master_seed: int
    mrvs: np.ndarray  # (N, K)
    tables: list[RealizationTable] = field(repr=False)

    @classmethod
    def draw(cls, kind: MabInstanceKind, N: int, T: int, t_max: int,
             master_seed: int = 0) -> "InstanceBank":
        if N < 1:
            raise InvalidConfig(f"need N >= 1, got {N}")
        mrvs = np.empty((N, kind.K))
        tables = []
        for i in range(N):
            mrvs[i] = draw_mrv(kind, seeding.stream(master_seed, *kind.key, i, seeding.MRV))
            tables.append(build_realization_table(
                mrvs[i], t_max + T, seeding.stream(master_seed, *kind.key, i, seeding.TABLE), t_max))
        return cls(kind, master_seed, mrvs, tables)

    @property
    def N(self) -> int:
        return len(self.tables)

    @property
    def t_max(self) -> int:
        return self.tables[0].t_max

    @property
    def horizon(self) -> int:
        return self.tables[0].horizon
