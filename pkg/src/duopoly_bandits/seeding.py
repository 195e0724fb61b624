"""Deterministic per-simulation random streams.

Every stream is keyed by where it is used, never by execution order, so a
sweep gives the same numbers whatever the worker count or scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Purpose tags.
MRV = 0
TABLE = 1
ALGO = 2
AGENT = 3


def stream(master_seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def lineup_id(codes: Sequence[int]) -> int:
    """Stable integer for an ordered firm lineup of algorithm codes (each < 3)."""
    ident = 1
    for c in codes:
        ident = ident * 3 + int(c)
    return ident


@dataclass
class RngBundle:
    """The random streams one simulation consumes: agents' choices plus one
    algorithm stream per firm."""

    agent: np.random.Generator
    firms: tuple[np.random.Generator, ...]

    @classmethod
    def derive(cls, master_seed: int, instance_key: Sequence[int], mrv_index: int,
               codes: Sequence[int]) -> "RngBundle":
        base = (*instance_key, mrv_index, lineup_id(codes))
        return cls(
            agent=stream(master_seed, *base, 0, AGENT),
            firms=tuple(stream(master_seed, *base, f, ALGO) for f in range(len(codes))),
        )

    @classmethod
    def from_seed(cls, seed: int, n_firms: int) -> "RngBundle":
        """Ad-hoc bundle for single games and tests."""
        return cls(
            agent=stream(seed, AGENT),
            firms=tuple(stream(seed, f, ALGO) for f in range(n_firms)),
        )
