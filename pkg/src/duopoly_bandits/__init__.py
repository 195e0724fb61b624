"""Bandit-algorithm firms competing for myopic agents: simulation and analysis."""

from .bandit_core import (
    DEG,
    DG,
    TS,
    Algo,
    AlgorithmKind,
    AlgorithmState,
    BetaPosterior,
    init_algorithm_state,
    observe,
    select_arm,
)
from .errors import InvalidConfig
from .instances import (
    InstanceBank,
    MabInstanceKind,
    RealizationTable,
    build_realization_table,
    draw_mrv,
    reward_at,
)
from .market import (
    DUOPOLY,
    HARDMAX,
    HMR,
    MONOPOLY,
    ChoiceRule,
    GameConfig,
    GameTrace,
    Market,
    ReputationWindow,
    Variant,
    choose_firm,
    multi_firm,
    reputation_score,
    run_competition,
    run_isolation,
    temporary_monopoly,
)
from .seeding import RngBundle
from .sweep import SweepSpec
from .runner import run_sweep

__version__ = "0.1.0"
