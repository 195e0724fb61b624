"""Compiled game engine.

A line-for-line replay of ``market.Market`` over flat arrays. The random
draws (which generator, which method, which order) must stay in lockstep with
``bandit_core.select_arm`` and ``market.choose_firm``;
``tests/test_engines.py`` holds the two engines to bit-identical traces.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .bandit_core import TIE_LOWEST, Algo
from .market import GameConfig, GameTrace, Variant
from .instances import RealizationTable
from .seeding import RngBundle

_DG = int(Algo.DG)
_DEG = int(Algo.DEG)
_TS = int(Algo.TS)

_FULL = 0
_DATA = 1
_REP = 2
_VARIANT_CODES = {Variant.FULL: _FULL, Variant.DATA: _DATA, Variant.REPUTATION: _REP}


@njit(cache=True)
def _argmax_tie(vals, n, tie_lowest, rng):
    best = vals[0]
    count = 1
    for i in range(1, n):
        v = vals[i]
        if v > best:
            best = v
            count = 1
        elif v == best:
            count += 1
    j = 0
    if count > 1 and not tie_lowest:
        j = rng.integers(0, count)
    for i in range(n):
        if vals[i] == best:
            if j == 0:
                return i
            j -= 1
    return -1


@njit(cache=True)
def _select_arm(algo, eps, alpha, beta, tie_lowest, rng, buf):
    K = alpha.shape[0]
    if algo == _TS:
        for a in range(K):
            buf[a] = rng.beta(alpha[a], beta[a])
        return _argmax_tie(buf, K, tie_lowest, rng)
    if algo == _DEG:
        if rng.random() < eps:
            return rng.integers(0, K)
    for a in range(K):
        buf[a] = alpha[a] / (alpha[a] + beta[a])
    return _argmax_tie(buf, K, tie_lowest, rng)


@njit(cache=True)
def _push(win, head, length, wsum, f, reward):
    M = win.shape[1]
    if length[f] == M:
        wsum[f] -= win[f, head[f]]
        win[f, head[f]] = reward
        head[f] = (head[f] + 1) % M
    else:
        win[f, (head[f] + length[f]) % M] = reward
        length[f] += 1
    wsum[f] += reward


@njit(cache=True)
def play(W, t_max, T, T0, M, algos, algo_eps, mono_X, first_row, variant, rule_eps, arm_lowest,
         agent_lowest, agent_rng, firm_rngs):
    F = algos.shape[0]
    K = W.shape[1]
    alpha = np.ones((F, K))
    beta = np.ones((F, K))
    win = np.zeros((F, M), np.int64)
    head = np.zeros(F, np.int64)
    length = np.zeros(F, np.int64)
    wsum = np.zeros(F, np.int64)
    buf = np.empty(K)

    warm_max = 0
    for f in range(F):
        warm_max = max(warm_max, mono_X[f] + T0)
    warm_arms = np.full((F, warm_max), -1, np.int64)
    warm_rewards = np.zeros((F, warm_max), np.uint8)

    for f in range(F):
        rng = firm_rngs[f]
        X = mono_X[f]
        for r in range(X + T0):
            a = _select_arm(algos[f], algo_eps[f], alpha[f], beta[f], arm_lowest, rng, buf)
            rew = W[first_row[f] + r, a]
            warm_arms[f, r] = a
            warm_rewards[f, r] = rew
            if rew == 1:
                alpha[f, a] += 1.0
            else:
                beta[f, a] += 1.0
            if not (r < X and variant == _DATA):
                _push(win, head, length, wsum, f, rew)
            if r == X - 1 and variant == _REP:
                alpha[f, :] = 1.0
                beta[f, :] = 1.0

    firm_out = np.empty(T, np.int64)
    arm_out = np.empty(T, np.int64)
    rew_out = np.empty(T, np.uint8)
    scores = np.empty((T, F))
    for t in range(T):
        for f in range(F):
            scores[t, f] = wsum[f] / length[f]
        if F == 1:
            f = 0
        elif rule_eps > 0.0 and agent_rng.random() < rule_eps:
            f = agent_rng.integers(0, F)
        else:
            f = _argmax_tie(scores[t], F, agent_lowest, agent_rng)
        a = _select_arm(algos[f], algo_eps[f], alpha[f], beta[f], arm_lowest, firm_rngs[f],
                        buf)
        rew = W[t_max + t, a]
        if rew == 1:
            alpha[f, a] += 1.0
        else:
            beta[f, a] += 1.0
        _push(win, head, length, wsum, f, rew)
        firm_out[t] = f
        arm_out[t] = a
        rew_out[t] = rew
    return firm_out, arm_out, rew_out, scores, warm_arms, warm_rewards


def run(cfg: GameConfig, table: RealizationTable, rngs: RngBundle) -> GameTrace:
    cfg.check_table(table)
    F = cfg.n_firms
    mono_X = np.array([cfg.monopoly_rounds(f) for f in range(F)], np.int64)
    first_row = np.array([cfg.first_warm_row(f) for f in range(F)], np.int64)
    out = play(
        table.W, table.t_max, cfg.T, cfg.T0, cfg.M,
        np.array([int(k.tag) for k in cfg.firms], np.int64),
        np.array([k.epsilon for k in cfg.firms]),
        mono_X, first_row, _VARIANT_CODES[cfg.regime.variant], cfg.rule.epsilon,
        cfg.arm_tie_break == TIE_LOWEST, cfg.agent_tie_break == TIE_LOWEST,
        rngs.agent, tuple(rngs.firms),
    )
    firm, arm, reward, scores, warm_arms, warm_rewards = out
    n = mono_X + cfg.T0
    return GameTrace(
        firm, arm, reward, scores,
        warm_arms=[warm_arms[f, : n[f]] for f in range(F)],
        warm_rewards=[warm_rewards[f, : n[f]] for f in range(F)],
    )
