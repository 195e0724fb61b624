"""Turning cell results into rows, tables and files.

All floats go through ``fmt`` (6 significant digits) so reruns diff cleanly.
"""

from __future__ import annotations

import csv
import glob
import os
from dataclasses import astuple, dataclass, fields
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np

from . import metrics
from .bandit_core import AlgorithmKind
from .errors import InvalidConfig
from .sweep import CellResult, SweepSpec

SUMMARY_COLUMNS = ("family", "instance", "K", "T", "T0", "X", "variant", "rule", "epsilon",
                   "alg_row", "alg_col", "N", "mean_share_row", "ci95", "variance",
                   "eeog_mean", "eeog_median")
TRAJECTORY_COLUMNS = ("family", "instance", "alg", "t", "value", "ci95")


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".6g")
    return str(x)


@dataclass
class ResultRow:
    family: str
    instance: str
    K: int
    T: int
    T0: int
    X: int
    variant: str
    rule: str
    epsilon: float
    alg_row: str
    alg_col: str
    N: int
    mean_share_row: float
    ci95: float
    variance: float
    eeog_mean: float
    eeog_median: float

    @property
    def cell_key(self) -> tuple:
        """Everything except the algorithms and the statistics."""
        return (self.family, self.instance, self.K, self.T, self.T0, self.X, self.variant,
                self.rule, self.epsilon)

    @classmethod
    def from_csv(cls, rec: dict) -> "ResultRow":
        kw = {}
        for f in fields(cls):
            v = rec[f.name]
            kw[f.name] = int(v) if f.type == "int" else float(v) if f.type == "float" else v
        return cls(**kw)


def result_row(res: CellResult) -> ResultRow:
    c = res.cell
    cfg = c.cfg
    s = res.summary(firm=0)
    alg_col = str(cfg.firms[1]) if cfg.n_firms > 1 else ""
    return ResultRow(c.family, c.kind.name, c.kind.K, cfg.T, cfg.T0, cfg.regime.X,
                     cfg.regime.variant.value, cfg.rule.name, cfg.rule.epsilon,
                     str(cfg.firms[0]), alg_col, s.N, s.mean, s.ci95, s.variance,
                     s.eeog_mean, s.eeog_median)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_summary(path: str, rows: Sequence[ResultRow]) -> None:
    write_csv(path, SUMMARY_COLUMNS, (astuple(r) for r in rows))


def read_summary(path: str) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise InvalidConfig(f"{path} is not a summary CSV")
        return [ResultRow.from_csv(rec) for rec in reader]


def write_raw(path: str, results: Sequence[CellResult]) -> None:
    """One line per simulation: cell fields, mrv index and its measures."""
    def rows():
        for res in results:
            key = astuple(result_row(res))[:11]
            for i, sim in enumerate(res.sims):
                yield (*key, i, sim.shares[0], sim.eeog, sim.regret, sim.regret_prefix, sim.welfare)
    write_csv(path, SUMMARY_COLUMNS[:11] + ("mrv", "share_row", "eeog", "regret",
                                            "regret_with_prefix", "welfare"), rows())


# -- share matrices --------------------------------------------------------

def _algo_order(names: Iterable[str]) -> list[str]:
    """Most advanced first: TS, DEG, DG."""
    return sorted(set(names), key=lambda n: (-int(AlgorithmKind.parse(n).tag), n))


@dataclass
class ShareMatrix:
    """``value[i, j]``: mean share of the row algorithm facing the column one.
    For entry games rows are entrants and columns incumbents."""

    key: tuple
    algs: list[str]
    value: np.ndarray
    ci95: np.ndarray
    variance: np.ndarray

    @property
    def ranks(self) -> list[int]:
        return [int(AlgorithmKind.parse(a).tag) for a in self.algs]

    def format(self, what: str = "value") -> str:
        m = getattr(self, what)
        width = max(9, max(len(a) for a in self.algs) + 2)
        lines = [" " * width + "".join(a.rjust(width) for a in self.algs)]
        for i, a in enumerate(self.algs):
            lines.append(a.ljust(width) + "".join(
                ("-" if np.isnan(v) else f"{v:.4f}").rjust(width) for v in m[i]))
        return "\n".join(lines)


def share_matrices(rows: Sequence[ResultRow], symmetric: bool) -> list[ShareMatrix]:
    """Group rows into per-cell matrices. ``symmetric`` games fill the mirror
    entry with ``1 - share`` and put 0.5 on an unsimulated diagonal."""
    out = []
    ordered = sorted(rows, key=lambda r: r.cell_key)
    for key, group in groupby(ordered, key=lambda r: r.cell_key):
        group = list(group)
        algs = _algo_order([r.alg_row for r in group] + [r.alg_col for r in group])
        idx = {a: i for i, a in enumerate(algs)}
        n = len(algs)
        val, ci, var = (np.full((n, n), np.nan) for _ in range(3))
        for r in group:
            i, j = idx[r.alg_row], idx[r.alg_col]
            val[i, j], ci[i, j], var[i, j] = r.mean_share_row, r.ci95, r.variance
            if symmetric and np.isnan(val[j, i]):
                val[j, i], ci[j, i], var[j, i] = 1.0 - r.mean_share_row, r.ci95, r.variance
        if symmetric:
            for i in range(n):
                if np.isnan(val[i, i]):
                    val[i, i], ci[i, i], var[i, i] = 0.5, 0.0, 0.0
        out.append(ShareMatrix(key, algs, val, ci, var))
    return out


def _matrix_title(key: tuple) -> str:
    family, instance, K, T, T0, X, variant, rule, eps = key
    parts = [family, instance, f"K={K}", f"T={T}", f"T0={T0}"]
    if family in ("temp-monopoly", "advantage"):
        parts += [f"X={X}", f"variant={variant}"]
    parts.append(rule if rule == "HM" else f"{rule}(eps={eps:g})")
    return " ".join(parts)


def format_matrices(matrices: Sequence[ShareMatrix], with_variance: bool = False) -> str:
    blocks = []
    for m in matrices:
        label = "rows: entrant, columns: incumbent" if m.key[0] in ("temp-monopoly", "advantage") \
            else "row algorithm share against column algorithm"
        blocks.append(f"# {_matrix_title(m.key)}  ({label})\n{m.format()}")
        if with_variance:
            blocks.append(f"# variance of the above\n{m.format('variance')}")
    return "\n\n".join(blocks) + "\n"


# -- equilibria ---------------------------------------------------------------

@dataclass
class NashReport:
    key: tuple
    algs: list[str]
    equilibria: list[tuple[str, str]]
    row_dominant: list[str]  # weakly dominant for the row player (entrant)
    col_dominant: list[str]  # weakly dominant for the column player (incumbent)

    def as_row(self) -> tuple:
        eq = ";".join(f"{a}/{b}" for a, b in self.equilibria) or "none"
        return (*self.key, eq, ";".join(self.row_dominant) or "none",
                ";".join(self.col_dominant) or "none")


NASH_COLUMNS = SUMMARY_COLUMNS[:9] + ("equilibria", "row_weakly_dominant", "col_weakly_dominant")


def nash_reports(rows: Sequence[ResultRow], tol: float) -> list[NashReport]:
    """Pure equilibria and weakly dominant algorithms of every complete matrix.

    Symmetric (simultaneous-start) games are constant-sum in shares, so one
    matrix describes both players. In entry games the entrant maximizes the
    row value and the incumbent minimizes it.
    """
    out = []
    sym = [r for r in rows if r.family not in ("temp-monopoly", "advantage", "multi-firm")]
    entry = [r for r in rows if r.family in ("temp-monopoly", "advantage")]
    for m in share_matrices(sym, symmetric=True):
        if np.isnan(m.value).any():
            continue
        eq = metrics.find_pure_nash(m.value, m.ranks, tol)
        dom = [m.algs[i] for i in metrics.weakly_dominant(m.value, tol)]
        out.append(NashReport(m.key, m.algs, [(m.algs[i], m.algs[j]) for i, j in eq], dom, dom))
    for m in share_matrices(entry, symmetric=False):
        if np.isnan(m.value).any():
            continue
        row_dom = [m.algs[i] for i in metrics.weakly_dominant(m.value, tol)]
        col_dom = [m.algs[j] for j in metrics.weakly_dominant(m.value, tol, minimize=True)]
        eq = metrics.find_pure_nash(m.value, m.ranks, tol, col_payoff=1.0 - m.value)
        eq = [(m.algs[i], m.algs[j]) for i, j in eq]
        out.append(NashReport(m.key, m.algs, eq, row_dom, col_dom))
    return sorted(out, key=lambda n: n.key)


def find_summaries(out_dir: str) -> list[str]:
    return sorted(p for p in glob.glob(os.path.join(out_dir, "*summary.csv"))
                  if os.path.basename(p) != "summary.csv")


# -- family-specific outputs ---------------------------------------------------

def isolation_outputs(spec: SweepSpec, results: Sequence[CellResult], out: str) -> dict:
    """Mean reputation trajectories, pairwise relative reputation, final
    reputation with CIs, exploration-disadvantage periods and snapshots."""
    by_inst: dict[str, dict[str, np.ndarray]] = {}
    for res in results:
        by_inst.setdefault(res.cell.kind.name, {})[str(res.cell.cfg.firms[0])] = res.stack("scores")

    traj, final, periods, snaps, snap_vals = [], [], [], [], []
    for inst, scores in by_inst.items():
        algs = _algo_order(scores)
        for a in algs:
            s = metrics.mean_trajectory(scores[a])
            traj += [("reputation", inst, a, t + 1, s.value[t], s.ci95[t]) for t in range(len(s))]
            final.append((inst, a, len(s), s.value[-1], s.ci95[-1]))
            for t in spec.snapshot_t:
                if t <= spec.T:
                    snap = metrics.reputation_snapshot(scores[a], t, spec.snapshot_bins)
                    snaps += [(inst, a, t, snap.edges[b], snap.edges[b + 1], snap.counts[b])
                              for b in range(len(snap.counts))]
                    snap_vals += [(inst, a, t, i, v) for i, v in enumerate(snap.values)]
        for i, a in enumerate(algs):
            for b in algs[i + 1:]:
                pair = f"{a}-vs-{b}"
                rel = metrics.relative_reputation(scores[a], scores[b])
                traj += [("relative-reputation", inst, pair, t + 1, rel.value[t], rel.ci95[t])
                         for t in range(len(rel))]
                for after in (0, 50):
                    p = metrics.exploration_disadvantage_period(rel, after)
                    periods.append((inst, pair, after, *(p if p else ("", ""))))
                for t in spec.snapshot_t:
                    if t <= spec.T:
                        snap = metrics.difference_snapshot(scores[a], scores[b], t, 2 * spec.snapshot_bins)
                        snaps += [(inst, pair, t, snap.edges[k], snap.edges[k + 1], snap.counts[k])
                                  for k in range(len(snap.counts))]
                        snap_vals += [(inst, pair, t, i, v) for i, v in enumerate(snap.values)]

    write_csv(os.path.join(out, "isolation_trajectories.csv"), TRAJECTORY_COLUMNS, traj)
    write_csv(os.path.join(out, "isolation_final.csv"), ("instance", "alg", "t", "mean", "ci95"), final)
    write_csv(os.path.join(out, "isolation_disadvantage.csv"),
              ("instance", "pair", "after", "start", "end"), periods)
    write_csv(os.path.join(out, "isolation_snapshots.csv"),
              ("instance", "alg", "t", "bin_lo", "bin_hi", "count"), snaps)
    write_csv(os.path.join(out, "isolation_snapshot_values.csv"),
              ("instance", "alg", "t", "mrv", "value"), snap_vals)
    return {"final": final, "periods": periods}


def multi_firm_rows(results: Sequence[CellResult]) -> list[tuple]:
    rows = []
    for res in results:
        w, r, e = res.column("welfare"), res.column("regret"), res.eeogs
        rows.append((res.cell.kind.name, res.cell.cfg.n_firms, len(res.sims),
                     w.mean(), metrics.ci95(w), r.mean(), metrics.ci95(r),
                     e.mean(), metrics.ci95(e), float(np.median(e))))
    return rows


MULTI_FIRM_COLUMNS = ("instance", "F", "N", "welfare_mean", "welfare_ci95", "regret_mean",
                      "regret_ci95", "eeog_mean", "eeog_ci95", "eeog_median")


def welfare_outputs(results: Sequence[CellResult], out: str) -> list[tuple]:
    rows, traj = [], []
    for res in results:
        inst, prof = res.cell.kind.name, res.cell.label
        r, rp, w = res.column("regret"), res.column("regret_prefix"), res.column("welfare")
        rows.append((inst, prof, len(res.sims), r.mean(), metrics.ci95(r), rp.mean(),
                     metrics.ci95(rp), w.mean(), metrics.ci95(w)))
        s = metrics.mean_trajectory(res.stack("regret_curve"))
        traj += [("welfare-regret", inst, prof, t + 1, s.value[t], s.ci95[t]) for t in range(len(s))]
    write_csv(os.path.join(out, "welfare_summary.csv"),
              ("instance", "profile", "N", "regret_mean", "regret_ci95", "regret_with_prefix_mean",
               "regret_with_prefix_ci95", "welfare_mean", "welfare_ci95"), rows)
    write_csv(os.path.join(out, "welfare_trajectories.csv"), TRAJECTORY_COLUMNS, traj)
    return rows
