"""Run experiment families and write their outputs."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

from . import report, sweep
from .sweep import CellResult, SweepSpec

log = logging.getLogger(__name__)

MATRIX_FAMILIES = ("duopoly", "temp-monopoly", "advantage", "hmr")


@dataclass
class SweepOutcome:
    results: dict[str, list[CellResult]] = field(default_factory=dict)
    rows: dict[str, list[report.ResultRow]] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    @property
    def all_rows(self) -> list[report.ResultRow]:
        return [r for fam in self.rows.values() for r in fam]


def run_sweep(spec: SweepSpec, families: list[str] | tuple[str, ...] = sweep.FAMILIES,
              write: bool = True) -> SweepOutcome:
    """Play every cell of the requested families over all ``spec.N`` instances.

    The banks are drawn once, long enough for the longest family, and shared.
    With ``write`` the family outputs land in ``spec.out``.
    """
    families = list(families)
    for fam in families:
        if fam not in sweep.CELL_BUILDERS:
            raise sweep.InvalidConfig(f"unknown family {fam!r}")
    cells = {fam: sweep.CELL_BUILDERS[fam](spec) for fam in families}
    banks = sweep.draw_banks(spec, [c for cs in cells.values() for c in cs], spec.horizon(families))
    outcome = SweepOutcome()
    for fam in families:
        log.info("%s: %d cells x %d simulations", fam, len(cells[fam]), spec.N)
        res = sweep.run_cells(spec, cells[fam], banks)
        outcome.results[fam] = res
        if fam in MATRIX_FAMILIES:
            outcome.rows[fam] = [report.result_row(r) for r in res]
        if write:
            outcome.files += emit_family(spec, fam, res, outcome.rows.get(fam, []))
    if write and len(outcome.rows) > 1:
        path = os.path.join(spec.out, "summary.csv")
        report.write_summary(path, outcome.all_rows)
        outcome.files.append(path)
    return outcome


def emit_family(spec: SweepSpec, family: str, results: list[CellResult],
                rows: list[report.ResultRow]) -> list[str]:
    out = spec.out
    os.makedirs(out, exist_ok=True)
    files = []

    def path(name: str) -> str:
        p = os.path.join(out, name)
        files.append(p)
        return p

    stem = family.replace("-", "_")
    if rows:
        report.write_summary(path(f"{stem}_summary.csv"), rows)
        symmetric = family in ("duopoly", "hmr")
        text = report.format_matrices(report.share_matrices(rows, symmetric),
                                      with_variance=family == "hmr")
        with open(path(f"{stem}_matrices.txt"), "w") as fh:
            fh.write(text)
    if family == "isolation":
        report.isolation_outputs(spec, results, out)
        files += [os.path.join(out, f"isolation_{n}.csv") for n in
                  ("trajectories", "final", "disadvantage", "snapshots", "snapshot_values")]
    elif family == "multi-firm":
        report.write_csv(path("multi_firm.csv"), report.MULTI_FIRM_COLUMNS,
                         report.multi_firm_rows(results))
    elif family == "welfare":
        report.welfare_outputs(results, out)
        files += [os.path.join(out, "welfare_summary.csv"), os.path.join(out, "welfare_trajectories.csv")]
    if spec.raw:
        report.write_raw(path(f"{stem}_raw.csv"), results)
    return files


def run_nash(paths: list[str], tol: float, out_path: str | None) -> list[report.NashReport]:
    rows = [r for p in paths for r in report.read_summary(p)]
    reports = report.nash_reports(rows, tol)
    if out_path:
        report.write_csv(out_path, report.NASH_COLUMNS, (n.as_row() for n in reports))
    return reports
