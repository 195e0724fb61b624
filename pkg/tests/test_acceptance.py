"""Acceptance suite: full-scale reproduction of the reference results.

One N=1000 sweep over every simulation family (about 10 minutes on a single
core) feeds all checks. Each criterion prints one PASS/FAIL line, repeated in
the "acceptance criteria" section of the pytest terminal summary. A failing
criterion lists every sub-check that missed, with the measured value.

    pytest tests/test_acceptance.py -v
"""

from __future__ import annotations

import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, constant_table

from duopoly_bandits import cli, metrics, report
from duopoly_bandits.bandit_core import DG, AlgorithmKind, Algo, init_algorithm_state, observe
from duopoly_bandits.instances import InstanceBank, MabInstanceKind
from duopoly_bandits.market import DUOPOLY, GameConfig, run_competition, temporary_monopoly
from duopoly_bandits.runner import run_sweep
from duopoly_bandits.seeding import RngBundle
from duopoly_bandits.sweep import SweepSpec

pytestmark = pytest.mark.slow

HT, NIH, UNI = "heavy-tail", "needle-in-haystack", "uniform"
ORDER = ("TS", "DEG", "DG")
TOL = 0.05

# Simultaneous-start duopoly: mean share of the first algorithm at T0 = 20, 250, 500.
DUOPOLY_REF = {
    (HT, "TS", "DG"): (0.29, 0.72, 0.76),
    (HT, "TS", "DEG"): (0.30, 0.88, 0.90),
    (HT, "DG", "DEG"): (0.62, 0.60, 0.57),
    (NIH, "TS", "DG"): (0.64, 0.60, 0.64),
    (NIH, "TS", "DEG"): (0.57, 0.52, 0.56),
    (NIH, "DG", "DEG"): (0.46, 0.42, 0.42),
    (UNI, "TS", "DG"): (0.46, 0.52, 0.60),
    (UNI, "TS", "DEG"): (0.41, 0.51, 0.55),
    (UNI, "DG", "DEG"): (0.51, 0.48, 0.45),
}
DUOPOLY_T0 = (20, 250, 500)
# Cells whose reference EEOG median is 0: (instance, row, column, T0).
ZERO_EEOG_MEDIAN = [(HT, "TS", "DG", 20), (HT, "TS", "DG", 250), (HT, "TS", "DEG", 20),
                    (HT, "TS", "DEG", 250), (NIH, "TS", "DG", 250)]

# Entry games on Heavy-Tail, T0=20: entrant share, rows = entrant, columns = incumbent,
# both in ORDER.
TEMP_MONOPOLY_X200 = [[0.003, 0.083, 0.17], [0.045, 0.25, 0.23], [0.12, 0.36, 0.30]]
REPUTATION_ADVANTAGE_X200 = [[0.021, 0.16, 0.21], [0.26, 0.30, 0.26], [0.34, 0.40, 0.33]]
DATA_ADVANTAGE_X200 = [[0.0096, 0.11, 0.18], [0.073, 0.29, 0.25], [0.15, 0.39, 0.33]]

# Random-agent choice rule, Heavy-Tail, TS vs DG share at each horizon.
HMR_TS_DG = {2000: 0.43, 10000: 0.76}


def record(number: int, title: str, failures: list[str], checked: int) -> None:
    status = "PASS" if not failures else "FAIL"
    line = f"criterion {number:2d} {status}: {title} ({checked - len(failures)}/{checked} checks)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    for f in failures:
        ACCEPTANCE_LINES.append(f"    {f}")
        print(f"    {f}")
    assert not failures, "\n".join(failures)


class Checks:
    """Collects named boolean sub-checks."""

    def __init__(self):
        self.count = 0
        self.failures: list[str] = []

    def __call__(self, ok: bool, what: str) -> bool:
        self.count += 1
        if not ok:
            self.failures.append(what)
        return ok

    def near(self, got: float, want: float, what: str, tol: float = TOL) -> bool:
        return self(abs(got - want) <= tol, f"{what}: got {got:.4f}, want {want} +- {tol}")


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    spec = SweepSpec(out=str(out), threads=os.cpu_count() or 1)
    families = ["duopoly", "isolation", "temp-monopoly", "advantage", "hmr", "multi-firm"]
    results, rows, seconds = {}, [], {}
    for fam in families:
        start = time.perf_counter()
        outcome = run_sweep(spec, [fam])
        seconds[fam] = time.perf_counter() - start
        results.update(outcome.results)
        rows += outcome.all_rows
    return {"spec": spec, "out": out, "results": results, "rows": rows, "seconds": seconds}


def find_row(rows, family, instance, alg_row, alg_col, **fields) -> report.ResultRow:
    hits = [r for r in rows if r.family == family and r.instance == instance
            and r.alg_row == alg_row and r.alg_col == alg_col
            and all(getattr(r, k) == v for k, v in fields.items())]
    assert len(hits) == 1, (family, instance, alg_row, alg_col, fields, len(hits))
    return hits[0]


def entry_matrix(rows, family, X, variant, instance=HT) -> np.ndarray:
    return np.array([[find_row(rows, family, instance, a, b, X=X, variant=variant).mean_share_row
                      for b in ORDER] for a in ORDER])


def duopoly_checks(sweep, instances) -> Checks:
    check = Checks()
    for (inst, a, b), ref in DUOPOLY_REF.items():
        if inst not in instances:
            continue
        for T0, want in zip(DUOPOLY_T0, ref):
            r = find_row(sweep["rows"], "duopoly", inst, a, b, T0=T0)
            check.near(r.mean_share_row, want, f"{inst} {a} vs {b} T0={T0}")
    return check


def test_duopoly_shares_heavy_tail_and_needle(sweep):
    check = duopoly_checks(sweep, (HT, NIH))
    for inst, a, b, T0 in ZERO_EEOG_MEDIAN:
        r = find_row(sweep["rows"], "duopoly", inst, a, b, T0=T0)
        check(r.eeog_median == 0, f"{inst} {a} vs {b} T0={T0}: EEOG median {r.eeog_median:g}, want 0")
    minutes = sweep["seconds"]["duopoly"] / 60
    check(minutes <= 15, f"duopoly sweep took {minutes:.1f} min, budget 15")
    record(1, "duopoly shares on Heavy-Tail and Needle-in-Haystack, zero EEOG medians, runtime",
           check.failures, check.count)


def test_duopoly_shares_uniform(sweep):
    check = duopoly_checks(sweep, (UNI,))
    record(2, "duopoly shares on Uniform", check.failures, check.count)


def isolation_scores(sweep) -> dict[str, dict[str, np.ndarray]]:
    out: dict[str, dict[str, np.ndarray]] = {}
    for res in sweep["results"]["isolation"]:
        out.setdefault(res.cell.kind.name, {})[str(res.cell.cfg.firms[0])] = res.stack("scores")
    return out


def test_isolation_final_reputation_ordering(sweep):
    check = Checks()
    for inst, scores in isolation_scores(sweep).items():
        final = {a: metrics.mean_trajectory(scores[a]) for a in ORDER}
        for hi, lo in zip(ORDER, ORDER[1:]):
            m_hi, c_hi = final[hi].value[-1], final[hi].ci95[-1]
            m_lo, c_lo = final[lo].value[-1], final[lo].ci95[-1]
            check(m_hi - c_hi > m_lo + c_lo,
                  f"{inst}: {hi} {m_hi:.4f}+-{c_hi:.4f} vs {lo} {m_lo:.4f}+-{c_lo:.4f}")
    check(check.count == 6, "isolation must cover all three instances")
    record(3, "isolation reputation at t=2000 ordered TS > DEG > DG with disjoint CIs",
           check.failures, check.count)


def test_exploration_disadvantage_periods(sweep):
    check = Checks()
    scores = isolation_scores(sweep)
    for inst in (UNI, HT):
        rel = metrics.relative_reputation(scores[inst]["TS"], scores[inst]["DG"])
        p = metrics.exploration_disadvantage_period(rel)
        check(p is not None and p[0] <= 50,
              f"{inst}: TS-vs-DG disadvantage period {p}, want one starting by round 50")
    rel = metrics.relative_reputation(scores[NIH]["TS"], scores[NIH]["DG"])
    p = metrics.exploration_disadvantage_period(rel, after=50)
    low = float(rel.value[50:].min())
    check(p is None, f"{NIH}: TS-vs-DG below 1/2 over rounds {p} (minimum {low:.3f}), want none")
    record(4, "TS-vs-DG exploration disadvantage on Uniform and Heavy-Tail, none on Needle",
           check.failures, check.count)


def test_temporary_monopoly(sweep):
    check = Checks()
    rows = sweep["rows"]
    S = entry_matrix(rows, "temp-monopoly", 200, "full")
    for i, a in enumerate(ORDER):
        for j, b in enumerate(ORDER):
            check.near(S[i, j], TEMP_MONOPOLY_X200[i][j], f"X=200 entrant {a} vs incumbent {b}")
    for X in (200, 50, 300, 500):
        S = entry_matrix(rows, "temp-monopoly", X, "full")
        for i, a in enumerate(ORDER):
            check(S[i, 0] <= S[i].min(),
                  f"X={X} entrant {a}: TS incumbent leaves {S[i, 0]:.4f}, row minimum {S[i].min():.4f}")
    record(5, "temporary monopoly on Heavy-Tail: X=200 shares, TS incumbent dominant at every X",
           check.failures, check.count)


def test_advantage_decomposition(sweep):
    check = Checks()
    rows = sweep["rows"]
    rep = entry_matrix(rows, "advantage", 200, "reputation")
    data = entry_matrix(rows, "advantage", 200, "data")
    for name, S, ref in (("reputation", rep, REPUTATION_ADVANTAGE_X200),
                         ("data", data, DATA_ADVANTAGE_X200)):
        for i, a in enumerate(ORDER):
            for j, b in enumerate(ORDER):
                check.near(S[i, j], ref[i][j], f"{name} advantage entrant {a} vs incumbent {b}")
    for i, a in enumerate(ORDER):
        check(data[i, 0] <= rep[i, 0],
              f"entrant {a} vs TS incumbent: data {data[i, 0]:.4f} > reputation {rep[i, 0]:.4f}")
    record(6, "data vs reputation advantage on Heavy-Tail X=200", check.failures, check.count)


def test_hmr_choice_rule(sweep):
    check = Checks()
    rows = [r for r in sweep["rows"] if r.family == "hmr"]
    for T, want in HMR_TS_DG.items():
        r = find_row(rows, "hmr", HT, "TS", "DG", T=T, rule="HMR")
        check.near(r.mean_share_row, want, f"{HT} TS vs DG under HMR, T={T}")
    for r in rows:
        if r.rule == "HMR" and r.T == 2000:
            hm = find_row(rows, "hmr", r.instance, r.alg_row, r.alg_col, T=2000, rule="HM")
            check(r.variance < hm.variance, f"{r.instance} {r.alg_row} vs {r.alg_col}: "
                  f"HMR variance {r.variance:.4f} >= HM {hm.variance:.4f}")
    record(7, "HMR(0.1): Heavy-Tail TS vs DG shares at T=2000/10000, variance below HM",
           check.failures, check.count)


def test_many_dg_firms(sweep):
    check = Checks()
    table = report.multi_firm_rows(sweep["results"]["multi-firm"])
    for inst in (HT, NIH, UNI):
        sel = sorted((r for r in table if r[0] == inst), key=lambda r: r[1])
        F = [r[1] for r in sel]
        w, w_ci, e = [r[3] for r in sel], [r[4] for r in sel], [r[7] for r in sel]
        check(F == list(range(2, 9)), f"{inst}: firm counts {F}")
        rises = [k for k in range(len(w) - 1) if w[k + 1] > w[k]]
        far = [k for k in rises if w[k + 1] - w_ci[k + 1] > w[k] + w_ci[k]]
        check(len(rises) <= 1 and not far,
              f"{inst}: welfare rises at F=" + ", ".join(f"{F[k]}->{F[k + 1]} (+{w[k + 1] - w[k]:.5f})"
                                                       for k in rises))
        check(all(b > a for a, b in zip(e, e[1:])), f"{inst}: EEOG means {np.round(e, 1).tolist()}")
    record(8, "all-DG markets: welfare weakly decreasing in F, EEOG increasing",
           check.failures, check.count)


def test_property_suite(sweep, tmp_path):
    check = Checks()
    rng = np.random.default_rng(7)

    rewards = rng.integers(0, 2, 500)
    st = init_algorithm_state(AlgorithmKind(Algo.TS), 3)
    for r in rewards:
        observe(st, 1, int(r))
    p = st.posteriors[1]
    check(p.alpha == 1 + rewards.sum() and p.beta == 1 + len(rewards) - rewards.sum(),
          "posterior counts differ from observed rewards")

    total = np.concatenate([res.shares.sum(axis=1) for fam in ("duopoly", "temp-monopoly", "hmr")
                            for res in sweep["results"][fam]])
    check(np.allclose(total, 1.0), "market shares do not sum to one")

    args = ["--instances", HT, "--N", "40", "--T", "300", "--X", "60", "--algorithms", "TS,DG"]
    for threads in ("1", "2"):
        assert cli.main(["--out", str(tmp_path / threads), "--threads", threads, "--raw",
                         "temp-monopoly", *args]) == 0
    for name in ("temp_monopoly_summary.csv", "temp_monopoly_raw.csv"):
        check((tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes(),
              f"{name} differs between 1 and 2 threads")

    spec = SweepSpec(pairs=["TS-TS", "DEG-DEG", "DG-DG"], T0=[20], out=str(tmp_path / "sym"))
    for r in run_sweep(spec, ["duopoly"], write=False).rows["duopoly"]:
        check.near(r.mean_share_row, 0.5, f"{r.instance} {r.alg_row} vs itself")

    kind = MabInstanceKind.parse(UNI)
    bank = InstanceBank.draw(kind, 20, 500, 40, master_seed=3)
    for i in range(bank.N):
        a = run_competition(GameConfig((DG, DG), DUOPOLY, T=500, T0=20), bank.tables[i],
                            RngBundle.derive(3, kind.key, i, [0, 0]))
        b = run_competition(GameConfig((DG, DG), temporary_monopoly(0), T=500, T0=20),
                            bank.tables[i], RngBundle.derive(3, kind.key, i, [0, 0]))
        check(a.same_as(b), f"X=0 trace differs from duopoly on instance {i}")

    # K=2 with arm 0 always paying 1 and arm 1 never: firm 0 keeps every agent.
    cfg = GameConfig((DG, DG), DUOPOLY, T=4, T0=1, M=1,
                     arm_tie_break="lowest", agent_tie_break="lowest")
    for engine in ("python", "kernel"):
        tr = run_competition(cfg, constant_table([1, 0], 5, 1), RngBundle.from_seed(0, 2), engine)
        check(tr.firm.tolist() == [0, 0, 0, 0] and tr.arm.tolist() == [0, 0, 0, 0]
              and tr.reward.tolist() == [1, 1, 1, 1] and metrics.eeog(tr) == 0,
              f"hand-traced game differs on the {engine} engine")

    half = metrics.Z95 * np.sqrt(0.2 / 1000)
    check(round(half, 2) == 0.03, f"ci95 for variance 0.2, N=1000 is {half:.4f}")
    record(9, "properties: conjugacy, conservation, thread determinism, symmetry, X=0, "
              "hand-traced game, ci95", check.failures, check.count)


def test_nash_on_simulated_matrices(sweep, capsys):
    check = Checks()
    out = sweep["out"]
    assert cli.main(["--out", str(out), "nash"]) == 0
    capsys.readouterr()
    with open(out / "nash.csv") as fh:
        header = fh.readline().strip().split(",")
        recs = [dict(zip(header, line.strip().split(","))) for line in fh]
    duo = {r["instance"]: r for r in recs if r["family"] == "duopoly" and r["T0"] == "20"}
    for inst in (HT, UNI):
        eq = duo[inst]["equilibria"]
        check(eq == "DG/DG", f"{inst} T0=20: equilibria {eq}, want DG/DG only")
    dom = duo[NIH]["row_weakly_dominant"].split(";")
    check("TS" in dom, f"{NIH} T0=20: weakly dominant {dom}, want TS")
    record(10, "equilibria from simulated duopoly matrices at T0=20", check.failures, check.count)
