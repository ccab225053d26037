"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the ``acceptance criteria`` section of the terminal summary.  The module
runs in roughly a quarter of an hour on one core.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

from impsub.cli import main
from impsub.cluster import day_features, k_medoids
from impsub.data import normalize, synth_generate, write_csv
from impsub.evaluate import percentiles, run_benchmark
from impsub.iss import IssConfig, importance_subsample, iss_design
from impsub.model import LP, MILP, RunLog, default_config, operate
from impsub.solve import INFEASIBLE, OPTIMAL, LinearProgram, simplex, solve_mip

from oracles import kmedoids_exhaustive, lp_vertex_oracle, mip_grid_oracle, random_lp, random_mip

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def two_years():
    return synth_generate(1, 2)


@pytest.fixture(scope="module")
def one_year():
    return synth_generate(1, 1)


# -- 1 ------------------------------------------------------------------------


def test_criterion_1_solver_oracles(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240101)
    lp_bad, lp_infeasible = [], 0
    for i in range(200):
        c, A, s, b, lb, ub = random_lp(rng, max_vars=5, max_rows=5)
        expected = lp_vertex_oracle(c, A, s, b, lb, ub)
        res = simplex(LinearProgram.from_dense(c, A, s, b, lb, ub))
        if expected is None:
            lp_infeasible += 1
            ok = res.status == INFEASIBLE
        else:
            ok = res.status == OPTIMAL and abs(res.objective - expected) <= 1e-6
        if not ok:
            lp_bad.append(i)
    mip_bad, mip_infeasible = [], 0
    for i in range(100):
        c, A, s, b, ub = random_mip(rng, max_vars=6)
        expected = mip_grid_oracle(c, A, s, b, ub)
        lp = LinearProgram.from_dense(c, A, s, b, np.zeros(len(c)), ub, integrality=[True] * len(c))
        res = solve_mip(lp, gap=0.0, method="simplex")
        if expected is None:
            mip_infeasible += 1
            ok = res.status == INFEASIBLE
        else:
            ok = res.status == OPTIMAL and res.objective == expected
        if not ok:
            mip_bad.append(i)
    elapsed = time.perf_counter() - t0
    passed = not lp_bad and not mip_bad and elapsed < 60
    acceptance_report(
        1, "solver oracle equivalence", passed,
        f"LP mismatches {len(lp_bad)}/200 ({lp_infeasible} infeasible), "
        f"MIP mismatches {len(mip_bad)}/100 ({mip_infeasible} infeasible), {elapsed:.1f} s",
    )
    assert not lp_bad, f"LP instances disagreeing with vertex enumeration: {lp_bad}"
    assert not mip_bad, f"MIP instances disagreeing with grid enumeration: {mip_bad}"
    assert elapsed < 60


# -- 2 ------------------------------------------------------------------------


def _cluster_fixtures():
    """Real synthetic-day windows and random feature matrices, 2 to 8 days."""
    table = synth_generate(7, 1)
    out = []
    for n in range(2, 9):
        for start in range(0, 365 - n, 61):
            window = table.days(start, start + n)
            _, spec = normalize(window)
            feats = day_features(window, spec)
            out.append((f"synth[{start}:{start + n}]", feats))
        rng = np.random.default_rng(n)
        for j in range(4):
            out.append((f"random{n}.{j}", rng.normal(size=(n, 12))))
    return out


def test_criterion_2_clustering_oracle(acceptance_report):
    t0 = time.perf_counter()
    bad, count = [], 0
    for name, feats in _cluster_fixtures():
        n = feats.shape[0]
        for k in range(1, min(3, n) + 1):
            count += 1
            c = k_medoids(feats, k, seed=count, n_init=10)
            best = kmedoids_exhaustive(feats, k)
            if not c.cost <= best * (1 + 1e-12) + 1e-12:
                bad.append((name, k, c.cost, best))
    elapsed = time.perf_counter() - t0
    passed = not bad and elapsed < 60
    acceptance_report(2, "clustering oracle", passed,
                      f"{count - len(bad)}/{count} fixture-k pairs at the exhaustive optimum, {elapsed:.1f} s")
    assert not bad, bad
    assert elapsed < 60


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_reduction_identity(acceptance_report, one_year, tmp_path):
    data = tmp_path / "year.csv"
    write_csv(one_year, data)
    runner = CliRunner()
    identical = []
    for seed in (0, 1, 2):
        outs = {}
        for label, extra in (("km", ["--sampling", "kmedoids"]), ("iss", ["--sampling", "iss", "--extreme-days", "0"])):
            out = tmp_path / f"{label}{seed}"
            args = ["plan", "--data", str(data), "--days", "24", "--seed", str(seed), "--no-evaluate", "--out", str(out)]
            res = runner.invoke(main, args + extra, catch_exceptions=False)
            assert res.exit_code == 0, res.output
            outs[label] = (out / "design.json").read_bytes()
        identical.append(outs["km"] == outs["iss"])
    passed = all(identical)
    acceptance_report(3, "reduction identity", passed,
                      f"byte-identical design.json for {sum(identical)}/3 seeds (1-year table, n_d=24)")
    assert passed


# -- 4 ------------------------------------------------------------------------


def _top_days_independently(values, n_extreme):
    maxima = [max(values[24 * d:24 * d + 24]) for d in range(len(values) // 24)]
    order = sorted(range(len(maxima)), key=lambda d: (-maxima[d], d))
    return order[:n_extreme]


def test_criterion_4_extremes_and_weights(acceptance_report, two_years):
    cfg = default_config()
    problems = []
    checked = 0
    for n_d, n_de in ((48, 16), (90, 30)):
        for seed in range(20):
            sample, diag = importance_subsample(two_years, cfg, IssConfig(n_d, n_de, seed=seed))
            checked += 1
            top = _top_days_independently(diag.importance.values.tolist(), n_de)
            if sorted(top) != sorted(diag.extremes):
                problems.append((n_d, seed, "ranking"))
            for d in top:
                rows = np.flatnonzero(sample.origin == d)
                if rows.size != 1:
                    problems.append((n_d, seed, f"day {d} missing"))
                    continue
                i = rows[0]
                verbatim = (
                    sample.weights[i] == 1.0
                    and np.array_equal(sample.demand[i], two_years.demand[24 * d:24 * d + 24])
                    and np.array_equal(sample.wind_cf[i], two_years.wind_cf[24 * d:24 * d + 24])
                )
                if not verbatim:
                    problems.append((n_d, seed, f"day {d} altered"))
            if float(np.sum(sample.weights)) != 730.0 or sample.n_entries != n_d:
                problems.append((n_d, seed, f"weights sum {np.sum(sample.weights)}"))
    passed = not problems
    acceptance_report(4, "extreme preservation and weight conservation", passed,
                      f"{checked - len({p[:2] for p in problems})}/{checked} subsamples keep the top-n_de days "
                      f"verbatim with weights summing to 730")
    assert passed, problems


# -- 5 ------------------------------------------------------------------------


def test_criterion_5_benchmark_ordering(acceptance_report, two_years, tmp_path):
    from impsub.plotting import save_box_figures

    t0 = time.perf_counter()
    cfg = default_config()
    res = run_benchmark(two_years, cfg, LP, 48, 16, seeds=range(20))
    elapsed = time.perf_counter() - t0
    (tmp_path / "results.csv").write_text(res.to_csv())
    save_box_figures(res, tmp_path / "figures")
    km_eu = percentiles(res.values("kmedoids", "energy_unserved"))
    is_eu = percentiles(res.values("importance", "energy_unserved"))
    km_pk = percentiles(res.values("kmedoids", "cap_peaking"))
    is_pk = percentiles(res.values("importance", "cap_peaking"))
    km_spread = km_pk["p97.5"] - km_pk["p2.5"]
    is_spread = is_pk["p97.5"] - is_pk["p2.5"]
    median_ok = is_eu["p50"] <= km_eu["p50"]
    spread_ok = is_spread <= km_spread
    passed = median_ok and spread_ok and elapsed < 1800 and not res.failures
    acceptance_report(
        5, "benchmark ordering (LP, 2 years, n_d=48, n_de=16, 20 seeds)", passed,
        f"median energy unserved ISS {is_eu['p50']:.0f} vs k-medoids {km_eu['p50']:.0f} MWh/yr "
        f"({'ok' if median_ok else 'violated'}); peaking 2.5-97.5 spread ISS {is_spread:.0f} vs k-medoids "
        f"{km_spread:.0f} MW ({'ok' if spread_ok else 'violated'}); VoLL cost ratio "
        f"{res.voll_ratio.get('importance') or float('nan'):.2f} %/0.01 % unmet; {elapsed:.0f} s",
    )
    assert not res.failures
    assert median_ok, (is_eu, km_eu)
    assert spread_ok, (is_spread, km_spread)
    assert elapsed < 1800


# -- 6 ------------------------------------------------------------------------


def test_criterion_6_ground_truth_gap(acceptance_report, fortnight):
    cfg = default_config()
    res = run_benchmark(fortnight, cfg, LP, 6, 2, seeds=range(20), target=True)
    target = res.target["total_cost"]
    km = {s: res.suboptimality[("kmedoids", s)].total_cost - target for s in range(20)}
    iss = {s: res.suboptimality[("importance", s)].total_cost - target for s in range(20)}
    tol = 1e-9 * target
    nonneg = all(v >= -tol for v in km.values()) and all(v >= -tol for v in iss.values())
    wins = sum(iss[s] <= km[s] for s in range(20))
    passed = nonneg and wins >= 16 and not res.failures
    acceptance_report(
        6, "ground-truth gap (14 days, n_d=6, n_de=2)", passed,
        f"ISS suboptimality <= k-medoids in {wins}/20 seeds (need 16); minimum gap "
        f"{min(min(km.values()), min(iss.values())):.3g} (must be >= 0)",
    )
    assert not res.failures
    assert nonneg
    assert wins >= 16


# -- 7 ------------------------------------------------------------------------


def test_criterion_7_milp_constraints(acceptance_report, one_year):
    cfg = default_config()
    design, sample, diag = iss_design(one_year, cfg, IssConfig(24, 8, seed=0), variant=MILP)
    block = cfg.block_size
    designs = {"cluster estimate": diag.cluster_design, "importance estimate": design}
    multiples = {
        name: all(v % block == 0.0 for (t, _), v in d.cap.items() if t == cfg.block_technology)
        for name, d in designs.items()
    }
    op = operate(one_year, design, cfg, MILP)
    worst = 0.0
    for i, (tech, bus) in enumerate(op.gen_units):
        if tech != cfg.block_technology:
            continue
        limit = cfg.ramp_fraction * design.cap[(tech, bus)]
        excess = np.abs(np.diff(op.gen[:, i])) - limit
        worst = max(worst, float(excess.max(initial=-np.inf)))
    ramp_ok = worst <= 1e-6
    passed = all(multiples.values()) and ramp_ok
    caps = sorted(v for (t, _), v in design.cap.items() if t == cfg.block_technology)
    acceptance_report(
        7, "MILP blocks and ramp", passed,
        f"baseload multiples of 3 GW: {multiples}; baseload caps {caps} MW; "
        f"largest ramp excess over 8759 hour pairs {worst:.3g} MW",
    )
    assert all(multiples.values())
    assert ramp_ok


# -- 8 ------------------------------------------------------------------------


def test_criterion_8_run_accounting(acceptance_report, one_year, monkeypatch):
    cfg = default_config()
    calls = {"plan": 0, "operate": 0}
    import impsub.iss as iss_mod

    def counted(name, fn):
        def wrapper(*a, **k):
            calls[name] += 1
            return fn(*a, **k)

        return wrapper

    monkeypatch.setattr(iss_mod, "plan", counted("plan", iss_mod.plan))
    monkeypatch.setattr(iss_mod, "operate", counted("operate", iss_mod.operate))
    log = RunLog()
    design, _, _ = iss_design(one_year, cfg, IssConfig(24, 8, seed=3), log=log)
    monkeypatch.undo()
    accounting_ok = calls == {"plan": 2, "operate": 1} and log.count("plan") == 2 and log.count("operate") == 1

    times = {}
    for years in (1, 2, 4):
        table = synth_generate(11, years)
        best = np.inf
        for _ in range(3):
            t0 = time.perf_counter()
            operate(table, design, cfg, LP)
            best = min(best, time.perf_counter() - t0)
        times[years] = best
    n = np.array(list(times))
    t = np.array(list(times.values()))
    slope = float(n @ t / (n @ n))
    deviation = {y: times[y] / (slope * y) - 1.0 for y in times}
    linear_ok = all(abs(d) <= 0.25 for d in deviation.values())
    passed = accounting_ok and linear_ok
    acceptance_report(
        8, "run accounting and linear operate time", passed,
        f"runs per ISS invocation plan={calls['plan']} operate={calls['operate']}; operate seconds "
        + ", ".join(f"{y}y={times[y]:.2f}" for y in times)
        + "; deviation from proportional fit "
        + ", ".join(f"{y}y={100 * d:+.1f}%" for y, d in deviation.items()),
    )
    assert accounting_ok, (calls, log.entries)
    assert linear_ok, deviation
