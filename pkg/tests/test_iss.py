import json

import numpy as np
import pytest

from impsub.errors import BadCount, ClusterError, LengthMismatch
from impsub.data import TimeSeriesTable
from impsub.iss import (
    _merge,
    ImportanceSeries,
    IssConfig,
    compute_importance,
    estimate_design,
    importance_subsample,
    iss_design,
    kmedoids_sample,
    random_hour_sample,
    rank_extreme_days,
    rank_extreme_hours,
)
from impsub.model import (
    DISPATCHABLE, MILP, WIND, Operation, RunLog, Technology, WeightedSample, default_config, operate, plan,
)
from impsub.seeding import CLUSTER_INIT, ISS_RECLUSTER, SYNTH, named_seeds, sub_seed

from conftest import START, one_bus_config


def _op(gen, unserved, units):
    gen = np.atleast_2d(np.asarray(gen, float))
    unserved = np.atleast_2d(np.asarray(unserved, float))
    T = gen.shape[0]
    return Operation(tuple(units), gen, (), np.zeros((T, 0)), (1,), unserved, (), np.zeros((T, 0)))


def _cfg():
    techs = (
        Technology("baseload", DISPATCHABLE, 300_000.0, 5.0, (1,)),
        Technology("wind", WIND, 230_000.0, 0.0, (1,)),
    )
    return one_bus_config(techs=techs)


# -- importance ----------------------------------------------------------------


def test_importance_examples():
    cfg = _cfg()
    units = [("baseload", 1), ("wind", 1)]
    op = _op([[0.0, 7.0], [2.0, 0.0], [0.0, 0.0]], [[0.0], [0.0], [1.0]], units)
    imp = compute_importance(op, cfg)
    assert imp.values[0] == 0.0
    assert imp.values[1] == 10.0
    assert imp.values[2] >= 6000.0


def test_importance_length_check():
    op = _op([[1.0]], [[0.0]], [("baseload", 1)])
    with pytest.raises(LengthMismatch):
        compute_importance(op, _cfg(), expected_length=24)
    with pytest.raises(LengthMismatch):
        ImportanceSeries(np.ones(30)).day_maxima()


def test_rank_extreme_days():
    imp = ImportanceSeries(np.concatenate([np.full(24, 5.0), np.full(24, 90.0), np.full(24, 100.0)]))
    assert rank_extreme_days(imp, 0) == []
    assert rank_extreme_days(imp, 2) == [2, 1]
    tied = ImportanceSeries(np.concatenate([np.full(24, 7.0), np.full(24, 7.0)]))
    assert rank_extreme_days(tied, 1) == [0]
    with pytest.raises(BadCount):
        rank_extreme_days(imp, 4)


def test_rank_uses_daily_maximum_not_sum():
    a = np.zeros(24)
    a[5] = 50.0
    b = np.full(24, 10.0)
    assert rank_extreme_days(ImportanceSeries(np.concatenate([b, a])), 1) == [1]


def test_rank_extreme_hours():
    imp = ImportanceSeries([3.0, 9.0, 1.0, 9.0])
    assert rank_extreme_hours(imp, 3) == [1, 3, 0]


def test_iss_config_defaults_and_bounds():
    assert IssConfig(48).n_extreme == 16
    assert IssConfig(90).n_extreme == 30
    assert IssConfig(4).n_extreme == 1
    with pytest.raises(BadCount):
        IssConfig(4, 5)
    with pytest.raises(BadCount):
        IssConfig(0)
    with pytest.raises(ValueError):
        IssConfig(4, importance="peak")


# -- seeding -------------------------------------------------------------------


def test_named_sub_seeds_are_distinct_and_stable():
    seeds = named_seeds(3)
    assert seeds[CLUSTER_INIT] == sub_seed(3, CLUSTER_INIT)
    assert len(set(seeds.values())) == len(seeds)
    assert set(seeds) >= {CLUSTER_INIT, ISS_RECLUSTER, SYNTH}
    assert named_seeds(3) == seeds
    assert named_seeds(4)[CLUSTER_INIT] != seeds[CLUSTER_INIT]


# -- the algorithm on a small table ------------------------------------------


@pytest.fixture(scope="module")
def run(fortnight):
    cfg = default_config()
    log = RunLog()
    sample, diag = importance_subsample(fortnight, cfg, IssConfig(6, 2, seed=3), log=log)
    return fortnight, cfg, sample, diag, log


def test_extremes_kept_with_unit_weight(run):
    table, _, sample, diag, _ = run
    assert len(diag.extremes) == 2
    expected = rank_extreme_days(diag.importance, 2)
    assert diag.extremes == expected
    for d in expected:
        i = int(np.flatnonzero(sample.origin == d)[0])
        assert sample.weights[i] == 1.0
        np.testing.assert_array_equal(sample.demand[i], table.demand[24 * d:24 * d + 24])
        np.testing.assert_array_equal(sample.wind_cf[i], table.wind_cf[24 * d:24 * d + 24])


def test_weights_sum_to_day_count(run):
    table, _, sample, _, _ = run
    assert sample.n_entries == 6
    assert sample.weights.sum() == table.n_days
    assert len(set(sample.origin.tolist())) == 6


def test_two_runs_before_final_plan(run):
    *_, log = run
    assert log.count("plan") == 1 and log.count("operate") == 1


def test_importance_is_the_cluster_design_dispatch(run):
    table, cfg, _, diag, _ = run
    op = operate(table, diag.cluster_design, cfg)
    np.testing.assert_allclose(compute_importance(op, cfg).values, diag.importance.values, rtol=1e-9, atol=1e-6)


def test_diagnostics_serialise(run):
    *_, diag, _ = run
    doc = json.loads(diag.to_json())
    assert doc["extreme_days"] == diag.extremes
    assert len(doc["importance_day_maxima"]) == 14
    assert [r["kind"] for r in doc["runs"]] == ["plan", "operate"]


def test_zero_extremes_reduce_to_kmedoids(fortnight):
    cfg = default_config()
    sample, diag = importance_subsample(fortnight, cfg, IssConfig(5, 0, seed=7))
    plain = kmedoids_sample(fortnight, 5, 7)
    assert sample.same_as(plain)
    assert diag.first_sample.same_as(plain)
    # re-solving the returned sample reproduces the step-two design
    assert estimate_design(sample, cfg) == diag.cluster_design


def test_all_extreme_with_days_left_is_rejected(fortnight):
    with pytest.raises(ClusterError):
        importance_subsample(fortnight, default_config(), IssConfig(4, 4))


def test_all_days_sampled(fortnight):
    sample, _ = importance_subsample(fortnight, default_config(), IssConfig(14, 14, seed=1))
    np.testing.assert_array_equal(sample.weights, np.ones(14))
    np.testing.assert_array_equal(sample.origin, np.arange(14))


def test_oversized_sample_rejected(fortnight):
    with pytest.raises(BadCount):
        importance_subsample(fortnight, default_config(), IssConfig(15, 1))


def test_deterministic_in_seed(fortnight):
    cfg = default_config()
    a, _ = importance_subsample(fortnight, cfg, IssConfig(6, 2, seed=11))
    b, _ = importance_subsample(fortnight, cfg, IssConfig(6, 2, seed=11))
    assert a.same_as(b)


def test_iss_design_issues_three_runs(fortnight):
    log = RunLog()
    design, sample, diag = iss_design(fortnight, default_config(), IssConfig(6, 2, seed=5), log=log)
    assert [e["kind"] for e in log.entries] == ["plan", "operate", "plan"]
    assert design == estimate_design(sample, default_config())


def test_long_table_extreme_weight_is_one_day():
    # 30 extremes from a 30-year table: each stands for one day of 10 950
    n_days = 30 * 365
    table = TimeSeriesTable(START, (1,), np.ones((n_days * 24, 1)), (), np.zeros((n_days * 24, 0)))
    extremes = np.arange(30) * 365
    rest = WeightedSample.from_table_days(table, [1, 2], [5000.0, n_days - 30 - 5000.0], source_count=n_days - 30)
    merged = _merge(table, "day", extremes, rest)
    assert merged.weights.sum() == n_days
    for d in extremes:
        assert merged.weights[merged.origin == d].tolist() == [1.0]
    assert merged.annualization == pytest.approx(1.0 / 30)


# -- hour sampling -------------------------------------------------------------


def test_random_hour_sample_weights(fortnight):
    s = random_hour_sample(fortnight, 40, seed=2)
    assert s.unit == "hour" and s.block_hours == 1
    assert s.weights.sum() == pytest.approx(fortnight.length)
    s2 = random_hour_sample(fortnight, 40, seed=2, exclude=[0, 1, 2])
    assert not set(s2.origin) & {0, 1, 2}
    assert s2.weights.sum() == pytest.approx(fortnight.length - 3)


def test_hour_mode_iss(fortnight):
    cfg = default_config()
    sample, diag = importance_subsample(fortnight, cfg, IssConfig(60, 20, seed=1, unit="hour"))
    assert sample.n_entries == 60
    assert sample.weights.sum() == pytest.approx(fortnight.length)
    assert set(diag.extremes) <= set(sample.origin.tolist())
    assert json.loads(diag.to_json())["extreme_hours"] == diag.extremes


def test_hour_mode_forbidden_for_milp(fortnight):
    with pytest.raises(ValueError):
        importance_subsample(fortnight, default_config(), IssConfig(24, 8, unit="hour"), variant=MILP)


def test_plan_on_first_sample_matches_cluster_design(run):
    _, cfg, _, diag, _ = run
    design, obj = plan(diag.first_sample, cfg)
    assert design == diag.cluster_design
    assert obj == diag.cluster_objective
