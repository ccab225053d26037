from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from impsub.data import (
    CSV_HEADER,
    DEMAND_BUSES,
    WIND_BUSES,
    DayBlock,
    TimeSeriesTable,
    day_blocks,
    denormalize,
    load_csv,
    normalize,
    synth_generate,
    write_csv,
)
from impsub.errors import GapError, RangeError, SchemaError, ShapeError

from conftest import START, random_table


def _write_rows(path, rows, header=CSV_HEADER):
    path.write_text(",".join(header) + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


def _rows(n, cf=0.5, skip=None):
    out = []
    for i in range(n):
        if i == skip:
            continue
        ts = (START + timedelta(hours=i)).strftime("%Y-%m-%dT%H:00Z")
        out.append(f"{ts},100,200,300,{cf},{cf},{cf}")
    return out


# -- CSV ------------------------------------------------------------------------


def test_load_48_rows(tmp_path):
    p = tmp_path / "t.csv"
    _write_rows(p, _rows(48))
    table = load_csv(p)
    assert table.length == 48
    assert table.demand_buses == DEMAND_BUSES and table.wind_buses == WIND_BUSES
    assert table.start == START


def test_capacity_factor_above_one(tmp_path):
    p = tmp_path / "t.csv"
    rows = _rows(48)
    rows[17] = rows[17].rsplit(",", 1)[0] + ",1.2"
    _write_rows(p, rows)
    with pytest.raises(RangeError):
        load_csv(p)


def test_negative_demand(tmp_path):
    p = tmp_path / "t.csv"
    rows = _rows(24)
    parts = rows[3].split(",")
    parts[1] = "-1"
    rows[3] = ",".join(parts)
    _write_rows(p, rows)
    with pytest.raises(RangeError):
        load_csv(p)


def test_missing_hour(tmp_path):
    p = tmp_path / "t.csv"
    _write_rows(p, _rows(48, skip=20))
    with pytest.raises(GapError):
        load_csv(p)


def test_repeated_hour(tmp_path):
    p = tmp_path / "t.csv"
    rows = _rows(24)
    rows.insert(5, rows[4])
    _write_rows(p, rows)
    with pytest.raises(GapError):
        load_csv(p)


@pytest.mark.parametrize(
    "header",
    [CSV_HEADER[:-1], CSV_HEADER[::-1], ("time",) + CSV_HEADER[1:]],
)
def test_wrong_header(tmp_path, header):
    p = tmp_path / "t.csv"
    _write_rows(p, _rows(24), header=header)
    with pytest.raises(SchemaError):
        load_csv(p)


def test_bad_timestamp_and_field_count(tmp_path):
    p = tmp_path / "t.csv"
    rows = _rows(24)
    rows[0] = rows[0].replace("T00:00Z", " 00:00")
    _write_rows(p, rows)
    with pytest.raises(SchemaError):
        load_csv(p)
    rows = _rows(24)
    rows[2] += ",9"
    _write_rows(p, rows)
    with pytest.raises(SchemaError):
        load_csv(p)


def test_empty_file(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("")
    with pytest.raises(SchemaError):
        load_csv(p)


def test_csv_roundtrip_is_exact(tmp_path):
    table = random_table(np.random.default_rng(0), 3)
    p = tmp_path / "t.csv"
    write_csv(table, p)
    back = load_csv(p)
    assert back == table
    q = tmp_path / "u.csv"
    write_csv(back, q)
    assert p.read_bytes() == q.read_bytes()
    assert b"\r\n" not in p.read_bytes()


# -- synthetic generator --------------------------------------------------------


def test_synth_deterministic(synth_year):
    again = synth_generate(1, 1)
    assert again == synth_year
    assert again.demand.tobytes() == synth_year.demand.tobytes()
    assert again.wind_cf.tobytes() == synth_year.wind_cf.tobytes()


def test_synth_lengths():
    assert synth_generate(1, 2).length == 17520


def test_synth_ranges(synth_year):
    assert synth_year.length == 8760
    assert np.all((synth_year.wind_cf >= 0) & (synth_year.wind_cf <= 1))
    assert np.all(synth_year.demand >= 0)


def test_synth_seed_changes_series(synth_year):
    assert not np.array_equal(synth_generate(2, 1).demand, synth_year.demand)


def test_synth_buses_correlated_not_identical(synth_year):
    corr = np.corrcoef(synth_year.values().T)
    d = corr[:3, :3][np.triu_indices(3, 1)]
    w = corr[3:, 3:][np.triu_indices(3, 1)]
    assert np.all(d > 0.5) and np.all(d < 0.9999)
    assert np.all(w > 0.1) and np.all(w < 0.9999)


def test_synth_rejects_zero_years():
    with pytest.raises(ValueError):
        synth_generate(1, 0)


# -- normalisation ------------------------------------------------------------


def _table_from_columns(cols):
    values = np.array(cols, dtype=float).T
    return TimeSeriesTable(START, (1, 2), values[:, :2], (3,), values[:, 2:])


def test_normalize_linear_map():
    table = _table_from_columns([[2, 4, 6], [5, 5, 5], [0.2, 0.4, 0.6]])
    norm, spec = normalize(table)
    np.testing.assert_allclose(norm.demand[:, 0], [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(norm.demand[:, 1], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(norm.wind_cf[:, 0], [0.0, 0.5, 1.0])
    assert spec.names == ("demand_bus1", "demand_bus2", "wind_bus3")


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (30, 6), elements=st.floats(0.0, 1.0, allow_nan=False)))
def test_normalize_roundtrip(values):
    table = TimeSeriesTable(START, DEMAND_BUSES, values[:, :3] * 1e4, WIND_BUSES, values[:, 3:])
    norm, spec = normalize(table)
    assert norm.values().min() >= 0.0 and norm.values().max() <= 1.0
    back = denormalize(norm, spec)
    span = np.maximum(spec.spans, 1.0)
    assert np.all(np.abs(back.values() - table.values()) <= 1e-12 * span)


# -- blocking -----------------------------------------------------------------


@pytest.mark.parametrize("hours,blocks", [(24, 1), (48, 2), (8760, 365)])
def test_day_blocks(hours, blocks):
    table = TimeSeriesTable(START, (1,), np.ones((hours, 1)), (), np.zeros((hours, 0)))
    out = day_blocks(table)
    assert len(out) == blocks
    assert out[0] == DayBlock(0)
    assert list(out[-1].steps) == list(range(hours - 24, hours))


def test_day_blocks_need_whole_days():
    table = TimeSeriesTable(START, (1,), np.ones((30, 1)), (), np.zeros((30, 0)))
    with pytest.raises(ShapeError):
        day_blocks(table)


def test_table_validation():
    with pytest.raises(RangeError):
        TimeSeriesTable(START, (1,), np.ones((2, 1)), (2,), np.full((2, 1), 1.5))
    with pytest.raises(ShapeError):
        TimeSeriesTable(START, (1, 2), np.ones((2, 1)), (), np.zeros((2, 0)))
    with pytest.raises(GapError):
        TimeSeriesTable(START + timedelta(minutes=30), (1,), np.ones((2, 1)), (), np.zeros((2, 0)))


def test_table_slicing_and_readonly():
    table = random_table(np.random.default_rng(1), 4)
    part = table.days(1, 3)
    assert part.length == 48
    assert part.start == START + timedelta(days=1)
    np.testing.assert_array_equal(part.demand, table.demand[24:72])
    with pytest.raises(ValueError):
        table.demand[0, 0] = 1.0
