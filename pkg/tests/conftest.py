from datetime import datetime, timezone

import numpy as np
import pytest

from impsub.data import DEMAND_BUSES, WIND_BUSES, TimeSeriesTable, synth_generate
from impsub.model import DISPATCHABLE, SystemConfig, Technology

START = datetime(2001, 1, 1, tzinfo=timezone.utc)


def one_bus_config(build_cost=100_000.0, gen_cost=80.0, voll=6000.0, techs=None, **kw):
    """Single bus 1 with one dispatchable technology unless ``techs`` is given."""
    techs = techs or (Technology("peaking", DISPATCHABLE, build_cost, gen_cost, (1,)),)
    return SystemConfig((1,), techs, (), 0.0, voll, **kw)


def one_bus_table(demand, start=START):
    demand = np.asarray(demand, dtype=float).reshape(-1, 1)
    return TimeSeriesTable(start, (1,), demand, (), np.zeros((demand.shape[0], 0)))


def random_table(rng, n_days, start=START):
    n = n_days * 24
    demand = rng.uniform(1000.0, 5000.0, size=(n, len(DEMAND_BUSES)))
    wind = rng.uniform(0.0, 1.0, size=(n, len(WIND_BUSES)))
    return TimeSeriesTable(start, DEMAND_BUSES, demand, WIND_BUSES, wind)


@pytest.fixture(scope="session")
def synth_year():
    return synth_generate(1, 1)


@pytest.fixture(scope="session")
def fortnight():
    """14-day slice of a seeded synthetic year, small enough to solve in full."""
    return synth_generate(3, 1).days(0, 14)


# -- acceptance reporting -----------------------------------------------------

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one ``PASS``/``FAIL`` line per acceptance criterion."""

    def record(number, title, passed, detail):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
