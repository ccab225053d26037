"""Generation and transmission expansion model on a transport network.

Two modes share one variable layout:

* planning: capacities are decision variables, dispatch is optimised over
  a weighted sample of representative days (or hours);
* operational: capacities are fixed, dispatch is optimised over a
  contiguous table.

The MILP variant adds integer capacity blocks for one technology and an
hourly ramp limit on its dispatch.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np
from scipy import sparse

from . import solve as _solve
from .data import DAYS_PER_YEAR, HOURS_PER_DAY, HOURS_PER_YEAR, TimeSeriesTable
from .errors import ConfigError, EmptySample, IntegrityError, NotOptimal, RangeError

LP, MILP = "lp", "milp"
VARIANTS = (LP, MILP)
DISPATCHABLE, WIND = "dispatchable", "wind"
CONFIG_SCHEMA_VERSION = 1


def check_variant(variant: str) -> str:
    v = str(variant).lower()
    if v not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return v


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class Technology:
    name: str
    kind: str
    build_cost: float
    gen_cost: float
    buses: tuple

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(int(b) for b in self.buses))
        if self.kind not in (DISPATCHABLE, WIND):
            raise ConfigError(f"technology {self.name!r}: unknown kind {self.kind!r}")
        if self.build_cost < 0 or self.gen_cost < 0:
            raise ConfigError(f"technology {self.name!r}: costs must be non-negative")


@dataclass(frozen=True)
class SystemConfig:
    """Buses, candidate technologies, corridors and cost data.

    Costs are annualised: ``build_cost`` in currency/MW/yr, ``gen_cost``
    and ``voll`` in currency/MWh.  ``block_technology`` names the technology
    whose capacity comes in ``block_size`` MW units and whose dispatch is
    ramp limited in the MILP variant.
    """

    buses: tuple
    technologies: tuple
    corridors: tuple
    line_build_cost: float
    voll: float
    block_technology: str = "baseload"
    block_size: float = 3000.0
    ramp_fraction: float = 0.2
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(int(b) for b in self.buses))
        object.__setattr__(self, "technologies", tuple(self.technologies))
        object.__setattr__(self, "corridors", tuple((int(a), int(b)) for a, b in self.corridors))
        names = [t.name for t in self.technologies]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate technology names")
        for tech in self.technologies:
            for b in tech.buses:
                if b not in self.buses:
                    raise ConfigError(f"technology {tech.name!r} placed at unknown bus {b}")
            if tech.gen_cost >= self.voll:
                raise ConfigError(f"generation cost of {tech.name!r} must be below the value of lost load")
        seen = set()
        for a, b in self.corridors:
            if a == b:
                raise ConfigError(f"corridor {a}-{b} is a self-loop")
            if a not in self.buses or b not in self.buses:
                raise ConfigError(f"corridor {a}-{b} references an unknown bus")
            key = frozenset((a, b))
            if key in seen:
                raise ConfigError(f"duplicate corridor {a}-{b}")
            seen.add(key)
        if self.line_build_cost < 0 or self.voll < 0:
            raise ConfigError("costs must be non-negative")
        if not self.block_size > 0:
            raise ConfigError("block size must be positive")
        if not 0 < self.ramp_fraction <= 1:
            raise ConfigError("ramp fraction must lie in (0, 1]")
        by_name = {t.name: t for t in self.technologies}
        if "baseload" in by_name and "peaking" in by_name:
            if not by_name["baseload"].gen_cost < by_name["peaking"].gen_cost:
                raise ConfigError("baseload generation cost must be below peaking")

    def technology(self, name: str) -> Technology:
        for t in self.technologies:
            if t.name == name:
                return t
        raise KeyError(name)

    def units(self, kind=None) -> list:
        """``(tech, bus)`` pairs, dispatchable first, in declaration order."""
        out = []
        for k in (DISPATCHABLE, WIND):
            if kind is not None and k != kind:
                continue
            for t in self.technologies:
                if t.kind == k:
                    out.extend((t.name, b) for b in t.buses)
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "buses": list(self.buses),
            "technologies": [
                {
                    "name": t.name,
                    "kind": t.kind,
                    "build_cost": t.build_cost,
                    "gen_cost": t.gen_cost,
                    "buses": list(t.buses),
                }
                for t in self.technologies
            ],
            "transmission": {"corridors": [list(c) for c in self.corridors], "build_cost": self.line_build_cost},
            "voll": self.voll,
            "milp": {
                "technology": self.block_technology,
                "block_size": self.block_size,
                "ramp_fraction": self.ramp_fraction,
            },
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SystemConfig":
        try:
            version = doc.get("schema_version", CONFIG_SCHEMA_VERSION)
            if version != CONFIG_SCHEMA_VERSION:
                raise ConfigError(f"unsupported config schema_version {version}")
            techs = tuple(
                Technology(t["name"], t["kind"], float(t["build_cost"]), float(t["gen_cost"]), tuple(t["buses"]))
                for t in doc["technologies"]
            )
            milp = doc.get("milp", {})
            return cls(
                buses=tuple(doc["buses"]),
                technologies=techs,
                corridors=tuple(tuple(c) for c in doc["transmission"]["corridors"]),
                line_build_cost=float(doc["transmission"]["build_cost"]),
                voll=float(doc["voll"]),
                block_technology=milp.get("technology", "baseload"),
                block_size=float(milp.get("block_size", 3000.0)),
                ramp_fraction=float(milp.get("ramp_fraction", 0.2)),
                provenance=dict(doc.get("provenance", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config document: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def load(cls, path) -> "SystemConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    def scaled(self, factor: float) -> "SystemConfig":
        """Copy with every cost multiplied by ``factor``."""
        techs = tuple(
            Technology(t.name, t.kind, t.build_cost * factor, t.gen_cost * factor, t.buses) for t in self.technologies
        )
        return SystemConfig(
            self.buses, techs, self.corridors, self.line_build_cost * factor, self.voll * factor,
            self.block_technology, self.block_size, self.ramp_fraction, self.provenance,
        )


def default_config() -> SystemConfig:
    """The 6-bus system with documented placeholder costs.

    Only the value of lost load (6000/MWh) and the MILP block / ramp
    parameters (3 GW, 20 %/h) have a published source; the remaining costs
    and the corridor list are illustrative defaults.
    """
    return SystemConfig(
        buses=(1, 2, 3, 4, 5, 6),
        technologies=(
            Technology("baseload", DISPATCHABLE, 300_000.0, 5.0, (1, 3, 6)),
            Technology("peaking", DISPATCHABLE, 100_000.0, 80.0, (1, 3, 6)),
            Technology("wind", WIND, 230_000.0, 0.0, (2, 5, 6)),
        ),
        corridors=((1, 2), (1, 4), (2, 3), (2, 4), (3, 6), (4, 5), (5, 6)),
        line_build_cost=50_000.0,
        voll=6000.0,
        block_technology="baseload",
        block_size=3000.0,
        ramp_fraction=0.2,
        provenance={
            "voll": "published value of lost load, 6000 per MWh",
            "block_size": "published MILP baseload block, 3 GW",
            "ramp_fraction": "published MILP baseload ramp limit, 20 %/h",
            "technology costs": "illustrative placeholders, override as needed",
            "corridors": "illustrative 6-bus corridor set, override as needed",
            "units": "MW, MWh, currency/MW/yr (build), currency/MWh (generation, voll)",
        },
    )


# -- samples, designs, operations -------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """Representative blocks with weights.

    ``demand`` has shape ``(entries, block_hours, n_demand_buses)``, ``wind_cf``
    ``(entries, block_hours, n_wind_buses)``.  For day sampling
    (``unit == "day"``) weights are in days and sum to ``source_count`` days;
    for hour sampling they are in hours.  ``origin`` records the day (or
    hour) index each entry was copied from.
    """

    demand_buses: tuple
    demand: np.ndarray
    wind_buses: tuple
    wind_cf: np.ndarray
    weights: np.ndarray
    origin: np.ndarray
    unit: str = "day"
    source_count: float = None

    def __post_init__(self):
        for name in ("demand", "wind_cf", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        origin = np.array(self.origin, dtype=int)
        origin.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "demand_buses", tuple(self.demand_buses))
        object.__setattr__(self, "wind_buses", tuple(self.wind_buses))
        if self.unit not in ("day", "hour"):
            raise ValueError("unit must be 'day' or 'hour'")
        if self.demand.ndim != 3 or self.demand.shape[0] == 0:
            raise EmptySample("sample has no entries")
        e, L, _ = self.demand.shape
        if self.wind_cf.shape[:2] != (e, L) or self.weights.shape != (e,) or self.origin.shape != (e,):
            raise ValueError("inconsistent sample array shapes")
        if self.unit == "day" and L != HOURS_PER_DAY or self.unit == "hour" and L != 1:
            raise ValueError(f"{self.unit} entries must span {HOURS_PER_DAY if self.unit == 'day' else 1} hours")
        if np.any(self.weights <= 0):
            raise RangeError("sample weights must be positive")
        if self.source_count is None:
            object.__setattr__(self, "source_count", float(self.weights.sum()))
        total = float(self.weights.sum())
        if abs(total - self.source_count) > 1e-9 * max(1.0, self.source_count):
            raise RangeError(f"weights sum to {total}, expected {self.source_count}")

    @property
    def n_entries(self) -> int:
        return self.weights.size

    @property
    def block_hours(self) -> int:
        return self.demand.shape[1]

    @property
    def annualization(self) -> float:
        """Factor turning weighted sample cost into cost per year."""
        per_year = DAYS_PER_YEAR if self.unit == "day" else HOURS_PER_YEAR
        return per_year / float(self.weights.sum())

    @classmethod
    def from_table_days(cls, table: TimeSeriesTable, days, weights, source_count=None) -> "WeightedSample":
        demand, wind = table.day_array()
        days = np.asarray(days, dtype=int)
        total = table.n_days if source_count is None else source_count
        return cls(table.demand_buses, demand[days], table.wind_buses, wind[days], weights, days, "day", total)

    @classmethod
    def full(cls, table: TimeSeriesTable) -> "WeightedSample":
        """Every day of ``table`` with weight 1 (no reduction)."""
        n = table.n_days
        return cls.from_table_days(table, np.arange(n), np.ones(n))

    @classmethod
    def from_table_hours(cls, table: TimeSeriesTable, hours, weights, source_count=None) -> "WeightedSample":
        hours = np.asarray(hours, dtype=int)
        total = table.length if source_count is None else source_count
        return cls(
            table.demand_buses, table.demand[hours][:, None, :], table.wind_buses, table.wind_cf[hours][:, None, :],
            weights, hours, "hour", total,
        )

    def same_as(self, other: "WeightedSample") -> bool:
        return (
            self.unit == other.unit
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.demand, other.demand)
            and np.array_equal(self.wind_cf, other.wind_cf)
        )


def _freeze_map(d: dict) -> MappingProxyType:
    return MappingProxyType(dict(d))


@dataclass(frozen=True, eq=False)
class Design:
    """Installed capacities: ``cap[(tech, bus)]`` and ``cap_line[(a, b)]`` in MW."""

    cap: MappingProxyType
    cap_line: MappingProxyType

    def __post_init__(self):
        object.__setattr__(self, "cap", _freeze_map({(str(t), int(b)): float(v) for (t, b), v in self.cap.items()}))
        object.__setattr__(self, "cap_line", _freeze_map({(int(a), int(b)): float(v) for (a, b), v in self.cap_line.items()}))
        for key, v in list(self.cap.items()) + list(self.cap_line.items()):
            if not math.isfinite(v) or v < 0:
                raise IntegrityError(f"capacity {key} = {v} must be finite and non-negative")

    @classmethod
    def zero(cls, config: SystemConfig) -> "Design":
        return cls({u: 0.0 for u in config.units()}, {c: 0.0 for c in config.corridors})

    @classmethod
    def uniform(cls, config: SystemConfig, gen_mw: float, line_mw: float) -> "Design":
        return cls({u: gen_mw for u in config.units()}, {c: line_mw for c in config.corridors})

    def validate(self, config: SystemConfig, variant: str = LP) -> "Design":
        missing = [u for u in config.units() if u not in self.cap]
        missing += [c for c in config.corridors if c not in self.cap_line]
        if missing:
            raise IntegrityError(f"design lacks capacities for {missing}")
        if check_variant(variant) == MILP:
            for (tech, bus), v in self.cap.items():
                if tech == config.block_technology:
                    n = v / config.block_size
                    if n != round(n):
                        raise IntegrityError(f"{tech} at bus {bus}: {v} MW is not a multiple of {config.block_size}")
        return self

    def tech_totals(self) -> dict:
        out = {}
        for (tech, _), v in self.cap.items():
            out[tech] = out.get(tech, 0.0) + v
        return out

    def total_line(self) -> float:
        return float(sum(self.cap_line.values()))

    def build_cost(self, config: SystemConfig) -> float:
        cost = sum(config.technology(t).build_cost * v for (t, _), v in self.cap.items())
        return float(cost + config.line_build_cost * sum(self.cap_line.values()))

    def leq(self, other: "Design") -> bool:
        return all(v <= other.cap[k] for k, v in self.cap.items()) and all(
            v <= other.cap_line[k] for k, v in self.cap_line.items()
        )

    def to_dict(self) -> dict:
        caps = {}
        for (tech, bus), v in self.cap.items():
            caps.setdefault(tech, {})[str(bus)] = v
        return {
            "capacities_mw": caps,
            "transmission_mw": {f"{a}-{b}": v for (a, b), v in self.cap_line.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "Design":
        try:
            cap = {(t, int(b)): float(v) for t, per in doc["capacities_mw"].items() for b, v in per.items()}
            lines = {}
            for key, v in doc["transmission_mw"].items():
                a, b = key.split("-")
                lines[(int(a), int(b))] = float(v)
        except (KeyError, ValueError, AttributeError) as exc:
            raise ConfigError(f"malformed design document: {exc}") from None
        return cls(cap, lines)

    @classmethod
    def load(cls, path) -> "Design":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return dict(self.cap) == dict(other.cap) and dict(self.cap_line) == dict(other.cap_line)

    def __reduce__(self):
        # mapping proxies do not pickle; rebuild from plain dicts (worker processes)
        return (Design, (dict(self.cap), dict(self.cap_line)))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Operation:
    """Hourly dispatch over a contiguous table (or the steps of a sample).

    Arrays are ``(hours, n)`` with column labels ``gen_units`` (tech, bus),
    ``corridors``, ``demand_buses`` and ``wind_units``.
    """

    gen_units: tuple
    gen: np.ndarray
    corridors: tuple
    flow: np.ndarray
    demand_buses: tuple
    unserved: np.ndarray
    wind_units: tuple
    curtailed: np.ndarray
    objective: float = float("nan")

    def __post_init__(self):
        for name in ("gen", "flow", "unserved", "curtailed"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def length(self) -> int:
        return self.gen.shape[0]

    def gen_of(self, tech: str) -> np.ndarray:
        cols = [i for i, (t, _) in enumerate(self.gen_units) if t == tech]
        return self.gen[:, cols]

    def concat(self, other: "Operation") -> "Operation":
        return Operation(
            self.gen_units, np.vstack([self.gen, other.gen]), self.corridors, np.vstack([self.flow, other.flow]),
            self.demand_buses, np.vstack([self.unserved, other.unserved]), self.wind_units,
            np.vstack([self.curtailed, other.curtailed]), self.objective + other.objective,
        )

    def balance_residual(self, demand: np.ndarray, config: SystemConfig) -> float:
        """Largest absolute per-bus power-balance residual over all steps."""
        worst = 0.0
        for bus in config.buses:
            net = np.zeros(self.length)
            for i, (_, b) in enumerate(self.gen_units):
                if b == bus:
                    net += self.gen[:, i]
            for i, (a, b) in enumerate(self.corridors):
                if b == bus:
                    net += self.flow[:, i]
                if a == bus:
                    net -= self.flow[:, i]
            if bus in self.demand_buses:
                j = self.demand_buses.index(bus)
                net += self.unserved[:, j] - demand[:, j]
            worst = max(worst, float(np.abs(net).max(initial=0.0)))
        return worst


# -- instance construction ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModelInstance:
    """A built optimisation problem plus the layout needed to read it back."""

    lp: _solve.LinearProgram
    mode: str
    variant: str
    config: SystemConfig
    n_steps: int
    step_size: int
    design_index: dict
    gen_units: tuple
    wind_units: tuple
    demand_buses: tuple
    fixed_design: Design = None
    demand: np.ndarray = None
    wind_cf: np.ndarray = None
    step_scale: np.ndarray = None

    @property
    def planning(self) -> bool:
        return self.mode == "plan"


def _series_for(config: SystemConfig, demand_buses, wind_buses):
    for b in demand_buses:
        if b not in config.buses:
            raise ConfigError(f"demand bus {b} is not in the system")
    wind_units = config.units(WIND)
    wind_cols = []
    for tech, bus in wind_units:
        if bus not in wind_buses:
            raise ConfigError(f"no wind capacity-factor series for bus {bus}")
        wind_cols.append(list(wind_buses).index(bus))
    return wind_units, wind_cols


def _build(
    config: SystemConfig,
    variant: str,
    demand_buses: tuple,
    demand: np.ndarray,
    wind_cf: np.ndarray,
    wind_buses: tuple,
    step_scale: np.ndarray,
    chain: np.ndarray,
    design: Design = None,
) -> ModelInstance:
    """Assemble the LP.

    ``demand``/``wind_cf`` are per step; ``step_scale`` multiplies the
    operating cost of each step; ``chain[k]`` is true when step ``k`` directly
    follows step ``k-1`` in time (ramp coupling).
    """
    variant = check_variant(variant)
    planning = design is None
    T = demand.shape[0]
    disp_units = config.units(DISPATCHABLE)
    wind_units, wind_cols = _series_for(config, demand_buses, wind_buses)
    gen_units = tuple(disp_units + wind_units)
    corridors = config.corridors
    G, W, F, D = len(gen_units), len(wind_units), len(corridors), len(demand_buses)
    nDisp = len(disp_units)
    S = G + W + F + D
    milp = variant == MILP
    blk_units = [i for i, (t, _) in enumerate(disp_units) if t == config.block_technology] if milp else []

    # design variables
    names, lb, ub, cost, integ = [], [], [], [], []
    design_index = {}
    if planning:
        for u in gen_units:
            design_index[("cap", u)] = len(names)
            names.append(f"cap({u[0]},{u[1]})")
            cost.append(config.technology(u[0]).build_cost)
        for c in corridors:
            design_index[("line", c)] = len(names)
            names.append(f"line({c[0]},{c[1]})")
            cost.append(config.line_build_cost)
        lb += [0.0] * len(names)
        ub += [np.inf] * len(names)
        integ += [False] * len(names)
        for i in blk_units:
            u = disp_units[i]
            design_index[("blocks", u)] = len(names)
            names.append(f"nblk({u[0]},{u[1]})")
            cost.append(0.0)
            lb.append(0.0)
            ub.append(np.inf)
            integ.append(True)
    n0 = len(names)

    # per-step variables, laid out step-major
    k = np.arange(T)
    base = n0 + S * k
    step_names = []
    for tech, bus in gen_units:
        step_names.append(f"gen({tech},{bus},")
    for tech, bus in wind_units:
        step_names.append(f"curt({tech},{bus},")
    for a, b in corridors:
        step_names.append(f"flow({a},{b},")
    for bus in demand_buses:
        step_names.append(f"uns({bus},")
    names += [f"{p}{t})" for t in range(T) for p in step_names]

    gen_cost = np.array([config.technology(t).gen_cost for t, _ in gen_units])
    c_step = np.concatenate([gen_cost, np.zeros(W + F), np.full(D, config.voll)])
    c_all = np.concatenate([np.asarray(cost, dtype=float), (step_scale[:, None] * c_step[None, :]).ravel()])

    lb_step = np.zeros((T, S))
    ub_step = np.full((T, S), np.inf)
    lb_step[:, G + W:G + W + F] = -np.inf
    if not planning:
        for g, u in enumerate(gen_units[:nDisp]):
            ub_step[:, g] = design.cap[u]
        for f, c in enumerate(corridors):
            ub_step[:, G + W + f] = design.cap_line[c]
            lb_step[:, G + W + f] = -design.cap_line[c]
    lb_all = np.concatenate([np.asarray(lb, dtype=float), lb_step.ravel()])
    ub_all = np.concatenate([np.asarray(ub, dtype=float), ub_step.ravel()])
    integ_all = np.concatenate([np.asarray(integ, dtype=bool), np.zeros(T * S, dtype=bool)])

    rows, cols, vals, rhs, sense, row_names = [], [], [], [], [], []
    n_rows = 0

    def add_block(prefix_fmt, entries, rhs_vec, sense_char):
        """entries: list of (col_index_array_over_steps, coef) for one row per step in ``steps``."""
        nonlocal n_rows
        count = rhs_vec.size
        ridx = n_rows + np.arange(count)
        for col_idx, coef in entries:
            rows.append(ridx)
            cols.append(np.asarray(col_idx))
            vals.append(np.broadcast_to(np.asarray(coef, dtype=float), (count,)))
        rhs.append(rhs_vec)
        sense.append(np.full(count, sense_char))
        row_names.extend(prefix_fmt)
        n_rows += count

    # power balance
    for bus in config.buses:
        entries = [(base + g, 1.0) for g, (_, b) in enumerate(gen_units) if b == bus]
        for f, (a, b) in enumerate(corridors):
            if b == bus:
                entries.append((base + G + W + f, 1.0))
            if a == bus:
                entries.append((base + G + W + f, -1.0))
        if bus in demand_buses:
            j = demand_buses.index(bus)
            entries.append((base + G + W + F + j, 1.0))
            rhs_vec = demand[:, j].astype(float)
        else:
            rhs_vec = np.zeros(T)
        if not entries:
            continue
        add_block([f"bal({bus},{t})" for t in range(T)], entries, rhs_vec, "E")

    # wind availability: gen + curtailment = cf * cap
    for w, (tech, bus) in enumerate(wind_units):
        g = nDisp + w
        cf = wind_cf[:, wind_cols[w]]
        entries = [(base + g, 1.0), (base + G + w, 1.0)]
        if planning:
            entries.append((np.full(T, design_index[("cap", (tech, bus))]), -cf))
            rhs_vec = np.zeros(T)
        else:
            rhs_vec = cf * design.cap[(tech, bus)]
        add_block([f"avail({tech},{bus},{t})" for t in range(T)], entries, rhs_vec, "E")

    if planning:
        for g, u in enumerate(gen_units[:nDisp]):
            ci = np.full(T, design_index[("cap", u)])
            add_block([f"gmax({u[0]},{u[1]},{t})" for t in range(T)], [(base + g, 1.0), (ci, -1.0)], np.zeros(T), "L")
        for f, c in enumerate(corridors):
            li = np.full(T, design_index[("line", c)])
            fi = base + G + W + f
            add_block([f"fmax({c[0]},{c[1]},{t})" for t in range(T)], [(fi, 1.0), (li, -1.0)], np.zeros(T), "L")
            add_block([f"fmin({c[0]},{c[1]},{t})" for t in range(T)], [(fi, -1.0), (li, -1.0)], np.zeros(T), "L")

    if milp:
        steps = np.flatnonzero(chain)
        steps = steps[steps > 0]
        for i in blk_units:
            u = disp_units[i]
            cur = base[steps] + i
            prev = base[steps - 1] + i
            n = steps.size
            if n == 0:
                continue
            if planning:
                ci = np.full(n, design_index[("cap", u)])
                coef = -config.ramp_fraction
                add_block([f"rup({u[0]},{u[1]},{t})" for t in steps], [(cur, 1.0), (prev, -1.0), (ci, coef)], np.zeros(n), "L")
                add_block([f"rdn({u[0]},{u[1]},{t})" for t in steps], [(prev, 1.0), (cur, -1.0), (ci, coef)], np.zeros(n), "L")
            else:
                lim = np.full(n, config.ramp_fraction * design.cap[u])
                add_block([f"rup({u[0]},{u[1]},{t})" for t in steps], [(cur, 1.0), (prev, -1.0)], lim, "L")
                add_block([f"rdn({u[0]},{u[1]},{t})" for t in steps], [(prev, 1.0), (cur, -1.0)], lim, "L")
        if planning:
            for i in blk_units:
                u = disp_units[i]
                add_block(
                    [f"blk({u[0]},{u[1]})"],
                    [(np.array([design_index[("cap", u)]]), 1.0), (np.array([design_index[("blocks", u)]]), -config.block_size)],
                    np.zeros(1),
                    "E",
                )

    n_vars = len(names)
    if rows:
        A = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_rows, n_vars)
        )
        rhs_all = np.concatenate(rhs)
        sense_all = np.concatenate(sense)
    else:
        A = sparse.csr_matrix((0, n_vars))
        rhs_all = np.zeros(0)
        sense_all = np.zeros(0, dtype="<U1")

    lp = _solve.LinearProgram(names, c_all, lb_all, ub_all, A, sense_all, rhs_all, integ_all, row_names)
    return ModelInstance(
        lp=lp,
        mode="plan" if planning else "operate",
        variant=variant,
        config=config,
        n_steps=T,
        step_size=S,
        design_index=design_index,
        gen_units=gen_units,
        wind_units=tuple(wind_units),
        demand_buses=tuple(demand_buses),
        fixed_design=design,
        demand=demand,
        wind_cf=wind_cf,
        step_scale=step_scale,
    )


def _sample_steps(sample: WeightedSample):
    E, L = sample.n_entries, sample.block_hours
    demand = sample.demand.reshape(E * L, -1)
    wind = sample.wind_cf.reshape(E * L, -1)
    scale = np.repeat(sample.annualization * sample.weights, L)
    chain = np.tile(np.arange(L) > 0, E)
    return demand, wind, scale, chain


def build_planning_problem(sample: WeightedSample, config: SystemConfig, variant: str = LP) -> ModelInstance:
    """Capacity-expansion instance over a weighted sample.

    Objective: annualised build cost plus ``365 / sum(weights)`` times the
    weighted generation and lost-load cost of the sampled days.  Ramp limits
    (MILP) only couple consecutive hours inside one sampled block.
    """
    if sample is None or sample.n_entries == 0:
        raise EmptySample("planning needs a non-empty sample")
    demand, wind, scale, chain = _sample_steps(sample)
    return _build(config, variant, sample.demand_buses, demand, wind, sample.wind_buses, scale, chain)


def build_operational_problem(data, design: Design, config: SystemConfig, variant: str = LP) -> ModelInstance:
    """Dispatch instance with capacities fixed to ``design``.

    ``data`` is either a contiguous :class:`TimeSeriesTable` (objective is the
    plain generation + lost-load cost over the table, ramp limits couple
    every consecutive hour) or a :class:`WeightedSample` (objective is
    annualised as in planning, ramp coupling stays inside each block).
    """
    design.validate(config, variant)
    if isinstance(data, WeightedSample):
        demand, wind, scale, chain = _sample_steps(data)
        return _build(config, variant, data.demand_buses, demand, wind, data.wind_buses, scale, chain, design)
    T = data.length
    return _build(
        config, variant, data.demand_buses, data.demand, data.wind_cf, data.wind_buses,
        np.ones(T), np.ones(T, dtype=bool), design,
    )


# -- solving and extraction -------------------------------------------------


def solve_instance(instance: ModelInstance, method: str = "highs", gap: float = 1e-4) -> _solve.SolveResult:
    return _solve.solve(instance.lp, method=method, gap=gap)


def _require_optimal(result: _solve.SolveResult):
    if result.status != _solve.OPTIMAL:
        raise NotOptimal(result.status)


def extract_design(instance: ModelInstance, result: _solve.SolveResult) -> Design:
    """Read capacities from a solved planning instance.

    Block-technology capacities are snapped to exact multiples of the block
    size when within 1e-6 (relative) of one.
    """
    _require_optimal(result)
    if not instance.planning:
        return instance.fixed_design
    x = result.x
    cfg = instance.config
    tol = 1e-6
    cap = {}
    for u in instance.gen_units:
        v = float(x[instance.design_index[("cap", u)]])
        key = ("blocks", u)
        if key in instance.design_index:
            n = float(x[instance.design_index[key]])
            n_from_cap = v / cfg.block_size
            k = round(n_from_cap)
            if abs(n_from_cap - k) > tol * max(1.0, abs(k)) or abs(n - k) > tol * max(1.0, abs(k)):
                raise IntegrityError(f"{u}: capacity {v} is not within tolerance of a block multiple")
            v = cfg.block_size * max(k, 0)
        elif v < 0:
            if v < -tol * max(1.0, abs(v)):
                raise IntegrityError(f"{u}: negative capacity {v}")
            v = 0.0
        cap[u] = v
    lines = {}
    for c in cfg.corridors:
        v = float(x[instance.design_index[("line", c)]])
        lines[c] = max(v, 0.0) if v > -tol else v
    return Design(cap, lines).validate(cfg, instance.variant)


def extract_operation(instance: ModelInstance, result: _solve.SolveResult) -> Operation:
    _require_optimal(result)
    n0 = instance.lp.n_vars - instance.n_steps * instance.step_size
    block = np.asarray(result.x[n0:]).reshape(instance.n_steps, instance.step_size)
    G, W = len(instance.gen_units), len(instance.wind_units)
    F, D = len(instance.config.corridors), len(instance.demand_buses)
    gen = np.maximum(block[:, :G], 0.0)
    op = Operation(
        instance.gen_units,
        gen,
        instance.config.corridors,
        block[:, G + W:G + W + F],
        instance.demand_buses,
        np.maximum(block[:, G + W + F:], 0.0),
        instance.wind_units,
        np.maximum(block[:, G:G + W], 0.0),
        objective=float(result.objective),
    )
    if instance.fixed_design is not None:
        d = instance.fixed_design
        caps = np.array([d.cap[u] for u in instance.gen_units[: G - W]])
        if np.any(op.gen[:, : G - W] > caps + 1e-6 * np.maximum(caps, 1.0)):
            raise IntegrityError("dispatch exceeds installed capacity")
    scale = max(1.0, float(np.abs(instance.demand).max(initial=0.0)))
    resid = op.balance_residual(instance.demand, instance.config)
    if resid > 1e-6 * scale:
        raise IntegrityError(f"power balance residual {resid} exceeds tolerance")
    return op


def operating_cost(op: Operation, config: SystemConfig, step_scale=None) -> float:
    """Generation plus lost-load cost of ``op`` (optionally per-step scaled)."""
    gen_cost = np.array([config.technology(t).gen_cost for t, _ in op.gen_units])
    per_step = op.gen @ gen_cost + config.voll * op.unserved.sum(axis=1)
    if step_scale is None:
        return float(per_step.sum())
    return float(per_step @ step_scale)


# -- model runs ----------------------------------------------------------------

OPERATE_CHUNK_DAYS = 28


@dataclass
class RunLog:
    """Record of model runs issued, for run accounting and timing."""

    entries: list = field(default_factory=list)

    def add(self, kind: str, seconds: float, steps: int):
        self.entries.append({"kind": kind, "seconds": seconds, "steps": steps})

    def count(self, kind: str) -> int:
        return sum(1 for e in self.entries if e["kind"] == kind)


def plan(sample: WeightedSample, config: SystemConfig, variant: str = LP, method: str = "highs",
         gap: float = 1e-4, log: RunLog = None, export_lp=None) -> tuple:
    """One planning run; returns ``(design, objective)``."""
    t0 = time.perf_counter()
    instance = build_planning_problem(sample, config, variant)
    if export_lp is not None:
        _solve.write_lp(instance.lp, export_lp)
    result = solve_instance(instance, method=method, gap=gap)
    design = extract_design(instance, result)
    if log is not None:
        log.add("plan", time.perf_counter() - t0, instance.n_steps)
    return design, float(result.objective)


def operate(data, design: Design, config: SystemConfig, variant: str = LP, method: str = "highs",
            log: RunLog = None, chunk_days: int = OPERATE_CHUNK_DAYS, export_lp=None) -> Operation:
    """One operational run over ``data`` under fixed ``design``.

    In the LP variant hours are independent, so a long table is dispatched
    in chunks of ``chunk_days`` whole days; the optimum is identical to the
    single monolithic problem and solve time stays linear in length.  The
    MILP variant chains ramp limits across the whole table and is solved in
    one piece.
    """
    t0 = time.perf_counter()
    variant = check_variant(variant)
    chunked = (
        variant == LP
        and isinstance(data, TimeSeriesTable)
        and chunk_days
        and export_lp is None
        and data.length > chunk_days * HOURS_PER_DAY
    )
    if not chunked:
        instance = build_operational_problem(data, design, config, variant)
        if export_lp is not None:
            _solve.write_lp(instance.lp, export_lp)
        op = extract_operation(instance, solve_instance(instance, method=method))
    else:
        step = chunk_days * HOURS_PER_DAY
        op = None
        for start in range(0, data.length, step):
            part = data.hours(start, min(start + step, data.length))
            instance = build_operational_problem(part, design, config, variant)
            piece = extract_operation(instance, solve_instance(instance, method=method))
            op = piece if op is None else op.concat(piece)
    if log is not None:
        steps = data.length if isinstance(data, TimeSeriesTable) else data.n_entries * data.block_hours
        log.add("operate", time.perf_counter() - t0, steps)
    return op
