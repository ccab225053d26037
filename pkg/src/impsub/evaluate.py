"""Suboptimality metrics and the k-medoids vs importance-subsampling seed sweep."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import HOURS_PER_YEAR, TimeSeriesTable
from .errors import ImpsubError, ZeroCost
from .iss import IssConfig, estimate_design, importance_subsample, kmedoids_sample
from .model import LP, Design, RunLog, SystemConfig, WeightedSample, operate, operating_cost, plan

log = logging.getLogger(__name__)

PERCENTILES = (2.5, 25.0, 50.0, 75.0, 97.5)
METHODS = ("kmedoids", "importance")
METRICS = ("peak_capacity_shortage", "energy_unserved", "unserved_fraction", "total_cost")


@dataclass(frozen=True)
class Suboptimality:
    """Full-table performance of a design.

    ``peak_capacity_shortage`` in MW, ``energy_unserved`` in MWh/yr,
    ``voll_cost`` and ``total_cost`` in currency/yr.
    """

    peak_capacity_shortage: float
    energy_unserved: float
    unserved_fraction: float
    voll_cost: float
    total_cost: float
    build_cost: float = 0.0
    generation_cost: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_design(design: Design, table: TimeSeriesTable, config: SystemConfig, variant: str = LP,
                    method: str = "highs", log_runs: RunLog = None, return_operation: bool = False,
                    export_lp=None):
    """Dispatch ``table`` under ``design`` and score the shortfall and cost."""
    op = operate(table, design, config, variant, method=method, log=log_runs, export_lp=export_lp)
    annual = HOURS_PER_YEAR / table.length
    shortfall = op.unserved.sum(axis=1)
    unserved_mwh = float(shortfall.sum())
    demand_mwh = float(table.demand.sum())
    energy = unserved_mwh * annual
    gen_cost = np.array([config.technology(t).gen_cost for t, _ in op.gen_units])
    build = design.build_cost(config)
    sub = Suboptimality(
        peak_capacity_shortage=float(shortfall.max(initial=0.0)),
        energy_unserved=energy,
        unserved_fraction=unserved_mwh / demand_mwh if demand_mwh > 0 else 0.0,
        voll_cost=config.voll * energy,
        total_cost=build + annual * operating_cost(op, config),
        build_cost=build,
        generation_cost=annual * float((op.gen @ gen_cost).sum()),
    )
    return (sub, op) if return_operation else sub


def voll_sensitivity(energy_unserved: float, total_cost: float, config: SystemConfig) -> float:
    """Share of total system cost due to lost load: ``voll * unserved / total``."""
    if total_cost == 0:
        raise ZeroCost("total cost is zero")
    return config.voll * energy_unserved / total_cost


def cost_increase_per_unmet(sub: Suboptimality, config: SystemConfig) -> float:
    """Percent of system cost per 0.01 % of demand unmet (NaN when nothing is unmet)."""
    if sub.unserved_fraction <= 0:
        return float("nan")
    inc = voll_sensitivity(sub.energy_unserved, sub.total_cost, config)
    return (100.0 * inc) / (sub.unserved_fraction / 1e-4)


def percentiles(values) -> dict:
    vals = np.asarray(values, dtype=float)
    p = np.percentile(vals, PERCENTILES)
    p = np.maximum.accumulate(p)
    return {f"p{q:g}": float(v) for q, v in zip(PERCENTILES, p)}


def design_quantities(design: Design, config: SystemConfig) -> dict:
    totals = design.tech_totals()
    out = {f"cap_{t.name}": float(totals.get(t.name, 0.0)) for t in config.technologies}
    out["cap_transmission"] = design.total_line()
    return out


def _quantities(design: Design, sub: Suboptimality, config: SystemConfig) -> dict:
    q = design_quantities(design, config)
    q.update({m: float(getattr(sub, m)) for m in METRICS})
    return q


# -- benchmark --------------------------------------------------------------------


@dataclass
class BenchmarkResult:
    """Per-seed records plus percentile summary."""

    variant: str
    n_days: int
    n_extreme: int
    seeds: list
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    target: dict = None
    designs: dict = field(default_factory=dict)
    suboptimality: dict = field(default_factory=dict)
    voll_ratio: dict = field(default_factory=dict)

    def values(self, method: str, quantity: str) -> list:
        return [r["value"] for r in self.records if r["method"] == method and r["quantity"] == quantity]

    @property
    def quantities(self) -> list:
        seen = []
        for r in self.records:
            if r["quantity"] not in seen:
                seen.append(r["quantity"])
        return seen

    def summary(self) -> dict:
        out = {}
        for q in self.quantities:
            entry = {}
            for m in METHODS:
                vals = self.values(m, q)
                if vals:
                    entry[m] = percentiles(vals)
            if self.target is not None and q in self.target:
                entry["target"] = self.target[q]
            out[q] = entry
        return {
            "variant": self.variant,
            "n_days": self.n_days,
            "n_extreme": self.n_extreme,
            "seeds": list(self.seeds),
            "percentiles": list(PERCENTILES),
            "quantities": out,
            "voll_cost_ratio_pct_per_0.01pct_unmet": self.voll_ratio,
            "failures": list(self.failures),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "seed", "quantity", "value"])
        for r in self.records:
            writer.writerow([r["method"], r["seed"], r["quantity"], repr(float(r["value"]))])
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2) + "\n"


def _seed_task(args):
    table, config, variant, n_days, n_extreme, seed, method = args
    out = {"seed": seed, "records": [], "failures": [], "designs": {}, "suboptimality": {}}
    for arm in METHODS:
        try:
            if arm == "kmedoids":
                sample = kmedoids_sample(table, n_days, seed)
                design = estimate_design(sample, config, variant, method=method)
            else:
                iss = IssConfig(n_days, n_extreme, seed=seed)
                sample, _ = importance_subsample(table, config, iss, variant, method=method)
                design = estimate_design(sample, config, variant, method=method)
            sub = evaluate_design(design, table, config, variant, method=method)
        except ImpsubError as exc:
            out["failures"].append({"method": arm, "seed": seed, "reason": f"{type(exc).__name__}: {exc}"})
            continue
        out["designs"][arm] = design
        out["suboptimality"][arm] = sub
        for name, value in _quantities(design, sub, config).items():
            out["records"].append({"method": arm, "seed": seed, "quantity": name, "value": value})
    return out


def run_benchmark(
    table: TimeSeriesTable,
    config: SystemConfig,
    variant: str = LP,
    n_days: int = 48,
    n_extreme: int = None,
    seeds=(0,),
    target: bool = False,
    method: str = "highs",
    jobs: int = 1,
) -> BenchmarkResult:
    """Distribution of outputs over seeds for both sampling methods.

    Each seed yields one k-medoids and one importance-subsampling estimate,
    each scored on the full table.  With ``target`` the full-table optimum
    is also computed (feasible only for short tables).  Seeds are
    independent; ``jobs > 1`` runs them in worker processes without
    changing the result.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("at least one seed is required")
    if n_extreme is None:
        n_extreme = int(round(n_days / 3))
    tasks = [(table, config, variant, n_days, n_extreme, s, method) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_seed_task, tasks))
    else:
        outs = [_seed_task(t) for t in tasks]

    result = BenchmarkResult(variant, n_days, n_extreme, seeds)
    by_seed = {o["seed"]: o for o in outs}
    for arm in METHODS:
        for s in seeds:
            o = by_seed[s]
            result.records.extend(r for r in o["records"] if r["method"] == arm)
            result.failures.extend(f for f in o["failures"] if f["method"] == arm)
            if arm in o["designs"]:
                result.designs[(arm, s)] = o["designs"][arm]
                result.suboptimality[(arm, s)] = o["suboptimality"][arm]
    for arm in METHODS:
        ratios = [cost_increase_per_unmet(result.suboptimality[(arm, s)], config)
                  for s in seeds if (arm, s) in result.suboptimality]
        ratios = [r for r in ratios if np.isfinite(r)]
        result.voll_ratio[arm] = float(np.median(ratios)) if ratios else None

    if target:
        design, _ = plan(WeightedSample.full(table), config, variant, method=method)
        sub = evaluate_design(design, table, config, variant, method=method)
        result.target = _quantities(design, sub, config)
        result.designs[("target", None)] = design
        result.suboptimality[("target", None)] = sub
    return result
