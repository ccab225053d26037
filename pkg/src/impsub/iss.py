"""Importance subsampling.

A preliminary design from an ordinary clustered sample is dispatched over
the full table; each hour's dispatch cost serves as its importance; the
days holding the highest single-hour importance are kept verbatim (weight
one day each) and the rest of the table is re-clustered around them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .cluster import day_features, k_medoids, to_weighted_sample
from .data import HOURS_PER_DAY, TimeSeriesTable, normalize
from .errors import BadCount, ClusterError, LengthMismatch
from .model import LP, MILP, Design, Operation, RunLog, SystemConfig, WeightedSample, check_variant, operate, plan

IMPORTANCE_FUNCTIONS = ("generation_cost",)


@dataclass(frozen=True)
class IssConfig:
    """Sample size ``n_days``, extreme count ``n_extreme`` (default ``round(n_days / 3)``).

    With ``unit="hour"`` both counts are hours and sampling is by single
    time steps (LP variant only).
    """

    n_days: int
    n_extreme: int = None
    importance: str = "generation_cost"
    seed: int = 0
    unit: str = "day"

    def __post_init__(self):
        if self.n_extreme is None:
            object.__setattr__(self, "n_extreme", int(round(self.n_days / 3)))
        if self.importance not in IMPORTANCE_FUNCTIONS:
            raise ValueError(f"unknown importance function {self.importance!r}")
        if self.unit not in ("day", "hour"):
            raise ValueError("unit must be 'day' or 'hour'")
        if self.n_days < 1:
            raise BadCount("sample size must be at least 1")
        if not 0 <= self.n_extreme <= self.n_days:
            raise BadCount(f"need 0 <= n_extreme <= n_days, got {self.n_extreme} and {self.n_days}")


@dataclass(frozen=True, eq=False)
class ImportanceSeries:
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def day_maxima(self) -> np.ndarray:
        if self.values.size % HOURS_PER_DAY:
            raise LengthMismatch("importance series does not cover whole days")
        return self.values.reshape(-1, HOURS_PER_DAY).max(axis=1)


def compute_importance(op: Operation, config: SystemConfig, expected_length: int = None) -> ImportanceSeries:
    """Hourly generation cost, with unserved energy priced at the value of lost load."""
    if expected_length is not None and op.length != expected_length:
        raise LengthMismatch(f"operation covers {op.length} hours, table has {expected_length}")
    gen_cost = np.array([config.technology(t).gen_cost for t, _ in op.gen_units])
    imp = op.gen @ gen_cost + config.voll * op.unserved.sum(axis=1)
    return ImportanceSeries(np.maximum(imp, 0.0))


def _top(scores: np.ndarray, count: int) -> np.ndarray:
    if not 0 <= count <= scores.size:
        raise BadCount(f"cannot pick {count} of {scores.size}")
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:count]


def rank_extreme_days(imp: ImportanceSeries, n_extreme: int) -> list:
    """Days ordered by their highest hourly importance, earliest day on ties."""
    return [int(d) for d in _top(imp.day_maxima(), n_extreme)]


def rank_extreme_hours(imp: ImportanceSeries, n_extreme: int) -> list:
    return [int(h) for h in _top(imp.values, n_extreme)]


@dataclass
class IssDiagnostics:
    cluster_design: Design
    cluster_objective: float
    importance: ImportanceSeries
    extremes: list
    first_sample: WeightedSample
    runs: RunLog = field(default_factory=RunLog)
    unit: str = "day"

    def to_dict(self) -> dict:
        doc = {
            "unit": self.unit,
            "extreme_" + ("days" if self.unit == "day" else "hours"): list(self.extremes),
            "cluster_design": self.cluster_design.to_dict(),
            "cluster_objective": self.cluster_objective,
            "runs": [{"kind": e["kind"], "steps": e["steps"]} for e in self.runs.entries],
        }
        if self.unit == "day":
            doc["importance_day_maxima"] = [float(v) for v in self.importance.day_maxima()]
        else:
            doc["importance"] = [float(v) for v in self.importance.values]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# -- a priori samples ------------------------------------------------------------


def kmedoids_sample(table: TimeSeriesTable, n_days: int, seed: int, features=None) -> WeightedSample:
    """Plain k-medoids sample: the benchmark arm and step one of the algorithm."""
    if features is None:
        _, spec = normalize(table)
        features = day_features(table, spec)
    clustering = k_medoids(features, n_days, seeding.sub_seed(seed, seeding.CLUSTER_INIT))
    return to_weighted_sample(table, clustering)


def random_hour_sample(table: TimeSeriesTable, n_hours: int, seed: int, exclude=()) -> WeightedSample:
    """Uniform sample of single hours; weights spread the remaining hours evenly."""
    pool = np.setdiff1d(np.arange(table.length), np.asarray(exclude, dtype=int))
    if not 1 <= n_hours <= pool.size:
        raise BadCount(f"cannot sample {n_hours} of {pool.size} hours")
    rng = np.random.default_rng(seeding.sub_seed(seed, seeding.HOUR_SAMPLE, len(exclude)))
    hours = np.sort(rng.choice(pool, size=n_hours, replace=False))
    w = np.full(n_hours, pool.size / n_hours)
    return WeightedSample.from_table_hours(table, hours, w, source_count=float(pool.size))


def _merge(table: TimeSeriesTable, unit: str, extremes, rest: WeightedSample = None) -> WeightedSample:
    extremes = np.asarray(extremes, dtype=int)
    origin = extremes if rest is None else np.concatenate([extremes, rest.origin])
    weights = np.ones(extremes.size) if rest is None else np.concatenate([np.ones(extremes.size), rest.weights])
    order = np.argsort(origin, kind="stable")
    total = table.n_days if unit == "day" else table.length
    if unit == "day":
        return WeightedSample.from_table_days(table, origin[order], weights[order], source_count=total)
    return WeightedSample.from_table_hours(table, origin[order], weights[order])


# -- the algorithm ----------------------------------------------------------------


def importance_subsample(
    table: TimeSeriesTable,
    config: SystemConfig,
    iss: IssConfig,
    variant: str = LP,
    method: str = "highs",
    log: RunLog = None,
) -> tuple:
    """Build an importance subsample; returns ``(sample, diagnostics)``.

    Issues exactly two model runs before returning (one planning run on the
    clustered sample, one operational run on the full table); the caller's
    planning run on the returned sample is the third.
    """
    variant = check_variant(variant)
    log = RunLog() if log is None else log
    unit = iss.unit
    if unit == "hour" and variant == MILP:
        raise ValueError("single-hour sampling breaks ramp chronology; use day sampling for the MILP variant")
    total = table.n_days if unit == "day" else table.length
    if iss.n_days > total:
        raise BadCount(f"sample of {iss.n_days} exceeds the {total} available")
    if iss.n_extreme == iss.n_days and iss.n_days < total:
        raise ClusterError("all sampled blocks are extreme; nothing left to represent the remaining table")

    # step 1: a priori sample
    if unit == "day":
        _, spec = normalize(table)
        features = day_features(table, spec)
        first = kmedoids_sample(table, iss.n_days, iss.seed, features=features)
    else:
        first = random_hour_sample(table, iss.n_days, iss.seed)

    # step 2: preliminary design; step 3: dispatch full table under it
    cluster_design, cluster_obj = plan(first, config, variant, method=method, log=log)
    op = operate(table, cluster_design, config, variant, method=method, log=log)

    # step 4: importance of every hour
    imp = compute_importance(op, config, expected_length=table.length)

    # step 5: extremes kept verbatim, remainder re-sampled
    if unit == "day":
        extremes = rank_extreme_days(imp, iss.n_extreme)
        if iss.n_extreme == 0:
            sample = first
        else:
            remaining = np.setdiff1d(np.arange(table.n_days), extremes)
            rest = None
            if remaining.size:
                clustering = k_medoids(
                    features[remaining], iss.n_days - iss.n_extreme,
                    seeding.sub_seed(iss.seed, seeding.ISS_RECLUSTER), days=remaining,
                )
                rest = to_weighted_sample(table, clustering)
            sample = _merge(table, "day", extremes, rest)
    else:
        extremes = rank_extreme_hours(imp, iss.n_extreme)
        if iss.n_extreme == 0:
            sample = first
        else:
            rest = None
            if iss.n_days > iss.n_extreme:
                rest = random_hour_sample(table, iss.n_days - iss.n_extreme, iss.seed, exclude=extremes)
            sample = _merge(table, "hour", extremes, rest)

    diagnostics = IssDiagnostics(cluster_design, cluster_obj, imp, list(extremes), first, log, unit)
    return sample, diagnostics


def estimate_design(sample: WeightedSample, config: SystemConfig, variant: str = LP, method: str = "highs",
                    log: RunLog = None, export_lp=None) -> Design:
    """Planning run on ``sample``: the subsample estimate of the optimal design."""
    design, _ = plan(sample, config, variant, method=method, log=log, export_lp=export_lp)
    return design


def iss_design(table: TimeSeriesTable, config: SystemConfig, iss: IssConfig, variant: str = LP,
               method: str = "highs", log: RunLog = None) -> tuple:
    """Full three-run pipeline; returns ``(design, sample, diagnostics)``."""
    log = RunLog() if log is None else log
    sample, diag = importance_subsample(table, config, iss, variant, method=method, log=log)
    design = estimate_design(sample, config, variant, method=method, log=log)
    return design, sample, diag
