"""k-medoids clustering of day blocks into weighted representative days."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import HOURS_PER_DAY, NormalizationSpec, TimeSeriesTable
from .errors import BadK, EmptySelection
from .model import WeightedSample
from .seeding import sub_seed

MAX_SWAPS = 200


def day_features(table: TimeSeriesTable, spec: NormalizationSpec, days=None) -> np.ndarray:
    """One row per listed day: 24 normalised hours of each series, series-major.

    Columns run ``demand_bus2[0..23], demand_bus4[0..23], ..., wind_bus6[0..23]``
    for the standard layout.
    """
    n_days = table.n_days
    days = np.arange(n_days) if days is None else np.asarray([getattr(d, "day_index", d) for d in days], dtype=int)
    if days.size == 0:
        raise EmptySelection("no days selected")
    scaled = np.clip(spec.apply(table.values()), 0.0, 1.0)
    blocks = scaled.reshape(n_days, HOURS_PER_DAY, -1)[days]
    return np.ascontiguousarray(blocks.transpose(0, 2, 1).reshape(days.size, -1))


@dataclass(frozen=True, eq=False)
class Clustering:
    """Result of k-medoids over a set of days.

    ``days`` are the global day indices of the clustered rows, ``medoids``
    the global day index of each cluster's medoid (ascending), ``labels``
    the cluster of each row and ``sizes`` the days per cluster.
    """

    k: int
    days: np.ndarray
    medoids: np.ndarray
    labels: np.ndarray
    sizes: np.ndarray
    cost: float
    history: tuple = ()
    swaps: int = 0
    seed: int = 0

    @property
    def medoid_days(self) -> np.ndarray:
        return self.medoids


def _assign(dist: np.ndarray, med_rows: np.ndarray):
    """Nearest medoid per row; ties go to the medoid listed first (lowest day)."""
    sub = dist[:, med_rows]
    labels = np.argmin(sub, axis=1)
    labels[med_rows] = np.arange(med_rows.size)
    near = sub[np.arange(dist.shape[0]), labels]
    return labels, near


def _farthest_point_init(dist: np.ndarray, k: int, first: int) -> list:
    chosen = [first]
    nearest = dist[first].copy()
    for _ in range(k - 1):
        nearest_masked = nearest.copy()
        nearest_masked[chosen] = -1.0
        nxt = int(np.argmax(nearest_masked))
        chosen.append(nxt)
        nearest = np.minimum(nearest, dist[nxt])
    return chosen


def _pam(dist: np.ndarray, med_rows: np.ndarray, max_swaps: int):
    n = dist.shape[0]
    k = med_rows.size
    history = []
    swaps = 0
    while True:
        order = np.argsort(med_rows, kind="stable")
        med_rows = med_rows[order]
        labels, near = _assign(dist, med_rows)
        cost = float(near.sum())
        history.append(cost)
        if swaps >= max_swaps or k == n:
            break
        sub = dist[:, med_rows].copy()
        sub[np.arange(n), labels] = np.inf
        second = sub.min(axis=1) if k > 1 else np.full(n, np.inf)
        is_med = np.zeros(n, dtype=bool)
        is_med[med_rows] = True
        cand = np.flatnonzero(~is_med)
        dh = dist[cand]  # (candidates, rows)
        # cost change if h joins while all medoids stay
        base = np.minimum(near[None, :], dh) - near[None, :]
        # extra change for rows whose medoid m is removed
        extra = np.minimum(second[None, :], dh) - np.minimum(near[None, :], dh)
        onehot = np.zeros((n, k))
        onehot[np.arange(n), labels] = 1.0
        delta = base.sum(axis=1)[:, None] + extra @ onehot  # (candidates, medoids)
        best = np.unravel_index(np.argmin(delta), delta.shape)
        if delta[best] >= -1e-12 * max(cost, 1.0):
            break
        med_rows = med_rows.copy()
        med_rows[best[1]] = cand[best[0]]
        swaps += 1
    return med_rows, labels, cost, history, swaps


def k_medoids(features: np.ndarray, k: int, seed: int, days=None, n_init: int = 1, max_swaps: int = MAX_SWAPS) -> Clustering:
    """PAM swap descent from a seeded farthest-point initialisation.

    With ``n_init > 1`` the run is repeated and the lowest-cost clustering
    is kept.  The first run uses ``seed`` itself.  Farthest-point seeding
    is deterministic given its first medoid, so restarts walk a seeded
    permutation of the remaining rows as first medoids; once every row has
    been tried, further restarts start from uniformly drawn medoid sets.
    """
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    if not 1 <= k <= n:
        raise BadK(f"k={k} outside [1, {n}]")
    days = np.arange(n) if days is None else np.asarray(days, dtype=int)
    dist = cdist(features, features)
    first = int(np.random.default_rng(seed).integers(n))
    restart_rng = np.random.default_rng(sub_seed(seed, "kmedoids-restart"))
    others = restart_rng.permutation(np.delete(np.arange(n), first))
    best = None
    for i in range(max(1, n_init)):
        if i == 0:
            init = np.array(_farthest_point_init(dist, k, first))
        elif i - 1 < others.size:
            init = np.array(_farthest_point_init(dist, k, int(others[i - 1])))
        else:
            init = np.sort(restart_rng.choice(n, size=k, replace=False))
        med_rows, labels, cost, history, swaps = _pam(dist, init, max_swaps)
        if best is None or cost < best[2]:
            best = (med_rows, labels, cost, history, swaps)
    med_rows, labels, cost, history, swaps = best
    sizes = np.bincount(labels, minlength=k)
    return Clustering(
        k=k,
        days=days,
        medoids=days[med_rows],
        labels=labels,
        sizes=sizes,
        cost=cost,
        history=tuple(history),
        swaps=swaps,
        seed=seed,
    )


def clustering_cost(features: np.ndarray, med_rows) -> float:
    """Total distance from each row to its nearest listed medoid row."""
    d = cdist(features, features[np.asarray(med_rows)])
    return float(d.min(axis=1).sum())


def to_weighted_sample(table: TimeSeriesTable, clustering: Clustering) -> WeightedSample:
    """Medoid days with their un-normalised data, weighted by cluster size."""
    order = np.argsort(clustering.medoids, kind="stable")
    return WeightedSample.from_table_days(
        table, clustering.medoids[order], clustering.sizes[order].astype(float), source_count=float(clustering.sizes.sum())
    )
