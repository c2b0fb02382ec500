"""Peculiarity metrics: how far a query sits from a query collection.

Three families: syntactic distance over query definitions (filter, grouper
levels, aggregates), value-based distances over result cells (directed
closest-relative and Hausdorff, built on the hierarchy hop-count cell
distance), and Jaccard distance over detailed areas with k-NN selection.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import CellSet, CubeQuery, detailed_area_keys, evaluate
from .errors import (
    EmptyCollection,
    EmptyResult,
    KOutOfRange,
    PairLimitExceeded,
    SchemaMismatch,
)

# Pairwise cell-distance computations refuse to run beyond this many pairs
# rather than silently sampling.
DEFAULT_PAIR_CAP = 1_000_000

AGG_KINDS = ("min", "max", "average", "median", "knn")


@dataclass(frozen=True)
class DistanceWeights:
    """Weights of the filter / grouper-level / measure components of the
    syntactic query distance."""

    w_filter: float = 0.5
    w_levels: float = 0.35
    w_measures: float = 0.15

    def __post_init__(self):
        if min(self.w_filter, self.w_levels, self.w_measures) < 0:
            raise ValueError("distance weights must be nonnegative")
        if abs(self.w_filter + self.w_levels + self.w_measures - 1.0) > 1e-9:
            raise ValueError("distance weights must sum to 1")


DEFAULT_WEIGHTS = DistanceWeights()


@dataclass(frozen=True)
class AggregationSpec:
    """How per-query distances collapse into one peculiarity score."""

    kind: str = "average"
    k: int | None = None

    def __post_init__(self):
        if self.kind not in AGG_KINDS:
            raise ValueError(f"unknown aggregation {self.kind!r}")
        if self.kind == "knn":
            if self.k is None or self.k < 1:
                raise KOutOfRange("knn aggregation needs k >= 1")
        elif self.k is not None:
            raise ValueError(f"aggregation {self.kind!r} takes no k")

    def apply(self, values: Sequence[float]) -> float:
        if not values:
            raise EmptyCollection("no distances to aggregate")
        if self.kind == "min":
            return min(values)
        if self.kind == "max":
            return max(values)
        if self.kind == "average":
            return sum(values) / len(values)
        if self.kind == "median":
            return float(statistics.median(values))
        if self.k > len(values):
            raise KOutOfRange(
                f"k={self.k} exceeds the {len(values)} available distances")
        return sorted(values)[self.k - 1]


# --- syntactic distance -----------------------------------------------------

def _check_same_space(qa: CubeQuery, qb: CubeQuery):
    if qa.cube is qb.cube:
        return
    if qa.cube.dims != qb.cube.dims or qa.cube.measures != qb.cube.measures:
        raise SchemaMismatch("queries are not over the same base cube")


def query_distance_components(qa: CubeQuery,
                              qb: CubeQuery) -> tuple[float, float, float]:
    """(filter, level, measure) component distances, each in [0, 1].

    Filter: per dimension, 0 iff both queries restrict it identically (an
    absent filter counts as ALL), else 1; averaged. Levels: per-dimension
    grouper depth gap over the hierarchy height, averaged. Measures: Jaccard
    distance between the (function, measure) pair sets.
    """
    _check_same_space(qa, qb)
    dims = qa.cube.dims
    atoms_a = qa.condition.atom_map()
    atoms_b = qb.condition.atom_map()
    d_filter = 0.0
    d_level = 0.0
    for i, dim in enumerate(dims):
        a, b = atoms_a.get(dim.name), atoms_b.get(dim.name)
        key_a = (dim.level(a.level).depth, a.values) if a else None
        key_b = (dim.level(b.level).depth, b.values) if b else None
        if key_a != key_b:
            d_filter += 1.0
        ga = dim.level(qa.groupers[i]).depth
        gb = dim.level(qb.groupers[i]).depth
        d_level += abs(ga - gb) / dim.height
    d_filter /= len(dims)
    d_level /= len(dims)
    set_a, set_b = set(qa.aggregates), set(qb.aggregates)
    union = set_a | set_b
    d_meas = 1.0 - len(set_a & set_b) / len(union) if union else 0.0
    return d_filter, d_level, d_meas


def query_distance(qa: CubeQuery, qb: CubeQuery,
                   weights: DistanceWeights = DEFAULT_WEIGHTS) -> float:
    """Weighted sum of the three component distances; symmetric and 0 on
    identical definitions."""
    d_filter, d_level, d_meas = query_distance_components(qa, qb)
    return (weights.w_filter * d_filter + weights.w_levels * d_level
            + weights.w_measures * d_meas)


def syntactic_peculiarity(q: CubeQuery, collection: Sequence[CubeQuery],
                          agg: AggregationSpec = AggregationSpec("average"),
                          weights: DistanceWeights = DEFAULT_WEIGHTS) -> float:
    """Aggregate syntactic distance of q to a query collection."""
    if not collection:
        raise EmptyCollection("peculiarity needs a non-empty query collection")
    return agg.apply([query_distance(q, qi, weights) for qi in collection])


# --- value-based distances ----------------------------------------------------

def pairwise_cell_distances(a: CellSet, b: CellSet,
                            pair_cap: int = DEFAULT_PAIR_CAP) -> np.ndarray:
    """Dense |a| x |b| matrix of cell distances.

    Distances are computed once per distinct member pair per dimension and
    broadcast to the full matrix.
    """
    if a.dims != b.dims:
        raise SchemaMismatch("cell sets are over different dimensions")
    if a.size == 0 or b.size == 0:
        raise EmptyResult("cell distance needs non-empty cell sets")
    if a.size * b.size > pair_cap:
        raise PairLimitExceeded(
            f"{a.size}x{b.size} cell pairs exceed the cap of {pair_cap}")
    out = np.zeros((a.size, b.size))
    for j, dim in enumerate(a.dims):
        ua, inv_a = np.unique(a.coords[:, j], return_inverse=True)
        ub, inv_b = np.unique(b.coords[:, j], return_inverse=True)
        m = np.empty((len(ua), len(ub)))
        for x, ida in enumerate(ua):
            ma = dim.member_by_id(a.levels[j], int(ida))
            for y, idb in enumerate(ub):
                mb = dim.member_by_id(b.levels[j], int(idb))
                m[x, y] = dim.value_distance(ma, mb)
        out += m[inv_a][:, inv_b]
    out /= len(a.dims)
    return out


def closest_relative_distance(a: CellSet, b: CellSet,
                              pair_cap: int = DEFAULT_PAIR_CAP) -> float:
    """Directed closest-relative distance: each cell of `a` is paired with
    its nearest cell of `b` and the pair distances are averaged. Not
    symmetric in general."""
    dist = pairwise_cell_distances(a, b, pair_cap)
    return float(dist.min(axis=1).mean())


def closest_relative_symmetric(a: CellSet, b: CellSet,
                               pair_cap: int = DEFAULT_PAIR_CAP) -> float:
    """Average of the two directed closest-relative distances."""
    return 0.5 * (closest_relative_distance(a, b, pair_cap)
                  + closest_relative_distance(b, a, pair_cap))


def hausdorff_distance(a: CellSet, b: CellSet,
                       pair_cap: int = DEFAULT_PAIR_CAP) -> float:
    """Symmetric Hausdorff distance: the larger of the two directed
    max-of-min-pair distances."""
    dist = pairwise_cell_distances(a, b, pair_cap)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def directed_hausdorff(a: CellSet, b: CellSet,
                       pair_cap: int = DEFAULT_PAIR_CAP) -> float:
    dist = pairwise_cell_distances(a, b, pair_cap)
    return float(dist.min(axis=1).max())


def value_peculiarity(q: CubeQuery, collection: Sequence[CubeQuery],
                      metric: str = "hausdorff",
                      agg: AggregationSpec = AggregationSpec("average"),
                      q_result: CellSet | None = None,
                      results: Sequence[CellSet] | None = None,
                      pair_cap: int = DEFAULT_PAIR_CAP) -> float:
    """Aggregate result-cell distance of q to a query collection.

    `metric` is "hausdorff" or "closest_relative" (directed from each
    collection member towards q). Precomputed results may be supplied to
    avoid re-evaluating.
    """
    if not collection:
        raise EmptyCollection("peculiarity needs a non-empty query collection")
    if metric not in ("hausdorff", "closest_relative"):
        raise ValueError(f"unknown value-based metric {metric!r}")
    mine = q_result if q_result is not None else evaluate(q)
    if results is None:
        results = [evaluate(qi) for qi in collection]
    elif len(results) != len(collection):
        raise ValueError("results do not line up with the collection")
    fn = (hausdorff_distance if metric == "hausdorff"
          else closest_relative_distance)
    return agg.apply([fn(r, mine, pair_cap) for r in results])


# --- Jaccard over detailed areas ---------------------------------------------

def jaccard_detailed_distance(qa: CubeQuery, qb: CubeQuery) -> float:
    """1 minus the Jaccard similarity of the two detailed areas; 0 when
    both areas are empty (identical)."""
    _check_same_space(qa, qb)
    ka = detailed_area_keys(qa)
    kb = detailed_area_keys(qb)
    inter = len(np.intersect1d(ka, kb, assume_unique=True))
    union = len(ka) + len(kb) - inter
    if union == 0:
        return 0.0
    return 1.0 - inter / union


def jaccard_peculiarity(q: CubeQuery, collection: Sequence[CubeQuery],
                        k: int = 1) -> float:
    """k-th smallest Jaccard distance between q's detailed area and the
    detailed areas of the collection (distances sorted ascending; ties keep
    collection order, which cannot change the returned value)."""
    if not collection:
        raise EmptyCollection("peculiarity needs a non-empty query collection")
    if not 1 <= k <= len(collection):
        raise KOutOfRange(f"k={k} outside 1..{len(collection)}")
    distances = sorted(jaccard_detailed_distance(q, qi) for qi in collection)
    return distances[k - 1]
