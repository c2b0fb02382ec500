"""Surprise metrics: distance between actual results and prior expectations.

Expectations come in three shapes: expected values per cell (value-based
surprise, optionally min-max normalized), probability statements over value
sets or intervals (probability surprise), and expected or probabilistic
labels under a per-measure labeling scheme (label surprise, strict and
loose). Cells without a registered expectation are excluded rather than
failed; a cube with no matching cell at all reports None (not assessable).
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .context import (
    BeliefStatement,
    BeliefStore,
    CellSet,
    ExpectedLabels,
    ExpectedValues,
    cell_anchor,
)
from .errors import (
    NoExpectedValues,
    NominalLooseUnsupported,
    OverlappingIntervals,
    GapInCoverage,
    UnknownMeasure,
    UnlabeledValue,
)

CELL_AGGS = ("count", "sum", "mean", "median", "max", "min")


def _aggregate(kind: str, values: Sequence[float]) -> float:
    if kind not in CELL_AGGS:
        raise ValueError(f"unknown aggregate {kind!r}")
    if not values:
        raise ValueError("aggregate of an empty bag")
    if kind == "count":
        # number of entries showing any surprise at all
        return float(sum(1 for v in values if v > 0))
    if kind == "sum":
        return float(sum(values))
    if kind == "mean":
        return float(sum(values) / len(values))
    if kind == "median":
        return float(statistics.median(values))
    if kind == "max":
        return float(max(values))
    return float(min(values))


@dataclass(frozen=True)
class SurpriseConfig:
    """Aggregation choices: `cell_agg` folds one cell's per-measure scores,
    `cube_agg` folds the per-cell scores."""

    cell_agg: str = "max"
    cube_agg: str = "mean"

    def __post_init__(self):
        for kind in (self.cell_agg, self.cube_agg):
            if kind not in CELL_AGGS:
                raise ValueError(f"unknown aggregate {kind!r}")


DEFAULT_CONFIG = SurpriseConfig()


def _abs_distance(actual: float, expected: float) -> float:
    return abs(actual - expected)


# --- labeling -----------------------------------------------------------------

@dataclass(frozen=True)
class LabelInterval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool
    label: str

    def contains(self, x: float) -> bool:
        lo_ok = x >= self.lo if self.lo_closed else x > self.lo
        hi_ok = x <= self.hi if self.hi_closed else x < self.hi
        return lo_ok and hi_ok


class LabelingScheme:
    """Total mapping from one measure's values to labels via disjoint
    intervals. With strict coverage the intervals must also tile the
    declared range without gaps."""

    def __init__(self, measure: str, intervals: tuple[LabelInterval, ...],
                 strict_coverage: bool = False):
        self.measure = measure
        self.intervals = tuple(sorted(
            intervals, key=lambda iv: (iv.lo, not iv.lo_closed)))
        self.strict_coverage = strict_coverage
        for a, b in zip(self.intervals, self.intervals[1:]):
            if a.hi > b.lo or (a.hi == b.lo and a.hi_closed and b.lo_closed):
                raise OverlappingIntervals(
                    f"{measure}: intervals for {a.label} and {b.label} overlap")
            if strict_coverage and not (
                    a.hi == b.lo and (a.hi_closed != b.lo_closed)):
                raise GapInCoverage(
                    f"{measure}: gap between {a.label} and {b.label}")

    def label_of(self, value: float) -> str:
        for iv in self.intervals:
            if iv.contains(value):
                return iv.label
        raise UnlabeledValue(
            f"value {value} of {self.measure} falls outside every interval")

    def labels(self) -> tuple[str, ...]:
        seen = []
        for iv in self.intervals:
            if iv.label not in seen:
                seen.append(iv.label)
        return tuple(seen)


@dataclass(frozen=True)
class LabelDomain:
    """Finite label domain. Nominal domains support equality only; ordinal
    and interval domains also define a normalized position distance."""

    labels: tuple[str, ...]
    kind: str = "nominal"

    def __post_init__(self):
        if self.kind not in ("nominal", "ordinal", "interval"):
            raise ValueError(f"unknown label domain kind {self.kind!r}")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels in domain")

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnlabeledValue(f"label {label!r} not in domain") from None

    def distance(self, a: str, b: str) -> float:
        """Position gap normalized by the domain diameter, in [0, 1]."""
        if self.kind == "nominal":
            raise NominalLooseUnsupported(
                "nominal label domains define no distance")
        if len(self.labels) == 1:
            self.position(a), self.position(b)
            return 0.0
        return abs(self.position(a) - self.position(b)) / (len(self.labels) - 1)


# --- measure resolution ----------------------------------------------------------

def _resolve_measure_column(columns: Iterable[str], name: str) -> str | None:
    """Match an expectation's measure name against a result's aggregate
    columns: exact column name first, else the unique column aggregating
    that base measure."""
    cols = list(columns)
    for c in cols:
        if c.lower() == name.lower():
            return c
    hits = [c for c in cols
            if "(" in c and c[c.index("(") + 1:-1].lower() == name.lower()]
    if len(hits) > 1:
        raise UnknownMeasure(
            f"measure {name!r} is ambiguous among result columns {hits}")
    return hits[0] if hits else None


# --- value-based surprise ----------------------------------------------------------

def cell_value_surprise(cell_measures: Mapping[str, float],
                        expected: Mapping[str, float],
                        distance: Callable[[float, float], float] = _abs_distance,
                        cell_agg: str = "max") -> float:
    """Surprise of one cell: per-measure distance between actual and
    expected values, folded by `cell_agg`. Measures without an expected
    value are excluded; raises NoExpectedValues when none matches."""
    dists = []
    for name, exp in expected.items():
        col = _resolve_measure_column(cell_measures, name)
        if col is None:
            continue
        dists.append(distance(float(cell_measures[col]), float(exp)))
    if not dists:
        raise NoExpectedValues("no measure of the cell has an expected value")
    return _aggregate(cell_agg, dists)


def value_surprise(cells: CellSet, expected: ExpectedValues,
                   cfg: SurpriseConfig = DEFAULT_CONFIG,
                   distance: Callable[[float, float], float] = _abs_distance
                   ) -> float | None:
    """Cube-level value surprise under the configured aggregations; None
    when no cell has a registered expectation."""
    scores = []
    for cell in cells.iter_cells():
        exp = expected.lookup(cell_anchor(cell.levels, cell.ids))
        if not exp:
            continue
        try:
            scores.append(cell_value_surprise(
                cell.measures, exp, distance, cfg.cell_agg))
        except NoExpectedValues:
            continue
    if not scores:
        return None
    return _aggregate(cfg.cube_agg, scores)


def normalized_value_surprise(cells: CellSet, expected: ExpectedValues,
                              measure: str | None = None) -> float | None:
    """Average absolute distance between actual and expected values of one
    measure, min-max normalized over the matched cells' distances.

    Returns (avg - min) / (max - min), 0 when all matched distances are
    equal, None when no cell matched.
    """
    if measure is None:
        if len(cells.measures) != 1:
            raise UnknownMeasure(
                "normalized value surprise needs a single measure; "
                f"result has {sorted(cells.measures)}")
        column = next(iter(cells.measures))
    else:
        column = _resolve_measure_column(cells.measures, measure)
        if column is None:
            raise UnknownMeasure(f"result has no measure {measure!r}")
    base = column[column.index("(") + 1:-1] if "(" in column else column
    dists = []
    for cell in cells.iter_cells():
        exp = expected.lookup(cell_anchor(cell.levels, cell.ids))
        value = None
        for name in (column, base):
            if name in exp:
                value = exp[name]
                break
            hits = [k for k in exp if k.lower() == name.lower()]
            if hits:
                value = exp[hits[0]]
                break
        if value is None:
            continue
        dists.append(abs(float(cell.measures[column]) - float(value)))
    if not dists:
        return None
    lo, hi = min(dists), max(dists)
    if hi == lo:
        return 0.0
    avg = sum(dists) / len(dists)
    return (avg - lo) / (hi - lo)


# --- probability-based surprise ------------------------------------------------------

_KINDS_BY_MODE = {"exact": ("set",), "interval": ("interval",)}


def probability_surprise(statements: Iterable[BeliefStatement], actual: float,
                         mode: str = "exact") -> float:
    """Sum of the probabilities of all registered value sets (`exact`) or
    ranges (`interval`) that do not contain the actual value."""
    try:
        kinds = _KINDS_BY_MODE[mode]
    except KeyError:
        raise ValueError(f"unknown probability surprise mode {mode!r}") from None
    total = 0.0
    for s in statements:
        if s.kind not in kinds:
            continue
        if not s.contains_value(actual):
            total += s.probability
    return total


def cube_probability_surprise(cells: CellSet, beliefs: BeliefStore,
                              mode: str = "exact",
                              cfg: SurpriseConfig = DEFAULT_CONFIG
                              ) -> float | None:
    """Cube-level probability surprise: per cell and measure, the sum of
    off-value probabilities, folded by the configured aggregations. None
    when no cell carries a matching statement."""
    kinds = _KINDS_BY_MODE[mode]
    scores = []
    for cell in cells.iter_cells():
        stmts = beliefs.at(cell_anchor(cell.levels, cell.ids), kinds=kinds)
        if not stmts:
            continue
        per_measure: dict[str, list[BeliefStatement]] = {}
        for s in stmts:
            per_measure.setdefault(s.measure, []).append(s)
        measure_scores = []
        for name, group in per_measure.items():
            col = _resolve_measure_column(cell.measures, name)
            if col is None:
                continue
            measure_scores.append(
                probability_surprise(group, float(cell.measures[col]), mode))
        if measure_scores:
            scores.append(_aggregate(cfg.cell_agg, measure_scores))
    if not scores:
        return None
    return _aggregate(cfg.cube_agg, scores)


# --- label-based surprise -----------------------------------------------------------

def label_surprise(cells: CellSet, expected: ExpectedLabels,
                   schemes: Mapping[str, LabelingScheme],
                   domain: LabelDomain | None = None,
                   label_distance: str = "nominal",
                   cfg: SurpriseConfig = DEFAULT_CONFIG) -> float | None:
    """Cube-level surprise over labels: each expected label is compared with
    the label of the actual measure value (0/1 for nominal distance,
    normalized position gap for interval distance)."""
    if label_distance not in ("nominal", "interval"):
        raise ValueError(f"unknown label distance {label_distance!r}")
    if label_distance == "interval" and domain is None:
        raise NominalLooseUnsupported(
            "interval label distance needs a label domain")
    scores = []
    for cell in cells.iter_cells():
        exp = expected.lookup(cell_anchor(cell.levels, cell.ids))
        dists = []
        for name, exp_label in exp.items():
            col = _resolve_measure_column(cell.measures, name)
            if col is None:
                continue
            scheme = _scheme_for(schemes, name)
            actual_label = scheme.label_of(float(cell.measures[col]))
            if label_distance == "nominal":
                dists.append(0.0 if actual_label == exp_label else 1.0)
            else:
                dists.append(domain.distance(actual_label, exp_label))
        if dists:
            scores.append(_aggregate(cfg.cell_agg, dists))
    if not scores:
        return None
    return _aggregate(cfg.cube_agg, scores)


def strict_label_surprise(cells: CellSet, expected: ExpectedLabels,
                          schemes: Mapping[str, LabelingScheme]) -> bool:
    """True iff any cell has any measure whose actual label differs from
    its expected label (early exit on the first mismatch)."""
    for cell in cells.iter_cells():
        exp = expected.lookup(cell_anchor(cell.levels, cell.ids))
        for name, exp_label in exp.items():
            col = _resolve_measure_column(cell.measures, name)
            if col is None:
                continue
            scheme = _scheme_for(schemes, name)
            if scheme.label_of(float(cell.measures[col])) != exp_label:
                return True
    return False


def _scheme_for(schemes: Mapping[str, LabelingScheme],
                measure: str) -> LabelingScheme:
    for name, scheme in schemes.items():
        if name.lower() == measure.lower():
            return scheme
    raise UnlabeledValue(f"no labeling scheme for measure {measure!r}")


def prob_label_surprise(statements: Iterable[BeliefStatement],
                        actual_label: str,
                        mode: str = "strict",
                        domain: LabelDomain | None = None,
                        weight_fn: Callable[[float], float] | None = None
                        ) -> float:
    """Surprise of one cell from probabilistic label beliefs.

    Strict: sum of the probabilities of labels other than the actual one.
    Loose: the same sum with each term weighted by a monotone function of
    the label distance (identity by default); needs a non-nominal domain.
    """
    if mode not in ("strict", "loose"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "loose":
        if domain is None or domain.kind == "nominal":
            raise NominalLooseUnsupported(
                "loose label surprise needs an ordinal or interval domain")
        weight = weight_fn or (lambda d: d)
    total = 0.0
    for s in statements:
        if s.kind != "label" or s.values == actual_label:
            continue
        if mode == "strict":
            total += s.probability
        else:
            total += weight(domain.distance(s.values, actual_label)) * s.probability
    return total


def cube_prob_label_surprise(cells: CellSet, beliefs: BeliefStore,
                             schemes: Mapping[str, LabelingScheme],
                             mode: str = "strict",
                             domain: LabelDomain | None = None,
                             weight_fn: Callable[[float], float] | None = None,
                             cfg: SurpriseConfig = DEFAULT_CONFIG
                             ) -> float | None:
    """Cube-level probabilistic label surprise; None when no cell carries a
    label belief over a resolvable measure."""
    scores = []
    for cell in cells.iter_cells():
        stmts = beliefs.at(cell_anchor(cell.levels, cell.ids), kinds=("label",))
        if not stmts:
            continue
        per_measure: dict[str, list[BeliefStatement]] = {}
        for s in stmts:
            per_measure.setdefault(s.measure, []).append(s)
        measure_scores = []
        for name, group in per_measure.items():
            col = _resolve_measure_column(cell.measures, name)
            if col is None:
                continue
            scheme = _scheme_for(schemes, name)
            actual_label = scheme.label_of(float(cell.measures[col]))
            measure_scores.append(prob_label_surprise(
                group, actual_label, mode, domain, weight_fn))
        if measure_scores:
            scores.append(_aggregate(cfg.cell_agg, measure_scores))
    if not scores:
        return None
    return _aggregate(cfg.cube_agg, scores)
