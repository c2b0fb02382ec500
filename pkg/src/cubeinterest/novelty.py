"""Novelty metrics: history-based and belief-based coverage of a query.

Every partial metric partitions the assessed universe (query signature,
detailed signature, result cells, or detailed-area cells) into covered and
novel parts and reports the novel fraction. Detailed signature scores avoid
materializing Cartesian products: the covered count of a factored signature
against a union of factored signatures is computed by inclusion-exclusion
over per-dimension intersections.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .context import Anchor, BeliefStore, known_cells
from .engine import (
    Cell,
    CubeQuery,
    FactoredSignature,
    condition_signature,
    detailed_area,
    detailed_area_keys,
    evaluate,
    pack_keys,
    query_signature_factored,
    selection_mask,
)
from .errors import LevelMismatch, SignatureTooLarge
from .mdm import Dimension

# Partition contents are materialized as coordinate tuples only below this
# universe size; above it the partition carries exact counts but no sets.
MATERIALIZE_CAP = 200_000

# Inclusion-exclusion is exact but exponential in the number of factored
# signatures it unions; beyond this many we fall back to enumeration.
MAX_UNION_TERMS = 12


@dataclass(frozen=True)
class CoveragePartition:
    """Covered/novel split of an assessed universe of cells or coordinates.

    `covered` and `novel` are frozensets of coordinate tuples when the
    universe was small enough to materialize, else None (counts are always
    exact). `weights` maps covered coordinates to their occurrence count
    across the covering collection, when occurrence counting was requested
    and the partition is materialized.
    """

    universe_size: int
    covered_count: int
    novel_count: int
    covered: frozenset | None = None
    novel: frozenset | None = None
    weights: Mapping[tuple, int] | None = None
    covered_weight: float = 0.0
    skipped_statements: int = 0

    def __post_init__(self):
        if self.covered_count + self.novel_count != self.universe_size:
            raise ValueError("partition does not cover the universe")

    @property
    def novel_fraction(self) -> float:
        """Novel share of the universe; 1.0 when nothing is covered
        (including the degenerate empty universe)."""
        if self.covered_count == 0:
            return 1.0
        return self.novel_count / self.universe_size

    @property
    def covered_fraction(self) -> float:
        return 1.0 - self.novel_fraction

    @property
    def weighted_novel_fraction(self) -> float:
        """Novel weight over total weight: novel cells weigh 1, covered
        cells weigh their occurrence count."""
        if self.covered_count == 0:
            return 1.0
        return self.novel_count / (self.novel_count + self.covered_weight)


def _empty_partition(universe_size: int, universe=None,
                     skipped: int = 0) -> CoveragePartition:
    mat = universe if universe is not None else None
    return CoveragePartition(
        universe_size, 0, universe_size,
        covered=frozenset() if mat is not None else None,
        novel=frozenset(mat) if mat is not None else None,
        skipped_statements=skipped)


# --- same-level metrics ----------------------------------------------------

def fslsn(q: CubeQuery, history: Sequence[CubeQuery]) -> int:
    """Full same-level syntactic novelty: 0 iff some history query is
    syntactically identical to q."""
    return 0 if any(qi.same_definition(q) for qi in history) else 1


def _atoms_respect_groupers(q: CubeQuery) -> bool:
    """True when every filter atom sits at or above its dimension's grouper
    level, i.e. the filter selects whole result coordinates and shared
    coordinates of two such queries aggregate identical detailed content."""
    for atom in q.condition.atoms:
        dim = q.cube.dim(atom.dimension)
        if dim.level(atom.level).depth < dim.level(
                q.grouper_for(atom.dimension)).depth:
            return False
    return True


def comparable_same_level(q: CubeQuery,
                          history: Sequence[CubeQuery]) -> list[CubeQuery]:
    """History queries whose same-level comparison with q is meaningful:
    same groupers, same aggregate multiset, and filters (on both sides)
    that respect the grouper levels."""
    if not _atoms_respect_groupers(q):
        return []
    target = sorted(q.aggregates)
    out = []
    for qi in history:
        if tuple(g.lower() for g in qi.groupers) != tuple(
                g.lower() for g in q.groupers):
            continue
        if sorted(qi.aggregates) != target:
            continue
        if not _atoms_respect_groupers(qi):
            continue
        out.append(qi)
    return out


def same_level_partition(q: CubeQuery, others: Sequence[CubeQuery],
                         basis: str = "syntactic") -> CoveragePartition:
    """Coverage of q's same-level universe by pre-screened queries: the
    query signature's coordinates for the syntactic basis, the result cells
    for the extensional one."""
    if basis not in ("syntactic", "extensional"):
        raise ValueError(f"unknown basis {basis!r}")
    if basis == "syntactic":
        sig = query_signature_factored(q)
        if not others and sig.size > MATERIALIZE_CAP:
            # nothing to compare against; report the all-novel partition
            # without materializing a huge signature product
            return CoveragePartition(sig.size, 0, sig.size)
        universe = [tuple(c) for c in sig.enumerate()]
        sigs = [query_signature_factored(qi) for qi in others]
        membership = [set(s.enumerate()) if s.size <= MATERIALIZE_CAP else s
                      for s in sigs]

        def count_in(coord):
            return sum(
                1 for m in membership
                if (coord in m if isinstance(m, set) else m.contains(coord)))
    else:
        universe = evaluate(q).coord_tuples()
        result_sets = [set(evaluate(qi).coord_tuples()) for qi in others]

        def count_in(coord):
            return sum(1 for s in result_sets if coord in s)

    if not others:
        return _empty_partition(len(universe), universe)
    covered, novel, weights = set(), set(), {}
    covered_weight = 0.0
    for coord in universe:
        n = count_in(coord)
        if n > 0:
            covered.add(coord)
            weights[coord] = n
            covered_weight += n
        else:
            novel.add(coord)
    return CoveragePartition(
        len(universe), len(covered), len(novel),
        covered=frozenset(covered), novel=frozenset(novel),
        weights=weights, covered_weight=covered_weight)


def same_level_novelty(q: CubeQuery, history: Sequence[CubeQuery],
                       basis: str = "syntactic",
                       weighted: bool = False) -> tuple[float, CoveragePartition]:
    """Fraction of q's same-level coordinates (syntactic) or result cells
    (extensional) not covered by comparable history queries.

    Returns 1 with an all-novel partition when no history query is
    comparable.
    """
    part = same_level_partition(q, comparable_same_level(q, history), basis)
    score = part.weighted_novel_fraction if weighted else part.novel_fraction
    return score, part


# --- detailed syntactic metrics ----------------------------------------------

def fsdn(q: CubeQuery, history: Sequence[CubeQuery]) -> int:
    """Full syntactic detailed novelty: 0 iff some history query's detailed
    signature is a superset of q's (checked per dimension on the factored
    signatures)."""
    mine = _detailed_signature(q)
    for qi in history:
        if mine.issubset(_detailed_signature(qi)):
            return 0
    return 1


def _detailed_signature(q: CubeQuery) -> FactoredSignature:
    return condition_signature(q.condition, q.cube, detailed=True)


def _union_covered_count(target: FactoredSignature,
                         others: list[FactoredSignature]) -> int:
    """|target ∩ (union of others)| by inclusion-exclusion over factored
    per-dimension intersections."""
    others = [o for o in others if target.intersection_size(o) > 0]
    if not others:
        return 0
    if len(others) > MAX_UNION_TERMS:
        raise SignatureTooLarge(
            f"cannot union {len(others)} factored signatures exactly")
    cache: dict[int, tuple[np.ndarray, ...] | None] = {0: tuple(target.sets)}

    def sets_for(mask: int):
        if mask in cache:
            return cache[mask]
        low = mask & -mask
        rest = sets_for(mask ^ low)
        if rest is None:
            cache[mask] = None
            return None
        other = others[low.bit_length() - 1]
        sets = []
        for a, b in zip(rest, other.sets):
            s = np.intersect1d(a, b, assume_unique=True)
            if len(s) == 0:
                cache[mask] = None
                return None
            sets.append(s)
        cache[mask] = tuple(sets)
        return cache[mask]

    total = 0
    for mask in range(1, 1 << len(others)):
        sets = sets_for(mask)
        if sets is None:
            continue
        size = 1
        for s in sets:
            size *= len(s)
        total += size if bin(mask).count("1") % 2 else -size
    return total


def pdsn(q: CubeQuery, history: Sequence[CubeQuery],
         weighted: bool = False,
         materialize: bool | None = None) -> tuple[float, CoveragePartition]:
    """Partial detailed syntactic novelty: the share of q's detailed
    signature not covered by the union of the history's detailed
    signatures."""
    target = _detailed_signature(q)
    others = [_detailed_signature(qi) for qi in history]
    total = target.size
    do_sets = materialize if materialize is not None else total <= MATERIALIZE_CAP
    if do_sets:
        covered, novel, weights = set(), set(), {}
        covered_weight = 0.0
        for coord in target.enumerate(max(total, 1)):
            n = sum(1 for o in others if o.contains(coord))
            if n > 0:
                covered.add(coord)
                weights[coord] = n
                covered_weight += n
            else:
                novel.add(coord)
        part = CoveragePartition(
            total, len(covered), len(novel),
            covered=frozenset(covered), novel=frozenset(novel),
            weights=weights, covered_weight=covered_weight)
    else:
        cov = _union_covered_count(target, others)
        covered_weight = float(
            sum(target.intersection_size(o) for o in others))
        part = CoveragePartition(total, cov, total - cov,
                                 covered_weight=covered_weight)
    score = part.weighted_novel_fraction if weighted else part.novel_fraction
    return score, part


# --- detailed extensional metrics -----------------------------------------------

def pden(q: CubeQuery, history: Sequence[CubeQuery],
         weighted: bool = False,
         materialize: bool | None = None) -> tuple[float, CoveragePartition]:
    """Partial detailed extensional novelty: the share of q's detailed-area
    cells absent from the union of the history's detailed areas.

    Callers comparing like with like should pre-filter the history to the
    query's aggregate/measure multiset (see
    `context.filter_history_same_measures`); relevance passes the history
    unfiltered on purpose. The weighted variant counts one occurrence per
    history query containing the cell; novel cells weigh 1.

    Detailed areas reduce to selected fact rows (cube coordinates are
    unique), so this works on packed row keys without running the
    aggregation step of `detailed_area`.
    """
    cube = q.cube
    rows = cube.coords[selection_mask(q)]
    keys = pack_keys(rows, [d.size(d.base_level) for d in cube.dims])
    total = len(keys)
    if history:
        all_keys = np.concatenate([detailed_area_keys(qi) for qi in history])
        union_keys, counts = np.unique(all_keys, return_counts=True)
        covered_mask = np.isin(keys, union_keys)
        idx = np.searchsorted(union_keys, keys[covered_mask])
        covered_weight = float(counts[idx].sum())
    else:
        covered_mask = np.zeros(total, dtype=bool)
        counts = np.zeros(0, dtype=np.int64)
        covered_weight = 0.0
    cov = int(covered_mask.sum())
    do_sets = materialize if materialize is not None else total <= MATERIALIZE_CAP
    if do_sets:
        tuples = [tuple(int(x) for x in row) for row in rows]
        covered = frozenset(t for t, m in zip(tuples, covered_mask) if m)
        novel = frozenset(t for t, m in zip(tuples, covered_mask) if not m)
        weights = None
        if history:
            weights = {
                t: int(counts[np.searchsorted(union_keys, k)])
                for t, k, m in zip(tuples, keys, covered_mask) if m}
        part = CoveragePartition(total, cov, total - cov, covered, novel,
                                 weights, covered_weight)
    else:
        part = CoveragePartition(total, cov, total - cov,
                                 covered_weight=covered_weight)
    score = part.weighted_novel_fraction if weighted else part.novel_fraction
    return score, part


# --- belief-based novelty ---------------------------------------------------------

def belief_novelty(q: CubeQuery, beliefs: BeliefStore, pi: float,
                   mode: str = "arbitrary") -> tuple[float, CoveragePartition]:
    """Share of the query's cells not pinned down by sufficiently confident
    beliefs.

    `same_level` compares result cells against belief anchors at exactly
    the query's grouper levels; `detailed` compares detailed-area cells
    against base-level anchors; `arbitrary` admits anchors at levels at or
    below the query's and uses full coverage of each cell's detailed
    signature. Statements anchored at ineligible levels are skipped and
    counted in the partition's diagnostics.
    """
    if mode not in ("same_level", "detailed", "arbitrary"):
        raise ValueError(f"unknown belief novelty mode {mode!r}")
    cube = q.cube
    star = known_cells(beliefs, pi)
    if mode == "detailed":
        cells = detailed_area(q)
    else:
        cells = evaluate(q)
    levels = cells.levels
    universe = cells.coord_tuples()
    total = len(universe)

    if mode in ("same_level", "detailed"):
        eligible = {a for a in star
                    if all(al.lower() == ql.lower()
                           for (al, _), ql in zip(a, levels))}
        skipped = len(star) - len(eligible)
        if not eligible:
            return 1.0, _empty_partition(total, universe, skipped)
        anchor_ids = {tuple(mid for _, mid in a) for a in eligible}
        covered = {c for c in universe if c in anchor_ids}
    else:
        depths = [cube.dims[j].level(lv).depth for j, lv in enumerate(levels)]
        eligible = []
        for a in star:
            ok = True
            for j, (al, _) in enumerate(a):
                if cube.dims[j].level(al).depth > depths[j]:
                    ok = False
                    break
            if ok:
                eligible.append(a)
        skipped = len(star) - len(eligible)
        if not eligible:
            return 1.0, _empty_partition(total, universe, skipped)
        covered = {
            c for c in universe
            if full_coverage(cube.dims, Cell(levels, c), eligible)}

    novel = [c for c in universe if c not in covered]
    part = CoveragePartition(
        total, len(covered), len(novel),
        covered=frozenset(covered), novel=frozenset(novel),
        skipped_statements=skipped)
    return part.novel_fraction, part


def full_coverage(dims: tuple[Dimension, ...], cell: Cell,
                  cstar: Iterable[Anchor]) -> bool:
    """True iff the cell's detailed signature is a subset of the union of
    the detailed signatures of the given anchored cells.

    Every anchor must sit at levels at or below the cell's own levels;
    anchors above raise LevelMismatch.
    """
    base_levels = tuple(d.base_level.name for d in dims)
    target = FactoredSignature(
        tuple(dims), base_levels,
        tuple(d.desc_ids(lv, [mid], d.base_level)
              for d, lv, mid in zip(dims, cell.levels, cell.ids)))
    others = []
    for anchor in cstar:
        sets = []
        for j, (level, mid) in enumerate(anchor):
            if dims[j].level(level).depth > dims[j].level(cell.levels[j]).depth:
                raise LevelMismatch(
                    f"anchor level {level} is above cell level {cell.levels[j]} "
                    f"on {dims[j].name}")
            sets.append(dims[j].desc_ids(level, [mid], dims[j].base_level))
        others.append(FactoredSignature(tuple(dims), base_levels, tuple(sets)))
    others = [o for o in others if target.intersection_size(o) > 0]
    if not others:
        return target.size == 0
    if len(others) <= MAX_UNION_TERMS:
        return _union_covered_count(target, others) == target.size
    return all(any(o.contains(c) for o in others)
               for c in target.enumerate())
