"""Relevance metrics: overlap of a query with goals or beacon queries.

Goal-based relevance compares the query's detailed signature against the
detailed signature of a declared selection condition. History-based
relevance reuses the novelty partitions (with the history passed unfiltered,
since measures play no role in relevance) and reports the covered fraction,
which by construction complements the corresponding novelty score exactly.
"""

from __future__ import annotations

from typing import Sequence

from .context import Goal
from .engine import CubeQuery, condition_signature
from .errors import LevelMismatch
from .novelty import (
    MATERIALIZE_CAP,
    CoveragePartition,
    _atoms_respect_groupers,
    _union_covered_count,
    fsdn,
    fslsn,
    pden,
    pdsn,
    same_level_partition,
)


def gbdsr(q: CubeQuery, goal: Goal,
          materialize: bool | None = None) -> tuple[float, CoveragePartition]:
    """Goal-based detailed syntactic relevance: the fraction of the query's
    detailed signature inside the goal condition's detailed signature."""
    return multi_goal_gbdsr(q, [goal], materialize=materialize)


def multi_goal_gbdsr(q: CubeQuery, goals: Sequence[Goal],
                     materialize: bool | None = None
                     ) -> tuple[float, CoveragePartition]:
    """Relevance against the union of several goals' detailed signatures
    (overlaps are not double-counted)."""
    if not goals:
        raise ValueError("at least one goal is required")
    target = condition_signature(q.condition, q.cube, detailed=True)
    goal_sigs = [condition_signature(g, q.cube, detailed=True) for g in goals]
    total = target.size
    do_sets = materialize if materialize is not None else total <= MATERIALIZE_CAP
    if do_sets:
        covered, novel = set(), set()
        for coord in target.enumerate(max(total, 1)):
            if any(g.contains(coord) for g in goal_sigs):
                covered.add(coord)
            else:
                novel.add(coord)
        part = CoveragePartition(total, len(covered), len(novel),
                                 frozenset(covered), frozenset(novel))
    else:
        cov = _union_covered_count(target, goal_sigs)
        part = CoveragePartition(total, cov, total - cov)
    return part.covered_fraction, part


def same_level_relevance(q: CubeQuery, beacons: Sequence[CubeQuery],
                         mode: str = "partial",
                         basis: str = "syntactic") -> float:
    """Relevance of q against beacon queries defined at the same levels.

    Raises LevelMismatch unless every beacon shares q's grouper levels; the
    same-level treatment is only meaningful on a homogeneous space.
    """
    if mode not in ("full", "partial"):
        raise ValueError(f"unknown mode {mode!r}")
    mine = tuple(g.lower() for g in q.groupers)
    for qi in beacons:
        if tuple(g.lower() for g in qi.groupers) != mine:
            raise LevelMismatch(
                "same-level relevance needs all queries at the query's levels")
    if mode == "full":
        return 0.0 if fslsn(q, beacons) else 1.0
    # Aggregates are irrelevant to relevance; beacons only need filters
    # that respect the shared grouper levels for the comparison to hold.
    if not _atoms_respect_groupers(q):
        return 0.0
    eligible = [qi for qi in beacons if _atoms_respect_groupers(qi)]
    part = same_level_partition(q, eligible, basis=basis)
    if not eligible:
        return 0.0
    return part.covered_fraction


def detailed_relevance(q: CubeQuery, history: Sequence[CubeQuery],
                       mode: str = "partial",
                       basis: str = "extensional",
                       materialize: bool | None = None) -> float:
    """History-based relevance at the detailed level.

    `full` is the complement of full detailed novelty; `partial` is the
    covered fraction of the detailed signature (syntactic) or detailed area
    (extensional). Pass the history unfiltered: aggregate functions and
    measures do not matter for relevance.
    """
    if mode == "full":
        return 1.0 - fsdn(q, history)
    if mode != "partial":
        raise ValueError(f"unknown mode {mode!r}")
    if basis == "syntactic":
        score, _part = pdsn(q, history, materialize=materialize)
    elif basis == "extensional":
        score, _part = pden(q, history, materialize=materialize)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return 1.0 - score
