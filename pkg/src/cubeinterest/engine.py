"""Fact cube storage, query evaluation, signatures and detailed areas.

The detailed cube keeps its coordinates column-wise as dense integer ids
(one int32 column per dimension, base level) plus float64 measure columns.
Query evaluation is a vectorized filter -> rollup -> group -> aggregate
pipeline; signatures stay factored per dimension until an algorithm really
needs per-coordinate enumeration.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateCoordinates,
    EmptyFile,
    SignatureTooLarge,
    UnknownLevel,
    UnknownMeasure,
    UnknownMember,
)
from .mdm import ALL_LEVEL, Dimension, Member

AGG_FUNCTIONS = ("sum", "avg", "count", "min", "max")

# Enumerating a signature beyond this many coordinates raises instead of
# silently materializing a huge product.
DEFAULT_ENUMERATION_CAP = 1_000_000


@dataclass(frozen=True)
class AtomicFilter:
    """One `level IN {members}` restriction on a single dimension."""

    dimension: str
    level: str
    values: frozenset[int]  # member ids at `level`

    def __post_init__(self):
        if not self.values:
            raise UnknownMember(
                f"atom on {self.dimension}.{self.level} has an empty value set")


@dataclass(frozen=True)
class SelectionCondition:
    """Conjunction of atomic filters, at most one per dimension.

    A dimension without an atom is unrestricted (equivalently filtered by
    ALL = {all}).
    """

    atoms: tuple[AtomicFilter, ...] = ()

    def __post_init__(self):
        seen = set()
        for a in self.atoms:
            if a.dimension in seen:
                raise DimensionMismatch(
                    f"two atoms on dimension {a.dimension}")
            seen.add(a.dimension)
        # canonical atom order, so structural equality ignores input order
        object.__setattr__(self, "atoms",
                           tuple(sorted(self.atoms, key=lambda a: a.dimension)))

    def atom_for(self, dimension: str) -> AtomicFilter | None:
        for a in self.atoms:
            if a.dimension == dimension:
                return a
        return None

    def atom_map(self) -> dict[str, AtomicFilter]:
        return {a.dimension: a for a in self.atoms}

    @property
    def is_empty(self) -> bool:
        return not self.atoms


class DetailedCube:
    """Immutable base-level fact table over a tuple of dimensions."""

    def __init__(self, dims: tuple[Dimension, ...], measures: tuple[str, ...],
                 coords: np.ndarray, values: np.ndarray):
        self.dims = tuple(dims)
        self.measures = tuple(measures)
        self.coords = np.ascontiguousarray(coords, dtype=np.int32)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        if self.coords.shape != (len(self), len(self.dims)):
            raise DimensionMismatch("coordinate matrix shape mismatch")
        if self.values.shape != (len(self), len(self.measures)):
            raise UnknownMeasure("measure matrix shape mismatch")
        for j, dim in enumerate(self.dims):
            col = self.coords[:, j]
            if len(col) and (col.min() < 0 or col.max() >= dim.size(dim.base_level)):
                raise UnknownMember(
                    f"fact column {dim.name} holds out-of-range member ids")
        keys = pack_keys(self.coords, [d.size(d.base_level) for d in self.dims])
        if len(np.unique(keys)) != len(keys):
            raise DuplicateCoordinates(
                "fact table holds duplicate coordinate tuples")

    def __len__(self) -> int:
        return self.values.shape[0] if self.values.ndim == 2 else self.coords.shape[0]

    def dim_index(self, name: str) -> int:
        for i, d in enumerate(self.dims):
            if d.name.lower() == name.lower():
                return i
        raise DimensionMismatch(f"cube has no dimension {name!r}")

    def dim(self, name: str) -> Dimension:
        return self.dims[self.dim_index(name)]

    def measure_index(self, name: str) -> int:
        for i, m in enumerate(self.measures):
            if m.lower() == name.lower():
                return i
        raise UnknownMeasure(f"cube has no measure {name!r}")

    def base_levels(self) -> tuple[str, ...]:
        return tuple(d.base_level.name for d in self.dims)


@dataclass(frozen=True)
class CubeQuery:
    """Aggregate query: base cube, selection, grouper levels, aggregates.

    `groupers` holds one level name per cube dimension (ALL drops the
    dimension from the grouping); `aggregates` is a tuple of
    (function, base measure) pairs.
    """

    cube: DetailedCube
    condition: SelectionCondition
    groupers: tuple[str, ...]
    aggregates: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if len(self.groupers) != len(self.cube.dims):
            raise DimensionMismatch(
                f"query has {len(self.groupers)} groupers for "
                f"{len(self.cube.dims)} dimensions")
        for dim, g in zip(self.cube.dims, self.groupers):
            if not dim.has_level(g):
                raise UnknownLevel(f"{dim.name} has no level {g!r}")
        if not self.aggregates:
            raise UnknownMeasure("query declares no aggregates")
        for fn, m in self.aggregates:
            if fn not in AGG_FUNCTIONS:
                raise UnknownMeasure(f"unknown aggregate function {fn!r}")
            self.cube.measure_index(m)
        for atom in self.condition.atoms:
            dim = self.cube.dim(atom.dimension)
            lv = dim.level(atom.level)
            top = dim.size(lv)
            for v in atom.values:
                if not 0 <= v < top:
                    raise UnknownMember(
                        f"atom on {dim.name}.{lv.name} holds bad member id {v}")

    def grouper_for(self, dimension: str) -> str:
        return self.groupers[self.cube.dim_index(dimension)]

    def same_definition(self, other: "CubeQuery") -> bool:
        """Syntactic identity: same atoms (as a set), groupers, and
        aggregate multiset; atom and aggregate order are irrelevant."""
        if self.cube is not other.cube and (
                self.cube.dims != other.cube.dims
                or self.cube.measures != other.cube.measures):
            return False
        if tuple(g.lower() for g in self.groupers) != tuple(
                g.lower() for g in other.groupers):
            return False
        mine = {(a.dimension.lower(), a.level.lower(), a.values)
                for a in self.condition.atoms}
        theirs = {(a.dimension.lower(), a.level.lower(), a.values)
                  for a in other.condition.atoms}
        if mine != theirs:
            return False
        return sorted(self.aggregates) == sorted(other.aggregates)

    def aggregate_labels(self) -> tuple[str, ...]:
        return tuple(f"{fn}({m})" for fn, m in self.aggregates)


@dataclass(frozen=True)
class Cell:
    """One coordinate tuple (member ids at the stated levels) with measures."""

    levels: tuple[str, ...]
    ids: tuple[int, ...]
    measures: Mapping[str, float] = field(default_factory=dict)


class CellSet:
    """A set of cells sharing one level per dimension.

    Coordinates are unique; measures are optional (signature-only sets carry
    none).
    """

    def __init__(self, dims: tuple[Dimension, ...], levels: tuple[str, ...],
                 coords: np.ndarray, measures: dict[str, np.ndarray] | None = None):
        self.dims = tuple(dims)
        self.levels = tuple(levels)
        self.coords = np.ascontiguousarray(coords, dtype=np.int32).reshape(
            -1, len(self.dims))
        self.measures = {k: np.asarray(v, dtype=np.float64)
                         for k, v in (measures or {}).items()}

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    def __len__(self) -> int:
        return self.size

    def domain_sizes(self) -> list[int]:
        return [d.size(lv) for d, lv in zip(self.dims, self.levels)]

    def packed_keys(self) -> np.ndarray:
        return pack_keys(self.coords, self.domain_sizes())

    def coord_tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in row) for row in self.coords]

    def iter_cells(self) -> Iterator[Cell]:
        names = list(self.measures)
        cols = [self.measures[n] for n in names]
        for i in range(self.size):
            ms = {n: float(c[i]) for n, c in zip(names, cols)}
            yield Cell(self.levels, tuple(int(x) for x in self.coords[i]), ms)

    def labels_row(self, i: int) -> tuple[str, ...]:
        return tuple(d.label_of(lv, self.coords[i, j])
                     for j, (d, lv) in enumerate(zip(self.dims, self.levels)))


@dataclass(frozen=True)
class FactoredSignature:
    """Per-dimension member-id sets denoting their Cartesian product."""

    dims: tuple[Dimension, ...]
    levels: tuple[str, ...]
    sets: tuple[np.ndarray, ...]  # sorted unique ids per dimension

    @property
    def size(self) -> int:
        n = 1
        for s in self.sets:
            n *= len(s)
        return n

    def contains(self, ids) -> bool:
        return all(
            bool(np.searchsorted(s, v) < len(s) and s[np.searchsorted(s, v)] == v)
            for s, v in zip(self.sets, ids))

    def intersection_size(self, other: "FactoredSignature") -> int:
        self._check_aligned(other)
        n = 1
        for a, b in zip(self.sets, other.sets):
            n *= len(np.intersect1d(a, b, assume_unique=True))
            if n == 0:
                return 0
        return n

    def intersect(self, other: "FactoredSignature") -> "FactoredSignature":
        self._check_aligned(other)
        sets = tuple(np.intersect1d(a, b, assume_unique=True)
                     for a, b in zip(self.sets, other.sets))
        return FactoredSignature(self.dims, self.levels, sets)

    def issubset(self, other: "FactoredSignature") -> bool:
        self._check_aligned(other)
        return all(np.isin(a, b, assume_unique=True).all()
                   for a, b in zip(self.sets, other.sets))

    def enumerate(self, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[tuple[int, ...]]:
        if self.size > cap:
            raise SignatureTooLarge(
                f"signature product of {self.size} coordinates exceeds cap {cap}")
        return itertools.product(*[map(int, s) for s in self.sets])

    def to_cellset(self, cap: int = DEFAULT_ENUMERATION_CAP) -> CellSet:
        rows = np.array(list(self.enumerate(cap)), dtype=np.int32).reshape(
            -1, len(self.dims))
        return CellSet(self.dims, self.levels, rows)

    def _check_aligned(self, other: "FactoredSignature"):
        if self.dims != other.dims or self.levels != other.levels:
            raise DimensionMismatch(
                "factored signatures are at different schemata")


# --- key packing ------------------------------------------------------------

def pack_keys(coords: np.ndarray, domain_sizes: list[int]) -> np.ndarray:
    """Mixed-radix packing of coordinate rows into int64 scalars."""
    total = 1
    for s in domain_sizes:
        total *= max(int(s), 1)
    if total >= 2 ** 62:
        raise SignatureTooLarge(
            "coordinate space too large for packed int64 keys")
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, len(domain_sizes))
    keys = np.zeros(coords.shape[0], dtype=np.int64)
    for j, s in enumerate(domain_sizes):
        keys *= max(int(s), 1)
        keys += coords[:, j]
    return keys


def unpack_key(key: int, domain_sizes: list[int]) -> tuple[int, ...]:
    out = []
    for s in reversed(domain_sizes):
        s = max(int(s), 1)
        out.append(int(key % s))
        key //= s
    return tuple(reversed(out))


# --- fact loading -------------------------------------------------------------

def load_facts(path: str | Path, dimensions: list[Dimension]) -> DetailedCube:
    """Load a fact CSV whose header is base-level dimension columns followed
    by measure columns. Dimension order follows the header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyFile(f"{path}: empty fact file") from None
        rows = [r for r in reader if r and any(f.strip() for f in r)]
    by_base = {d.base_level.name.lower(): d for d in dimensions}
    dims: list[Dimension] = []
    dim_cols: list[int] = []
    measure_names: list[str] = []
    measure_cols: list[int] = []
    for idx, col in enumerate(header):
        d = by_base.get(col.lower())
        if d is not None:
            dims.append(d)
            dim_cols.append(idx)
        else:
            measure_names.append(col)
            measure_cols.append(idx)
    if not dims:
        raise DimensionMismatch(f"{path}: no dimension column matches a base level")
    if not measure_names:
        raise UnknownMeasure(f"{path}: no measure columns")
    n = len(rows)
    coords = np.empty((n, len(dims)), dtype=np.int32)
    values = np.empty((n, len(measure_names)), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, (d, c) in enumerate(zip(dims, dim_cols)):
            coords[i, j] = d.member(d.base_level, row[c].strip()).id
        for j, c in enumerate(measure_cols):
            values[i, j] = float(row[c])
    return DetailedCube(tuple(dims), tuple(measure_names), coords, values)


# --- query operations -----------------------------------------------------------

def detailed_proxy(q: CubeQuery) -> CubeQuery:
    """Rewrite the query so its filter and groupers act at base levels.

    The proxy selects exactly the fact rows the original filter selects.
    """
    atoms = []
    for atom in q.condition.atoms:
        dim = q.cube.dim(atom.dimension)
        base = dim.base_level.name
        ids = dim.desc_ids(atom.level, sorted(atom.values), base)
        atoms.append(AtomicFilter(dim.name, base, frozenset(int(i) for i in ids)))
    return CubeQuery(
        cube=q.cube,
        condition=SelectionCondition(tuple(atoms)),
        groupers=q.cube.base_levels(),
        aggregates=q.aggregates,
    )


def condition_signature(condition: SelectionCondition,
                        cube: DetailedCube,
                        detailed: bool = False) -> FactoredSignature:
    """Factored signature of a selection condition.

    Non-detailed: each dimension contributes its atom's value set at the
    atom's own level (ALL = {all} when unfiltered). Detailed: every set is
    rewritten to base-level descendants (full base domain when unfiltered).
    """
    atom_map = condition.atom_map()
    levels = []
    sets = []
    for dim in cube.dims:
        atom = atom_map.get(dim.name)
        if detailed:
            base = dim.base_level.name
            levels.append(base)
            if atom is None:
                sets.append(np.arange(dim.size(base), dtype=np.int32))
            else:
                sets.append(dim.desc_ids(atom.level, sorted(atom.values), base))
        else:
            if atom is None:
                levels.append(ALL_LEVEL)
                sets.append(np.zeros(1, dtype=np.int32))
            else:
                levels.append(dim.level(atom.level).name)
                sets.append(np.array(sorted(atom.values), dtype=np.int32))
    return FactoredSignature(cube.dims, tuple(levels), tuple(sets))


def query_signature_factored(q: CubeQuery) -> FactoredSignature:
    """The query signature as a factored product: the base-level signature
    of the filter with each dimension mapped up to the query's grouper."""
    detailed = condition_signature(q.condition, q.cube, detailed=True)
    levels = []
    sets = []
    for dim, grouper, base_ids in zip(q.cube.dims, q.groupers, detailed.sets):
        lv = dim.level(grouper)
        levels.append(lv.name)
        amap = dim.ancestor_map(0, lv.depth)
        sets.append(np.unique(amap[base_ids]).astype(np.int32))
    return FactoredSignature(q.cube.dims, tuple(levels), tuple(sets))


def query_signature(q: CubeQuery, cap: int = DEFAULT_ENUMERATION_CAP) -> CellSet:
    """Coordinates (no measures) the query result is guaranteed to live in."""
    return query_signature_factored(q).to_cellset(cap)


def selection_mask(q: CubeQuery) -> np.ndarray:
    """Boolean mask over fact rows selected by the query's condition."""
    cube = q.cube
    mask = np.ones(len(cube), dtype=bool)
    for atom in q.condition.atoms:
        j = cube.dim_index(atom.dimension)
        dim = cube.dims[j]
        depth = dim.level(atom.level).depth
        mapped = dim.ancestor_map(0, depth)[cube.coords[:, j]]
        mask &= np.isin(mapped, np.array(sorted(atom.values), dtype=np.int32))
    return mask


def evaluate(q: CubeQuery) -> CellSet:
    """Run the query: filter facts, roll coordinates up to the grouper
    levels, and aggregate each same-coordinate group.

    Groups with no qualifying fact rows are absent from the result. `avg`
    is derived from exact (sum, count) pairs; `count` values are exact
    integers widened to float64.
    """
    cube = q.cube
    mask = selection_mask(q)
    sel = np.flatnonzero(mask)
    depths = [cube.dims[j].level(g).depth for j, g in enumerate(q.groupers)]
    grouped = np.empty((len(sel), len(cube.dims)), dtype=np.int32)
    for j, dim in enumerate(cube.dims):
        grouped[:, j] = dim.ancestor_map(0, depths[j])[cube.coords[sel, j]]
    sizes = [d.size(lv) for d, lv in zip(cube.dims, q.groupers)]
    keys = pack_keys(grouped, sizes)
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    ngroups = len(uniq)
    coords = grouped[first] if ngroups else grouped.reshape(0, len(cube.dims))
    counts = np.bincount(inv, minlength=ngroups).astype(np.float64)
    measures: dict[str, np.ndarray] = {}
    for fn, mname in q.aggregates:
        col = cube.values[sel, cube.measure_index(mname)]
        label = f"{fn}({mname})"
        if fn == "count":
            measures[label] = counts.copy()
        elif fn == "sum":
            measures[label] = np.bincount(inv, weights=col, minlength=ngroups)
        elif fn == "avg":
            sums = np.bincount(inv, weights=col, minlength=ngroups)
            measures[label] = sums / counts if ngroups else sums
        elif fn == "min":
            acc = np.full(ngroups, np.inf)
            np.minimum.at(acc, inv, col)
            measures[label] = acc
        elif fn == "max":
            acc = np.full(ngroups, -np.inf)
            np.maximum.at(acc, inv, col)
            measures[label] = acc
    levels = tuple(cube.dims[j].level(g).name for j, g in enumerate(q.groupers))
    return CellSet(cube.dims, levels, coords, measures)


def detailed_area(q: CubeQuery) -> CellSet:
    """The base-level cells the query aggregates over: the evaluated
    detailed proxy."""
    return evaluate(detailed_proxy(q))


def detailed_area_keys(q: CubeQuery) -> np.ndarray:
    """Sorted packed keys of the detailed area's coordinates.

    Fact coordinates are unique, so the selected rows are exactly the
    detailed area; this skips the aggregation step of `detailed_area`.
    """
    cube = q.cube
    sel = selection_mask(q)
    keys = pack_keys(cube.coords[sel], [d.size(d.base_level) for d in cube.dims])
    keys.sort()
    return keys


def cell_distance(dims: tuple[Dimension, ...], a: Cell, b: Cell) -> float:
    """Mean per-dimension member distance between two cells over the same
    dimensions (levels may differ)."""
    if len(a.ids) != len(dims) or len(b.ids) != len(dims):
        raise DimensionMismatch("cells do not span the cube's dimensions")
    total = 0.0
    for j, dim in enumerate(dims):
        ma = dim.member_by_id(a.levels[j], a.ids[j])
        mb = dim.member_by_id(b.levels[j], b.ids[j])
        total += dim.value_distance(ma, mb)
    return total / len(dims)
