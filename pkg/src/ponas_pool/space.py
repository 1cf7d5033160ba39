"""Hyperparameter search spaces and their random partition among miners.

A :class:`SearchSpace` is an ordered list of discrete hyperparameter ranges.
The pool manager splits it into one :class:`Subspace` per miner by drawing,
for every hyperparameter independently, one non-empty subset of its range.
Subspaces may overlap; no attempt is made to cover the full space.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

MAX_RANGE_SIZE = 12


class SpaceError(ValueError):
    """Base class for malformed spaces and configurations."""


class RangeTooLarge(SpaceError):
    pass


class EmptyRange(SpaceError):
    pass


class ArityMismatch(SpaceError):
    pass


@dataclass(frozen=True)
class HyperparameterSpec:
    name: str
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise EmptyRange(f"hyperparameter {self.name!r} has an empty range")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise SpaceError(f"range of {self.name!r} must be strictly increasing: {values}")


@dataclass(frozen=True)
class SearchSpace:
    specs: tuple[HyperparameterSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "specs", tuple(self.specs))
        if not self.specs:
            raise SpaceError("a search space needs at least one hyperparameter")
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise SpaceError(f"duplicate hyperparameter names: {names}")

    @classmethod
    def from_ranges(cls, ranges: dict[str, Iterable[int]]) -> "SearchSpace":
        return cls(tuple(HyperparameterSpec(name, tuple(vals)) for name, vals in ranges.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    @property
    def ranges(self) -> tuple[tuple[int, ...], ...]:
        return tuple(s.values for s in self.specs)

    def __len__(self) -> int:
        return len(self.specs)

    def as_subspace(self) -> "Subspace":
        """The whole space viewed as a single (unpartitioned) subspace."""
        return Subspace(self, self.ranges)


@dataclass(frozen=True)
class Subspace:
    """One searching range per hyperparameter of ``parent``.

    Ranges are not required to be subsets of the parent ranges: the
    published fixture contains values (48, 32, 0) that its own full-space
    row lacks. Generated partitions always satisfy subset closure.
    """

    parent: SearchSpace
    ranges: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        ranges = tuple(tuple(int(v) for v in r) for r in self.ranges)
        object.__setattr__(self, "ranges", ranges)
        if len(ranges) != len(self.parent):
            raise ArityMismatch(f"subspace has {len(ranges)} ranges, space has {len(self.parent)}")
        for spec, r in zip(self.parent.specs, ranges):
            if not r:
                raise EmptyRange(f"empty range for {spec.name!r}")

    @property
    def size(self) -> int:
        n = 1
        for r in self.ranges:
            n *= len(r)
        return n

    def configurations(self) -> Iterator["Configuration"]:
        """Every configuration, in lexicographic order of range indices."""
        from itertools import product

        for values in product(*self.ranges):
            yield Configuration(values)


@dataclass(frozen=True)
class Configuration:
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __getitem__(self, i: int) -> int:
        return self.values[i]

    def replace(self, index: int, value: int) -> "Configuration":
        vals = list(self.values)
        vals[index] = value
        return Configuration(tuple(vals))


def enumerate_subsets(values: Sequence[int]) -> list[tuple[int, ...]]:
    """All non-empty, order-preserving subsets of ``values``.

    Subsets are listed by ascending bitmask, bit ``i`` selecting
    ``values[i]``, so ``(1, 2)`` yields ``[(1,), (2,), (1, 2)]``.

    Raises:
        EmptyRange: ``values`` is empty.
        RangeTooLarge: more than ``MAX_RANGE_SIZE`` values.
    """
    return list(_subsets(tuple(values)))


@lru_cache(maxsize=256)
def _subsets(values: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    k = len(values)
    if k == 0:
        raise EmptyRange("cannot enumerate subsets of an empty range")
    if k > MAX_RANGE_SIZE:
        raise RangeTooLarge(f"range of size {k} exceeds the limit of {MAX_RANGE_SIZE}")
    return tuple(
        tuple(v for i, v in enumerate(values) if mask >> i & 1)
        for mask in range(1, 1 << k)
    )


def partition(space: SearchSpace, m: int, rng: random.Random) -> list[Subspace]:
    """Split ``space`` into ``m`` (possibly overlapping) subspaces.

    Builds the table of all non-empty subsets of every range, then for each
    miner in turn draws one table entry per hyperparameter uniformly at
    random. Draws are consumed miner-major, so the first ``k`` subspaces of
    ``partition(space, m, rng)`` do not depend on ``m`` for ``k <= m``.
    """
    if m < 1:
        raise ValueError(f"need at least one miner, got m={m}")
    table = [_subsets(spec.values) for spec in space.specs]
    subspaces = []
    for _ in range(m):
        chosen = tuple(options[rng.randrange(len(options))] for options in table)
        subspaces.append(Subspace(space, chosen))
    return subspaces


def contains(sub: Subspace, config: Configuration) -> bool:
    if len(config) != len(sub.ranges):
        raise ArityMismatch(
            f"configuration has {len(config)} values, subspace has {len(sub.ranges)} ranges"
        )
    return all(v in r for v, r in zip(config.values, sub.ranges))


def is_subset_of_space(sub: Subspace, space: SearchSpace) -> bool:
    return all(set(r) <= set(spec.values) for r, spec in zip(sub.ranges, space.specs))


# -- fixture ---------------------------------------------------------------

FIXTURE_VERSION = 1

HYPERPARAMETER_NAMES = (
    "kernel_height",
    "kernel_width",
    "num_kernels",
    "stride_height",
    "stride_width",
    "pool_size",
    "act_num_int_bits",
    "act_num_frac_bits",
    "weight_num_int_bits",
    "weight_num_frac_bits",
)

# Rows copied verbatim from the published architecture and quantization
# tables, including values absent from the full-space row.
_FULL_ROW = (
    (1, 3, 5, 7, 9), (1, 3, 5, 7, 9), (4, 8, 12, 24, 36, 64, 128),
    (1, 2, 3, 4, 5), (1, 2, 3, 4, 5), (1, 2),
    (0, 1, 2, 3), (0, 1, 2, 3, 4, 5, 6), (0, 1, 2, 3, 4), (0, 1, 2, 3, 4, 5, 6),
)

_Q_WIDE = ((0, 1, 2, 3), (0, 1, 2, 3, 4, 5, 6), (0, 1, 2, 3), (0, 1, 2, 3, 4, 5, 6))
_Q_HIGH = ((2, 3), (4, 5, 6), (2, 3), (4, 5, 6))

_SUBSPACE_ROWS = {
    "S1": ((1, 5, 7), (3, 5, 7), (24, 36, 48, 64), (1, 2, 3), (1, 2, 3), (1, 2))
    + ((1, 2, 3), (1, 2, 3, 4, 5), (0, 1, 2, 3, 4), (2, 3, 4, 5)),
    "S2": ((1, 3, 5, 7), (1, 3, 5, 7), (24, 36, 48, 64), (1, 2, 3), (1, 2, 3), (1, 2))
    + _Q_WIDE,
    "S3": ((1, 3, 5, 7, 9), (1, 3, 5, 7, 9), (4, 8, 12, 24, 36, 64, 128), (0, 1, 2, 3), (0, 1, 2, 3), (1,))
    + _Q_WIDE,
    "S4": ((1, 3, 5, 7, 9), (1, 3, 5, 7, 9), (4, 8, 12, 24, 36, 64, 128), (1, 2, 3, 4, 5), (1, 2, 3, 4, 5), (1,))
    + _Q_HIGH,
    "S5": ((1, 3, 5, 7, 9), (1, 3, 5, 7, 9), (4, 8, 12, 24, 36, 64, 128), (1, 2, 3, 4, 5), (1, 2, 3, 4, 5), (1,))
    + ((0, 1), (1, 2, 3), (0, 1), (1, 2, 3)),
    "S6": ((1, 3, 5), (1, 3, 5), (4, 8, 12), (1, 2, 3), (1, 2, 3), (1,)) + _Q_WIDE,
    "S7": ((5, 7, 9), (5, 7, 9), (32, 64, 128), (3, 4, 5), (3, 4, 5), (1,)) + _Q_WIDE,
    "S8": ((5, 7, 9), (5, 7, 9), (32, 64, 128), (3, 4, 5), (3, 4, 5), (1,)) + _Q_HIGH,
    "S9": ((1, 3, 5), (1, 3, 5), (24, 36), (1, 2, 3), (1, 2, 3), (1,))
    + ((2, 3), (5, 6), (2, 3), (5, 6)),
}

FULL_SPACE = SearchSpace(
    tuple(HyperparameterSpec(n, r) for n, r in zip(HYPERPARAMETER_NAMES, _FULL_ROW))
)


def load_fixture_subspaces() -> tuple[list[Subspace], SearchSpace]:
    """The nine published subspaces S1..S9 and the full space they came from."""
    subs = [Subspace(FULL_SPACE, _SUBSPACE_ROWS[f"S{i}"]) for i in range(1, 10)]
    return subs, FULL_SPACE


# -- tabular text format ---------------------------------------------------

def format_table(rows: Sequence[tuple[str, Sequence[Sequence[int]]]], names: Sequence[str]) -> str:
    """Render spaces as ``space ID | h1 | h2 ...`` rows, comma-separated cells.

    Columns are separated by ``" | "``; values inside a cell by ``", "``.
    """
    lines = [" | ".join(("space ID",) + tuple(names))]
    for label, ranges in rows:
        cells = [", ".join(str(v) for v in r) for r in ranges]
        lines.append(" | ".join([label] + cells))
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> tuple[tuple[str, ...], list[tuple[str, tuple[tuple[int, ...], ...]]]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SpaceError("empty table")
    header = [c.strip() for c in lines[0].split("|")]
    names = tuple(header[1:])
    rows = []
    for ln in lines[1:]:
        cells = [c.strip() for c in ln.split("|")]
        if len(cells) != len(header):
            raise SpaceError(f"row has {len(cells)} cells, header has {len(header)}: {ln!r}")
        ranges = tuple(tuple(int(v) for v in cell.split(",")) for cell in cells[1:])
        rows.append((cells[0], ranges))
    return names, rows


def subspace_table(space: SearchSpace, subspaces: Sequence[Subspace]) -> str:
    rows = [("full space", space.ranges)]
    rows += [(f"subspace S{i}", s.ranges) for i, s in enumerate(subspaces, start=1)]
    return format_table(rows, space.names)
