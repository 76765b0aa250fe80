"""Exact stream histograms, set partitions, and partition-space enumeration.

A stream is summarized exactly by an :class:`EmpiricalDistribution` (item ->
occurrence count).  Probability vectors are plain float64 numpy arrays over an
explicitly ordered universe; :func:`aggregate` collapses such a vector along a
:class:`Partition`.  The enumeration side (:func:`enumerate_partitions`,
:func:`stirling`) is the brute-force oracle used to maximize a divergence over
every k-cell partition of a small universe.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

# Exact Stirling numbers are only served up to this n.  S(26,13) still fits a
# signed 64-bit counter; one row further does not, and the enumeration budget
# is unreachable beyond it anyway.
MAX_STIRLING_N = 26

DEFAULT_PARTITION_BUDGET = 10_000_000

# A probability vector must sum to 1 within this absolute tolerance.
NORMALIZATION_TOL = 1e-9


class PartitionBudgetError(RuntimeError):
    """Exhaustive enumeration would exceed the caller's partition budget."""


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Item counts and total length of one stream.

    ``counts`` holds strictly positive multiplicities; items never seen are
    implicit zeros.  ``total`` is the stream length m.
    """

    counts: dict[int, int]
    total: int

    def __post_init__(self) -> None:
        if self.total != sum(self.counts.values()):
            raise ValueError("total does not match the sum of counts")
        if any(c <= 0 for c in self.counts.values()):
            raise ValueError("counts must be strictly positive")

    @property
    def distinct(self) -> int:
        return len(self.counts)

    def support(self) -> list[int]:
        return sorted(self.counts)


def from_stream(items: Iterable[int]) -> EmpiricalDistribution:
    """Count item multiplicities in one pass. Empty streams are allowed."""
    counts = Counter(items)
    return EmpiricalDistribution(dict(counts), sum(counts.values()))


def normalize(dist: EmpiricalDistribution, universe: Sequence[int]) -> np.ndarray:
    """Probability vector x_i / m over ``universe`` in the given order.

    Items absent from the distribution get probability zero.  Raises on an
    empty stream, for which no probability model exists.
    """
    if dist.total == 0:
        raise ValueError("cannot normalize an empty stream")
    m = float(dist.total)
    return np.array([dist.counts.get(i, 0) / m for i in universe], dtype=np.float64)


def as_distribution(weights: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate and return ``weights`` as a probability vector.

    Entries must be finite, nonnegative, and sum to 1 within
    ``NORMALIZATION_TOL``.
    """
    v = np.asarray(weights, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("probability vector must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(v)) or np.any(v < 0.0):
        raise ValueError("probability vector entries must be finite and nonnegative")
    if abs(float(v.sum()) - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"probability vector sums to {v.sum()!r}, not 1")
    return v


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty cells covering a finite item universe."""

    cells: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if not self.cells or any(not c for c in self.cells):
            raise ValueError("every cell must be nonempty")

    @property
    def k(self) -> int:
        return len(self.cells)

    def universe(self) -> frozenset[int]:
        out: set[int] = set()
        for c in self.cells:
            out.update(c)
        return frozenset(out)

    def validate(self, universe: Iterable[int] | None = None) -> None:
        """Check disjointness and, when given, exact cover of ``universe``."""
        seen: set[int] = set()
        for c in self.cells:
            if seen & c:
                raise ValueError("cells are not disjoint")
            seen.update(c)
        if universe is not None and seen != set(universe):
            raise ValueError("cells do not cover the declared universe")

    @classmethod
    def from_cells(cls, cells: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(frozenset(c) for c in cells))

    @classmethod
    def singletons(cls, items: Iterable[int]) -> "Partition":
        return cls(tuple(frozenset((i,)) for i in items))

    def __str__(self) -> str:
        return "|".join("{" + ",".join(map(str, sorted(c))) + "}" for c in self.cells)


def aggregate(
    p: np.ndarray,
    partition: Partition,
    universe: Sequence[int] | None = None,
) -> np.ndarray:
    """Sum vector entries cell by cell.

    By default the vector is read over items ``1..len(p)``; pass ``universe``
    when entries correspond to arbitrary item ids.  The output preserves total
    mass and follows the partition's cell order.
    """
    p = np.asarray(p, dtype=np.float64)
    if universe is None:
        index = {i + 1: i for i in range(p.size)}
    else:
        if len(universe) != p.size:
            raise ValueError("universe length does not match vector length")
        index = {item: pos for pos, item in enumerate(universe)}
    if partition.universe() != set(index):
        raise ValueError("partition does not cover the vector's universe")
    out = np.zeros(partition.k, dtype=np.float64)
    for j, cell in enumerate(partition.cells):
        out[j] = sum(p[index[item]] for item in cell)
    return out


@lru_cache(maxsize=None)
def stirling(n: int, k: int) -> int:
    """Stirling number of the second kind S(n, k), exact.

    Computed by the additive recurrence S(n,k) = k S(n-1,k) + S(n-1,k-1),
    which avoids the cancellation of the alternating-sum formula.  Limited to
    n <= MAX_STIRLING_N so every value fits a 64-bit counter.
    """
    if not 0 <= k <= n:
        raise ValueError(f"require 0 <= k <= n, got n={n} k={k}")
    if n > MAX_STIRLING_N:
        raise ValueError(f"n={n} exceeds the exact bound {MAX_STIRLING_N}")
    if n == 0:
        return 1 if k == 0 else 0
    if k == 0:
        return 0
    if k == n or k == 1:
        return 1
    return k * stirling(n - 1, k) + stirling(n - 1, k - 1)


def restricted_growth_strings(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All length-n restricted growth strings using exactly k labels.

    Lexicographic order; label values are 0..k-1 and appear in first-use
    order, so each string canonically encodes one k-cell partition of [n].
    """
    if not 1 <= k <= n:
        raise ValueError(f"require 1 <= k <= n, got n={n} k={k}")
    a = [0] * n

    def rec(i: int, used: int) -> Iterator[tuple[int, ...]]:
        if k - used > n - i:
            return
        if i == n:
            yield tuple(a)
            return
        for label in range(min(used + 1, k)):
            a[i] = label
            yield from rec(i + 1, used + (1 if label == used else 0))

    return rec(0, 0)


def partition_from_assignment(
    assignment: Sequence[int],
    items: Sequence[int] | None = None,
) -> Partition:
    """Build a Partition from a cell-label array (labels in first-use order)."""
    if items is None:
        items = range(1, len(assignment) + 1)
    cells: dict[int, set[int]] = {}
    for item, label in zip(items, assignment):
        cells.setdefault(int(label), set()).add(item)
    return Partition(tuple(frozenset(cells[label]) for label in sorted(cells)))


def enumerate_partitions(
    n: int,
    k: int,
    budget: int = DEFAULT_PARTITION_BUDGET,
) -> Iterator[Partition]:
    """Yield every partition of {1..n} into exactly k nonempty cells once.

    The count equals S(n, k); a count above ``budget`` raises
    :class:`PartitionBudgetError` before any work is done, signalling that the
    caller must fall back to the sketch approximation.
    """
    if not 1 <= k <= n:
        raise ValueError(f"require 1 <= k <= n, got n={n} k={k}")
    if k != 1 and k != n:
        total = stirling(n, k)
        if total > budget:
            raise PartitionBudgetError(
                f"S({n},{k}) = {total} exceeds the budget of {budget}"
            )

    def gen() -> Iterator[Partition]:
        for rgs in restricted_growth_strings(n, k):
            yield partition_from_assignment(rgs)

    return gen()


def assignment_blocks(
    n: int,
    k: int,
    block_size: int = 4096,
) -> Iterator[np.ndarray]:
    """Chunked RGS enumeration as (rows, n) int8 arrays, lexicographic.

    Feed for the vectorized partition-maximization path; one row per
    partition, entries are cell labels.
    """
    buf: list[tuple[int, ...]] = []
    for rgs in restricted_growth_strings(n, k):
        buf.append(rgs)
        if len(buf) == block_size:
            yield np.array(buf, dtype=np.int8)
            buf.clear()
    if buf:
        yield np.array(buf, dtype=np.int8)


def dump_histogram(dist: EmpiricalDistribution, path: str) -> None:
    """Write ``item,count`` CSV with a ``# total=m`` header line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# total={dist.total}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["item", "count"])
        for item in sorted(dist.counts):
            writer.writerow([item, dist.counts[item]])


def load_histogram(path: str) -> EmpiricalDistribution:
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if not header.startswith("# total="):
            raise ValueError(f"{path}: missing '# total=' header")
        total = int(header.split("=", 1)[1])
        reader = csv.reader(fh)
        next(reader)  # column names
        counts = {int(item): int(count) for item, count in reader}
    dist = EmpiricalDistribution(counts, sum(counts.values()))
    if dist.total != total:
        raise ValueError(f"{path}: header total {total} != summed counts {dist.total}")
    return dist
