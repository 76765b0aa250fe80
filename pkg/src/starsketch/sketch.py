"""Online t x k counter matrices: one pass, constant work per item, mergeable.

Every arriving item increments exactly one counter per row (row i uses hash
function i), so each row always sums to the number of items absorbed.  Two
matrices are comparable only when built with the same hash family; the family
fingerprint is carried in the matrix and in its file form to make that a
checked precondition.  Parallel ingestion happens by sharding the stream into
per-worker matrices and merging; counters themselves are never shared.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .hashing import HashFamily, evaluate_batch

MAX_TOTAL = 2 ** 64 - 1

_MAGIC = b"SKMX"
_VERSION = 1


class FamilyMismatchError(ValueError):
    """The two matrices were hashed with different families."""


@dataclass
class SketchMatrix:
    family: HashFamily
    counts: np.ndarray  # (t, k) uint64, row-major
    total: int

    @property
    def t(self) -> int:
        return self.family.t

    @property
    def k(self) -> int:
        return self.family.k

    @property
    def family_fingerprint(self) -> str:
        return self.family.fingerprint()

    def update(self, v: int) -> None:
        """Absorb one item: one increment per row."""
        if self.total + 1 > MAX_TOTAL:
            raise OverflowError("counter capacity exhausted")
        for i, h in enumerate(self.family.functions):
            self.counts[i, h.evaluate(v)] += np.uint64(1)
        self.total += 1

    def update_many(self, items) -> None:
        """Absorb a batch of items (vectorized hot path)."""
        items = np.asarray(items, dtype=np.uint64)
        if self.total + items.size > MAX_TOTAL:
            raise OverflowError("counter capacity exhausted")
        for i, h in enumerate(self.family.functions):
            cells = evaluate_batch(h, items)
            self.counts[i] += np.bincount(cells, minlength=self.k).astype(np.uint64)
        self.total += int(items.size)

    def merge(self, other: "SketchMatrix") -> "SketchMatrix":
        """Cellwise sum; exactly the sketch of the concatenated streams."""
        if self.family_fingerprint != other.family_fingerprint:
            raise FamilyMismatchError("cannot merge sketches built with different hash families")
        if self.total + other.total > MAX_TOTAL:
            raise OverflowError("counter capacity exhausted")
        return SketchMatrix(self.family, self.counts + other.counts, self.total + other.total)

    def row_distribution(self, i: int) -> np.ndarray:
        """Row i counters divided by the stream length; sums to 1."""
        if self.total == 0:
            raise ValueError("sketch is empty")
        if not 0 <= i < self.t:
            raise IndexError(f"row {i} out of range [0, {self.t})")
        return self.counts[i].astype(np.float64) / float(self.total)

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    def to_bytes(self) -> bytes:
        header = self.family.header().encode()
        out = io.BytesIO()
        out.write(_MAGIC)
        out.write(struct.pack("<B", _VERSION))
        out.write(struct.pack("<I", len(header)))
        out.write(header)
        out.write(struct.pack("<II", self.t, self.k))
        out.write(struct.pack("<Q", self.total))
        out.write(self.counts.astype("<u8").tobytes())
        return out.getvalue()


def new_sketch(family: HashFamily) -> SketchMatrix:
    """All-zero t x k matrix bound to the family's fingerprint."""
    return SketchMatrix(family, np.zeros((family.t, family.k), dtype=np.uint64), 0)


def load_sketch(path: str) -> SketchMatrix:
    with open(path, "rb") as fh:
        return sketch_from_bytes(fh.read())


def sketch_from_bytes(data: bytes) -> SketchMatrix:
    buf = io.BytesIO(data)
    if buf.read(4) != _MAGIC:
        raise ValueError("not a sketch file")
    (version,) = struct.unpack("<B", buf.read(1))
    if version != _VERSION:
        raise ValueError(f"unsupported sketch file version {version}")
    (header_len,) = struct.unpack("<I", buf.read(4))
    family = HashFamily.from_header(buf.read(header_len).decode())
    t, k = struct.unpack("<II", buf.read(8))
    if (t, k) != (family.t, family.k):
        raise ValueError("sketch file dimensions disagree with the family header")
    (total,) = struct.unpack("<Q", buf.read(8))
    counts = np.frombuffer(buf.read(t * k * 8), dtype="<u8").reshape(t, k)
    sk = SketchMatrix(family, counts.astype(np.uint64), total)
    row_sums = sk.counts.sum(axis=1, dtype=np.uint64)
    if np.any(row_sums != np.uint64(total)):
        raise ValueError("corrupt sketch file: row sums disagree with total")
    return sk


def sketch_stream(family: HashFamily, items) -> SketchMatrix:
    """Build the sketch of a whole stream in one call."""
    sk = new_sketch(family)
    items = np.asarray(items, dtype=np.uint64)
    if items.size:
        sk.update_many(items)
    return sk
