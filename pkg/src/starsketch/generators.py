"""Seeded synthetic stream generation for five distribution shapes.

All families live on the item universe 1..n.  Unbounded supports (pascal,
poisson) are truncated to that window and renormalized, preserving the shape
inside the universe.  Sampling is inverse-CDF over the truncated pmf, so draws
are exact with respect to it and deterministic per seed.

Parameter conventions: zipf(alpha) puts rank 1 on item 1.  pascal(r) counts
the trailing events before the r-th stopping event with per-trial event
weight p, defaulting to p = n / (2r + n); that coupling keeps the mean at
exactly n/2 for every r, which also centers binomial(p=0.5) and the default
poisson (rate n/2) on the same point.
"""
from __future__ import annotations

import io
import re
import struct
from dataclasses import dataclass

import numpy as np
from scipy import stats

STREAM_MAGIC = b"SSTR"
STREAM_VERSION = 1

FAMILY_KINDS = ("uniform", "zipf", "pascal", "binomial", "poisson")


@dataclass(frozen=True)
class DistributionFamily:
    kind: str
    n: int
    alpha: float | None = None
    r: int | None = None
    p: float | None = None
    lam: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("universe size n must be >= 1")
        if self.kind == "zipf" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("zipf requires alpha > 0")
        if self.kind == "pascal":
            if self.r is None or self.r < 1:
                raise ValueError("pascal requires r >= 1")
            if self.p is None or not 0 < self.p < 1:
                raise ValueError("pascal requires 0 < p < 1")
        if self.kind == "binomial" and (self.p is None or not 0 <= self.p <= 1):
            raise ValueError("binomial requires 0 <= p <= 1")
        if self.kind == "poisson" and (self.lam is None or self.lam <= 0):
            raise ValueError("poisson requires lam > 0")

    @classmethod
    def uniform(cls, n: int) -> "DistributionFamily":
        return cls("uniform", n)

    @classmethod
    def zipf(cls, n: int, alpha: float) -> "DistributionFamily":
        return cls("zipf", n, alpha=alpha)

    @classmethod
    def pascal(cls, n: int, r: int, p: float | None = None) -> "DistributionFamily":
        if p is None:
            p = n / (2 * r + n)
        return cls("pascal", n, r=r, p=p)

    @classmethod
    def binomial(cls, n: int, p: float = 0.5) -> "DistributionFamily":
        return cls("binomial", n, p=p)

    @classmethod
    def poisson(cls, n: int, lam: float | None = None) -> "DistributionFamily":
        if lam is None:
            lam = n / 2
        return cls("poisson", n, lam=lam)

    def label(self) -> str:
        if self.kind == "uniform":
            return "uniform"
        if self.kind == "zipf":
            return f"zipf(alpha={self.alpha:g})"
        if self.kind == "pascal":
            default_p = self.n / (2 * self.r + self.n)
            if self.p == default_p:
                return f"pascal(r={self.r})"
            return f"pascal(r={self.r},p={self.p:g})"
        if self.kind == "binomial":
            return f"binomial(p={self.p:g})"
        return f"poisson(lam={self.lam:g})"


def pmf(d: DistributionFamily) -> np.ndarray:
    """Probability vector over items 1..n; always sums to 1."""
    n = d.n
    if d.kind == "uniform":
        w = np.full(n, 1.0 / n)
    elif d.kind == "zipf":
        w = np.arange(1, n + 1, dtype=np.float64) ** (-d.alpha)
    elif d.kind == "pascal":
        # Failure-counting negative binomial, success weight 1 - p.
        w = stats.nbinom.pmf(np.arange(1, n + 1), d.r, 1.0 - d.p)
    elif d.kind == "binomial":
        # n - 1 trials shifted by one so the support is exactly 1..n.
        w = stats.binom.pmf(np.arange(0, n), n - 1, d.p)
    else:
        w = stats.poisson.pmf(np.arange(1, n + 1), d.lam)
    total = w.sum()
    if total <= 0:
        raise ValueError(f"{d.label()}: no probability mass inside 1..{n}")
    return w / total


def sample_stream(
    d: DistributionFamily,
    m: int,
    seed: int,
    rank_shuffle_seed: int | None = None,
) -> np.ndarray:
    """m i.i.d. items 1..n drawn by inverse CDF; deterministic per seed.

    By default rank 1 maps to item 1 (and so on).  ``rank_shuffle_seed``
    applies a seeded permutation of the item labels instead; hashing makes
    the placement irrelevant to the sketch, so this is off by default.
    """
    if m < 0:
        raise ValueError("stream length must be >= 0")
    if m == 0:
        return np.empty(0, dtype=np.uint64)
    cdf = np.cumsum(pmf(d))
    rng = np.random.default_rng(seed)
    u = rng.random(m)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), d.n - 1)
    if rank_shuffle_seed is not None:
        relabel = np.random.default_rng(rank_shuffle_seed).permutation(d.n)
        idx = relabel[idx]
    return (idx + 1).astype(np.uint64)


_SOURCE_RE = re.compile(r"^(?P<kind>[a-z]+)(?:\((?P<args>[^)]*)\))?$")


def parse_family(text: str, n: int) -> DistributionFamily:
    """Parse a family descriptor like ``zipf(alpha=1)`` or ``pascal(r=3)``."""
    m = _SOURCE_RE.match(text.strip())
    if m is None:
        raise ValueError(f"cannot parse family descriptor {text!r}")
    kind = m.group("kind")
    kwargs: dict[str, float] = {}
    if m.group("args"):
        for part in m.group("args").split(","):
            key, _, value = part.partition("=")
            if not value:
                raise ValueError(f"bad family argument {part!r} in {text!r}")
            kwargs[key.strip()] = float(value)
    if kind == "uniform":
        return DistributionFamily.uniform(n)
    if kind == "zipf":
        return DistributionFamily.zipf(n, kwargs.pop("alpha"))
    if kind == "pascal":
        r = int(kwargs.pop("r"))
        return DistributionFamily.pascal(n, r, kwargs.pop("p", None))
    if kind == "binomial":
        return DistributionFamily.binomial(n, kwargs.pop("p", 0.5))
    if kind == "poisson":
        return DistributionFamily.poisson(n, kwargs.pop("lam", None))
    raise ValueError(f"unknown family kind {kind!r}")


def write_stream(path: str, items: np.ndarray, n: int, descriptor: str) -> None:
    """Stream file: magic, version, descriptor, universe size, fixed-width ids.

    ``n`` is the universe size for synthetic streams and 0 for streams over
    the full 64-bit id space (ingested traces).
    """
    items = np.asarray(items, dtype=np.uint64)
    desc = descriptor.encode()
    with open(path, "wb") as fh:
        fh.write(STREAM_MAGIC)
        fh.write(struct.pack("<B", STREAM_VERSION))
        fh.write(struct.pack("<I", len(desc)))
        fh.write(desc)
        fh.write(struct.pack("<QQ", n, items.size))
        fh.write(items.astype("<u8").tobytes())


def read_stream(path: str) -> tuple[np.ndarray, int, str]:
    """Returns (items, universe size, descriptor)."""
    with open(path, "rb") as fh:
        buf = io.BytesIO(fh.read())
    if buf.read(4) != STREAM_MAGIC:
        raise ValueError(f"{path}: not a stream file")
    (version,) = struct.unpack("<B", buf.read(1))
    if version != STREAM_VERSION:
        raise ValueError(f"{path}: unsupported stream file version {version}")
    (desc_len,) = struct.unpack("<I", buf.read(4))
    descriptor = buf.read(desc_len).decode()
    n, m = struct.unpack("<QQ", buf.read(16))
    items = np.frombuffer(buf.read(m * 8), dtype="<u8").astype(np.uint64)
    if items.size != m:
        raise ValueError(f"{path}: truncated stream file")
    return items, n, descriptor
