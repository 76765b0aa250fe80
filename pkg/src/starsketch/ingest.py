"""Turn NCSA Common Log Format web-server logs into item-id streams.

One item = one HTTP request target (the URL field of the quoted request),
taken verbatim: query string included, case sensitive.  Targets are mapped to
stable 64-bit ids by a fixed, versioned fingerprint so that runs and machines
agree.  Malformed lines never abort a parse; they are counted and reported.

Gzip-compressed logs are read transparently.  The classic trace archives
contain bytes that are not valid UTF-8, so files are decoded as latin-1.
"""
from __future__ import annotations

import gzip
import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

# Bump when the target-to-id mapping changes; recorded in stats output.
FINGERPRINT_VERSION = 1

_REQUEST_RE = re.compile(r'"([^"]*)"')


@dataclass(frozen=True)
class LogRecord:
    raw_line: str
    request_target: str
    valid: bool


@dataclass(frozen=True)
class TraceStats:
    items: int
    distinct: int
    max_frequency: int
    malformed: int = 0

    def __post_init__(self) -> None:
        if self.distinct > self.items or self.max_frequency > self.items:
            raise ValueError("inconsistent trace statistics")


def parse_clf_line(line: str) -> LogRecord:
    """Extract the request target from one CLF line; total, never raises.

    The target is the second token of the first quoted field, so both
    ``"GET /x HTTP/1.0"`` and the protocol-less ``"GET /x"`` resolve to
    ``/x``.  Anything else comes back with valid=False.
    """
    line = line.rstrip("\r\n")
    m = _REQUEST_RE.search(line)
    if m is None:
        return LogRecord(line, "", False)
    tokens = m.group(1).split()
    if len(tokens) < 2 or not tokens[1]:
        return LogRecord(line, "", False)
    return LogRecord(line, tokens[1], True)


def target_to_item(target: str) -> int:
    """Stable 64-bit fingerprint of the exact target string."""
    digest = hashlib.blake2b(target.encode("utf-8", "surrogateescape"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def iter_records(path: str) -> Iterator[LogRecord]:
    """Parse a (possibly gzipped) log file line by line, constant memory."""
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rt", encoding="latin-1") as fh:
        for line in fh:
            yield parse_clf_line(line)


def records_to_items(records: Iterable[LogRecord]) -> Iterator[int]:
    for rec in records:
        if rec.valid:
            yield target_to_item(rec.request_target)


def trace_stats(records: Iterable[LogRecord]) -> TraceStats:
    """Stream size, distinct targets, and peak frequency over valid records."""
    counts: Counter[str] = Counter()
    malformed = 0
    for rec in records:
        if rec.valid:
            counts[rec.request_target] += 1
        else:
            malformed += 1
    items = sum(counts.values())
    return TraceStats(
        items=items,
        distinct=len(counts),
        max_frequency=max(counts.values()) if counts else 0,
        malformed=malformed,
    )


def frequency_ranks(counts: Iterable[int]) -> list[tuple[int, int]]:
    """(rank, frequency) pairs, most frequent first; feeds log-scale plots."""
    ordered = sorted(counts, reverse=True)
    return [(rank, freq) for rank, freq in enumerate(ordered, start=1)]
