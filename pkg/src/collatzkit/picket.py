"""Picket-fence numbers (binary 1010...1) and exit points of original-map orbits.

The picket-fence value of index k is ``(4**k - 1) // 3``; exactly these odd
numbers turn into a power of two under one ``(3n + 1) / 2`` step, so every
orbit of the original map leaves for 1 through one of them.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import kernels
from .program import canonical_program, step
from .sharding import map_shards, odd_values, split
from .trajectory import DEFAULT_MAX_ITER

__all__ = [
    "PicketFenceNumber",
    "Unfactored",
    "picket_fence_value",
    "picket_fence_number",
    "is_picket_fence",
    "exit_point",
    "exit_census",
    "ExitCensus",
    "first_to_exit",
    "small_factorization",
    "format_factorization",
]

_P1 = canonical_program("p1")


class Unfactored(int):
    """A cofactor left over by trial division; primality not established."""

    def __repr__(self):
        return f"Unfactored({int(self)})"


def small_factorization(n: int, bound: int = 10**6) -> list:
    """Prime factors of ``n`` with multiplicity by trial division up to ``bound``.

    A remaining cofactor larger than ``bound**2`` is returned as
    :class:`Unfactored`.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    for p in (2, 3):
        while n % p == 0:
            out.append(p)
            n //= p
    f = 5
    while f * f <= n and f <= bound:
        for p in (f, f + 2):
            while n % p == 0:
                out.append(p)
                n //= p
        f += 6
    if n > 1:
        out.append(n if n <= bound * bound or f * f > n else Unfactored(n))
    return out


def format_factorization(factors) -> str:
    if not factors:
        return "1"
    counts = Counter(factors)
    parts = []
    for p in sorted(counts):
        parts.append(str(p) if counts[p] == 1 else f"{p}^{counts[p]}")
    return "*".join(parts)


def picket_fence_value(k: int) -> int:
    if k < 1:
        raise ValueError("k must be >= 1")
    return (4**k - 1) // 3


@dataclass(frozen=True)
class PicketFenceNumber:
    k: int
    value: int

    @property
    def binary(self):
        return bin(self.value)[2:]

    @property
    def divisible_by_3(self):
        return self.value % 3 == 0

    @property
    def small_factors(self):
        return small_factorization(self.value)


def picket_fence_number(k: int) -> PicketFenceNumber:
    return PicketFenceNumber(k, picket_fence_value(k))


def is_picket_fence(n: int) -> bool:
    n = int(n)
    if n < 1 or n % 2 == 0:
        return False
    t = 3 * n + 1
    return t & (t - 1) == 0


def exit_point(n0: int, max_iterations: int = DEFAULT_MAX_ITER) -> int:
    """First picket-fence value on the original-map orbit of ``n0`` (n0 included)."""
    n = int(n0)
    if n < 1:
        raise ValueError("n0 must be >= 1")
    for _ in range(max_iterations + 1):
        if is_picket_fence(n):
            return n
        n = step(_P1, n)
    raise RuntimeError(f"no exit point within {max_iterations} steps from {n0}")


def _exit_shard(max_iterations, starts):
    status, exits = kernels.picket_exits(starts, max_iterations)
    values = exits.tolist()
    for i in np.flatnonzero(status != kernels.HIT).tolist():
        values[i] = exit_point(int(starts[i]), max_iterations)
    counts = Counter(values)
    first = {}
    for s, e in zip(starts.tolist(), values):
        if e not in first:
            first[e] = s
    return counts, first


@dataclass
class ExitCensus:
    """Exit counts over the first ``starts`` odd integers, plus first exiter per exit."""

    starts: int
    counts: dict
    first: dict

    @property
    def total(self):
        return sum(self.counts.values())

    def rows(self, k_max=None):
        """Table rows for picket-fence indices 1..k_max (default: largest exit seen)."""
        if k_max is None:
            k_max = 1
            while picket_fence_value(k_max + 1) <= max(self.counts):
                k_max += 1
        out = []
        for k in range(1, k_max + 1):
            v = picket_fence_value(k)
            out.append({
                "binary": bin(v)[2:],
                "decimal": v,
                "factorization": format_factorization(small_factorization(v)),
                "first_to_exit": self.first.get(v, ""),
                "exit_count": self.counts.get(v, 0),
            })
        return out

    def to_csv(self, k_max=None):
        buf = io.StringIO()
        fields = ["binary", "decimal", "factorization", "first_to_exit", "exit_count"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows(k_max))
        return buf.getvalue()


def exit_census(count: int, shards: int = 1, max_iterations: int = DEFAULT_MAX_ITER) -> ExitCensus:
    """Exit points of the odd starts 1, 3, 5, ..., 2*count - 1."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pieces = split(odd_values(1, 2 * count - 1), shards)
    parts = map_shards(partial(_exit_shard, max_iterations), pieces, shards)
    counts = Counter()
    first = {}
    for part_counts, part_first in parts:
        counts.update(part_counts)
        for e, s in part_first.items():
            if e not in first or s < first[e]:
                first[e] = s
    return ExitCensus(count, dict(sorted(counts.items())), dict(sorted(first.items())))


def first_to_exit(value: int, search_bound: int, chunk: int = 1 << 16):
    """Smallest start whose exit point is ``value``; None if none ``<= search_bound``.

    Even starts share the exit of their odd part, so only odd starts are tried.
    """
    value = int(value)
    if not is_picket_fence(value):
        raise ValueError(f"{value} is not a picket-fence number")
    lo = 1
    while lo <= search_bound:
        hi = min(search_bound, lo + 2 * chunk - 1)
        starts = odd_values(lo, hi)
        if len(starts):
            _, first = _exit_shard(DEFAULT_MAX_ITER, starts)
            if value in first:
                return first[value]
        lo = hi + 1
    return None
