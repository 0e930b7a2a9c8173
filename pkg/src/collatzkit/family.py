"""Sequence lengths along exponential families ``mult * base**k + offset``.

Runs of ``k`` over which the length stays constant ("islands") show that the
family members join one branch of the orbit tree; ``find_islands`` detects
them and ``verify_common_branch`` checks the branch sharing directly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import partial

from .bigint import decimal_digits
from .census import find_loops
from .nullmodels import predict_length
from .sharding import map_shards, split
from .trajectory import (
    DEFAULT_MAX_BITS,
    DEFAULT_MAX_ITER,
    StopPolicy,
    iterate,
    merge_point,
)

__all__ = [
    "FamilySpec",
    "FamilyPoint",
    "Island",
    "IslandReport",
    "CommonBranch",
    "family_lengths",
    "find_islands",
    "verify_common_branch",
    "family_csv",
]


@dataclass(frozen=True)
class FamilySpec:
    base: int
    k_lo: int
    k_hi: int
    mult: int = 1
    offset: int = 0
    parity: str | None = None  # "odd", "even" or None for no filter

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if self.mult < 1:
            raise ValueError("multiplier must be >= 1")
        if self.k_lo < 0 or self.k_hi < self.k_lo:
            raise ValueError(f"bad exponent range {self.k_lo}:{self.k_hi}")
        if self.parity not in (None, "odd", "even"):
            raise ValueError(f"parity must be 'odd', 'even' or None, not {self.parity!r}")
        # members grow with k, so the smallest is at k_lo
        if self.value(self.k_lo) < 1:
            raise ValueError(f"family member at k={self.k_lo} is below 1")

    def value(self, k):
        return self.mult * self.base**k + self.offset

    def members(self):
        """``(k, n0)`` pairs in k order, after the parity filter."""
        out = []
        for k in range(self.k_lo, self.k_hi + 1):
            n0 = self.value(k)
            if self.parity == "odd" and not n0 & 1 or self.parity == "even" and n0 & 1:
                continue
            out.append((k, n0))
        return out


@dataclass(frozen=True)
class FamilyPoint:
    k: int
    n0: int
    length: int | None  # None when the member hit a cap
    outcome: str

    @property
    def capped(self):
        return self.length is None


def _family_shard(program, minima, max_iterations, max_bits, members):
    policy = StopPolicy(frozenset(minima), max_iterations, max_bits)
    out = []
    for k, n0 in members:
        traj = iterate(program, n0, policy)
        out.append(FamilyPoint(k, n0, traj.length if traj.resolved else None, traj.outcome))
    return out


def family_lengths(program, spec: FamilySpec, known_minima=None, max_iterations=DEFAULT_MAX_ITER,
                   max_bits=DEFAULT_MAX_BITS, shards=1):
    """Sequence length of every family member, in k order."""
    if known_minima is None:
        known_minima = find_loops(program, 10**4, max_iterations, max_bits, roots=False).minima
    pieces = split(spec.members(), shards)
    parts = map_shards(partial(_family_shard, program, tuple(known_minima), max_iterations, max_bits),
                       pieces, shards)
    return [p for part in parts for p in part]


@dataclass(frozen=True)
class Island:
    k_start: int
    k_end: int
    length: int
    exceptions: tuple  # (k, length) pairs inside the island that differ

    @property
    def members(self):
        return self.k_end - self.k_start + 1


@dataclass(frozen=True)
class IslandReport:
    islands: tuple

    def __iter__(self):
        return iter(self.islands)

    def __len__(self):
        return len(self.islands)


def find_islands(pairs, min_run=5, max_exceptions=10) -> IslandReport:
    """Greedy maximal runs where one length dominates.

    From each position the run takes that position's length as its value and
    extends while at most ``max_exceptions`` entries differ; it then ends on
    its last matching entry.  Runs with fewer than ``min_run`` matching
    entries are dropped and the scan moves one position on; otherwise the
    scan resumes after the run.
    """
    pairs = [(int(k), None if ln is None else int(ln)) for k, ln in pairs]
    if any(a[0] >= b[0] for a, b in zip(pairs, pairs[1:])):
        raise ValueError("pairs must be sorted by strictly increasing k")
    islands = []
    i = 0
    n = len(pairs)
    while i < n:
        value = pairs[i][1]
        if value is None:
            i += 1
            continue
        last = i
        hits = 1
        misses = 0
        j = i + 1
        while j < n:
            if pairs[j][1] == value:
                last = j
                hits += 1
            else:
                misses += 1
                if misses > max_exceptions:
                    break
            j += 1
        if hits < min_run:
            i += 1
            continue
        exceptions = tuple(p for p in pairs[i:last + 1] if p[1] != value)
        islands.append(Island(pairs[i][0], pairs[last][0], value, exceptions))
        i = last + 1
    return IslandReport(tuple(islands))


@dataclass(frozen=True)
class CommonBranch:
    merge: int
    shared_tail_length: int
    length_a: int
    length_b: int
    prefix_a: int
    prefix_b: int

    @property
    def lengths_equal(self):
        return self.length_a == self.length_b


def verify_common_branch(program, a, b, known_minima=(1,), max_iterations=DEFAULT_MAX_ITER,
                         max_bits=DEFAULT_MAX_BITS) -> CommonBranch:
    """Where the orbits of ``a`` and ``b`` meet, and how their lengths split there.

    ``length_x == prefix_x + shared_tail_length`` for both starts, so equal
    prefixes imply equal totals; both sides are computed independently.
    """
    merge = merge_point(program, a, b, max_iterations, max_bits)
    if merge is None:
        raise ValueError(f"orbits of {a} and {b} do not meet within the caps")
    policy = StopPolicy(frozenset(known_minima), max_iterations, max_bits, record_full_path=True)
    ta, tb = iterate(program, a, policy), iterate(program, b, policy)
    tail = iterate(program, merge, StopPolicy(frozenset(known_minima), max_iterations, max_bits))
    if not (ta.resolved and tb.resolved and tail.resolved):
        raise ValueError("a trajectory hit a cap")
    return CommonBranch(merge, tail.length, ta.length, tb.length, ta.path.index(merge), tb.path.index(merge))


def family_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "n0_digits", "length", "model_low", "model_mid", "model_high"])
    for p in points:
        w.writerow([
            p.k,
            decimal_digits(p.n0),
            "" if p.length is None else p.length,
            *(f"{predict_length(m, p.n0):.4f}" for m in ("low", "mid", "high")),
        ])
    return buf.getvalue()
