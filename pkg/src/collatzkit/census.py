"""Loop discovery, exit basins and program scoring over ranges of starts."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from functools import partial

import numpy as np

from . import kernels
from .bigint import to_decimal
from .program import step
from .sharding import map_shards, odd_values, split
from .trajectory import (
    DEFAULT_MAX_BITS,
    DEFAULT_MAX_ITER,
    StopPolicy,
    _loop_through,
    canonicalize_loop,
    detect_cycle,
    iterate,
)

__all__ = [
    "LoopRegistry",
    "BasinReport",
    "InterestingnessReport",
    "canonicalize_loop",
    "find_loops",
    "resolve_starts",
    "lowest_root_node",
    "lowest_root_nodes",
    "basin_scan",
    "interestingness_report",
]

_ROOT_CHUNK = 1 << 14


@dataclass
class LoopRegistry:
    program_id: str
    loops: dict
    scan_bound: int
    root_nodes: dict = field(default_factory=dict)
    capped: tuple = ()

    @property
    def minima(self):
        return tuple(sorted(self.loops))

    def __len__(self):
        return len(self.loops)

    def to_records(self, members=False):
        out = []
        for m in self.minima:
            rec = {"program": self.program_id, **self.loops[m].to_dict(members)}
            root = self.root_nodes.get(m)
            rec["lowest_root_node"] = None if root is None else to_decimal(root)
            out.append(rec)
        return out

    def to_json(self, members=False):
        return json.dumps(self.to_records(members), indent=2)

    @classmethod
    def from_json(cls, text, program):
        loops, roots = {}, {}
        for rec in json.loads(text):
            if "members" in rec:
                loop = canonicalize_loop(program, [int(v) for v in rec["members"]])
            else:
                loop = _loop_through(program, int(rec["min"]))
            loops[loop.min] = loop
            if rec.get("lowest_root_node") is not None:
                roots[loop.min] = int(rec["lowest_root_node"])
        return cls(program.id, dict(sorted(loops.items())), 0, roots)


def _percent(count, total):
    if total == 0:
        return Decimal("0.00")
    return (Decimal(100 * count) / Decimal(total)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


@dataclass
class BasinReport:
    program_id: str
    start_set: str
    counts: dict
    capped: int = 0
    capped_starts: tuple = ()

    @property
    def resolved(self):
        return sum(self.counts.values())

    @property
    def total(self):
        return self.resolved + self.capped

    def percentages(self):
        """Share of resolved starts per loop, rounded half-up to 2 decimals."""
        total = self.resolved
        return {m: _percent(c, total) for m, c in self.counts.items()}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["loop_min", "count", "percent"])
        pct = self.percentages()
        for m, c in self.counts.items():
            w.writerow([m, c, pct[m]])
        w.writerow(["capped", self.capped, ""])
        return buf.getvalue()

    def to_dict(self):
        pct = self.percentages()
        return {
            "program": self.program_id,
            "start_set": self.start_set,
            "loops": [{"loop_min": str(m), "count": c, "percent": str(pct[m])} for m, c in self.counts.items()],
            "capped": self.capped,
            "capped_starts": [str(s) for s in self.capped_starts],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _loop_shard(program, max_iterations, max_bits, starts):
    status, _, value = kernels.scan(program, starts, (), stop_below=True, max_iter=max_iterations)
    loops = {}
    below = []
    capped = []
    for s, st, v in zip(starts.tolist(), status.tolist(), value.tolist()):
        if st == kernels.BELOW:
            below.append((s, v))
        elif st == kernels.CYCLE:
            loop = _loop_through(program, v)
            loops[loop.min] = loop
        else:
            loop = detect_cycle(program, s, max_iterations, max_bits)
            if loop is None:
                capped.append(s)
            else:
                loops[loop.min] = loop
    return loops, below, capped


def find_loops(program, scan_bound, max_iterations=DEFAULT_MAX_ITER, max_bits=DEFAULT_MAX_BITS,
               shards=1, roots=True) -> LoopRegistry:
    """Every loop reached from an odd start ``<= scan_bound``.

    A start whose orbit drops below itself lands on the orbit of a smaller
    start that was already scanned, so only orbits that stay at or above
    their start are followed to their cycle.  Starts that hit a cap are
    listed in ``capped``, as are starts that fall onto a capped orbit.
    """
    if scan_bound < 1:
        raise ValueError("scan_bound must be >= 1")
    pieces = split(odd_values(1, scan_bound), shards)
    parts = map_shards(partial(_loop_shard, program, max_iterations, max_bits), pieces, shards)
    loops = {}
    capped = set()
    below = []
    for part_loops, part_below, part_capped in parts:
        loops.update(part_loops)
        capped.update(part_capped)
        below.extend(part_below)
    for s, v in sorted(below):
        if capped and (v >> ((v & -v).bit_length() - 1)) in capped:
            capped.add(s)
    registry = LoopRegistry(program.id, dict(sorted(loops.items())), scan_bound, capped=tuple(sorted(capped)))
    if roots and loops:
        registry.root_nodes = lowest_root_nodes(program, registry, scan_bound, max_iterations, max_bits)
    return registry


def resolve_starts(program, starts, minima, max_iterations=DEFAULT_MAX_ITER, max_bits=DEFAULT_MAX_BITS):
    """Loop minimum (None when capped) and sequence length for every start.

    Starts are pushed through the int64 kernel first; overflowing, cycling
    into an unknown loop, or kernel-capped starts are redone with Python
    integers under the same caps.
    """
    minima = tuple(sorted(int(m) for m in minima))
    starts = np.asarray(starts, dtype=np.int64)
    status, length, value = kernels.scan(program, starts, minima, max_iter=max_iterations)
    loop_mins = [None] * len(starts)
    lengths = length.tolist()
    policy = StopPolicy(frozenset(minima), max_iterations, max_bits)
    for i, (st, v) in enumerate(zip(status.tolist(), value.tolist())):
        if st == kernels.HIT:
            loop_mins[i] = minima[v]
            continue
        traj = iterate(program, int(starts[i]), policy)
        loop_mins[i] = traj.loop_min
        lengths[i] = traj.length
    return loop_mins, lengths


def lowest_root_nodes(program, registry, search_bound, max_iterations=DEFAULT_MAX_ITER,
                      max_bits=DEFAULT_MAX_BITS):
    """Smallest start entering each registry loop, None if not below ``search_bound``."""
    minima = registry.minima
    found = {}
    lo = 1
    while lo <= search_bound and len(found) < len(minima):
        hi = min(search_bound, lo + 2 * _ROOT_CHUNK - 1)
        starts = odd_values(lo, hi)
        loop_mins, _ = resolve_starts(program, starts, minima, max_iterations, max_bits)
        for s, m in zip(starts.tolist(), loop_mins):
            if m is not None and m not in found:
                found[m] = s
        lo = hi + 1
    return {m: found.get(m) for m in minima}


def lowest_root_node(program, loop, search_bound, registry=None, max_iterations=DEFAULT_MAX_ITER,
                     max_bits=DEFAULT_MAX_BITS):
    """Smallest ``n0 >= 1`` whose orbit enters ``loop``; None if none ``<= search_bound``.

    Without a registry only ``loop`` is known in advance; orbits reaching
    other cycles are resolved by cycle detection.
    """
    if search_bound < loop.min:
        raise ValueError("search_bound must be >= the loop minimum")
    if registry is None:
        registry = LoopRegistry(program.id, {loop.min: loop}, 0)
    return lowest_root_nodes(program, registry, search_bound, max_iterations, max_bits).get(loop.min)


def _basin_shard(program, minima, max_iterations, max_bits, starts):
    loop_mins, _ = resolve_starts(program, starts, minima, max_iterations, max_bits)
    counts = Counter()
    capped = []
    for s, m in zip(starts.tolist(), loop_mins):
        if m is None:
            capped.append(s)
        else:
            counts[m] += 1
    return counts, capped


def basin_scan(program, lo, hi, known_minima=None, max_iterations=DEFAULT_MAX_ITER,
               max_bits=DEFAULT_MAX_BITS, shards=1) -> BasinReport:
    """Classify every odd start in ``[lo, hi]`` by the loop it ends in.

    ``known_minima`` defaults to the loops found scanning up to
    ``min(hi, 10**5)``; orbits reaching any other cycle still get classified
    by that cycle's minimum.
    """
    if known_minima is None:
        known_minima = find_loops(program, min(hi, 10**5), max_iterations, max_bits, roots=False).minima
    pieces = split(odd_values(lo, hi), shards)
    parts = map_shards(partial(_basin_shard, program, tuple(known_minima), max_iterations, max_bits), pieces, shards)
    counts = Counter()
    capped = []
    for part_counts, part_capped in parts:
        counts.update(part_counts)
        capped.extend(part_capped)
    capped.sort()
    return BasinReport(
        program.id,
        f"odd:{lo}:{hi}",
        dict(sorted(counts.items())),
        len(capped),
        tuple(capped) if len(capped) <= 100 else (),
    )


@dataclass
class InterestingnessReport:
    program_id: str
    sample: str
    capped_fraction: float
    non_monotone_fraction: float
    length_dispersion: dict
    loop_count: int
    loop_minima: tuple

    def to_dict(self):
        return {
            "program": self.program_id,
            "sample": self.sample,
            "capped_fraction": self.capped_fraction,
            "non_monotone_fraction": self.non_monotone_fraction,
            "length_dispersion": {str(k): v for k, v in self.length_dispersion.items()},
            "loop_count": self.loop_count,
            "loop_minima": [str(m) for m in self.loop_minima],
        }


def _rises(program, n0, minima, limit):
    """True if the orbit of ``n0`` ever steps up before reaching ``minima``."""
    n = int(n0)
    for _ in range(limit):
        if n in minima:
            return False
        nxt = step(program, n)
        if nxt > n:
            return True
        n = nxt
    return False


def interestingness_report(program, lo, hi, registry=None, max_iterations=DEFAULT_MAX_ITER,
                           max_bits=DEFAULT_MAX_BITS) -> InterestingnessReport:
    """Measure the four interestingness criteria over the odd starts in ``[lo, hi]``.

    1. fraction of starts hitting a cap, 2. fraction whose orbit ever rises,
    3. population standard deviation of sequence length per decade of
    ``n0``, 4. number of loops in ``registry`` (scanned to ``hi`` if absent).
    """
    known_capped = set()
    if registry is None:
        registry = find_loops(program, hi, max_iterations, max_bits, roots=False)
        # same caps, so these need not be run again
        known_capped = set(registry.capped)
    starts = odd_values(lo, hi)
    todo = np.array([s for s in starts.tolist() if s not in known_capped], dtype=np.int64)
    mins_todo, lens_todo = resolve_starts(program, todo, registry.minima, max_iterations, max_bits)
    resolved = dict(zip(todo.tolist(), zip(mins_todo, lens_todo)))
    minima = set(registry.minima)
    n = len(starts)
    capped = 0
    rises = 0
    by_decade = defaultdict(list)
    for s in starts.tolist():
        m, ln = resolved.get(s, (None, 0))
        if m is None:
            # a capped orbit grows past every bound, so it counts as rising
            capped += 1
            rises += 1
            continue
        minima.add(m)
        if _rises(program, s, minima, ln + 1):
            rises += 1
        by_decade[int(math.log10(s))].append(ln)
    dispersion = {d: float(np.std(v)) for d, v in sorted(by_decade.items())}
    return InterestingnessReport(
        program.id,
        f"odd:{lo}:{hi}",
        capped / n if n else 0.0,
        rises / n if n else 0.0,
        dispersion,
        len(registry),
        registry.minima,
    )
