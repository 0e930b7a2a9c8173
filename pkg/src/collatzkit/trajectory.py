"""Iterating a program from one start value with Python integers.

Lengths count map applications: the orbit 29 -> 44 -> ... -> 1 of the
original map has length 13.  ``Trajectory.term_count`` reports the same
orbit counted by terms (start value = term 1), which is how long-run tables
are often tabulated.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field

from .bigint import to_decimal
from .program import Program, step

try:
    from gmpy2 import mpz as _big
except ImportError:  # plain ints are correct, only slower on huge values
    _big = int

__all__ = [
    "StopPolicy",
    "Trajectory",
    "Loop",
    "NonConvergenceError",
    "NotACycleError",
    "Walker",
    "iterate",
    "sequence_length",
    "detect_cycle",
    "canonicalize_loop",
    "merge_point",
    "leading_up_steps",
    "orbit",
    "DEFAULT_MAX_ITER",
    "DEFAULT_MAX_BITS",
]

DEFAULT_MAX_ITER = 10**7
DEFAULT_MAX_BITS = 40000

CONVERGED = "converged"
CYCLE_FOUND = "cycle"
ITERATION_CAP = "iteration_cap"
BIT_CAP = "bit_cap"
PAUSED = "paused"


class NonConvergenceError(RuntimeError):
    """A trajectory hit a cap before reaching a loop."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NotACycleError(ValueError):
    pass


@dataclass(frozen=True)
class StopPolicy:
    known_loop_minima: frozenset = frozenset()
    max_iterations: int = DEFAULT_MAX_ITER
    max_bits: int = DEFAULT_MAX_BITS
    record_full_path: bool = False

    def __post_init__(self):
        object.__setattr__(self, "known_loop_minima", frozenset(int(m) for m in self.known_loop_minima))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.max_bits < 64:
            raise ValueError("max_bits must be >= 64")


@dataclass(frozen=True)
class Loop:
    """A cycle rotated so its minimum comes first."""

    members: tuple

    @property
    def min(self):
        return self.members[0]

    @property
    def max(self):
        return max(self.members)

    @property
    def length(self):
        return len(self.members)

    def to_dict(self, members=False):
        out = {"min": to_decimal(self.min), "length": self.length, "max": to_decimal(self.max)}
        if members:
            out["members"] = [to_decimal(v) for v in self.members]
        return out


@dataclass(frozen=True)
class Trajectory:
    n0: int
    outcome: str
    length: int
    max_value: int
    rule_fire_counts: tuple
    leading_up_steps: int
    loop_min: int | None = None
    loop: Loop | None = None
    path: tuple | None = field(default=None, repr=False)

    @property
    def resolved(self):
        return self.outcome in (CONVERGED, CYCLE_FOUND)

    @property
    def term_count(self):
        """Terms from ``n0`` through the loop minimum, both included."""
        return self.length + 1

    @property
    def max_bits(self):
        return self.max_value.bit_length()

    def to_dict(self):
        outcome = {"kind": self.outcome}
        if self.loop_min is not None:
            outcome["loop_min"] = to_decimal(self.loop_min)
        if self.loop is not None:
            outcome["loop"] = self.loop.to_dict()
        out = {
            "n0": to_decimal(self.n0),
            "outcome": outcome,
            "length": self.length,
            "max_value": to_decimal(self.max_value),
            "max_bits": self.max_bits,
            "rule_fire_counts": list(self.rule_fire_counts),
            "leading_up_steps": self.leading_up_steps,
        }
        if self.path is not None:
            out["path"] = [to_decimal(v) for v in self.path]
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


_ADVANCE_TEMPLATE = """
def advance(n, length, mx, counts, lead, lead_open, tort, power, lam,
            max_iter, max_bits, minima, min_bits, batch, detect, path):
    {zero} = 0
    reason = None
    while True:
        if n.bit_length() <= min_bits and n in minima:
            reason = "converged"
            break
        if length >= max_iter:
            reason = "iteration_cap"
            break
        if not n & 1:
            take = 1
            if batch:
                take = (n & -n).bit_length() - 1
                if take > max_iter - length:
                    take = max_iter - length
            if path is not None:
                path.extend(n >> j for j in range(1, take + 1))
            n >>= take
            length += take
            c0 += take
            lead_open = False
            continue
        if detect:
            if n == tort:
                reason = "cycle"
                break
            if lam == power:
                tort = n
                power <<= 1
                lam = 0
            lam += 1
{body}
        length += 1
        if path is not None:
            path.append(n)
        if lead_open:
            lead += 1
        if n > mx:
            mx = n
            if n.bit_length() > max_bits:
                reason = "bit_cap"
                break
    {store}
    return reason, n, length, mx, lead, lead_open, tort, power, lam
"""


@functools.lru_cache(maxsize=64)
def _compile_advance(odd_rules):
    """Generate the inner loop with the rule constants inlined."""
    lines = []
    for idx, (d, q, r, c) in enumerate(odd_rules, start=1):
        num = "n" if r == 1 else f"(n // {r})"
        action = f"n = ({q} * {num} {'+' if c > 0 else '-'} 1) >> 1"
        if d == 0:
            head = "else:" if idx > 1 else "if True:"
        else:
            head = f"{'if' if idx == 1 else 'elif'} n % {d} == 0:"
        lines += [f"        {head}", f"            {action}", f"            c{idx} += 1"]
    k = len(odd_rules) + 1
    names = [f"c{i}" for i in range(k)]
    store = "; ".join(f"counts[{i}] += {nm}" for i, nm in enumerate(names))
    source = _ADVANCE_TEMPLATE.format(zero=" = ".join(names), body="\n".join(lines), store=store)
    namespace = {}
    exec(compile(source, f"<advance {odd_rules}>", "exec"), namespace)
    return namespace["advance"]


class Walker:
    """Resumable iteration state.

    ``advance`` runs until the orbit hits a known minimum, repeats (when
    cycle detection is on), or a cap is reached, and returns the reason.
    Cycle detection is Brent's scheme on the odd values only; it keeps O(1)
    state and every cycle contains an odd value.  Values are held as gmpy2
    integers when available, which multiply large operands faster.
    """

    def __init__(self, program, n0, *, length=0, value=None, max_value=None,
                 counts=None, leading_up=0, leading_open=None):
        self.program = program
        self.n0 = int(n0)
        self.n = _big(self.n0 if value is None else value)
        self.length = length
        self.max_value = _big(self.n0 if max_value is None else max_value)
        self.counts = list(counts) if counts is not None else [0] * len(program.rules)
        self.leading_up = leading_up
        self.leading_open = (length == 0) if leading_open is None else leading_open
        self._brent = (-1, 1, 1)
        self._advance = _compile_advance(program.odd_rules)

    def advance(self, minima=frozenset(), max_iterations=DEFAULT_MAX_ITER,
                max_bits=DEFAULT_MAX_BITS, detect=True, path=None):
        minima = frozenset(minima)
        min_bits = max((m.bit_length() for m in minima), default=-1)
        batch = all(m & 1 for m in minima)
        tort, power, lam = self._brent
        (reason, self.n, self.length, self.max_value, self.leading_up, self.leading_open,
         tort, power, lam) = self._advance(
            self.n, self.length, self.max_value, self.counts, self.leading_up, self.leading_open,
            tort, power, lam, max_iterations, max_bits, minima, min_bits, batch, detect, path)
        self._brent = (tort, power, lam)
        return reason


def _loop_through(program, value, limit=10**7):
    members = [value]
    n = step(program, value)
    while n != value:
        members.append(n)
        if len(members) > limit:
            raise NotACycleError("cycle longer than limit")
        n = step(program, n)
    k = members.index(min(members))
    return Loop(tuple(members[k:] + members[:k]))


def canonicalize_loop(program: Program, values) -> Loop:
    """Rotate a raw cycle to start at its minimum after checking closure."""
    values = [int(v) for v in values]
    if not values:
        raise NotACycleError("empty cycle")
    if len(set(values)) != len(values):
        raise NotACycleError("cycle members must be distinct")
    for a, b in zip(values, values[1:] + values[:1]):
        if step(program, a) != b:
            raise NotACycleError(f"step({a}) != {b}")
    k = values.index(min(values))
    return Loop(tuple(values[k:] + values[:k]))


def iterate(program: Program, n0: int, policy: StopPolicy | None = None) -> Trajectory:
    """Run ``program`` from ``n0`` until a known loop minimum, a cycle or a cap.

    When a previously unknown cycle is found the orbit is replayed up to the
    cycle's minimum so that ``length``, ``max_value`` and the rule counts have
    the same meaning as for a converged run.
    """
    policy = policy or StopPolicy()
    n0 = int(n0)
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    minima = policy.known_loop_minima
    path = [n0] if policy.record_full_path else None
    walker = Walker(program, n0)
    reason = walker.advance(minima, policy.max_iterations, policy.max_bits, True, path)
    loop = None
    if reason == CYCLE_FOUND:
        loop = _loop_through(program, int(walker.n))
        path = [n0] if policy.record_full_path else None
        walker = Walker(program, n0)
        reason = walker.advance(minima | {loop.min}, policy.max_iterations, policy.max_bits, False, path)
        if reason == CONVERGED and walker.n == loop.min:
            reason = CYCLE_FOUND
    loop_min = int(walker.n) if reason in (CONVERGED, CYCLE_FOUND) else None
    return Trajectory(
        n0=n0,
        outcome=reason,
        length=walker.length,
        max_value=int(walker.max_value),
        rule_fire_counts=tuple(walker.counts),
        leading_up_steps=walker.leading_up,
        loop_min=loop_min,
        loop=loop,
        path=tuple(map(int, path)) if path is not None else None,
    )


def sequence_length(program, n0, known_loop_minima=(), max_iterations=DEFAULT_MAX_ITER,
                    max_bits=DEFAULT_MAX_BITS) -> int:
    """Map applications from ``n0`` to the first arrival at its loop's minimum."""
    traj = iterate(program, n0, StopPolicy(frozenset(known_loop_minima), max_iterations, max_bits))
    if not traj.resolved:
        raise NonConvergenceError(f"{program.id} from {n0}: {traj.outcome} after {traj.length} steps", traj)
    return traj.length


def detect_cycle(program, n0, max_iterations=DEFAULT_MAX_ITER, max_bits=DEFAULT_MAX_BITS):
    """The cycle the orbit of ``n0`` falls into, or None when a cap is hit first."""
    n0 = int(n0)
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    walker = Walker(program, n0)
    reason = walker.advance(frozenset(), max_iterations, max_bits, True)
    if reason != CYCLE_FOUND:
        return None
    return _loop_through(program, int(walker.n))


def orbit(program, n0, max_iterations=DEFAULT_MAX_ITER, max_bits=DEFAULT_MAX_BITS):
    """Orbit values up to (not including) the first repeat, or None if capped."""
    n = int(n0)
    seen = {}
    out = []
    while n not in seen:
        if len(out) >= max_iterations or n.bit_length() > max_bits:
            return None
        seen[n] = len(out)
        out.append(n)
        n = step(program, n)
    return out


def merge_point(program, a, b, max_iterations=DEFAULT_MAX_ITER, max_bits=DEFAULT_MAX_BITS):
    """First value of one orbit that also lies on the other orbit.

    The orbit of the smaller start is indexed and the other orbit scanned in
    order; returns None when either orbit is capped or they never meet.
    """
    a, b = int(a), int(b)
    small, large = (a, b) if a <= b else (b, a)
    indexed = orbit(program, small, max_iterations, max_bits)
    if indexed is None:
        return None
    index = set(indexed)
    n = large
    seen = set()
    for _ in range(max_iterations):
        if n in index:
            return n
        if n in seen or n.bit_length() > max_bits:
            return None
        seen.add(n)
        n = step(program, n)
    return None


def leading_up_steps(program, n0) -> int:
    """Length of the initial run of odd-branch applications."""
    n = int(n0)
    if n < 1:
        raise ValueError("n0 must be >= 1")
    count = 0
    seen = set()
    while n & 1 and n not in seen:
        seen.add(n)
        n = step(program, n)
        count += 1
    return count
