"""Null models for sequence lengths and decay rates, and residue statistics.

A decay profile states how many of ``window`` steps are expected to apply
each growth factor; its window factor is the expected multiplicative change
of the value over the window.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .census import find_loops, resolve_starts
from .trajectory import DEFAULT_MAX_BITS, DEFAULT_MAX_ITER, StopPolicy, iterate

__all__ = [
    "DecayProfile",
    "ResidueProfile",
    "DivergentModelError",
    "predict_length",
    "window_factor",
    "named_profile",
    "p1_profile",
    "p2_profile",
    "p4_profile",
    "p6_profile",
    "predicted_length_from_factor",
    "stability_boundary",
    "residue_enrichment",
    "persistence_rate",
    "model_curves_csv",
    "PROFILE_NAMES",
]

_LN43 = math.log(4 / 3)


class DivergentModelError(ValueError):
    """The model does not decay (window factor >= 1)."""


@dataclass(frozen=True)
class DecayProfile:
    window: float
    components: tuple  # (expected count within window, growth factor)

    def __post_init__(self):
        total = sum(c for c, _ in self.components)
        if not math.isclose(total, self.window, rel_tol=1e-9):
            raise ValueError(f"component counts sum to {total}, not {self.window}")
        if any(f <= 0 for _, f in self.components):
            raise ValueError("factors must be positive")


def window_factor(profile: DecayProfile) -> float:
    return math.prod(float(f) ** float(c) for c, f in profile.components)


def p1_profile(window=10):
    half = Fraction(window, 2)
    return DecayProfile(window, ((half, Fraction(1, 2)), (half, Fraction(3, 2))))


def p2_profile(enriched=False):
    """Simple: 3 halvings, 1 mod-3 step, 2 else steps per 6.

    Enriched: per 10 steps, mod-3 odd terms raised by a quarter (1/3 -> 5/12),
    so 25/12 mod-3 steps and 35/12 else steps among the 5 odd ones.  These
    are often quoted rounded as 2.08 and 2.92, which shifts the factor from
    0.6237 to 0.6253.
    """
    if not enriched:
        return DecayProfile(6, ((3, Fraction(1, 2)), (1, Fraction(7, 6)), (2, Fraction(5, 2))))
    mod3 = 5 * Fraction(5, 12)
    return DecayProfile(10, ((5, Fraction(1, 2)), (mod3, Fraction(7, 6)), (5 - mod3, Fraction(5, 2))))


def p4_profile(m, variant="eta1"):
    """Divisible-by-5 multiplier family; ``m`` may be any positive real."""
    mult = Fraction(m) / 10
    if variant == "eta1":
        return DecayProfile(10, ((5, Fraction(1, 2)), (1, mult), (4, Fraction(3, 2))))
    if variant == "eta2":
        return DecayProfile(10, ((5, Fraction(1, 2)), (1.35, mult), (3.65, Fraction(3, 2))))
    raise ValueError(f"unknown p4 profile {variant!r}")


def p6_profile(prime=7):
    """Odd steps split by first matching divisor among the odd primes below ``prime``."""
    guards = [d for d in range(3, prime, 2) if all(d % k for k in range(3, d, 2))]
    comps = [(Fraction(5), Fraction(1, 2))]
    rest = Fraction(1)
    for d in guards:
        share = rest / d
        comps.append((5 * share, Fraction(prime, 2 * d)))
        rest -= share
    comps.append((5 * rest, Fraction(prime, 2)))
    return DecayProfile(10, tuple(comps))


PROFILE_NAMES = ("p1", "p2-simple", "p2-enriched", "p4-eta1:<m>", "p4-eta2:<m>", "p6-7")


def named_profile(name: str) -> DecayProfile:
    if name == "p1":
        return p1_profile()
    if name == "p2-simple":
        return p2_profile(False)
    if name == "p2-enriched":
        return p2_profile(True)
    if name.startswith("p6-"):
        return p6_profile(int(name[3:]))
    if name.startswith(("p4-eta1:", "p4-eta2:")):
        variant, m = name[3:].split(":")
        return p4_profile(float(m), variant)
    raise ValueError(f"unknown profile {name!r}")


def _ln(n):
    return math.log(n) if n > 0 else float("-inf")


def predict_length(model: str, n0) -> float:
    """Predicted sequence length of ``n0`` to 1 under the low/mid/high models.

    low: pure halvings; mid: value shrinks by 3/4 every two steps; high: a
    run-up of one 3/2 step per bit of ``n0`` followed by the mid model.
    """
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    if model == "low":
        return _ln(n0) / math.log(2)
    if model == "mid":
        return 2 * _ln(n0) / _LN43
    if model == "high":
        k = int(n0).bit_length()
        return k + 2 * (_ln(n0) + k * math.log(1.5)) / _LN43
    raise ValueError(f"unknown model {model!r}")


def predicted_length_from_factor(factor, window, n0, loop_min=1) -> float:
    factor = float(factor)
    if not 0 < factor < 1:
        raise DivergentModelError(f"window factor {factor} does not decay")
    return window * (_ln(n0) - _ln(loop_min)) / -math.log(factor)


def stability_boundary(family, lo=7.0, hi=200.0, tol=1e-6) -> float:
    """Parameter ``m`` at which ``window_factor(family(m))`` crosses 1, by bisection."""
    def g(m):
        return math.log(window_factor(family(m)))

    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0:
        return lo
    if g_lo * g_hi > 0:
        raise ValueError(f"no stability boundary in [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if (g_mid > 0) == (g_hi > 0):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ResidueProfile:
    fractions: dict
    odd_terms: int
    starts_used: int
    starts_capped: int


def residue_enrichment(program, starts, divisors, loops=None, max_iterations=DEFAULT_MAX_ITER,
                       max_bits=DEFAULT_MAX_BITS) -> ResidueProfile:
    """Fraction of odd orbit terms divisible by each divisor, pooled over starts.

    Counted terms come after the first odd-branch step and before the orbit
    reaches its loop; loop members are skipped.
    """
    if loops is None:
        loops = find_loops(program, 10**4, max_iterations, max_bits, roots=False)
    members = {}
    for loop in loops.loops.values():
        members[loop.min] = set(loop.members)
    policy = StopPolicy(frozenset(members), max_iterations, max_bits, record_full_path=True)
    hits = {d: 0 for d in divisors}
    odd_terms = 0
    used = capped = 0
    for s in starts:
        traj = iterate(program, int(s), policy)
        if not traj.resolved:
            capped += 1
            continue
        used += 1
        skip = set(traj.loop.members) if traj.loop is not None else members[traj.loop_min]
        path = traj.path
        first_odd = next((i for i, v in enumerate(path) if v & 1), len(path))
        for v in path[first_odd + 1:]:
            if v & 1 and v not in skip:
                odd_terms += 1
                for d in divisors:
                    if v % d == 0:
                        hits[d] += 1
    if used == 0:
        raise ValueError("every start in the sample hit a cap")
    fractions = {d: (hits[d] / odd_terms if odd_terms else 0.0) for d in divisors}
    return ResidueProfile(fractions, odd_terms, used, capped)


class PersistenceResult(NamedTuple):
    rate: float
    pairs: int
    excluded: int


def persistence_rate(program, lo, hi, known_minima=None, max_iterations=DEFAULT_MAX_ITER,
                     max_bits=DEFAULT_MAX_BITS) -> PersistenceResult:
    """Fraction of ``n0`` in ``[lo, hi]`` with the same sequence length as ``n0 + 1``.

    Pairs touching a capped start are excluded and counted.
    """
    if known_minima is None:
        known_minima = find_loops(program, min(hi + 1, 10**5), max_iterations, max_bits, roots=False).minima
    starts = np.arange(lo, hi + 2, dtype=np.int64)
    loop_mins, lengths = resolve_starts(program, starts, known_minima, max_iterations, max_bits)
    same = pairs = excluded = 0
    for i in range(len(starts) - 1):
        if loop_mins[i] is None or loop_mins[i + 1] is None:
            excluded += 1
            continue
        pairs += 1
        same += lengths[i] == lengths[i + 1]
    return PersistenceResult(same / pairs if pairs else 0.0, pairs, excluded)


def model_curves_csv(n0_values, models=("low", "mid", "high")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "n0", "predicted_length"])
    for model in models:
        for n0 in n0_values:
            w.writerow([model, n0, f"{predict_length(model, n0):.6f}"])
    return buf.getvalue()
