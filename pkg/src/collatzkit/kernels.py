"""Batch iteration kernels over int64 start values.

Two interchangeable back ends compute the same arrays:

* scalar loops compiled with ``numba.njit`` (default), and
* a lockstep, fully vectorised numpy version used when numba is missing or
  ``COLLATZKIT_NO_JIT=1`` is set in the environment.

Values are kept below ``LIMIT = 2**62``; a start whose orbit would exceed it
is reported with status ``OVERFLOW`` and must be finished with Python
integers by the caller.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

JIT_ENABLED = njit is not None and os.environ.get("COLLATZKIT_NO_JIT", "") not in ("1", "true", "yes")

LIMIT = 1 << 62

# status codes
HIT = 0
BELOW = 1
CYCLE = 2
CAPPED = 3
OVERFLOW = 4

STATUS_NAMES = {HIT: "hit", BELOW: "below", CYCLE: "cycle", CAPPED: "capped", OVERFLOW: "overflow"}


def _scan_py(starts, div, mul, den, off, minima, stop_below, max_iter):
    n_starts = starts.shape[0]
    status = np.empty(n_starts, np.int8)
    length = np.zeros(n_starts, np.int64)
    value = np.zeros(n_starts, np.int64)
    nrules = div.shape[0]
    nmin = minima.shape[0]
    for s in range(n_starts):
        n = starts[s]
        start = n
        steps = 0
        tort = n
        power = 1
        lam = 0
        st = CAPPED
        while True:
            hit = -1
            for j in range(nmin):
                if minima[j] == n:
                    hit = j
                    break
            if hit >= 0:
                st = HIT
                value[s] = hit
                break
            if stop_below and n < start:
                st = BELOW
                value[s] = n
                break
            if steps >= max_iter:
                st = CAPPED
                value[s] = n
                break
            if n & 1 == 0:
                n = n >> 1
            else:
                over = False
                for i in range(nrules):
                    d = div[i]
                    if d == 0 or n % d == 0:
                        m = n // den[i]
                        if m > (LIMIT - 1) // mul[i]:
                            over = True
                        else:
                            n = (mul[i] * m + off[i]) >> 1
                        break
                if over:
                    st = OVERFLOW
                    value[s] = n
                    break
            steps += 1
            if n == tort:
                st = CYCLE
                value[s] = n
                break
            lam += 1
            if lam == power:
                tort = n
                power = power << 1
                lam = 0
        status[s] = st
        length[s] = steps
    return status, length, value


def _picket_py(starts, max_iter):
    n_starts = starts.shape[0]
    status = np.empty(n_starts, np.int8)
    exits = np.zeros(n_starts, np.int64)
    for s in range(n_starts):
        n = starts[s]
        steps = 0
        st = CAPPED
        while steps <= max_iter:
            if n & 1 == 1:
                if n > (LIMIT - 1) // 3:
                    st = OVERFLOW
                    break
                t = 3 * n + 1
                if t & (t - 1) == 0:
                    st = HIT
                    exits[s] = n
                    break
                n = t >> 1
            else:
                n = n >> 1
            steps += 1
        status[s] = st
    return status, exits


if JIT_ENABLED:
    _scan_jit = njit(cache=True, nogil=True)(_scan_py)
    _picket_jit = njit(cache=True, nogil=True)(_picket_py)
else:  # pragma: no cover
    _scan_jit = None
    _picket_jit = None


def _step_numpy(cur, div, mul, den, off):
    """One map application on an int64 vector; returns (next, overflow mask)."""
    nxt = cur >> 1
    over = np.zeros(cur.shape, bool)
    todo = (cur & 1) == 1
    for d, q, r, c in zip(div.tolist(), mul.tolist(), den.tolist(), off.tolist()):
        if not todo.any():
            break
        sel = todo if d == 0 else todo & (cur % d == 0)
        todo = todo & ~sel
        m = cur[sel] // r
        bad = m > (LIMIT - 1) // q
        over[sel] = bad
        m = np.where(bad, 0, m)
        nxt[sel] = (q * m + c) >> 1
    return nxt, over


def _scan_numpy(starts, div, mul, den, off, minima, stop_below, max_iter):
    starts = np.asarray(starts, np.int64)
    n_starts = starts.shape[0]
    status = np.full(n_starts, CAPPED, np.int8)
    length = np.zeros(n_starts, np.int64)
    value = np.zeros(n_starts, np.int64)
    minima = np.asarray(minima, np.int64)
    order = np.argsort(minima, kind="stable")
    sorted_min = minima[order]

    idx = np.arange(n_starts)
    cur = starts.copy()
    origin = starts.copy()
    tort = starts.copy()
    power = np.ones(n_starts, np.int64)
    lam = np.zeros(n_starts, np.int64)
    steps = 0

    def finish(mask, code, val):
        status[idx[mask]] = code
        length[idx[mask]] = steps
        value[idx[mask]] = val[mask]

    while idx.size:
        done = np.zeros(idx.size, bool)
        if sorted_min.size:
            pos = np.searchsorted(sorted_min, cur)
            pos_c = np.minimum(pos, sorted_min.size - 1)
            hit = sorted_min[pos_c] == cur
            finish(hit, HIT, order[pos_c])
            done |= hit
        if stop_below:
            below = ~done & (cur < origin)
            finish(below, BELOW, cur)
            done |= below
        if steps >= max_iter:
            finish(~done, CAPPED, cur)
            break
        keep = ~done
        idx, cur, origin, tort, power, lam = (a[keep] for a in (idx, cur, origin, tort, power, lam))
        if not idx.size:
            break
        nxt, over = _step_numpy(cur, div, mul, den, off)
        finish(over, OVERFLOW, cur)
        steps += 1
        cyc = ~over & (nxt == tort)
        finish(cyc, CYCLE, nxt)
        keep = ~(over | cyc)
        idx, cur, origin, tort, power, lam = (a[keep] for a in (idx, cur, origin, tort, power, lam))
        cur = nxt[keep]
        lam += 1
        reset = lam == power
        tort[reset] = cur[reset]
        power[reset] <<= 1
        lam[reset] = 0
    return status, length, value


def _picket_numpy(starts, max_iter):
    starts = np.asarray(starts, np.int64)
    status = np.full(starts.shape[0], CAPPED, np.int8)
    exits = np.zeros(starts.shape[0], np.int64)
    idx = np.arange(starts.shape[0])
    cur = starts.copy()
    steps = 0
    while idx.size and steps <= max_iter:
        odd = (cur & 1) == 1
        over = odd & (cur > (LIMIT - 1) // 3)
        status[idx[over]] = OVERFLOW
        t = np.where(odd & ~over, 3 * np.where(over, 0, cur) + 1, 0)
        found = odd & ~over & ((t & (t - 1)) == 0)
        status[idx[found]] = HIT
        exits[idx[found]] = cur[found]
        keep = ~(over | found)
        nxt = np.where(odd, t >> 1, cur >> 1)
        idx, cur = idx[keep], nxt[keep]
        steps += 1
    return status, exits


def _want_jit(use_jit):
    if use_jit is None:
        return JIT_ENABLED
    if use_jit and not JIT_ENABLED:
        raise RuntimeError("numba kernels requested but numba is missing or COLLATZKIT_NO_JIT is set")
    return bool(use_jit)


def scan(program, starts, minima=(), stop_below=False, max_iter=10**7, use_jit=None):
    """Iterate ``program`` from every start in ``starts``.

    Each start stops at the first of: hitting a value in ``minima`` (status
    HIT, ``value`` = index into ``minima``, ``length`` = steps taken),
    dropping below its own start when ``stop_below`` (BELOW, ``value`` = the
    value reached), a repeated value (CYCLE, ``value`` lies on the cycle),
    ``max_iter`` steps (CAPPED) or int64 overflow (OVERFLOW).
    """
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    minima = np.ascontiguousarray(np.asarray(list(minima), dtype=np.int64).reshape(-1))
    div, mul, den, off = program.kernel_arrays()
    if _want_jit(use_jit):
        return _scan_jit(starts, div, mul, den, off, minima, bool(stop_below), int(max_iter))
    return _scan_numpy(starts, div, mul, den, off, minima, bool(stop_below), int(max_iter))


def picket_exits(starts, max_iter=10**7, use_jit=None):
    """First picket-fence value on the original-map orbit of every start."""
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    if _want_jit(use_jit):
        return _picket_jit(starts, int(max_iter))
    return _picket_numpy(starts, int(max_iter))
