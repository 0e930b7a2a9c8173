import numpy as np
import pytest
from conftest import canonical_programs

from collatzkit import kernels
from collatzkit.picket import exit_point
from collatzkit.program import canonical_program
from collatzkit.trajectory import StopPolicy, iterate

PROGRAMS = canonical_programs()
MINIMA = {
    "p1": (1,), "p1m": (1, 5, 17), "p2": (1, 7, 21, 85, 121, 141, 1303, 69721),
    "p4:53": (1, 25, 35, 43, 55, 63, 2125, 15871), "p4:15": (1,), "p6:7": (1, 23),
    "p9:11:+-": (1, 5, 17, 125), "p9:13:-+": (1, 11),
}


needs_jit = pytest.mark.skipif(not kernels.JIT_ENABLED, reason="numba kernels disabled")


@needs_jit
@pytest.mark.parametrize("prog", PROGRAMS, ids=lambda p: p.id)
@pytest.mark.parametrize("stop_below", [False, True])
def test_jit_and_numpy_paths_agree(prog, stop_below):
    starts = np.arange(1, 20001, dtype=np.int64)
    minima = MINIMA[prog.id]
    a = kernels.scan(prog, starts, minima, stop_below, 10**5, use_jit=True)
    b = kernels.scan(prog, starts, minima, stop_below, 10**5, use_jit=False)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("prog", PROGRAMS, ids=lambda p: p.id)
def test_kernel_matches_bignum_iteration(prog):
    minima = MINIMA[prog.id]
    starts = np.arange(1, 3001, dtype=np.int64)
    status, length, value = kernels.scan(prog, starts, minima)
    policy = StopPolicy(frozenset(minima))
    for s, st, ln, v in zip(starts.tolist(), status.tolist(), length.tolist(), value.tolist()):
        traj = iterate(prog, s, policy)
        if st == kernels.HIT:
            assert traj.outcome == "converged"
            assert (traj.loop_min, traj.length) == (minima[v], ln)
        else:
            assert st == kernels.OVERFLOW


def test_overflow_is_flagged_not_wrapped():
    prog = canonical_program("p1")
    start = (1 << 62) - 1
    status, _, value = kernels.scan(prog, [start], (1,))
    assert status[0] == kernels.OVERFLOW
    assert value[0] == start


def test_iteration_cap_status():
    status, length, _ = kernels.scan(canonical_program("p1"), [27], (1,), max_iter=10)
    assert status[0] == kernels.CAPPED and length[0] == 10


def test_cycle_status_reports_a_cycle_member():
    prog = canonical_program("p2")
    status, _, value = kernels.scan(prog, [85], ())
    assert status[0] == kernels.CYCLE
    assert value[0] in {85, 213, 249, 291, 340, 170}


@pytest.mark.parametrize("use_jit", [pytest.param(True, marks=needs_jit), False])
def test_picket_exits_match_scalar_oracle(use_jit):
    starts = np.arange(1, 5001, dtype=np.int64)
    status, exits = kernels.picket_exits(starts, use_jit=use_jit)
    assert (status == kernels.HIT).all()
    assert exits.tolist() == [exit_point(s) for s in starts.tolist()]


@pytest.mark.skipif(kernels.JIT_ENABLED, reason="only meaningful with the numba kernels disabled")
def test_explicit_jit_request_fails_when_disabled():
    with pytest.raises(RuntimeError):
        kernels.scan(canonical_program("p1"), np.arange(1, 4, dtype=np.int64), (1,), use_jit=True)
