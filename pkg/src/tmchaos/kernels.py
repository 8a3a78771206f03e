"""Hot inner loops, compiled with numba when available.

Every kernel has two implementations with identical results:

* a numba ``@njit`` loop (backend ``"numba"``), and
* a pure numpy / Python path (backend ``"numpy"``).

The backend is read from the ``TMCHAOS_BACKEND`` environment variable at
import time (``numba`` or ``numpy``) and can be switched at runtime with
:func:`set_backend` or the :func:`use_backend` context manager.  If numba
cannot be imported the numpy path is used regardless.
"""
from __future__ import annotations

import contextlib
import os
from typing import Callable, Iterator

import numpy as np

try:
    import numba
    from numba import njit, types
    from numba.typed import Dict as _NbDict

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_VALID = ("numba", "numpy")

_requested = os.environ.get("TMCHAOS_BACKEND", "numba").strip().lower()
if _requested not in _VALID:
    raise ValueError(f"TMCHAOS_BACKEND must be one of {_VALID}, got {_requested!r}")
BACKEND = _requested if HAS_NUMBA else "numpy"


def get_backend() -> str:
    return BACKEND


def set_backend(name: str) -> None:
    global BACKEND
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    BACKEND = name


@contextlib.contextmanager
def use_backend(name: str) -> Iterator[None]:
    previous = BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


# status codes shared by both backends
RUN_HALTED, RUN_LOOPED, RUN_FUEL = 0, 1, 2
SCAN_CHAOTIC, SCAN_NON_SENSITIVE, SCAN_NO_PAIRS, SCAN_AMBIGUOUS = 0, 1, 2, 3


###############################################################################
# Turing machine execution
###############################################################################
#
# Symbols are small integers with the blank remapped to 0, moves are 0 (L)
# and 1 (R).  ``halt[s]`` is 0 for running states, 1 for accept, 2 for reject.
# The kernel records, for every step t >= 1, the written cell, the symbol it
# held before and the symbol written, plus head and state after the step.

if HAS_NUMBA:

    @njit(cache=True)
    def _mix64(z):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def _same_config(s0, t, state, head, states, heads, wcell, wold, tape, mark, stamp):
        if states[s0] != state or heads[s0] != head:
            return False
        for k in range(s0 + 1, t + 1):
            c = wcell[k]
            if mark[c] != stamp:
                mark[c] = stamp
                if wold[k] != tape[c]:
                    return False
        return True

    @njit(cache=True)
    def _tm_run_nb(nxt, wrt, mov, halt, tape, start, fuel, detect):
        cap = tape.shape[0]
        heads = np.zeros(fuel + 1, np.int64)
        states = np.zeros(fuel + 1, np.int64)
        wcell = np.zeros(fuel + 1, np.int64)
        wold = np.zeros(fuel + 1, np.int64)
        wnew = np.zeros(fuel + 1, np.int64)
        head = 0
        state = start
        states[0] = start

        th = np.uint64(0)
        for c in range(cap):
            if tape[c] != 0:
                th += np.uint64(tape[c]) * _mix64(np.uint64(c))
        table = _NbDict.empty(key_type=types.uint64, value_type=types.int64)
        mark = np.full(cap, -1, np.int64)
        stamp = 0
        golden = np.uint64(0x9E3779B97F4A7C15)
        if detect:
            h0 = _mix64(th ^ _mix64(np.uint64(state) * np.uint64(2654435761)
                                    + np.uint64(head) * golden))
            table[h0] = 0

        for t in range(1, fuel + 1):
            s = tape[head]
            w = wrt[state, s]
            mv = mov[state, s]
            state = nxt[state, s]
            wcell[t] = head
            wold[t] = s
            wnew[t] = w
            if w != s:
                tape[head] = w
                if detect:
                    th += (np.uint64(w) - np.uint64(s)) * _mix64(np.uint64(head))
            if mv == 0:
                if head > 0:
                    head -= 1
            else:
                head += 1
            heads[t] = head
            states[t] = state
            if halt[state] != 0:
                return RUN_HALTED, t, halt[state] == 1, 0, 0, heads, states, wcell, wold, wnew
            if detect:
                h = _mix64(th ^ _mix64(np.uint64(state) * np.uint64(2654435761)
                                       + np.uint64(head) * golden))
                while True:
                    if h not in table:
                        table[h] = t
                        break
                    s0 = table[h]
                    stamp += 1
                    if _same_config(s0, t, state, head, states, heads, wcell, wold,
                                    tape, mark, stamp):
                        return (RUN_LOOPED, t, False, s0, t - s0,
                                heads, states, wcell, wold, wnew)
                    h = h + golden
        return RUN_FUEL, fuel, False, 0, 0, heads, states, wcell, wold, wnew


def _tm_run_py(nxt, wrt, mov, halt, tape, start, fuel, detect):
    nxt_l = nxt.tolist()
    wrt_l = wrt.tolist()
    mov_l = mov.tolist()
    halt_l = halt.tolist()
    cells = bytearray(int(v) for v in tape)
    heads = np.zeros(fuel + 1, np.int64)
    states = np.zeros(fuel + 1, np.int64)
    wcell = np.zeros(fuel + 1, np.int64)
    wold = np.zeros(fuel + 1, np.int64)
    wnew = np.zeros(fuel + 1, np.int64)
    head = 0
    state = int(start)
    states[0] = state
    touched = len(cells.rstrip(b"\x00"))
    table: dict[tuple[int, int, bytes], int] = {}
    if detect:
        table[(state, head, bytes(cells[:touched]))] = 0
    for t in range(1, fuel + 1):
        s = cells[head]
        w = wrt_l[state][s]
        mv = mov_l[state][s]
        state = nxt_l[state][s]
        wcell[t] = head
        wold[t] = s
        wnew[t] = w
        cells[head] = w
        if head >= touched:
            touched = head + 1
        if mv == 0:
            if head > 0:
                head -= 1
        else:
            head += 1
        heads[t] = head
        states[t] = state
        if halt_l[state] != 0:
            return RUN_HALTED, t, halt_l[state] == 1, 0, 0, heads, states, wcell, wold, wnew
        if detect:
            key = (state, head, bytes(cells[:touched]).rstrip(b"\x00"))
            s0 = table.get(key)
            if s0 is not None:
                return RUN_LOOPED, t, False, s0, t - s0, heads, states, wcell, wold, wnew
            table[key] = t
    return RUN_FUEL, fuel, False, 0, 0, heads, states, wcell, wold, wnew


def tm_run(nxt, wrt, mov, halt, tape, start: int, fuel: int, detect: bool):
    """Execute a compiled machine; ``tape`` is modified in place.

    Returns ``(kind, steps, accepting, preperiod, period, heads, states,
    wcell, wold, wnew)``; the arrays have ``steps + 1`` meaningful entries.
    """
    if BACKEND == "numba":
        out = _tm_run_nb(nxt, wrt, mov, halt, tape, np.int64(start), np.int64(fuel), bool(detect))
    else:
        out = _tm_run_py(nxt, wrt, mov, halt, tape, start, fuel, detect)
    kind, steps = int(out[0]), int(out[1])
    n = steps + 1
    return (kind, steps, bool(out[2]), int(out[3]), int(out[4]),
            *(a[:n] for a in out[5:]))


###############################################################################
# Sensitive-dependence pair scan
###############################################################################
#
# Float comparisons against eps within ``guard`` of the threshold are not
# trusted; the caller resolves them exactly through ``resolve(kind, i, j)``
# where kind is "lt" (|v_i - v_j| < eps) or "gt" (|v_i - v_j| > eps).

if HAS_NUMBA:

    @njit(cache=True)
    def _scan_nb(x, eps, guard, horizon, i0, j0, n0, forced, eligible):
        L = x.shape[0]
        lo = eps - guard
        hi = eps + guard
        use_forced = forced >= 0
        for i in range(i0, L):
            jstart = max(j0, i + 1) if i == i0 else i + 1
            for j in range(jstart, L):
                nstart = n0 if (i == i0 and j == jstart) else 0
                if nstart == 0:
                    if use_forced:
                        close = forced == 1
                        use_forced = False
                    else:
                        d = abs(x[i] - x[j])
                        if d >= lo and d <= hi:
                            return SCAN_AMBIGUOUS, i, j, 0, eligible
                        close = d < eps
                    if not close or j + 1 >= L:
                        continue
                    eligible = True
                    nstart = 1
                for n in range(nstart, horizon + 1):
                    if j + n >= L:
                        break
                    if use_forced:
                        far = forced == 1
                        use_forced = False
                    else:
                        e = abs(x[i + n] - x[j + n])
                        if e >= lo and e <= hi:
                            return SCAN_AMBIGUOUS, i, j, n, eligible
                        far = e > eps
                    if far:
                        return SCAN_CHAOTIC, i, j, n, eligible
        if eligible:
            return SCAN_NON_SENSITIVE, -1, -1, -1, eligible
        return SCAN_NO_PAIRS, -1, -1, -1, eligible


def _scan_via_nb(x, eps, guard, horizon, resolve):
    i = j = n = 0
    forced = -1
    eligible = False
    while True:
        status, i, j, n, eligible = _scan_nb(x, eps, guard, horizon, i, j, n, forced, eligible)
        if status != SCAN_AMBIGUOUS:
            return int(status), int(i), int(j), int(n)
        if n == 0:
            forced = int(resolve("lt", i, j))
        else:
            forced = int(resolve("gt", i + n, j + n))


def _scan_np(x, eps, guard, horizon, resolve):
    L = x.shape[0]
    lo, hi = eps - guard, eps + guard
    best: tuple[int, int, int] | None = None
    eligible = False
    for d in range(1, L):
        m = L - d
        if best is not None and best[0] == 0:
            break  # no later offset can beat i == 0 with a smaller j
        D = np.abs(x[d:] - x[:m])
        amb = np.flatnonzero((D >= lo) & (D <= hi))
        close = D < eps
        far = D > eps
        for k in amb:
            close[k] = resolve("lt", int(k), int(k) + d)
            far[k] = resolve("gt", int(k), int(k) + d)
        if m < 2:
            continue
        if close[: m - 1].any():
            eligible = True
        idx = np.where(far, np.arange(m), m)
        nxt = np.minimum.accumulate(idx[::-1])[::-1]
        cand = np.arange(m - 1)
        kp = nxt[1:]
        valid = close[: m - 1] & (kp < m) & (kp - cand <= horizon)
        hits = np.flatnonzero(valid)
        if hits.size:
            i = int(hits[0])
            if best is None or i < best[0]:
                best = (i, i + d, int(kp[i]) - i)
    if best is not None:
        return SCAN_CHAOTIC, best[0], best[1], best[2]
    return (SCAN_NON_SENSITIVE if eligible else SCAN_NO_PAIRS), -1, -1, -1


def sensitivity_scan(x: np.ndarray, eps: float, horizon: int,
                     resolve: Callable[[str, int, int], bool]) -> tuple[int, int, int, int]:
    """Lexicographically first ``(i, j, n)`` with ``|x_i-x_j| < eps`` and
    ``|x_{i+n}-x_{j+n}| > eps``, ``1 <= n <= horizon``.

    Returns ``(status, i, j, n)``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(x))) if x.size else 1.0, abs(eps))
    guard = 1e-12 * scale
    if BACKEND == "numba":
        return _scan_via_nb(x, float(eps), guard, int(horizon), resolve)
    return _scan_np(x, float(eps), guard, int(horizon), resolve)


###############################################################################
# Monte Carlo: count rows that are sorted non-decreasingly
###############################################################################

if HAS_NUMBA:

    @njit(cache=True)
    def _count_ordered_nb(samples):
        rows, cols = samples.shape
        count = 0
        for r in range(rows):
            ok = True
            for c in range(1, cols):
                if samples[r, c] < samples[r, c - 1]:
                    ok = False
                    break
            if ok:
                count += 1
        return count


def _count_ordered_np(samples):
    if samples.shape[1] < 2:
        return samples.shape[0]
    return int(np.count_nonzero(np.all(np.diff(samples, axis=1) >= 0, axis=1)))


def count_ordered(samples: np.ndarray) -> int:
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    if BACKEND == "numba":
        return int(_count_ordered_nb(samples))
    return _count_ordered_np(samples)


###############################################################################
# Intersection of sorted disjoint closed integer interval lists
###############################################################################

if HAS_NUMBA:

    @njit(cache=True)
    def _intersect_nb(alo, ahi, blo, bhi):
        out_lo = np.empty(alo.shape[0] + blo.shape[0], np.int64)
        out_hi = np.empty(alo.shape[0] + blo.shape[0], np.int64)
        i = 0
        j = 0
        k = 0
        while i < alo.shape[0] and j < blo.shape[0]:
            lo = max(alo[i], blo[j])
            hi = min(ahi[i], bhi[j])
            if lo <= hi:
                out_lo[k] = lo
                out_hi[k] = hi
                k += 1
            if ahi[i] < bhi[j]:
                i += 1
            else:
                j += 1
        return out_lo[:k], out_hi[:k]


def _intersect_np(alo, ahi, blo, bhi):
    # for each a-interval, the b-intervals overlapping it form a contiguous run
    first = np.searchsorted(bhi, alo, side="left")
    last = np.searchsorted(blo, ahi, side="right")
    counts = np.maximum(last - first, 0)
    a_idx = np.repeat(np.arange(alo.shape[0]), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    b_idx = np.repeat(first, counts) + offsets
    lo = np.maximum(alo[a_idx], blo[b_idx])
    hi = np.minimum(ahi[a_idx], bhi[b_idx])
    keep = lo <= hi
    return lo[keep], hi[keep]


def intersect_intervals(alo, ahi, blo, bhi) -> tuple[np.ndarray, np.ndarray]:
    """Intersect two sorted lists of disjoint closed intervals ``[lo, hi]``."""
    args = [np.ascontiguousarray(a, dtype=np.int64) for a in (alo, ahi, blo, bhi)]
    if BACKEND == "numba":
        return _intersect_nb(*args)
    return _intersect_np(*args)
