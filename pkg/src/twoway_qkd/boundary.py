"""Tolerable (bit, phase) error region for B/P step sequences plus hashing.

A point ``(delta_b, delta_p)`` is secure when some sequence of at most
``max_steps`` B or P steps, applied to the worst-case input
``(1 - db - dp, db, 0, dp)``, leaves a state whose one-way hashing yield is
positive. Sequences are enumerated breadth first, B before P, so the first
success is the shortest and then lexicographically smallest one.
"""

from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .edp import BellDiagonal, b_step, p_step
from .entropy import h2, one_minus_h2

__all__ = [
    "RegionPoint",
    "apply_sequence",
    "hashing_yield",
    "secure_with_some_sequence",
    "diagonal_threshold",
    "boundary_curve",
    "scan_region",
]

DEFAULT_MAX_STEPS = 12
# A yield below the resolution of an O(1) difference in float64 is not
# distinguishable from zero; without this margin underflowed bit errors make
# separable states look secure after enough B steps.
POSITIVITY_MARGIN = sys.float_info.epsilon


@dataclass(frozen=True)
class RegionPoint:
    delta_b: float
    delta_p: float
    secure: bool
    witness: str | None


def _check_sequence(seq: str) -> str:
    seq = seq.upper()
    if set(seq) - {"B", "P"}:
        raise ValueError(f"step sequence may only contain B and P, got {seq!r}")
    return seq


def _step(state: BellDiagonal, token: str) -> tuple[BellDiagonal, float]:
    if token == "B":
        p_s, out = b_step(state, state)
        return out, 0.5 * p_s
    return p_step(state), 1.0 / 3.0


def apply_sequence(state: BellDiagonal, seq: str) -> tuple[BellDiagonal, float]:
    """Run a B/P sequence on identical copies of ``state``.

    Returns the final state and the fraction of input pairs left over:
    each B step keeps ``p_s / 2`` and each P step keeps 1/3.
    """
    factor = 1.0
    for token in _check_sequence(seq):
        state, f = _step(state, token)
        factor *= f
    return state, factor


def hashing_yield(state: BellDiagonal) -> float:
    """``1 - H2(delta_b) - H2(delta_p)``, evaluated without cancellation."""
    return float(one_minus_h2(state.delta_p)) - float(h2(state.delta_b))


def _validate_regime(delta_b: float, delta_p: float) -> None:
    if not 0 <= delta_b <= delta_p:
        raise ValueError(f"need 0 <= delta_b <= delta_p, got ({delta_b}, {delta_p})")
    if delta_b + delta_p >= 0.5:
        raise ValueError(f"delta_b + delta_p must be < 1/2, got {delta_b + delta_p}")


def secure_with_some_sequence(
    delta_b: float,
    delta_p: float,
    max_steps: int = DEFAULT_MAX_STEPS,
    margin: float = POSITIVITY_MARGIN,
) -> tuple[bool, str | None]:
    """Search every B/P sequence of length <= ``max_steps``.

    Returns ``(secure, witness)``; the witness is ``None`` when nothing works
    and ``""`` when hashing alone already succeeds.
    """
    _validate_regime(delta_b, delta_p)
    start = BellDiagonal.from_rates(delta_b, delta_p)
    if hashing_yield(start) > margin:
        return True, ""
    frontier = [("", start)]
    for _ in range(max_steps):
        nxt = []
        for seq, state in frontier:
            for token in "BP":
                out, _ = _step(state, token)
                if hashing_yield(out) > margin:
                    return True, seq + token
                nxt.append((seq + token, out))
        frontier = nxt
    return False, None


def diagonal_threshold(max_steps: int = DEFAULT_MAX_STEPS, tol: float = 1e-5) -> float:
    """Largest secure error rate along ``delta_b = delta_p``, by bisection.

    Assumes security is monotone along the diagonal; :func:`scan_region`
    gives the empirical check.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 0.25
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if secure_with_some_sequence(mid, mid, max_steps)[0]:
            lo = mid
        else:
            hi = mid
    return lo


def _max_secure_phase(delta_b: float, max_steps: int, tol: float) -> RegionPoint:
    ok, witness = secure_with_some_sequence(delta_b, delta_b, max_steps)
    if not ok:
        return RegionPoint(delta_b, float("nan"), False, None)
    lo, hi = delta_b, 0.5 - delta_b
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        good, w = secure_with_some_sequence(delta_b, mid, max_steps)
        if good:
            lo, witness = mid, w
        else:
            hi = mid
    return RegionPoint(delta_b, lo, True, witness)


def _row(args):
    return _max_secure_phase(*args)


def _point(args):
    db, dp, k = args
    ok, w = secure_with_some_sequence(db, dp, k)
    return RegionPoint(db, dp, ok, w)


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def boundary_curve(
    max_steps: int = DEFAULT_MAX_STEPS,
    delta_b_values: Iterable[float] | None = None,
    tol: float = 1e-5,
    workers: int = 1,
) -> list[RegionPoint]:
    """Upper edge of the secure region: for each bit error, the largest phase error.

    Rows whose diagonal point is already insecure come back with
    ``secure=False`` and ``delta_p = nan``.
    """
    if delta_b_values is None:
        delta_b_values = np.round(np.arange(0.0, 0.25, 1e-3), 10)
    jobs = [(float(db), max_steps, tol) for db in delta_b_values]
    return _map(_row, jobs, workers)


def scan_region(
    max_steps: int = DEFAULT_MAX_STEPS,
    step: float = 1e-3,
    workers: int = 1,
) -> list[RegionPoint]:
    """Security flag at every grid point with ``db <= dp`` and ``db + dp < 1/2``."""
    n = int(round(0.5 / step))
    jobs = []
    for i in range(n):
        db = round(i * step, 12)
        for j in range(i, n):
            dp = round(j * step, 12)
            if db + dp < 0.5 - 1e-12:
                jobs.append((db, dp, max_steps))
    return _map(_point, jobs, workers)
