"""Decoy + GLLP post-processing with a run of B steps before hashing.

Each B step pairs up the sifted bits, announces parities and keeps the
first bit of every agreeing pair. An output bit is untagged only if every
input bit it descends from came from a single photon, so the untagged
fraction is squared (and reweighted) at every step. Untagged inputs are
taken as ``(1 - 2 e1, e1, 0, e1)``, the worst case, and stay of the
``q11 = 0`` form throughout.

That choice is the worst case only while ``2 e1 < 1/2``. From ``e1 = 1/4``
on, the untagged state may be separable and is given no weight at all;
otherwise the formulas would credit key to, say, ``e1 = 1/2`` bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoy import DecoyEstimates, SchemeConfig
from .entropy import h2, one_minus_h2

UNTAGGED_ERROR_LIMIT = 0.25

__all__ = ["BStepState", "bstep_init", "bstep_update", "bstep_trace", "bstep_rate"]


@dataclass(frozen=True)
class BStepState:
    """Quantities tracked through the B steps (scalars or matching arrays).

    ``r_b`` is the accumulated survival fraction, ``delta`` the overall QBER,
    ``omega`` the untagged fraction and ``delta_u``/``delta_p`` the untagged
    bit and phase error rates. ``clamped`` records a phase error that was
    capped at 1/2.
    """

    r_b: float
    delta: float
    omega: float
    delta_u: float
    delta_p: float
    clamped: bool = False


def bstep_init(est: DecoyEstimates) -> BStepState:
    q_mu = np.asarray(est.q_mu, dtype=float)
    if np.any(q_mu <= 0):
        raise ValueError("signal gain must be positive")
    e1 = np.asarray(est.e1, dtype=float)
    return BStepState(
        r_b=np.ones_like(q_mu * e1)[()],
        delta=np.asarray(est.e_mu, dtype=float)[()],
        omega=np.where(e1 < UNTAGGED_ERROR_LIMIT, np.asarray(est.q1) / q_mu, 0.0)[()],
        delta_u=e1[()],
        delta_p=e1[()],
    )


def bstep_update(s: BStepState) -> BStepState:
    p_s = s.delta**2 + (1 - s.delta) ** 2
    p_u = s.delta_u**2 + (1 - s.delta_u) ** 2
    dp = 2 * s.delta_p * (1 - s.delta_u - s.delta_p) / p_u
    over = dp > 0.5
    return BStepState(
        r_b=s.r_b * p_s / 2,
        delta=s.delta**2 / p_s,
        omega=s.omega**2 * p_u / p_s,
        delta_u=s.delta_u**2 / p_u,
        delta_p=np.minimum(dp, 0.5)[()],
        clamped=np.asarray(np.logical_or(s.clamped, over))[()],
    )


def bstep_trace(est: DecoyEstimates, n: int) -> list[BStepState]:
    """States before the first and after every B step (``n + 1`` entries)."""
    states = [bstep_init(est)]
    for _ in range(n):
        states.append(bstep_update(states[-1]))
    return states


def _residue(s: BStepState, f_ec: float):
    return s.r_b * (-f_ec * h2(s.delta) + s.omega * one_minus_h2(s.delta_p))


def bstep_rate(est: DecoyEstimates, n: int, cfg: SchemeConfig):
    """Key rate per signal pulse after ``n`` B steps, floored at 0."""
    if n < 0:
        raise ValueError("number of B steps must be >= 0")
    s = bstep_trace(est, n)[-1]
    r = cfg.q_sift * est.q_mu * _residue(s, cfg.f_ec)
    return np.maximum(0.0, r)[()]
