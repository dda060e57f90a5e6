"""Recurrence post-processing: one round of parity checks learned by hashing.

Pairs of sifted bits are XORed; the parity of every pair is learned by
hashing against borrowed perfect pairs. Even-parity pairs keep both bits
(their error syndromes coincide) and odd-parity pairs keep the control bit
with a known syndrome, so both populations feed privacy amplification,
which is run separately for every syndrome class.

With a decoy-state source, each input bit is a vacuum (V), single-photon
(S) or multi-photon (M) detection. Only the five pairings containing an S
bit contribute key; their residues depend on unknown ``q11`` weights, of
which the V and M ones are fixed at their worst case and the S one, ``a``,
is eliminated by maximizing a concave penalty ``F_a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .decoy import DecoyEstimates, SchemeConfig
from .entropy import h2

__all__ = [
    "RecurrenceInputs",
    "RecurrenceBound",
    "parity_prob",
    "privacy_residue_even",
    "privacy_residue_odd",
    "privacy_residue_generic",
    "min_privacy_residue",
    "recurrence_residue_single_photon",
    "recurrence_rate_single_photon",
    "multi_error_from_qber",
    "f_a",
    "maximize_F_a",
    "case_residues",
    "case_residue_bounds",
    "recurrence_constants",
    "recurrence_residue_bound",
    "recurrence_inputs",
    "recurrence_rate",
]

_A_EPS = 1e-12
_BISECT_ITERS = 200


def _h2_ratio(num, den):
    """``H2(num/den)`` with the convention that a zero denominator gives 0."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, h2(np.where(den > 0, num / safe, 0.0)), 0.0)[()]


def parity_prob(delta_b_c, delta_b_t):
    """Probability that the two pairs show even parity."""
    return ((1 - delta_b_c) * (1 - delta_b_t) + delta_b_c * delta_b_t)


def privacy_residue_even(dbc, dbt, dpc, dpt, q11c, q11t):
    """Key fraction left in the even-parity population after privacy amplification."""
    return (
        parity_prob(dbc, dbt)
        - 0.5 * (1 - dbc) * (1 - dbt) * (_h2_ratio(dpc - q11c, 1 - dbc) + _h2_ratio(dpt - q11t, 1 - dbt))
        - 0.5 * dbc * dbt * (_h2_ratio(q11c, dbc) + _h2_ratio(q11t, dbt))
    )


def privacy_residue_odd(dbc, dbt, dpc, dpt, q11c, q11t):
    """Key fraction from odd-parity control bits whose syndrome the target revealed."""
    del dpt, q11t  # the measured target carries no key
    return 0.5 * (1 - dbc) * dbt * (1 - _h2_ratio(dpc - q11c, 1 - dbc)) + 0.5 * dbc * (1 - dbt) * (
        1 - _h2_ratio(q11c, dbc)
    )


def privacy_residue_generic(dbc, dbt, dpc, dpt, q11c, q11t):
    """Total privacy-amplification residue ``K`` of one recurrence round.

    Arguments are bit/phase error rates and ``q11`` weights of the control
    and target pairs.
    """
    return (
        1
        - 0.5 * (1 - dbc) * dbt
        - 0.5 * dbc * (1 - dbt)
        - 0.5 * (1 - dbc) * _h2_ratio(dpc - q11c, 1 - dbc)
        - 0.5 * dbc * _h2_ratio(q11c, dbc)
        - 0.5 * (1 - dbc) * (1 - dbt) * _h2_ratio(dpt - q11t, 1 - dbt)
        - 0.5 * dbc * dbt * _h2_ratio(q11t, dbt)
    )


def min_privacy_residue(dbc, dbt, dpc, dpt, grid: int = 101):
    """Worst case of :func:`privacy_residue_generic` over both ``q11`` weights.

    ``K`` is convex in ``(q11c, q11t)``; a ``grid x grid`` scan over
    ``[0, min(db, dp)]`` locates the basin and a bounded quasi-Newton
    polish finishes. Returns ``(K_min, q11c, q11t)``.
    """
    hc = min(dbc, dpc)
    ht = min(dbt, dpt)
    gc = np.linspace(0.0, hc, grid)
    gt = np.linspace(0.0, ht, grid)
    kk = privacy_residue_generic(dbc, dbt, dpc, dpt, gc[:, None], gt[None, :])
    i, j = np.unravel_index(np.argmin(kk), kk.shape)
    best = (float(kk[i, j]), float(gc[i]), float(gt[j]))
    if hc == 0 and ht == 0:
        return best
    res = minimize(
        lambda x: float(privacy_residue_generic(dbc, dbt, dpc, dpt, x[0], x[1])),
        x0=[best[1], best[2]],
        bounds=[(0.0, hc), (0.0, ht)],
        method="L-BFGS-B",
        options={"ftol": 1e-15, "gtol": 1e-12},
    )
    if res.fun < best[0]:
        best = (float(res.fun), float(res.x[0]), float(res.x[1]))
    return best


def recurrence_residue_single_photon(dbc, dbt, dpc, dpt, q11c=None, q11t=None):
    """Residue ``r`` of recurrence + hashing for ideal single-photon pairs.

    With ``q11c``/``q11t`` omitted the worst case over both is used.
    """
    p_s = parity_prob(dbc, dbt)
    if q11c is None or q11t is None:
        k = min_privacy_residue(dbc, dbt, dpc, dpt)[0]
    else:
        k = privacy_residue_generic(dbc, dbt, dpc, dpt, q11c, q11t)
    return float(-0.5 * h2(p_s) - 0.5 * p_s * _h2_ratio(dbc * dbt, p_s) + k)


def recurrence_rate_single_photon(dbc, dbt, dpc, dpt, q: float = 1.0) -> float:
    return q * max(0.0, recurrence_residue_single_photon(dbc, dbt, dpc, dpt))


def multi_error_from_qber(omega_v, omega, e1, delta):
    """Error rate of multi-photon detections implied by the overall QBER.

    Solves ``omega_v/2 + e1*omega + e_m*omega_m = delta``. Returns
    ``(e_m, clamped)``; out-of-range values are clipped into [0, 1/2].
    """
    omega_v = np.asarray(omega_v, dtype=float)
    omega = np.asarray(omega, dtype=float)
    omega_m = 1.0 - omega_v - omega
    resid = delta - omega_v / 2 - e1 * omega
    empty = omega_m <= 1e-15
    if np.any(empty & (np.abs(resid) > 1e-9)):
        raise ValueError("no multi-photon fraction left to absorb the residual QBER")
    with np.errstate(divide="ignore", invalid="ignore"):
        e_m = np.where(empty, 0.0, resid / np.where(empty, 1.0, omega_m))
    clamped = (e_m < 0) | (e_m > 0.5)
    return np.clip(e_m, 0.0, 0.5)[()], np.asarray(clamped)[()]


def f_a(a, e1, d1, d2):
    """Penalty ``D1 (1-e1) H2((e1-a)/(1-e1)) + D2 e1 H2(a/e1)``."""
    return d1 * (1 - e1) * _h2_ratio(e1 - a, 1 - e1) + d2 * e1 * _h2_ratio(a, e1)


def _stationarity(a, e1, d1, d2):
    # dF/da up to the factor 1/ln 2; strictly decreasing in a
    x = (e1 - a) / (1 - e1)
    return d1 * (np.log(x) - np.log1p(-x)) + d2 * (np.log1p(-a / e1) - np.log(a / e1))


def maximize_F_a(e1, d1, d2):
    """Maximize :func:`f_a` over ``a`` in ``[0, e1]`` by bisection on dF/da = 0.

    Returns ``(a_star, f_star)``; ``e1 = 0`` gives ``(0, 0)``. If the
    derivative does not change sign inside ``[1e-12, e1 - 1e-12]`` the
    maximizer is the endpoint ``0`` or ``e1``.
    """
    e1, d1, d2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (e1, d1, d2)))
    live = e1 > 2 * _A_EPS
    e1s = np.where(live, e1, 0.5)
    lo = np.full(e1.shape, _A_EPS)
    hi = e1s - _A_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        g_lo = _stationarity(lo, e1s, d1, d2)
        g_hi = _stationarity(hi, e1s, d1, d2)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            up = _stationarity(mid, e1s, d1, d2) > 0
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
            if np.all(hi - lo <= 4e-16 * np.maximum(hi, 1e-300)):
                break
    a = 0.5 * (lo + hi)
    a = np.where(g_lo <= 0, 0.0, a)
    a = np.where(g_hi >= 0, e1s, a)
    a = np.where(live, a, 0.0)
    f = np.where(live, f_a(a, e1s, d1, d2), 0.0)
    return a[()], f[()]


def case_residues(e1, e_m, a, q11_v, q11_m):
    """Exact residues of the five key-bearing pairings (control first).

    V bits have error rates (1/2, 1/2), S bits (e1, e1) with ``q11 = a``,
    M bits (e_m, 1/2).
    """
    hs_c = _h2_ratio(e1 - a, 1 - e1)
    hs_b = _h2_ratio(a, e1)
    hv = h2(1 - 2 * q11_v)
    hv2 = h2(2 * q11_v)
    hm_c = _h2_ratio(1 - 2 * q11_m, 2 - 2 * e_m)
    hm_b = _h2_ratio(q11_m, e_m)
    return {
        "VS": 0.75 - 0.25 * hv - 0.25 * hv2 - 0.25 * (1 - e1) * hs_c - 0.25 * e1 * hs_b,
        "SV": 0.75 - 0.5 * (1 - e1) * hs_c - 0.5 * e1 * hs_b - 0.25 * (1 - e1) * hv - 0.25 * e1 * hv2,
        "SS": 1
        - e1 * (1 - e1)
        - 0.5 * (1 - e1) * hs_c
        - 0.5 * e1 * hs_b
        - 0.5 * (1 - e1) ** 2 * hs_c
        - 0.5 * e1**2 * hs_b,
        "SM": 1
        - 0.5 * e1 * (1 - e_m)
        - 0.5 * e_m * (1 - e1)
        - 0.5 * (1 - e1) * hs_c
        - 0.5 * e1 * hs_b
        - 0.5 * (1 - e1) * (1 - e_m) * hm_c
        - 0.5 * e1 * e_m * hm_b,
        "MS": 1
        - 0.5 * e_m * (1 - e1)
        - 0.5 * e1 * (1 - e_m)
        - 0.5 * (1 - e_m) * hm_c
        - 0.5 * e_m * hm_b
        - 0.5 * (1 - e1) * (1 - e_m) * hs_c
        - 0.5 * e1 * e_m * hs_b,
    }


def case_residue_bounds(e1, e_m, a):
    """Lower bounds of :func:`case_residues`, attained at ``q11_v = 1/4``, ``q11_m = e_m/2``."""
    hs_c = _h2_ratio(e1 - a, 1 - e1)
    hs_b = _h2_ratio(a, e1)
    return {
        "VS": 0.25 - 0.25 * (1 - e1) * hs_c - 0.25 * e1 * hs_b,
        "SV": 0.5 - 0.5 * (1 - e1) * hs_c - 0.5 * e1 * hs_b,
        "SS": 1
        - e1 * (1 - e1)
        - 0.5 * (1 - e1) * hs_c
        - 0.5 * e1 * hs_b
        - 0.5 * (1 - e1) ** 2 * hs_c
        - 0.5 * e1**2 * hs_b,
        "SM": 0.5 - 0.5 * (1 - e1) * hs_c - 0.5 * e1 * hs_b,
        "MS": 0.5
        - 0.5 * e_m * (1 - e1)
        - 0.5 * e1 * (1 - e_m)
        - 0.5 * (1 - e1) * (1 - e_m) * hs_c
        - 0.5 * e1 * e_m * hs_b,
    }


@dataclass(frozen=True)
class RecurrenceInputs:
    """Mixture of vacuum, single- and multi-photon bits entering the recurrence.

    Fields may be arrays. ``clamped`` marks entries whose ``e_m`` was
    clipped, for which the QBER identity no longer holds exactly.
    """

    omega_v: float
    omega: float
    omega_m: float
    e1: float
    e_m: float
    delta: float
    clamped: bool = False

    def __post_init__(self):
        total = np.asarray(self.omega_v) + np.asarray(self.omega) + np.asarray(self.omega_m)
        if not np.allclose(total, 1.0, rtol=0, atol=1e-12):
            raise ValueError("vacuum, single and multi fractions must sum to 1")
        resid = np.abs(self.qber_residual)
        if np.any((resid > 1e-9) & ~np.asarray(self.clamped, dtype=bool)):
            raise ValueError("fractions and error rates do not reproduce the overall QBER")

    @property
    def qber_residual(self):
        return self.omega_v / 2 + self.e1 * self.omega + self.e_m * self.omega_m - self.delta


@dataclass(frozen=True)
class RecurrenceBound:
    """Constants of the worst-case residue ``r >= -B + C - max_a F_a``."""

    b: float
    c: float
    d1: float
    d2: float
    a_star: float
    f_star: float

    @property
    def residue(self):
        return -self.b + self.c - self.f_star


def recurrence_inputs(est: DecoyEstimates) -> RecurrenceInputs:
    """Fractions ``Q0/Q_mu``, ``Q1/Q_mu`` and the implied multi-photon error."""
    q_mu = np.asarray(est.q_mu, dtype=float)
    omega_v = np.asarray(est.q0) / q_mu
    omega = np.asarray(est.q1) / q_mu
    e_m, clamped = multi_error_from_qber(omega_v, omega, est.e1, est.e_mu)
    return RecurrenceInputs(
        omega_v=omega_v[()],
        omega=omega[()],
        omega_m=(1.0 - omega_v - omega)[()],
        e1=np.asarray(est.e1)[()],
        e_m=e_m,
        delta=np.asarray(est.e_mu)[()],
        clamped=clamped,
    )


def recurrence_constants(inp: RecurrenceInputs, f_ec: float = 1.0, f_on_parity: bool = True) -> RecurrenceBound:
    wv, w, wm, e1, em, d = inp.omega_v, inp.omega, inp.omega_m, inp.e1, inp.e_m, inp.delta
    p_s = d**2 + (1 - d) ** 2
    f_par = f_ec if f_on_parity else 1.0
    b = 0.5 * f_par * h2(p_s) + 0.5 * p_s * f_ec * _h2_ratio(d**2, p_s)
    c = 0.75 * wv * w + w**2 * (1 - e1 + e1**2) + 0.5 * w * wm * (2 - e1 - em + 2 * e1 * em)
    d1 = 0.75 * wv * w + 0.5 * w**2 * (2 - e1) + 0.5 * w * wm * (2 - em)
    d2 = 0.75 * wv * w + 0.5 * w**2 * (1 + e1) + 0.5 * w * wm * (em + 1)
    a_star, f_star = maximize_F_a(e1, d1, d2)
    return RecurrenceBound(
        b=np.asarray(b)[()],
        c=np.asarray(c)[()],
        d1=np.asarray(d1)[()],
        d2=np.asarray(d2)[()],
        a_star=a_star,
        f_star=f_star,
    )


def recurrence_residue_bound(inp: RecurrenceInputs, f_ec: float = 1.0, f_on_parity: bool = True):
    """Worst-case residue of the decoy recurrence scheme (not floored)."""
    return recurrence_constants(inp, f_ec, f_on_parity).residue


def recurrence_rate(est: DecoyEstimates, cfg: SchemeConfig):
    """Key rate per signal pulse, ``q * Q_mu * max(0, r)``."""
    r = recurrence_residue_bound(recurrence_inputs(est), cfg.f_ec, cfg.f_on_parity)
    return (cfg.q_sift * np.asarray(est.q_mu) * np.maximum(0.0, r))[()]
