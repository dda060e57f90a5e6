"""Finite-size key rates: decoy estimates from a finite number of pulses.

The weak-decoy gain, its error count and the vacuum yield are each known
only to within ``n_sigma`` standard deviations of Poisson counting noise,
``X * (1 +/- n_sigma / sqrt(N * X))`` for ``N`` pulses of that kind. The
single-photon bounds are recomputed with whichever end of every interval
hurts the key rate. The signal gain and QBER come from the large signal set
and are used as measured.

Plans (pulse allocation and intensities) are found by exhaustive grid
search; the whole grid is evaluated as one vectorized batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ChannelParams, link_transmittance, overall_gain_qber
from .decoy import DecoyEstimates, SchemeConfig, practical_bounds
from .optimize import max_secure_distance, scheme_rate

__all__ = [
    "ExperimentPlan",
    "FluctuatedStats",
    "PlanOptimum",
    "fluctuation_bounds",
    "finite_estimates",
    "finite_rate",
    "plan_grid",
    "optimize_plan",
    "finite_max_distance",
]

DEFAULT_N_TOTAL = 6e9
DEFAULT_N_SIGMA = 10.0


@dataclass(frozen=True)
class ExperimentPlan:
    """How ``n_total`` pulses are split and which intensities they carry."""

    frac_signal: float
    frac_vacuum: float
    frac_weak: float
    mu: float
    nu: float
    n_total: float = DEFAULT_N_TOTAL
    n_sigma: float = DEFAULT_N_SIGMA

    def __post_init__(self):
        fracs = (self.frac_signal, self.frac_vacuum, self.frac_weak)
        if min(fracs) <= 0 or abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"pulse fractions must be positive and sum to 1, got {fracs}")
        if not 0 < self.nu < self.mu:
            raise ValueError(f"need 0 < nu < mu, got nu={self.nu}, mu={self.mu}")
        if self.n_sigma < 0:
            raise ValueError("n_sigma must be non-negative")
        if self.n_total <= 0:
            raise ValueError("n_total must be positive")


@dataclass(frozen=True)
class FluctuatedStats:
    q_nu_lo: float
    q_nu_hi: float
    e_nu_hi: float
    y0_lo: float
    y0_hi: float
    degenerate: bool = False


class PlanOptimum(NamedTuple):
    plan: ExperimentPlan | None
    rate: float
    flagged: bool


def _interval(x, n_pulses, n_sigma):
    x = np.asarray(x, dtype=float)
    events = n_pulses * x
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = n_sigma / np.sqrt(events)
    degenerate = events < 1
    lo = np.where(degenerate, 0.0, np.maximum(0.0, x * (1 - rel)))
    hi = np.where(degenerate, 1.0, np.minimum(1.0, x * (1 + rel)))
    if np.ndim(n_sigma) == 0 and n_sigma == 0:
        lo = np.where(degenerate, lo, x)
        hi = np.where(degenerate, hi, x)
    return lo, hi, degenerate


def _bounds(q_nu, e_nu, y0, n_weak, n_vacuum, n_sigma):
    q_lo, q_hi, deg_q = _interval(q_nu, n_weak, n_sigma)
    _, eq_hi, deg_e = _interval(np.asarray(q_nu) * e_nu, n_weak, n_sigma)
    y_lo, y_hi, deg_y = _interval(y0, n_vacuum, n_sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        e_hi = np.where(q_nu > 0, eq_hi / q_nu, 0.5)
    return q_lo, q_hi, e_hi, y_lo, y_hi, deg_q | deg_e | deg_y


def fluctuation_bounds(q_nu: float, e_nu: float, y0: float, plan: ExperimentPlan) -> FluctuatedStats:
    """Worst-case ``Q_nu``, ``E_nu`` and ``Y0`` at ``plan.n_sigma`` deviations.

    ``E_nu`` is bounded through its error-event count ``N_nu Q_nu E_nu``.
    Fewer than one expected event makes the interval ``[0, 1]`` and sets
    ``degenerate``.
    """
    n_weak = plan.n_total * plan.frac_weak
    n_vac = plan.n_total * plan.frac_vacuum
    q_lo, q_hi, e_hi, y_lo, y_hi, deg = _bounds(q_nu, e_nu, y0, n_weak, n_vac, plan.n_sigma)
    return FluctuatedStats(float(q_lo), float(q_hi), float(e_hi), float(y_lo), float(y_hi), bool(deg))


def finite_estimates(channel: ChannelParams, distance_km, frac_vacuum, frac_weak, mu, nu, n_total, n_sigma):
    """Single-photon bounds from fluctuating decoy data (broadcasts over plan fields).

    ``Q1`` uses whichever ``Y0`` bound makes it smaller; ``e1`` pairs the
    smallest ``Y1`` with the lower ``Y0`` bound; the vacuum share ``Q0`` uses
    the lower ``Y0`` bound.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    eta = link_transmittance(channel, distance_km)
    sig = overall_gain_qber(channel, eta, mu)
    dec = overall_gain_qber(channel, eta, nu)
    q_lo, _, e_hi, y_lo, y_hi, deg = _bounds(
        dec.q_mu, dec.e_mu, channel.y0, n_total * np.asarray(frac_weak), n_total * np.asarray(frac_vacuum), n_sigma
    )
    # e1 only depends on (Q_nu_lo, E_nu_hi * Q_nu, Y0) through the common formula
    eq_hi = e_hi * dec.q_mu
    e_eff = np.where(q_lo > 0, eq_hi / np.where(q_lo > 0, q_lo, 1.0), 0.5)
    by_lo = practical_bounds(sig.q_mu, sig.e_mu, q_lo, e_eff, y_lo, mu, nu, channel.e0)
    by_hi = practical_bounds(sig.q_mu, sig.e_mu, q_lo, e_eff, y_hi, mu, nu, channel.e0)
    q1 = np.minimum(by_lo.q1, by_hi.q1)
    y1 = q1 / (mu * np.exp(-mu))
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = (eq_hi * np.exp(nu) - channel.e0 * y_lo) / (y1 * nu)
    bad = ~(y1 > 0)
    e1 = np.clip(np.where(bad, 0.5, e1), 0.0, 0.5)
    return DecoyEstimates(
        q_mu=sig.q_mu,
        e_mu=sig.e_mu,
        q0=(y_lo * np.exp(-mu))[()],
        q1=np.asarray(q1)[()],
        e1=np.asarray(e1)[()],
        mode="practical",
        clamped=np.asarray(bad | deg | by_lo.clamped | by_hi.clamped)[()],
    )


def _finite_rate_arrays(channel, cfg, distance_km, fs, fv, fw, mu, nu, n_total, n_sigma):
    est = finite_estimates(channel, distance_km, fv, fw, mu, nu, n_total, n_sigma)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = scheme_rate(est, cfg)
    return np.nan_to_num(np.asarray(fs) * np.asarray(r, dtype=float), nan=0.0)


def finite_rate(channel: ChannelParams, plan: ExperimentPlan, cfg: SchemeConfig, distance_km: float) -> float:
    """Key rate per pulse sent (signal fraction included) under finite statistics."""
    r = _finite_rate_arrays(
        channel,
        cfg,
        distance_km,
        plan.frac_signal,
        plan.frac_vacuum,
        plan.frac_weak,
        plan.mu,
        plan.nu,
        plan.n_total,
        plan.n_sigma,
    )
    return float(r)


@dataclass(frozen=True)
class _Grid:
    fs: np.ndarray
    fv: np.ndarray
    fw: np.ndarray
    mu: np.ndarray
    nu: np.ndarray


def plan_grid(frac_step: float = 0.05, mu_step: float = 0.02, nu_step: float = 0.01, mu_max: float = 1.0) -> _Grid:
    """All candidate plans, ordered so that larger signal fractions come first."""
    k = int(round(1.0 / frac_step))
    mus = np.round(mu_step * np.arange(1, int(round(mu_max / mu_step)) + 1), 12)
    rows = []
    for i in range(k - 2, 0, -1):  # signal share, descending
        for j in range(1, k - i):  # vacuum share
            l = k - i - j
            for mu in mus:
                n_nu = int(math.ceil(mu / nu_step - 1e-9)) - 1
                for m in range(1, n_nu + 1):
                    rows.append((i / k, j / k, l / k, mu, round(m * nu_step, 12)))
    arr = np.array(rows, dtype=float)
    return _Grid(*(arr[:, c].copy() for c in range(5)))


_DEFAULT_GRID: _Grid | None = None


def _default_grid() -> _Grid:
    global _DEFAULT_GRID
    if _DEFAULT_GRID is None:
        _DEFAULT_GRID = plan_grid()
    return _DEFAULT_GRID


def optimize_plan(
    channel: ChannelParams,
    cfg: SchemeConfig,
    distance_km: float,
    n_total: float = DEFAULT_N_TOTAL,
    n_sigma: float = DEFAULT_N_SIGMA,
    grid: _Grid | None = None,
) -> PlanOptimum:
    """Exhaustive search for the plan with the highest finite-size rate.

    Ties go to the larger signal fraction (the grid's ordering). If no plan
    gives a positive rate the result is ``(None, 0.0, True)``.
    """
    if distance_km < 0:
        raise ValueError("distance must be non-negative")
    g = grid or _default_grid()
    r = _finite_rate_arrays(channel, cfg, distance_km, g.fs, g.fv, g.fw, g.mu, g.nu, n_total, n_sigma)
    i = int(np.argmax(r))
    if r[i] <= 0:
        return PlanOptimum(None, 0.0, True)
    plan = ExperimentPlan(
        frac_signal=float(g.fs[i]),
        frac_vacuum=float(g.fv[i]),
        frac_weak=float(g.fw[i]),
        mu=float(g.mu[i]),
        nu=float(g.nu[i]),
        n_total=n_total,
        n_sigma=n_sigma,
    )
    return PlanOptimum(plan, float(r[i]), False)


def finite_max_distance(
    channel: ChannelParams,
    cfg: SchemeConfig,
    n_total: float = DEFAULT_N_TOTAL,
    n_sigma: float = DEFAULT_N_SIGMA,
    tol_km: float = 0.1,
    grid: _Grid | None = None,
) -> float:
    """Largest distance with a positive optimized finite-size rate.

    Bisection between 0 and the asymptotic maximum, which bounds the finite
    one from above.
    """
    if optimize_plan(channel, cfg, 0.0, n_total, n_sigma, grid).flagged:
        return 0.0
    asym = SchemeConfig(q_sift=cfg.q_sift, f_ec=cfg.f_ec, scheme=cfg.scheme, f_on_parity=cfg.f_on_parity)
    lo, hi = 0.0, max_secure_distance(channel, asym, tol_km=1.0).distance_km + 1.0
    if not optimize_plan(channel, cfg, hi, n_total, n_sigma, grid).flagged:
        return hi
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if optimize_plan(channel, cfg, mid, n_total, n_sigma, grid).flagged:
            hi = mid
        else:
            lo = mid
    return lo
