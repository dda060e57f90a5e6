"""Scheme dispatch, intensity optimization and maximal-distance search."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .bstep import bstep_rate
from .channel import ChannelParams
from .decoy import DecoyEstimates, SchemeConfig, asymptotic_estimates, model_practical_estimates, oneway_rate
from .recurrence import recurrence_rate

__all__ = [
    "MuOptimum",
    "MaxDistance",
    "scheme_rate",
    "estimates_for",
    "rate_at",
    "optimize_mu",
    "max_secure_distance",
    "rate_curve",
]

MU_GRID_STEP = 0.01
MU_XTOL = 1e-4


class MuOptimum(NamedTuple):
    mu_star: float
    rate_star: float


class MaxDistance(NamedTuple):
    distance_km: float
    mu_star: float
    insecure_at_origin: bool


def scheme_rate(est: DecoyEstimates, cfg: SchemeConfig):
    """Key rate per signal pulse for whichever scheme ``cfg`` selects."""
    kind = cfg.scheme_kind
    if kind == "oneway":
        return oneway_rate(est, cfg)
    if kind == "bsteps":
        return bstep_rate(est, cfg.n_bsteps, cfg)
    return recurrence_rate(est, cfg)


def estimates_for(channel: ChannelParams, cfg: SchemeConfig, mu, distance_km) -> DecoyEstimates:
    if cfg.decoy == "asymptotic":
        return asymptotic_estimates(channel, mu, distance_km)
    mu = np.asarray(mu, dtype=float)
    # intensities at or below the weak decoy are given zero rate by rate_at
    safe_mu = np.where(mu > cfg.nu, mu, 2 * cfg.nu)
    return model_practical_estimates(channel, safe_mu, cfg.nu, distance_km)


def rate_at(channel: ChannelParams, cfg: SchemeConfig, mu, distance_km):
    """Rate at the given intensity (scalar or array) and distance."""
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = scheme_rate(estimates_for(channel, cfg, mu, distance_km), cfg)
    r = np.nan_to_num(np.asarray(r, dtype=float), nan=0.0)
    if cfg.decoy == "practical":
        r = np.where(mu > cfg.nu, r, 0.0)
    return r[()]


def optimize_mu(channel: ChannelParams, cfg: SchemeConfig, distance_km: float) -> MuOptimum:
    """Best signal intensity in ``(0, mu_max]``.

    A 0.01 grid finds the best cell; a bounded Brent search on the two
    neighbouring cells refines it to 1e-4. The result never falls below the
    grid optimum. When no intensity gives a positive rate the answer is
    ``(nan, 0.0)``.
    """
    if distance_km < 0:
        raise ValueError("distance must be non-negative")
    if cfg.mu is not None:
        return MuOptimum(cfg.mu, float(rate_at(channel, cfg, cfg.mu, distance_km)))
    n = int(round(cfg.mu_max / MU_GRID_STEP))
    grid = np.round(MU_GRID_STEP * np.arange(1, n + 1), 12)
    rates = np.asarray(rate_at(channel, cfg, grid, distance_km))
    i = int(np.argmax(rates))
    if rates[i] <= 0:
        return MuOptimum(math.nan, 0.0)
    lo = grid[i - 1] if i > 0 else grid[0] / 2
    hi = grid[i + 1] if i + 1 < n else grid[i]
    res = minimize_scalar(
        lambda m: -float(rate_at(channel, cfg, m, distance_km)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": MU_XTOL},
    )
    if -res.fun > rates[i]:
        return MuOptimum(float(res.x), float(-res.fun))
    return MuOptimum(float(grid[i]), float(rates[i]))


def max_secure_distance(
    channel: ChannelParams,
    cfg: SchemeConfig,
    tol_km: float = 0.1,
    scan_step_km: float = 1.0,
    limit_km: float = 1000.0,
) -> MaxDistance:
    """Largest distance with a positive optimized rate.

    Walks forward in ``scan_step_km`` steps until the rate vanishes, then
    bisects the last step down to ``tol_km``.
    """
    best0 = optimize_mu(channel, cfg, 0.0)
    if best0.rate_star <= 0:
        return MaxDistance(0.0, math.nan, True)
    lo, mu_lo = 0.0, best0.mu_star
    d = scan_step_km
    while d <= limit_km:
        opt = optimize_mu(channel, cfg, d)
        if opt.rate_star <= 0:
            break
        lo, mu_lo = d, opt.mu_star
        d += scan_step_km
    else:
        return MaxDistance(math.inf, mu_lo, False)
    hi = d
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        opt = optimize_mu(channel, cfg, mid)
        if opt.rate_star > 0:
            lo, mu_lo = mid, opt.mu_star
        else:
            hi = mid
    return MaxDistance(lo, mu_lo, False)


def _curve_point(args):
    channel, cfg, d = args
    return optimize_mu(channel, cfg, d)


def rate_curve(
    channel: ChannelParams,
    cfg: SchemeConfig,
    distances: Sequence[float],
    workers: int = 1,
) -> list[MuOptimum]:
    """Optimized ``(mu_star, rate)`` at every distance, in input order."""
    jobs = [(channel, cfg, float(d)) for d in distances]
    if workers <= 1:
        return [_curve_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_curve_point, jobs))
