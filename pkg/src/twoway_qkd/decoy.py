"""Decoy-state estimates of the single-photon gain and error, and the GLLP rate.

Only single-photon ("untagged") detections carry secret key. The decoy
method pins down their gain ``Q1`` and error rate ``e1``; this module
produces those estimates either exactly from the channel model (infinitely
many decoys) or as the vacuum + weak-decoy bounds, and evaluates the
one-way GLLP key rate from them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChannelParams, link_transmittance, overall_gain_qber
from .entropy import h2, one_minus_h2

__all__ = [
    "DecoyEstimates",
    "SchemeConfig",
    "gllp_residue",
    "asymptotic_estimates",
    "practical_bounds",
    "model_practical_estimates",
    "oneway_rate",
]

MAX_BSTEPS = 8


@dataclass(frozen=True)
class DecoyEstimates:
    """Inputs shared by every post-processing scheme.

    Fields may be numpy arrays of a common shape (one entry per candidate
    intensity, distance or plan).

    Attributes:
        q_mu, e_mu: gain and QBER of the signal pulses.
        q0: vacuum contribution to the signal gain, ``Y0 * exp(-mu)``.
        q1: single-photon gain, or its lower bound.
        e1: single-photon error rate, or its upper bound.
        mode: ``"asymptotic"`` or ``"practical"``.
        clamped: set where a bound had to be clipped into its valid range.
    """

    q_mu: float
    e_mu: float
    q0: float
    q1: float
    e1: float
    mode: str = "asymptotic"
    clamped: bool = False


def _parse_scheme(scheme: str) -> tuple[str, int]:
    name = scheme.strip().lower()
    if name in ("oneway", "recurrence"):
        return name, 0
    if name.startswith("bsteps:"):
        try:
            n = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad B-step count in {scheme!r}") from None
        if not 0 <= n <= MAX_BSTEPS:
            raise ValueError(f"B-step count must be in 0..{MAX_BSTEPS}, got {n}")
        return "bsteps", n
    raise ValueError(f"unknown scheme {scheme!r}; valid: oneway, bsteps:<n>, recurrence")


@dataclass(frozen=True)
class SchemeConfig:
    """How raw estimates are turned into a key rate.

    Attributes:
        q_sift: sifting factor (1/2 for standard BB84).
        f_ec: error-correction inefficiency, applied as a constant.
        scheme: ``"oneway"``, ``"bsteps:<n>"`` or ``"recurrence"``.
        mu: fixed signal intensity; ``None`` means optimize per distance.
        mu_max: upper end of the intensity search.
        decoy: ``"asymptotic"`` (exact Y1, e1) or ``"practical"``
            (vacuum + weak decoy bounds fed with model values).
        nu: weak decoy intensity for ``decoy="practical"``.
        f_on_parity: recurrence only; charge ``f_ec`` on the parity
            announcement term as well as on error correction.
    """

    q_sift: float = 0.5
    f_ec: float = 1.22
    scheme: str = "oneway"
    mu: float | None = None
    mu_max: float = 1.0
    decoy: str = "asymptotic"
    nu: float = 0.05
    f_on_parity: bool = True
    _parsed: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.q_sift <= 1:
            raise ValueError(f"q_sift must be in (0, 1], got {self.q_sift}")
        if self.f_ec < 1:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")
        if self.mu is not None and self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.decoy not in ("asymptotic", "practical"):
            raise ValueError(f"decoy must be 'asymptotic' or 'practical', got {self.decoy!r}")
        object.__setattr__(self, "_parsed", _parse_scheme(self.scheme))

    @property
    def scheme_kind(self) -> str:
        return self._parsed[0]

    @property
    def n_bsteps(self) -> int:
        return self._parsed[1]


def gllp_residue(delta: float, groups: Sequence[tuple[float, float]], f_ec: float = 1.0) -> float:
    """Key fraction when privacy amplification runs separately per qubit class.

    ``groups`` holds ``(fraction, phase_error_rate)`` for every class that
    may yield key; error correction is paid once on the overall QBER.
    """
    if sum(w for w, _ in groups) > 1 + 1e-12:
        raise ValueError("group fractions sum to more than 1")
    r = -f_ec * float(h2(delta))
    for omega, dp in groups:
        r += omega * float(one_minus_h2(dp))
    return max(0.0, r)


def asymptotic_estimates(channel: ChannelParams, mu, distance_km) -> DecoyEstimates:
    """Exact single-photon quantities from the channel model."""
    mu = np.asarray(mu, dtype=float)
    eta = link_transmittance(channel, distance_km)
    overall = overall_gain_qber(channel, eta, mu)
    y1 = channel.y0 + eta - (channel.y0 * eta if channel.exact_yield else 0.0)
    e1 = (channel.e0 * channel.y0 + channel.e_d * eta) / y1
    e1 = np.broadcast_to(e1, np.broadcast(mu, eta).shape)
    return DecoyEstimates(
        q_mu=overall.q_mu,
        e_mu=overall.e_mu,
        q0=(channel.y0 * np.exp(-mu))[()],
        q1=(y1 * mu * np.exp(-mu))[()],
        e1=np.asarray(e1)[()],
        mode="asymptotic",
    )


def practical_bounds(q_mu, e_mu, q_nu, e_nu, y0, mu, nu, e0: float = 0.5) -> DecoyEstimates:
    """Vacuum + weak decoy lower bound on ``Q1`` and upper bound on ``e1``.

    ``q_nu``/``e_nu`` are gain and QBER of the weak decoy, ``y0`` the
    vacuum yield. A negative single-photon yield bound is clipped to 0 (and
    ``e1`` to 1/2) with ``clamped`` set.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(nu >= mu) or np.any(nu <= 0):
        raise ValueError("need 0 < nu < mu")
    y1 = (mu / (mu * nu - nu**2)) * (
        q_nu * np.exp(nu) - q_mu * np.exp(mu) * nu**2 / mu**2 - (mu**2 - nu**2) / mu**2 * y0
    )
    bad = y1 <= 0
    y1 = np.where(bad, 0.0, y1)
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = (e_nu * q_nu * np.exp(nu) - e0 * y0) / (y1 * nu)
    e1 = np.where(bad, 0.5, e1)
    out_of_range = (e1 < 0) | (e1 > 0.5)
    e1 = np.clip(e1, 0.0, 0.5)
    return DecoyEstimates(
        q_mu=np.asarray(q_mu)[()],
        e_mu=np.asarray(e_mu)[()],
        q0=(y0 * np.exp(-mu))[()],
        q1=(y1 * mu * np.exp(-mu))[()],
        e1=e1[()],
        mode="practical",
        clamped=np.asarray(bad | out_of_range)[()],
    )


def model_practical_estimates(channel: ChannelParams, mu, nu, distance_km) -> DecoyEstimates:
    """Two-decoy bounds fed with noiseless model values of ``Q_nu``, ``E_nu``, ``Y0``."""
    eta = link_transmittance(channel, distance_km)
    sig = overall_gain_qber(channel, eta, mu)
    dec = overall_gain_qber(channel, eta, nu)
    return practical_bounds(sig.q_mu, sig.e_mu, dec.q_mu, dec.e_mu, channel.y0, mu, nu, channel.e0)


def oneway_rate(est: DecoyEstimates, cfg: SchemeConfig):
    """GLLP one-way rate ``q * (-Q_mu f H2(E_mu) + Q1 (1 - H2(e1)))``, floored at 0."""
    r = -est.q_mu * cfg.f_ec * h2(est.e_mu) + est.q1 * one_minus_h2(est.e1)
    return np.maximum(0.0, cfg.q_sift * r)[()]
