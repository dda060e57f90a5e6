"""Fiber channel model for weak-coherent-pulse BB84.

A phase-randomized laser emits Poisson photon-number states; each photon
independently survives fiber loss and detector inefficiency, and a
background (dark count) rate adds uniformly random clicks. Everything here
is a closed-form function of the channel parameters, the link length and
the mean photon number.

All functions broadcast over numpy arrays of ``distance_km``, ``eta`` and
``mu`` so the optimizers can scan grids in one call.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ChannelParams",
    "PhotonStats",
    "OverallStats",
    "GYS",
    "PRESETS",
    "link_transmittance",
    "distance_for_transmittance",
    "photon_number_stats",
    "overall_gain_qber",
    "overall_gain_qber_series",
    "load_channel",
]


@dataclass(frozen=True)
class ChannelParams:
    """Channel and detector description.

    Attributes:
        alpha: fiber loss in dB/km.
        eta_bob: transmittance inside Bob's apparatus, detector efficiency
            included.
        e_d: probability that a detected photon lands in the wrong detector.
        y0: background count probability per pulse.
        e0: error rate of background counts.
        exact_yield: use ``Y_i = Y0 + eta_i - Y0*eta_i`` instead of the usual
            small-``Y0`` approximation ``Y0 + eta_i``.
    """

    alpha: float
    eta_bob: float
    e_d: float
    y0: float
    e0: float = 0.5
    exact_yield: bool = False

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 < self.eta_bob <= 1:
            raise ValueError(f"eta_bob must be in (0, 1], got {self.eta_bob}")
        if not 0 <= self.e_d < 0.5:
            raise ValueError(f"e_d must be in [0, 0.5), got {self.e_d}")
        if not 0 <= self.y0 < 1:
            raise ValueError(f"y0 must be in [0, 1), got {self.y0}")
        if not 0 <= self.e0 <= 1:
            raise ValueError(f"e0 must be in [0, 1], got {self.e0}")

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["alpha_db_per_km"] = d.pop("alpha")
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChannelParams":
        known = {"alpha_db_per_km", "eta_bob", "e_d", "y0", "e0", "exact_yield"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown channel keys: {sorted(unknown)}")
        return cls(
            alpha=float(d["alpha_db_per_km"]),
            eta_bob=float(d["eta_bob"]),
            e_d=float(d["e_d"]),
            y0=float(d["y0"]),
            e0=float(d.get("e0", 0.5)),
            exact_yield=bool(d.get("exact_yield", False)),
        )


# 1550 nm fiber link of the GYS experiment.
GYS = ChannelParams(alpha=0.21, eta_bob=0.045, e_d=0.033, y0=1.7e-6)

PRESETS = {"gys": GYS}


def load_channel(path) -> ChannelParams:
    """Read channel parameters from a JSON document.

    Expected keys: ``alpha_db_per_km``, ``eta_bob``, ``e_d``, ``y0`` and
    optionally ``e0`` and ``exact_yield``.
    """
    return ChannelParams.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class PhotonStats:
    i: int
    eta_i: float
    y_i: float
    q_i: float
    e_i: float


@dataclass(frozen=True)
class OverallStats:
    q_mu: float
    e_mu: float


def link_transmittance(params: ChannelParams, distance_km):
    """Overall single-photon transmittance ``eta_bob * 10**(-alpha*l/10)``."""
    distance_km = np.asarray(distance_km, dtype=float)
    if np.any(distance_km < 0):
        raise ValueError("distance must be non-negative")
    return (params.eta_bob * 10.0 ** (-params.alpha * distance_km / 10.0))[()]


def distance_for_transmittance(params: ChannelParams, eta: float) -> float:
    """Invert :func:`link_transmittance`; ``inf`` for a lossless fiber."""
    if not 0 < eta <= params.eta_bob:
        raise ValueError(f"eta must be in (0, eta_bob], got {eta}")
    if params.alpha == 0:
        return math.inf if eta < params.eta_bob else 0.0
    return -10.0 / params.alpha * math.log10(eta / params.eta_bob)


def _yield(params: ChannelParams, eta_i):
    if params.exact_yield:
        return params.y0 + eta_i - params.y0 * eta_i
    return params.y0 + eta_i


def photon_number_stats(params: ChannelParams, eta: float, mu: float, i: int) -> PhotonStats:
    """Transmittance, yield, gain and error rate of the ``i``-photon component."""
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if i < 0:
        raise ValueError(f"photon number must be >= 0, got {i}")
    eta_i = -math.expm1(i * math.log1p(-eta)) if eta < 1 else float(i > 0)
    y_i = _yield(params, eta_i)
    if y_i == 0:
        raise ZeroDivisionError("zero yield: error rate undefined (y0 = 0 and i = 0)")
    poisson = math.exp(i * math.log(mu) - mu - gammaln(i + 1))
    e_i = (params.e0 * params.y0 + params.e_d * eta_i) / y_i
    return PhotonStats(i=i, eta_i=eta_i, y_i=y_i, q_i=y_i * poisson, e_i=e_i)


def overall_gain_qber(params: ChannelParams, eta, mu) -> OverallStats:
    """Closed-form gain ``Q_mu`` and QBER ``E_mu`` of a Poisson source."""
    eta = np.asarray(eta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("mu must be positive")
    detected = -np.expm1(-eta * mu)
    if params.exact_yield:
        q_mu = params.y0 + (1.0 - params.y0) * detected
    else:
        q_mu = params.y0 + detected
    with np.errstate(invalid="ignore", divide="ignore"):
        e_mu = (params.e0 * params.y0 + params.e_d * detected) / q_mu
    return OverallStats(q_mu=q_mu[()], e_mu=e_mu[()])


def overall_gain_qber_series(params: ChannelParams, eta: float, mu: float, n_terms: int = 51) -> OverallStats:
    """Gain and QBER summed photon number by photon number, ``i < n_terms``.

    Used to cross-check :func:`overall_gain_qber`; the truncation error is
    below the Poisson tail mass ``P(i >= n_terms)``.
    """
    q = 0.0
    eq = 0.0
    for i in range(n_terms):
        s = photon_number_stats(params, eta, mu, i)
        q += s.q_i
        eq += s.e_i * s.q_i
    return OverallStats(q_mu=q, e_mu=eq / q)
