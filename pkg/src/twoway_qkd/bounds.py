"""Protocol-independent limits: maximal distance and single-photon key rate.

Both assume Alice and Bob could tell single-photon detections apart from
everything else. Intercept-resend breaks BB84 once the single-photon error
rate reaches 25%, which caps the distance; the mutual information of the
single-photon detections caps the rate.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import ChannelParams, distance_for_transmittance, link_transmittance
from .entropy import one_minus_h2

INTERCEPT_RESEND_QBER = 0.25


def critical_transmittance(channel: ChannelParams, e_max: float = INTERCEPT_RESEND_QBER) -> float:
    """Transmittance at which the single-photon error rate reaches ``e_max``."""
    if channel.e_d >= e_max:
        raise ValueError(f"e_d={channel.e_d} already reaches the error ceiling {e_max}")
    return (channel.e0 - e_max) * channel.y0 / (e_max - channel.e_d)


def distance_upper_bound(channel: ChannelParams, e_max: float = INTERCEPT_RESEND_QBER) -> float:
    """Fiber length beyond which ``e1 > e_max``; ``inf`` without background counts."""
    eta = critical_transmittance(channel, e_max)
    if eta <= 0:
        return math.inf
    if eta >= channel.eta_bob:
        return 0.0
    return distance_for_transmittance(channel, eta)


def rate_upper_bound(channel: ChannelParams, distance_km, mu=1.0):
    """Single-photon mutual information ``Q1 (1 - H2(e1))`` per pulse.

    ``mu = 1`` maximizes the single-photon emission probability and hence
    the bound.
    """
    eta = link_transmittance(channel, distance_km)
    y1 = channel.y0 + eta - (channel.y0 * eta if channel.exact_yield else 0.0)
    e1 = (channel.e0 * channel.y0 + channel.e_d * eta) / y1
    q1 = y1 * mu * np.exp(-mu)
    return (q1 * one_minus_h2(np.minimum(e1, 0.5)))[()]
