import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from twoway_qkd.channel import (
    GYS,
    ChannelParams,
    distance_for_transmittance,
    link_transmittance,
    load_channel,
    overall_gain_qber,
    overall_gain_qber_series,
    photon_number_stats,
)


def test_transmittance_examples():
    assert link_transmittance(GYS, 0.0) == pytest.approx(0.045, rel=1e-15)
    assert link_transmittance(GYS, 100.0) == pytest.approx(0.045 * 10**-2.1, rel=1e-13)
    assert link_transmittance(GYS, 100.0) == pytest.approx(3.5745e-4, rel=1e-4)
    lossless = ChannelParams(alpha=0.0, eta_bob=1.0, e_d=0.0, y0=0.0)
    assert link_transmittance(lossless, 321.0) == 1.0


def test_transmittance_rejects_negative_distance():
    with pytest.raises(ValueError):
        link_transmittance(GYS, -1.0)


def test_distance_inverts_transmittance():
    for d in (0.0, 17.3, 150.0):
        assert distance_for_transmittance(GYS, link_transmittance(GYS, d)) == pytest.approx(d, abs=1e-9)


def test_single_photon_stats_at_100km():
    eta = link_transmittance(GYS, 100.0)
    s = photon_number_stats(GYS, eta, 0.48, 1)
    assert s.y_i == pytest.approx(3.5915e-4, rel=1e-4)
    assert s.e_i == pytest.approx(0.03521, rel=1e-3)
    assert s.q_i == pytest.approx(s.y_i * 0.48 * math.exp(-0.48), rel=1e-14)


def test_vacuum_and_noiseless_stats():
    eta = link_transmittance(GYS, 50.0)
    s0 = photon_number_stats(GYS, eta, 0.5, 0)
    assert (s0.eta_i, s0.y_i, s0.e_i) == (0.0, GYS.y0, 0.5)
    clean = ChannelParams(alpha=0.2, eta_bob=0.1, e_d=0.0, y0=0.0)
    assert photon_number_stats(clean, 0.01, 0.5, 1).e_i == 0.0
    with pytest.raises(ZeroDivisionError):
        photon_number_stats(clean, 0.01, 0.5, 0)


def test_overall_gain_against_high_precision():
    mp.mp.dps = 40
    eta = mp.mpf("0.045") * mp.power(10, mp.mpf("-2.1"))
    mu = mp.mpf("0.48")
    y0 = mp.mpf("1.7e-6")
    q = y0 + 1 - mp.exp(-eta * mu)
    e = (mp.mpf("0.5") * y0 + mp.mpf("0.033") * (1 - mp.exp(-eta * mu))) / q
    got = overall_gain_qber(GYS, float(eta), 0.48)
    assert got.q_mu == pytest.approx(float(q), rel=1e-12)
    assert got.e_mu == pytest.approx(float(e), rel=1e-12)
    assert got.q_mu == pytest.approx(1.7327e-4, rel=1e-4)
    assert got.e_mu == pytest.approx(0.03758, rel=1e-3)


def test_overall_limits():
    dark_only = overall_gain_qber(GYS, 0.0, 0.5)
    assert dark_only.q_mu == GYS.y0 and dark_only.e_mu == pytest.approx(0.5)
    clean = ChannelParams(alpha=0.2, eta_bob=0.1, e_d=0.02, y0=0.0)
    tiny = overall_gain_qber(clean, 1e-9, 1e-3)
    assert tiny.q_mu == pytest.approx(1e-12, rel=1e-6)
    assert tiny.e_mu == pytest.approx(0.02, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 250), st.floats(0.01, 1.0), st.booleans())
def test_series_matches_closed_form(d, mu, exact):
    ch = ChannelParams(alpha=0.21, eta_bob=0.045, e_d=0.033, y0=1.7e-6, exact_yield=exact)
    eta = float(link_transmittance(ch, d))
    a = overall_gain_qber(ch, eta, mu)
    b = overall_gain_qber_series(ch, eta, mu)
    assert b.q_mu == pytest.approx(a.q_mu, rel=1e-12)
    assert b.e_mu * b.q_mu == pytest.approx(a.e_mu * a.q_mu, rel=1e-12, abs=1e-18)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-7, 1.0), st.integers(1, 20), st.booleans())
def test_photon_stats_ranges_and_monotone_error(eta, i, exact):
    ch = ChannelParams(alpha=0.21, eta_bob=0.045, e_d=0.033, y0=1.7e-6, exact_yield=exact)
    s = photon_number_stats(ch, eta, 0.5, i)
    more = photon_number_stats(ch, min(eta * 1.5, 1.0), 0.5, i)
    # the additive approximation is only meant for y0 + eta_i <= 1
    assume(exact or more.y_i <= 1)
    assert 0 <= s.y_i <= 1 and 0 <= s.e_i <= 1
    assert more.e_i <= s.e_i + 1e-15


def test_vectorized_distance_grid():
    eta = link_transmittance(GYS, np.array([0.0, 10.0, 100.0]))
    assert eta.shape == (3,) and np.all(np.diff(eta) < 0)


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(alpha=-1, eta_bob=0.1, e_d=0.01, y0=0)
    with pytest.raises(ValueError):
        ChannelParams(alpha=0.2, eta_bob=0.0, e_d=0.01, y0=0)
    with pytest.raises(ValueError):
        ChannelParams(alpha=0.2, eta_bob=0.1, e_d=0.5, y0=0)


def test_json_round_trip(tmp_path):
    path = tmp_path / "ch.json"
    path.write_text(json.dumps(GYS.to_json_dict()))
    assert load_channel(path) == GYS
    with pytest.raises(ValueError):
        ChannelParams.from_json_dict({**GYS.to_json_dict(), "colour": "blue"})
