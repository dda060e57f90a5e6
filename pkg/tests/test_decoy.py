import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoway_qkd.bounds import distance_upper_bound
from twoway_qkd.channel import GYS, ChannelParams
from twoway_qkd.decoy import (
    DecoyEstimates,
    SchemeConfig,
    asymptotic_estimates,
    gllp_residue,
    model_practical_estimates,
    oneway_rate,
    practical_bounds,
)


def test_scheme_names():
    assert SchemeConfig(scheme="bsteps:3").n_bsteps == 3
    assert SchemeConfig(scheme="recurrence").scheme_kind == "recurrence"
    for bad in ("twoway", "bsteps:x", "bsteps:9"):
        with pytest.raises(ValueError):
            SchemeConfig(scheme=bad)
    with pytest.raises(ValueError):
        SchemeConfig(f_ec=0.9)
    with pytest.raises(ValueError):
        SchemeConfig(q_sift=0.0)


def test_gllp_residue_examples():
    assert gllp_residue(0.0, [(1.0, 0.0)], 1.0) == 1.0
    mp.mp.dps = 30
    h = -mp.mpf("0.05") * mp.log(mp.mpf("0.05"), 2) - mp.mpf("0.95") * mp.log(mp.mpf("0.95"), 2)
    want = mp.mpf("0.9") * (1 - h) - mp.mpf("1.22") * h
    assert gllp_residue(0.05, [(0.9, 0.05)], 1.22) == pytest.approx(float(want), abs=1e-14)
    assert gllp_residue(0.05, [(0.9, 0.05)], 1.22) == pytest.approx(0.292838, abs=1e-6)
    assert gllp_residue(0.3, [(0.5, 0.3)], 1.22) == 0.0


def test_asymptotic_estimates_at_100km():
    est = asymptotic_estimates(GYS, 0.48, 100.0)
    assert est.e1 == pytest.approx(0.03521, rel=1e-3)
    assert est.q_mu == pytest.approx(1.7327e-4, rel=1e-4)
    assert est.q1 <= est.q_mu and est.q0 >= 0


def test_asymptotic_noiseless_channel():
    clean = ChannelParams(alpha=0.2, eta_bob=0.1, e_d=0.0, y0=0.0)
    est = asymptotic_estimates(clean, 0.5, 10.0)
    assert est.e1 == 0 and est.e_mu == 0


def test_error_at_distance_bound_is_quarter():
    est = asymptotic_estimates(GYS, 0.5, distance_upper_bound(GYS))
    assert est.e1 == pytest.approx(0.25, abs=1e-12)


def test_practical_bounds_example():
    nu, mu = 0.1, 0.5
    est = practical_bounds(
        q_mu=0.01 * math.exp(-mu), e_mu=0.03, q_nu=0.002 * math.exp(-nu), e_nu=0.05, y0=1e-5, mu=mu, nu=nu
    )
    y1 = est.q1 / (mu * math.exp(-mu))
    assert y1 == pytest.approx(0.01988, abs=1e-5)
    assert est.q1 == pytest.approx(6.029e-3, abs=1e-6)
    assert est.e1 == pytest.approx(0.04779, abs=1e-5)
    assert not est.clamped


def test_practical_bounds_domain_and_clamps():
    with pytest.raises(ValueError):
        practical_bounds(1e-3, 0.03, 1e-3, 0.03, 1e-6, mu=0.1, nu=0.2)
    zero_err = practical_bounds(1e-3, 0.0, 2e-4, 0.0, 0.0, mu=0.5, nu=0.1, e0=0.5)
    assert zero_err.e1 == 0
    bad = practical_bounds(1e-1, 0.03, 1e-6, 0.03, 1e-6, mu=0.5, nu=0.1)
    assert bad.q1 == 0 and bad.e1 == 0.5 and bad.clamped


@settings(max_examples=80, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.01, 0.95), st.floats(0.0, 200.0))
def test_practical_bounds_are_conservative(mu, nu_frac, d):
    nu = mu * nu_frac
    exact = asymptotic_estimates(GYS, mu, d)
    bound = model_practical_estimates(GYS, mu, nu, d)
    assert bound.q1 <= exact.q1 * (1 + 1e-9)
    assert bound.e1 >= exact.e1 * (1 - 1e-9) or bound.e1 == 0.5


def test_practical_approaches_asymptotic_for_small_decoy():
    for d in (0.0, 50.0, 100.0):
        exact = asymptotic_estimates(GYS, 0.5, d)
        bound = model_practical_estimates(GYS, 0.5, 1e-4, d)
        assert bound.q1 == pytest.approx(exact.q1, rel=1e-2)
        assert bound.e1 == pytest.approx(exact.e1, rel=1e-2)


def test_oneway_rate_examples():
    perfect = DecoyEstimates(q_mu=1e-3, e_mu=0.0, q0=0.0, q1=1e-3, e1=0.0)
    assert oneway_rate(perfect, SchemeConfig()) == pytest.approx(0.5e-3, rel=1e-15)
    est = asymptotic_estimates(GYS, np.linspace(0.01, 1, 100), 150.0)
    assert np.all(oneway_rate(est, SchemeConfig()) == 0)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(0.1, 1.0), st.floats(0.0, 0.5))
def test_oneway_rate_monotone_in_single_photon_quality(e1a, e1b, q1_frac, e_mu):
    lo, hi = sorted((e1a, e1b))
    cfg = SchemeConfig()
    base = dict(q_mu=1e-3, e_mu=e_mu, q0=1e-6)
    good = oneway_rate(DecoyEstimates(**base, q1=1e-3 * q1_frac, e1=lo), cfg)
    worse_e = oneway_rate(DecoyEstimates(**base, q1=1e-3 * q1_frac, e1=hi), cfg)
    worse_q = oneway_rate(DecoyEstimates(**base, q1=1e-3 * q1_frac * 0.9, e1=lo), cfg)
    assert worse_e <= good and worse_q <= good
