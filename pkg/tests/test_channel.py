"""Deterministic channel quantities: gains, LoS model, steering vectors."""

import math
from dataclasses import replace

import numpy as np
import pytest

from aerialcf.channel import (
    access_gain,
    backhaul_gain,
    compute_link_gains,
    los_probability,
    reference_gain,
    sample_access_channel,
    steering_access,
    steering_backhaul_rx,
    steering_backhaul_tx,
    terrestrial_link_gains,
)
from aerialcf.errors import DomainError, GeometryError
from aerialcf.scenario import (
    access_geometry,
    backhaul_geometry,
    load_environment,
)

from conftest import small_scenario


def test_reference_gain_values():
    # (lambda / 4 pi)^2 at 2 GHz and 120 GHz
    assert reference_gain(2.0e9) == pytest.approx(1.4251e-4, rel=1e-3)
    assert reference_gain(120.0e9) == pytest.approx(3.9585e-8, rel=1e-3)


def test_los_probability_urban():
    urban = load_environment("urban")
    # logistic model at 45 degrees elevation
    expected = 1.0 / (1.0 + 9.61 * math.exp(-0.16 * (45.0 - 9.61)))
    assert los_probability(45.0, urban) == pytest.approx(expected)
    assert expected == pytest.approx(0.9677, abs=2e-3)
    assert los_probability(90.0, urban) > 0.999
    # monotone increasing in elevation
    grid = [los_probability(t, urban) for t in range(0, 91, 5)]
    assert all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(DomainError):
        los_probability(-1.0, urban)
    with pytest.raises(DomainError):
        los_probability(91.0, urban)


def test_access_gain_composition():
    s = small_scenario()
    g = access_geometry(s, 0, 0)
    ag = access_gain(g, s.radio, s.env)
    p = ag.p_los
    eta_db = p * s.env.eta_los_db + (1.0 - p) * s.env.eta_nlos_db
    expected = 10.0 ** (-eta_db / 10.0) * reference_gain(2.0e9) * g.d_km ** -2
    assert ag.beta2_km == pytest.approx(expected, rel=1e-12)


def test_access_gain_short_distance_raises():
    s = small_scenario()
    g = access_geometry(s, 0, 0)
    bad = replace(g, d_km=0.5)
    with pytest.raises(DomainError):
        access_gain(bad, s.radio, s.env)


def test_backhaul_transmittance_nadir():
    s = small_scenario()
    g = backhaul_geometry(s, 0)
    bg = backhaul_gain(
        g, s.radio, ka_db_km=0.5, he_m=1600.0,
        haps_height=s.haps[2], uxnb_height=s.uxnbs[0, 2],
    )
    # slant effective height scales the nadir value by d / (h_H - z_d)
    ratio = g.d_m / (s.haps[2] - s.uxnbs[0, 2])
    assert bg.tau_m == pytest.approx(10.0 ** (-0.5 * 1.6 * ratio / 10.0), rel=1e-12)
    assert 0.0 < bg.tau_m <= 1.0
    # at exact nadir tau would be 10^(-0.08) ~ 0.8318; slant paths lose more
    assert bg.tau_m <= 10.0 ** (-0.08) + 1e-12
    assert bg.gamma2_m == pytest.approx(bg.rho2_m * bg.tau_m, rel=1e-14)
    with pytest.raises(GeometryError):
        backhaul_gain(g, s.radio, 0.5, 1600.0, haps_height=100.0, uxnb_height=120.0)


def test_steering_vectors():
    s = small_scenario()
    ga = access_geometry(s, 0, 0)
    gb = backhaul_geometry(s, 0)
    a = steering_access(ga, s.radio)
    tx = steering_backhaul_tx(gb, s.radio)
    rx = steering_backhaul_rx(gb, s.radio)
    assert a.shape == (s.radio.n_rx,)
    assert tx.shape == (s.radio.g_tx,)
    assert rx.shape == (s.radio.s_rx,)
    for v in (a, tx, rx):
        assert np.allclose(np.abs(v), 1.0)
    # the HAPS receive steering carries no bulk distance phase
    assert rx[0] == pytest.approx(1.0 + 0.0j)


def test_sample_access_channel_statistics(rng):
    beta2 = 2.5e-9
    steering = np.ones(4, dtype=complex)
    draws = np.array(
        [sample_access_channel(beta2, 0.5, steering, rng) for _ in range(4000)]
    )
    mean_power = np.mean(np.abs(draws) ** 2)
    assert mean_power == pytest.approx(beta2, rel=0.05)
    # pure LoS is deterministic
    h = sample_access_channel(beta2, 1.0, steering, rng)
    assert np.allclose(h, math.sqrt(beta2) * steering)


def test_compute_link_gains_consistency():
    s = small_scenario()
    gains = compute_link_gains(s)
    assert gains.beta2.shape == (s.n_users, s.n_uxnbs)
    assert gains.rho2.shape == (s.n_uxnbs,)
    k, m = 1, 2
    ag = access_gain(access_geometry(s, k, m), s.radio, s.env)
    assert gains.beta2[k, m] == pytest.approx(ag.beta2_km, rel=1e-12)
    assert gains.p_los[k, m] == pytest.approx(ag.p_los, rel=1e-12)
    bg = backhaul_gain(
        backhaul_geometry(s, m), s.radio, s.absorption_ka,
        s.effective_height_he, s.haps[2], s.uxnbs[m, 2],
    )
    assert gains.rho2[m] == pytest.approx(bg.rho2_m, rel=1e-12)
    assert gains.tau[m] == pytest.approx(bg.tau_m, rel=1e-12)
    assert gains.gamma2[m] == pytest.approx(bg.gamma2_m, rel=1e-12)


def test_p_los_override():
    s = small_scenario()
    gains = compute_link_gains(s, p_los_override=1.0)
    assert np.all(gains.p_los == 1.0)
    # overriding the probability must not change the mean gains
    base = compute_link_gains(s)
    assert np.allclose(gains.beta2, base.beta2)


def test_terrestrial_gains_exponent():
    s = small_scenario()
    tg = terrestrial_link_gains(s)
    assert np.all(tg.p_los == 0.0)
    assert np.all(tg.rho2 == 1.0) and np.all(tg.tau == 1.0)
    k, m = 0, 1
    d = access_geometry(s, k, m).d_km
    assert tg.beta2[k, m] == pytest.approx(
        reference_gain(s.radio.f_sub6) * d ** -3.7, rel=1e-12
    )
