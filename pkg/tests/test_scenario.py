"""Geometry, configuration, and serialization invariants."""

import math

import numpy as np
import pytest

from aerialcf.errors import ValidationError
from aerialcf.scenario import (
    NetworkScenario,
    RadioParams,
    ScenarioConfig,
    access_geometry,
    backhaul_geometry,
    build_scenario,
    load_environment,
    noise_power_w,
    uxnb_grid,
)

from conftest import small_config, small_scenario


def test_noise_power_defaults():
    # -174 dBm/Hz over 1 MHz -> 10**(-174/10) * 1e6 mW = 3.98e-15 W
    assert noise_power_w(-174.0, 1.0e6) == pytest.approx(3.9811e-15, rel=1e-4)


def test_radio_derived_sizes():
    r = RadioParams()
    assert r.n_rx == 4
    assert r.g_tx == 9
    assert r.s_rx == 400
    assert r.lambda_sub6 == pytest.approx(3.0e8 / 2.0e9)
    assert r.lambda_thz == pytest.approx(3.0e8 / 120.0e9)
    assert r.sigma2_uxnb == pytest.approx(noise_power_w(-174.0, 1.0e6))
    assert r.sigma2_haps == pytest.approx(noise_power_w(-174.0, 1.0e6))


def test_environment_table():
    urban = load_environment("urban")
    assert (urban.a, urban.b) == (9.61, 0.16)
    assert (urban.eta_los_db, urban.eta_nlos_db) == (1.0, 20.0)
    sub = load_environment("suburban")
    assert (sub.a, sub.b) == (4.88, 0.43)
    dense = load_environment("dense_urban")
    assert (dense.a, dense.b) == (12.8, 0.11)
    with pytest.raises(ValidationError):
        load_environment("atlantis")


def test_uxnb_grid_layout():
    area = (0.0, 1000.0, 0.0, 1000.0)
    grid = uxnb_grid(16, area, 120.0)
    assert grid.shape == (16, 3)
    assert np.all(grid[:, 2] == 120.0)
    assert np.all(grid[:, 0] >= 0.0) and np.all(grid[:, 0] <= 1000.0)
    assert np.all(grid[:, 1] >= 0.0) and np.all(grid[:, 1] <= 1000.0)
    # 4 x 4 regular grid: 4 distinct x and y coordinates
    assert len(set(np.round(grid[:, 0], 9))) == 4
    assert len(set(np.round(grid[:, 1], 9))) == 4


def test_build_scenario_deterministic():
    cfg = small_config()
    a = build_scenario(cfg, 7)
    b = build_scenario(cfg, 7)
    c = build_scenario(cfg, 8)
    assert np.array_equal(a.users, b.users)
    assert not np.array_equal(a.users, c.users)
    assert np.all(a.users >= 0.0) and np.all(a.users <= cfg.area_side)
    assert a.haps[2] == cfg.haps_height


def test_default_power_budget():
    s = small_scenario()
    assert s.p_uxnb == pytest.approx(10 ** ((25.0 - 30.0) / 10.0))
    assert s.p_user == 0.2


def test_with_uxnb_positions_keeps_heights():
    s = small_scenario()
    xy = s.uxnbs[:, :2] + 10.0
    moved = s.with_uxnb_positions(xy)
    assert np.array_equal(moved.uxnbs[:, 2], s.uxnbs[:, 2])
    assert np.allclose(moved.uxnbs[:, :2], xy)
    assert np.array_equal(moved.users, s.users)


def test_access_geometry_overhead_user():
    s = small_scenario(k=1, m=1)
    # place the user directly below the single UxNB
    users = s.uxnbs[:1, :2].copy()
    s2 = NetworkScenario(
        users=users, uxnbs=s.uxnbs, haps=s.haps, area=s.area, radio=s.radio,
        env=s.env, absorption_ka=s.absorption_ka,
        effective_height_he=s.effective_height_he,
        p_user=s.p_user, p_uxnb=s.p_uxnb,
    )
    g = access_geometry(s2, 0, 0)
    assert g.theta_deg == pytest.approx(90.0)
    assert g.d_km == pytest.approx(s.uxnbs[0, 2])


def test_access_geometry_distance():
    s = small_scenario()
    g = access_geometry(s, 0, 0)
    dx = s.users[0, 0] - s.uxnbs[0, 0]
    dy = s.users[0, 1] - s.uxnbs[0, 1]
    dz = s.uxnbs[0, 2]
    assert g.d_km == pytest.approx(math.sqrt(dx * dx + dy * dy + dz * dz))
    assert 0.0 <= g.theta_deg <= 90.0


def test_backhaul_geometry():
    s = small_scenario()
    g = backhaul_geometry(s, 0)
    assert g.d_m >= s.haps[2] - s.uxnbs[0, 2]
    assert 0.0 < g.theta_deg <= 90.0


def test_scenario_json_roundtrip():
    s = small_scenario()
    s2 = NetworkScenario.from_json(s.to_json())
    assert np.allclose(s2.users, s.users)
    assert np.allclose(s2.uxnbs, s.uxnbs)
    assert s2.radio.s_rx == s.radio.s_rx
    assert s2.env.name == s.env.name
    assert s2.p_uxnb == pytest.approx(s.p_uxnb)


def test_scenario_config_validation():
    with pytest.raises(ValidationError):
        ScenarioConfig(n_users=0)
    with pytest.raises(ValidationError):
        ScenarioConfig(n_uxnbs=-1)
