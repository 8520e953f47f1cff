"""Comparison schemes: association, restricted allocation, reductions."""

from dataclasses import replace

import numpy as np
import pytest

from aerialcf.baselines import (
    aerial_cellular_sinr,
    associate_max_gain,
    cellular_allocation,
    make_terrestrial,
    terrestrial_cellfree_sinr,
    terrestrial_max_min_power,
)
from aerialcf.channel import compute_link_gains, terrestrial_link_gains
from aerialcf.rate import PowerAllocation, closed_form_sinr

from conftest import small_scenario


def test_association_ties_to_lowest_index():
    class G:
        beta2 = np.array([[1.0, 1.0, 0.5], [0.2, 0.9, 0.9]])

    assoc = associate_max_gain(G(), 3)
    assert list(assoc.serving) == [0, 1]
    assert list(assoc.load) == [1, 1, 0]


def test_cellular_allocation_budget_split():
    s = small_scenario(seed=11)
    gains = compute_link_gains(s)
    assoc = associate_max_gain(gains, s.n_uxnbs)
    alloc = cellular_allocation(s, assoc)
    # one nonzero entry per user, full budget split within each cell
    assert np.all((alloc.p_km > 0).sum(axis=1) == 1)
    sums = alloc.column_sums()
    loaded = assoc.load > 0
    assert np.allclose(sums[loaded], s.p_uxnb)
    assert np.all(sums[~loaded] == 0.0)


def test_cellular_equals_cellfree_single_uxnb():
    s = small_scenario(m=1, seed=12)
    gains = compute_link_gains(s)
    report, assoc = aerial_cellular_sinr(s, gains)
    uniform = closed_form_sinr(s, gains, PowerAllocation.uniform(s))
    assert np.allclose(report.sinr, uniform.sinr, rtol=1e-12)
    assert report.scheme == "aerial_cellular"


def test_cellular_restriction_never_beats_its_own_relaxation():
    """The cellular report equals the closed form at the restricted alloc."""
    s = small_scenario(seed=13)
    gains = compute_link_gains(s)
    report, assoc = aerial_cellular_sinr(s, gains)
    alloc = cellular_allocation(s, assoc)
    direct = closed_form_sinr(s, gains, alloc)
    assert np.allclose(report.sinr, direct.sinr, rtol=1e-12)


def test_make_terrestrial_height():
    s = small_scenario()
    t = make_terrestrial(s)
    assert np.all(t.uxnbs[:, 2] == 10.0)
    assert np.array_equal(t.uxnbs[:, :2], s.uxnbs[:, :2])
    assert np.array_equal(t.users, s.users)


def test_terrestrial_scaling_invariance(rng):
    s = make_terrestrial(small_scenario(seed=14))
    gains = terrestrial_link_gains(s)
    p = rng.uniform(0.0, s.p_uxnb / 4, (s.n_users, s.n_uxnbs))
    a = terrestrial_cellfree_sinr(s, gains, PowerAllocation(p))
    b = terrestrial_cellfree_sinr(s, gains, PowerAllocation(7.5 * p))
    assert np.allclose(a.sinr, b.sinr, rtol=1e-12)


def test_terrestrial_independent_of_backhaul_arrays(rng):
    s = make_terrestrial(small_scenario(seed=14))
    p = rng.uniform(0.0, s.p_uxnb / 4, (s.n_users, s.n_uxnbs))
    big = replace(s, radio=replace(s.radio, s_w=20, s_l=20, g_w=9, g_l=9))
    a = terrestrial_cellfree_sinr(s, terrestrial_link_gains(s), PowerAllocation(p))
    b = terrestrial_cellfree_sinr(big, terrestrial_link_gains(big), PowerAllocation(p))
    assert np.allclose(a.sinr, b.sinr, rtol=1e-12)
    assert np.all(a.reemission == 0.0) and np.all(a.haps_noise == 0.0)


def test_terrestrial_max_min_power_optimality(rng):
    s = make_terrestrial(small_scenario(seed=15))
    gains = terrestrial_link_gains(s)
    alloc, eta = terrestrial_max_min_power(s, gains)
    report = terrestrial_cellfree_sinr(s, gains, alloc)
    # the closed-form optimum is achieved exactly and fits the budgets
    assert report.sinr.min() == pytest.approx(eta, rel=1e-10)
    assert np.all(alloc.column_sums() <= s.p_uxnb * (1.0 + 1e-12))
    uniform = terrestrial_cellfree_sinr(s, gains, PowerAllocation.uniform(s))
    assert eta >= uniform.sinr.min()
    # no random per-user direction beats the worst user's optimum
    worst = int(np.argmin(report.sinr))
    for _ in range(200):
        d = rng.random(s.n_uxnbs)
        probe = np.tile(d, (s.n_users, 1)) ** 2 * 1e-6
        val = terrestrial_cellfree_sinr(s, gains, PowerAllocation(probe)).sinr[worst]
        assert val <= eta * (1.0 + 1e-9) or val <= report.sinr[worst] * (1.0 + 1e-9)
