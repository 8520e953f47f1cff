"""Acceptance suite: one test (one pass/fail line under -v) per criterion.

Every tolerance is pinned in the assertion itself.  Tests print their
measured numbers so failures carry the full characterization.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from aerialcf.baselines import (
    make_terrestrial,
    terrestrial_cellfree_sinr,
    terrestrial_max_min_power,
)
from aerialcf.channel import compute_link_gains, terrestrial_link_gains
from aerialcf.expcli import ExperimentConfig, run
from aerialcf.linkchain import (
    estimate_empirical_sinr,
    exact_normalization_moment,
)
from aerialcf.optimizer import (
    bcd_optimize,
    bisection_power,
    compile_power_feasibility,
)
from aerialcf.rate import (
    PowerAllocation,
    closed_form_sinr,
    closed_form_sinr_direct,
    normalization_second_moment,
    rate_from_sinr,
)
from aerialcf.scenario import RadioParams, ScenarioConfig, build_scenario
from aerialcf.socp import check_point, solve

from socp_oracle import random_program, solve_oracle


def _random_instance(rng, k, m):
    radio = RadioParams(n_w=2, n_l=2, g_w=3, g_l=3, s_w=4, s_l=4)
    cfg = ScenarioConfig(n_users=k, n_uxnbs=m, radio=radio)
    s = build_scenario(cfg, int(rng.integers(0, 2**31)))
    gains = compute_link_gains(s)
    alloc = PowerAllocation(rng.uniform(0.0, s.p_uxnb / k, (k, m)))
    return s, gains, alloc


def test_criterion_1_closed_form_recombination():
    """Term decomposition recombines to the single-expression SINR."""
    rng = np.random.default_rng(100)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        s, gains, alloc = _random_instance(rng, k, m)
        report = closed_form_sinr(s, gains, alloc)
        direct = closed_form_sinr_direct(s, gains, alloc)
        worst = max(worst, float(np.max(np.abs(report.sinr / direct - 1.0))))
    elapsed = time.perf_counter() - t0
    print(f"recombination worst relative error {worst:.3e}, {elapsed:.2f} s")
    assert worst <= 1e-10
    assert elapsed < 1.0


def test_criterion_2_monte_carlo_oracle_pure_los():
    """Empirical chain vs closed form, pure LoS, with the residual report."""
    radio = RadioParams(n_w=4, n_l=4, g_w=2, g_l=2, s_w=8, s_l=8)
    cfg = ScenarioConfig(n_users=4, n_uxnbs=4, radio=radio)
    s = build_scenario(cfg, 202)
    gains = compute_link_gains(s, p_los_override=1.0)
    alloc = PowerAllocation.uniform(s)
    t0 = time.perf_counter()
    closed = closed_form_sinr(s, gains, alloc)
    emp = estimate_empirical_sinr(s, gains, alloc, trials=20000, seed=202)
    elapsed = time.perf_counter() - t0

    gap_db = 10.0 * np.log10(emp.sinr) - 10.0 * np.log10(closed.sinr)
    ds_ratio = emp.term_power["desired"] / closed.desired
    # characterization of the normalization-approximation residual: the
    # closed form scores the per-symbol normalizer by its statistical
    # stand-in F^2; the exact per-link second moment differs by
    exact = exact_normalization_moment(s, gains)
    f2 = normalization_second_moment(s, gains)
    ratio = exact / f2
    print(f"per-user SINR gap (dB): {np.array2string(gap_db, precision=2)}")
    print(f"desired-term empirical/closed ratio: "
          f"{np.array2string(ds_ratio, precision=3)}")
    print(f"normalization moment exact/stand-in ratio: "
          f"min {ratio.min():.3g}, max {ratio.max():.3g}")
    print(f"CI95 (linear): {np.array2string(emp.ci95, precision=3)}")
    print(f"runtime {elapsed:.1f} s")
    assert elapsed < 120.0
    assert np.all(np.abs(gap_db) <= 1.5), (
        f"empirical SINR deviates from the closed form by {gap_db} dB; the "
        f"residual is attributable to the normalization stand-in (exact "
        f"per-link moment is {ratio.min():.1f}-{ratio.max():.1f}x the "
        f"closed form's F^2)"
    )
    assert np.all(np.abs(ds_ratio - 1.0) <= 0.10)


def test_criterion_3_structural_laws():
    """S-doubling (exact and empirical) and tau = 1 re-emission kill."""
    t0 = time.perf_counter()
    radio = RadioParams(n_w=2, n_l=2, g_w=2, g_l=2, s_w=4, s_l=4)
    cfg = ScenarioConfig(n_users=2, n_uxnbs=2, radio=radio)
    s = build_scenario(cfg, 303)
    gains = compute_link_gains(s, p_los_override=1.0)
    alloc = PowerAllocation.uniform(s)

    # closed form is exactly linear in S
    s2 = replace(s, radio=replace(s.radio, s_w=8))
    base = closed_form_sinr_direct(s, gains, alloc)
    double = closed_form_sinr_direct(s2, gains, alloc)
    assert np.allclose(double, 2.0 * base, rtol=1e-12)

    # empirical doubling within the combined confidence intervals
    e1 = estimate_empirical_sinr(s, gains, alloc, trials=6000, seed=31)
    e2 = estimate_empirical_sinr(s2, gains, alloc, trials=6000, seed=32)
    ratio = e2.sinr / e1.sinr
    rel = e1.ci95 / e1.sinr + e2.ci95 / e2.sinr
    print(f"empirical S-doubling ratio {np.array2string(ratio, precision=3)}"
          f" (tolerance 2*(1 +/- {np.array2string(rel, precision=3)}))")
    assert np.all(np.abs(ratio - 2.0) <= 2.0 * rel + 0.2)

    # tau = 1 removes re-emission identically, trial by trial
    g1 = replace(gains, tau=np.ones_like(gains.tau), gamma2=gains.rho2.copy())
    e3 = estimate_empirical_sinr(s, g1, alloc, trials=1000, seed=33)
    assert np.all(e3.term_power["reemission"] == 0.0)
    elapsed = time.perf_counter() - t0
    print(f"runtime {elapsed:.1f} s")
    assert elapsed < 120.0


def test_criterion_4_bisection_correctness():
    """Defaults: 18 solves, budget feasibility, equal-SINR optimality."""
    cfg = ScenarioConfig(n_users=16, n_uxnbs=16)
    s = build_scenario(cfg, 404)
    gains = compute_link_gains(s)
    t0 = time.perf_counter()
    alloc, eta, state = bisection_power(s, gains)
    elapsed = time.perf_counter() - t0
    report = closed_form_sinr(s, gains, alloc)
    spread = float(report.sinr.max() - report.sinr.min())
    viol = float(np.max(alloc.column_sums() - s.p_uxnb))
    print(f"eta* {eta:.4f}, solves {state.iterations}, spread {spread:.3e}, "
          f"budget violation {viol:.3e}, {elapsed:.1f} s")
    assert state.iterations == 18          # ceil(log2(1500 / 0.01))
    assert viol <= 1e-8 * s.p_uxnb
    assert spread <= 2.0 * state.epsilon
    assert elapsed < 30.0


def test_criterion_5_socp_solver_oracle():
    """Barrier solver vs an independent multi-start reference."""
    rng = np.random.default_rng(500)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(20):
        prog = random_program(rng, n_max=30)
        res = solve(prog)
        assert res.status == "optimal"
        assert check_point(prog, res.x) <= 1e-8
        ref = solve_oracle(prog, seed=i)
        assert ref is not None, "reference solver found no feasible point"
        worst = max(worst, abs(res.objective - ref))
        assert res.objective == pytest.approx(ref, abs=1e-5 + 1e-5 * abs(ref))
    elapsed = time.perf_counter() - t0
    print(f"worst objective gap vs reference {worst:.2e}, {elapsed:.1f} s")
    assert elapsed < 60.0


def test_criterion_6_bcd_monotone_convergence():
    """20 urban drops, K = M = 8: monotone trace, convergence within 15."""
    t0 = time.perf_counter()
    for drop in range(20):
        cfg = ScenarioConfig(n_users=8, n_uxnbs=8)
        s = build_scenario(cfg, np.random.SeedSequence([606, drop]))
        trace = bcd_optimize(s, max_outer=15, tol=1e-3)
        seq = trace.min_sinr_sequence()
        diffs = np.diff(seq)
        assert np.all(diffs >= -1e-6 * np.abs(seq[:-1])), (
            f"drop {drop}: non-monotone trace {seq}"
        )
        assert trace.converged, f"drop {drop}: not converged in 15 iterations"
    elapsed = time.perf_counter() - t0
    print(f"20 drops in {elapsed:.1f} s")
    assert elapsed < 600.0


def _median_rates(rows):
    """CSV rows -> {(sweep_value, scheme): median min rate}."""
    acc = {}
    for r in rows:
        acc.setdefault((r["sweep_value"], r["scheme"]), []).append(
            float(r["min_rate_bps_hz"])
        )
    return {k: float(np.median(v)) for k, v in acc.items()}


_SC16 = ScenarioConfig(n_users=16, n_uxnbs=16)


def test_criterion_7a_power_sweep_trend():
    """Cell-free above cellular at every power; terrestrial flat."""
    t0 = time.perf_counter()
    powers = (15, 25, 35)
    rows_cf = run(ExperimentConfig(
        scenario=_SC16, scheme="aerial_cellfree", optimize="power",
        sweep_param="P_m_dbm", sweep_values=powers, drops=50, seed=700,
    ))
    rows_cell = run(ExperimentConfig(
        scenario=_SC16, scheme="aerial_cellular",
        sweep_param="P_m_dbm", sweep_values=powers, drops=50, seed=700,
    ))
    rows_terr = run(ExperimentConfig(
        scenario=_SC16, scheme="terrestrial_cellfree",
        sweep_param="P_m_dbm", sweep_values=powers, drops=50, seed=700,
    ))
    med = _median_rates(rows_cf + rows_cell + rows_terr)
    failures = []
    for p in powers:
        cf = med[(p, "aerial_cellfree")]
        cell = med[(p, "aerial_cellular")]
        print(f"P_m {p} dBm: cellfree {cf:.2f}, cellular {cell:.2f} b/s/Hz")
        if not cf > cell:
            failures.append(f"cellfree {cf} <= cellular {cell} at {p} dBm")
    terr = [med[(p, "terrestrial_cellfree")] for p in powers]
    flat = (max(terr) - min(terr)) / max(max(terr), 1e-12)
    print(f"terrestrial across powers: {terr} (variation {flat:.2%})")
    if flat >= 0.01:
        failures.append(f"terrestrial not flat: variation {flat:.2%}")
    elapsed = time.perf_counter() - t0
    print(f"runtime {elapsed:.0f} s")
    assert elapsed < 1800.0
    assert not failures, "; ".join(failures)


def test_criterion_7b_uxnb_count_trend():
    """Min rate non-decreasing in M; advantage over cellular widening."""
    t0 = time.perf_counter()
    m_vals = (4, 8, 16)
    rows_cf = run(ExperimentConfig(
        scenario=_SC16, scheme="aerial_cellfree", optimize="power",
        sweep_param="M", sweep_values=m_vals, drops=50, seed=701,
    ))
    rows_cell = run(ExperimentConfig(
        scenario=_SC16, scheme="aerial_cellular",
        sweep_param="M", sweep_values=m_vals, drops=50, seed=701,
    ))
    med = _median_rates(rows_cf + rows_cell)
    cf = [med[(m, "aerial_cellfree")] for m in m_vals]
    adv = [med[(m, "aerial_cellfree")] - med[(m, "aerial_cellular")] for m in m_vals]
    print(f"M sweep cellfree medians {cf}, advantage over cellular {adv}")
    elapsed = time.perf_counter() - t0
    print(f"runtime {elapsed:.0f} s")
    assert elapsed < 1800.0
    assert all(b >= a for a, b in zip(cf, cf[1:])), f"not non-decreasing: {cf}"
    assert all(b > a for a, b in zip(adv, adv[1:])), f"advantage not widening: {adv}"


def test_criterion_7c_haps_array_trend():
    """Aerial schemes increase in S; terrestrial vs cellular at S = 16."""
    t0 = time.perf_counter()
    s_vals = (16, 100, 400)
    rows_cf = run(ExperimentConfig(
        scenario=_SC16, scheme="aerial_cellfree",
        sweep_param="S", sweep_values=s_vals, drops=50, seed=702,
    ))
    rows_cell = run(ExperimentConfig(
        scenario=_SC16, scheme="aerial_cellular",
        sweep_param="S", sweep_values=s_vals, drops=50, seed=702,
    ))
    rows_terr = run(ExperimentConfig(
        scenario=_SC16, scheme="terrestrial_cellfree", optimize="power",
        drops=50, seed=702,
    ))
    med = _median_rates(rows_cf + rows_cell)
    terr_med = float(np.median([float(r["min_rate_bps_hz"]) for r in rows_terr]))
    failures = []
    for scheme in ("aerial_cellfree", "aerial_cellular"):
        vals = [med[(v, scheme)] for v in s_vals]
        print(f"S sweep {scheme}: {vals}")
        if not all(b > a for a, b in zip(vals, vals[1:])):
            failures.append(f"S sweep {scheme} not increasing: {vals}")
    cell16 = med[(16, "aerial_cellular")]
    print(f"S=16: terrestrial (max-min power) {terr_med:.2f} vs "
          f"aerial cellular {cell16:.2f} b/s/Hz")
    if not terr_med > cell16:
        failures.append(
            f"terrestrial {terr_med:.2f} does not exceed aerial cellular "
            f"{cell16:.2f} at S=16"
        )
    elapsed = time.perf_counter() - t0
    print(f"runtime {elapsed:.0f} s")
    assert elapsed < 1800.0
    assert not failures, "; ".join(failures)


def test_criterion_7d_environment_ordering():
    """Suburban >= urban >= dense urban for both aerial schemes."""
    t0 = time.perf_counter()
    envs = ("suburban", "urban", "dense_urban")
    failures = []
    for p in (15, 25, 35):
        scp = ScenarioConfig(n_users=16, n_uxnbs=16, p_uxnb_dbm=float(p))
        for scheme in ("aerial_cellfree", "aerial_cellular"):
            rows = run(ExperimentConfig(
                scenario=scp, scheme=scheme,
                sweep_param="environment", sweep_values=envs,
                drops=30, seed=703,
            ))
            med = _median_rates(rows)
            vals = [med[(e, scheme)] for e in envs]
            print(f"{scheme} at {p} dBm: suburban {vals[0]:.2f}, "
                  f"urban {vals[1]:.2f}, dense urban {vals[2]:.2f}")
            if not (vals[0] >= vals[1] >= vals[2]):
                failures.append(
                    f"ordering violated for {scheme} at {p} dBm: {vals}"
                )
    elapsed = time.perf_counter() - t0
    print(f"runtime {elapsed:.0f} s")
    assert elapsed < 1800.0
    assert not failures, "; ".join(failures)


def test_criterion_7e_uniform_power_near_joint():
    """With optimized placement, uniform power within 5% of joint."""
    t0 = time.perf_counter()
    ratios = []
    for drop in range(30):
        cfg8 = ScenarioConfig(n_users=8, n_uxnbs=8)
        s = build_scenario(cfg8, np.random.SeedSequence([704, drop]))
        trace = bcd_optimize(s, max_outer=10, tol=1e-3)
        last = trace.iterations[-1]
        joint_rate = last["min_rate_bps_hz"]
        final = s.with_uxnb_positions(last["positions"])
        gains = compute_link_gains(final)
        uni = closed_form_sinr(final, gains, PowerAllocation.uniform(final))
        uni_rate = float(rate_from_sinr(uni.min_sinr()[0]))
        ratios.append(uni_rate / joint_rate)
    med_ratio = float(np.median(ratios))
    elapsed = time.perf_counter() - t0
    print(f"uniform/joint min-rate ratio: median {med_ratio:.3f} over 30 drops, "
          f"{elapsed:.0f} s")
    assert elapsed < 1800.0
    assert med_ratio >= 0.95, (
        f"uniform power at the optimized placement achieves only "
        f"{med_ratio:.1%} of the jointly optimized min rate (gate 95%)"
    )


def test_criterion_8_quasiconcavity_no_inversion():
    """Sampled feasibility over eta never inverts (level sets nest)."""
    rng = np.random.default_rng(800)
    t0 = time.perf_counter()
    inversions = 0
    for i in range(50):
        k = int(rng.integers(2, 7))
        m = int(rng.integers(2, 7))
        s, gains, _ = _random_instance(rng, k, m)
        verdicts = []
        for eta in np.geomspace(0.2, 2000.0, 8):
            res = solve(
                compile_power_feasibility(s, gains, float(eta)),
                feasibility_only=True,
            )
            verdicts.append(res.status == "optimal")
        seen_infeasible = False
        for v in verdicts:
            if not v:
                seen_infeasible = True
            elif seen_infeasible:
                inversions += 1
                break
    elapsed = time.perf_counter() - t0
    print(f"inversions {inversions}/50, {elapsed:.1f} s")
    assert inversions == 0
    assert elapsed < 300.0
