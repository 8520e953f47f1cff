"""Experiment harness: seeded sweeps, Monte Carlo validation, CDFs.

Everything is driven by an ExperimentConfig (JSON on disk, flags can
override).  Each (sweep value, drop) work item derives its own RNG
stream from the root seed, so outputs are reproducible regardless of
evaluation order.  Results leave the tool as labeled CSV rows or JSON
reports only.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines
from .channel import compute_link_gains, terrestrial_link_gains
from .errors import AerialCfError, ValidationError
from .linkchain import estimate_empirical_sinr
from .optimizer import (
    bcd_optimize,
    bisection_power,
    damped_position_update,
    sca_placement_step,
)
from .rate import PowerAllocation, closed_form_sinr, rate_from_sinr
from .scenario import SCHEMA_VERSION, RadioParams, ScenarioConfig, build_scenario

log = logging.getLogger(__name__)

SCHEMES = ("aerial_cellfree", "aerial_cellular", "terrestrial_cellfree")
OPTIMIZE_MODES = ("none", "power", "placement", "joint")
SWEEP_PARAMS = ("P_m_dbm", "M", "K", "S", "environment")
CSV_COLUMNS = (
    "sweep_param", "sweep_value", "scheme", "optimize", "drop",
    "min_sinr_db", "min_rate_bps_hz", "iters_outer", "iters_bisection",
    "runtime_ms", "seed",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: scenario family, scheme, optimization, sweep."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    scheme: str = "aerial_cellfree"
    optimize: str = "none"
    sweep_param: str = None
    sweep_values: tuple = None
    drops: int = 100
    seed: int = 0
    mc_trials: int = 20000
    mc_pure_los: bool = False
    epsilon: float = 0.01
    eta_max: float = 1500.0
    max_outer: int = 10

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if self.optimize not in OPTIMIZE_MODES:
            raise ValidationError(f"unknown optimize mode {self.optimize!r}")
        if self.scheme == "aerial_cellular" and self.optimize != "none":
            raise ValidationError(
                "the aerial cellular scheme supports optimize='none' only"
            )
        if self.scheme == "terrestrial_cellfree" and self.optimize not in (
            "none", "power"
        ):
            raise ValidationError(
                "the terrestrial scheme supports optimize in {'none', 'power'}"
            )
        if self.sweep_param is not None:
            if self.sweep_param not in SWEEP_PARAMS:
                raise ValidationError(f"unknown sweep parameter {self.sweep_param!r}")
            if not self.sweep_values:
                raise ValidationError("sweep_values required with sweep_param")
            object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if self.drops < 1:
            raise ValidationError("drops must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported config schema_version {version!r}")
        sc = d.pop("scenario", {})
        if isinstance(sc, dict):
            radio = sc.pop("radio", {})
            known_sc = set(ScenarioConfig.__dataclass_fields__)
            bad = set(sc) - known_sc
            if bad:
                raise ValidationError(f"unknown scenario fields: {sorted(bad)}")
            sc = ScenarioConfig(radio=RadioParams(**radio), **sc)
        known = set(cls.__dataclass_fields__) - {"scenario"}
        bad = set(d) - known
        if bad:
            raise ValidationError(f"unknown config fields: {sorted(bad)}")
        return cls(scenario=sc, **d)

    @classmethod
    def from_json_file(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        sc = self.scenario
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": {
                "n_users": sc.n_users,
                "n_uxnbs": sc.n_uxnbs,
                "area_side": sc.area_side,
                "uxnb_height": sc.uxnb_height,
                "haps_height": sc.haps_height,
                "environment": sc.environment,
                "p_uxnb_dbm": sc.p_uxnb_dbm,
                "p_user": sc.p_user,
                "radio": {
                    "n_w": sc.radio.n_w, "n_l": sc.radio.n_l,
                    "g_w": sc.radio.g_w, "g_l": sc.radio.g_l,
                    "s_w": sc.radio.s_w, "s_l": sc.radio.s_l,
                },
            },
            "scheme": self.scheme,
            "optimize": self.optimize,
            "sweep_param": self.sweep_param,
            "sweep_values": list(self.sweep_values or []),
            "drops": self.drops,
            "seed": self.seed,
            "mc_trials": self.mc_trials,
            "mc_pure_los": self.mc_pure_los,
            "epsilon": self.epsilon,
            "eta_max": self.eta_max,
            "max_outer": self.max_outer,
        }


def _apply_sweep(sc: ScenarioConfig, param: str, value) -> ScenarioConfig:
    if param is None:
        return sc
    if param == "P_m_dbm":
        return replace(sc, p_uxnb_dbm=float(value))
    if param == "M":
        return replace(sc, n_uxnbs=int(value))
    if param == "K":
        return replace(sc, n_users=int(value))
    if param == "S":
        side = int(round(math.sqrt(int(value))))
        if side * side != int(value):
            raise ValidationError("S sweep values must be perfect squares")
        return replace(sc, radio=replace(sc.radio, s_w=side, s_l=side))
    if param == "environment":
        return replace(sc, environment=str(value))
    raise ValidationError(f"unknown sweep parameter {param!r}")


def _drop_seed(root_seed: int, drop: int) -> np.random.SeedSequence:
    """Per-drop stream; shared across sweep values so curves are paired."""
    return np.random.SeedSequence([int(root_seed), drop])


def evaluate_drop(config: ExperimentConfig, value_index: int, drop: int) -> dict:
    """Run one (sweep value, drop) work item; returns one result row."""
    value = (
        config.sweep_values[value_index]
        if config.sweep_param is not None
        else None
    )
    sc = _apply_sweep(config.scenario, config.sweep_param, value)
    s = build_scenario(sc, _drop_seed(config.seed, drop))
    t0 = time.perf_counter()
    iters_outer = 0
    iters_bisection = 0

    if config.scheme == "terrestrial_cellfree":
        st = baselines.make_terrestrial(s)
        gains = terrestrial_link_gains(st)
        if config.optimize == "power":
            alloc, _ = baselines.terrestrial_max_min_power(st, gains)
        else:
            alloc = PowerAllocation.uniform(st)
        report = baselines.terrestrial_cellfree_sinr(st, gains, alloc)
    elif config.scheme == "aerial_cellular":
        gains = compute_link_gains(s)
        report, _ = baselines.aerial_cellular_sinr(s, gains)
    else:
        gains = compute_link_gains(s)
        if config.optimize == "none":
            report = closed_form_sinr(s, gains, PowerAllocation.uniform(s))
        elif config.optimize == "power":
            alloc, _, state = bisection_power(
                s, gains, eta_max=config.eta_max, epsilon=config.epsilon
            )
            iters_bisection = state.iterations
            report = closed_form_sinr(s, gains, alloc)
        elif config.optimize == "placement":
            cur, cur_gains = s, gains
            best = closed_form_sinr(
                cur, cur_gains, PowerAllocation.uniform(cur)
            ).min_sinr()[0]
            for _ in range(config.max_outer):
                iters_outer += 1
                alloc = PowerAllocation.uniform(cur)
                positions, _ = sca_placement_step(cur, alloc, cur_gains)
                cand, cand_gains, cand_min, frac = damped_position_update(
                    cur, alloc, positions
                )
                if frac == 0.0 or cand_min <= best * (1.0 + 1e-3):
                    if cand_min > best:
                        cur, cur_gains, best = cand, cand_gains, cand_min
                    break
                cur, cur_gains, best = cand, cand_gains, cand_min
            report = closed_form_sinr(cur, cur_gains, PowerAllocation.uniform(cur))
        else:  # joint
            trace = bcd_optimize(
                s, max_outer=config.max_outer,
                eta_max=config.eta_max, epsilon=config.epsilon,
            )
            last = trace.iterations[-1]
            iters_outer = len(trace.iterations) - 1
            iters_bisection = sum(
                it["bisection_iters"] for it in trace.iterations
            )
            final = s.with_uxnb_positions(last["positions"])
            report = closed_form_sinr(
                final, compute_link_gains(final), last["alloc"]
            )

    runtime_ms = int(round(1000.0 * (time.perf_counter() - t0)))
    mn, _ = report.min_sinr()
    return {
        "sweep_param": config.sweep_param or "",
        "sweep_value": "" if value is None else value,
        "scheme": config.scheme,
        "optimize": config.optimize,
        "drop": drop,
        "min_sinr_db": f"{10.0 * math.log10(max(mn, 1e-300)):.6f}",
        "min_rate_bps_hz": f"{float(rate_from_sinr(mn)):.6f}",
        "iters_outer": iters_outer,
        "iters_bisection": iters_bisection,
        "runtime_ms": runtime_ms,
        "seed": config.seed,
    }


def run(config: ExperimentConfig, out_path: str = None) -> list:
    """Execute the sweep; returns rows and optionally writes the CSV."""
    rows = []
    n_values = (
        len(config.sweep_values) if config.sweep_param is not None else 1
    )
    for vi in range(n_values):
        for drop in range(config.drops):
            try:
                rows.append(evaluate_drop(config, vi, drop))
            except AerialCfError as exc:
                log.error(
                    "row (value index %d, drop %d) aborted: %s", vi, drop, exc
                )
    text = rows_to_csv(rows)
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    return rows


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def mc_validate(config: ExperimentConfig, out_path: str = None) -> dict:
    """Closed form vs Monte Carlo chain on one drop; JSON report."""
    if config.mc_trials < 1:
        raise ValidationError("mc_trials must be positive for validation runs")
    s = build_scenario(config.scenario, _drop_seed(config.seed, 0))
    override = 1.0 if config.mc_pure_los else None
    gains = compute_link_gains(s, p_los_override=override)
    alloc = PowerAllocation.uniform(s)
    closed = closed_form_sinr(s, gains, alloc)
    emp = estimate_empirical_sinr(
        s, gains, alloc, trials=config.mc_trials, seed=config.seed
    )
    closed_db = 10.0 * np.log10(closed.sinr)
    emp_db = 10.0 * np.log10(np.maximum(emp.sinr, 1e-300))
    wide = np.any(emp.ci95 > 0.5 * emp.sinr)
    if wide:
        log.warning("Monte Carlo CI wider than 50%% of the estimate; "
                    "consider more trials")
    report = {
        "trials": emp.trials,
        "pure_los": config.mc_pure_los,
        "closed_form_sinr_db": closed_db.tolist(),
        "empirical_sinr_db": emp_db.tolist(),
        "gap_db": (emp_db - closed_db).tolist(),
        "ci95": emp.ci95.tolist(),
        "closed_form_terms": closed.to_dict()["terms"],
        "empirical_terms": {k: v.tolist() for k, v in emp.term_power.items()},
        "ci_warning": bool(wide),
    }
    if out_path:
        with open(out_path, "w") as fh:
            json.dump(report, fh, indent=2)
    return report


def cdf_experiment(config: ExperimentConfig, out_path: str = None) -> list:
    """Empirical CDF of the per-drop minimum rate."""
    if config.drops < 50:
        raise ValidationError("cdf experiments need at least 50 drops")
    rows = run(config)
    rates = sorted(float(r["min_rate_bps_hz"]) for r in rows)
    out = [
        {
            "min_rate_bps_hz": f"{v:.6f}",
            "cdf": f"{(i + 1) / len(rates):.6f}",
            "scheme": config.scheme,
            "optimize": config.optimize,
            "seed": config.seed,
        }
        for i, v in enumerate(rates)
    ]
    if out_path:
        with open(out_path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh,
                fieldnames=("min_rate_bps_hz", "cdf", "scheme", "optimize", "seed"),
                lineterminator="\n",
            )
            writer.writeheader()
            for row in out:
                writer.writerow(row)
    return out
