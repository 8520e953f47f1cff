"""Max-min SINR optimization: bisection power control, SCA placement, BCD.

The power subproblem is quasi-concave in the min-SINR target, so a
bisection over the target with a cone-feasibility test at each level
finds the optimum; the placement subproblem is convexified by a
first-order Taylor surrogate (SCA) in slack variables; the outer loop
alternates the two blocks (block coordinate descent) and tracks the true
closed-form min-SINR at every iterate.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import LinkGains, compute_link_gains
from .errors import DegenerateScenarioError, DomainError, SolverError
from .rate import PowerAllocation, closed_form_sinr, rate_from_sinr
from .scenario import NetworkScenario
from .socp import ConeProgram, solve

log = logging.getLogger(__name__)


@dataclass
class BisectionState:
    """Bracket history of one bisection run."""

    eta_min: float
    eta_max: float
    epsilon: float
    best_alloc: PowerAllocation = None
    iterations: int = 0
    history: list = field(default_factory=list)   # (eta, feasible) pairs
    doublings: int = 0


@dataclass
class ScaState:
    """Linearization point and frozen constants for one placement step."""

    x: np.ndarray           # (M,) UxNB x coordinates
    y: np.ndarray           # (M,)
    t_l: np.ndarray         # (K,) slack linearization point (> 0)
    beta_l: np.ndarray      # (K, M) amplitude-gain linearization point (> 0)
    zeta: float
    gamma_bar: np.ndarray   # (M,) frozen backhaul amplitude gains
    rho_bar: np.ndarray     # (M,)
    c_bar: np.ndarray       # (K, M) frozen excess-loss distance constants


@dataclass
class OptimizationTrace:
    """Per-outer-iteration record of the BCD loop."""

    iterations: list = field(default_factory=list)
    converged: bool = False

    def min_sinr_sequence(self) -> np.ndarray:
        return np.array([it["min_sinr"] for it in self.iterations])

    def to_dict(self) -> dict:
        out = {"converged": self.converged, "iterations": []}
        for it in self.iterations:
            out["iterations"].append(
                {
                    "min_sinr": it["min_sinr"],
                    "min_rate_bps_hz": it["min_rate_bps_hz"],
                    "eta": it["eta"],
                    "bisection_iters": it["bisection_iters"],
                    "positions": it["positions"].tolist(),
                    "alloc": it["alloc"].p_km.tolist(),
                    "sca_residuals": it.get("sca_residuals"),
                }
            )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        lines = ["iteration,min_sinr,min_rate,bisection_iters"]
        for i, it in enumerate(self.iterations):
            lines.append(
                f"{i},{it['min_sinr']:.10g},{it['min_rate_bps_hz']:.10g},"
                f"{it['bisection_iters']}"
            )
        return "\n".join(lines) + "\n"


def _denominator_terms(s: NetworkScenario, gains: LinkGains, alloc=None):
    """Shared constants of the per-user SINR constraint.

    Returns (x_m, x_tot) with x_m = sum_k' beta^2_k'm P_k'.
    """
    x_m = gains.beta2.sum(axis=0) * s.p_user
    return x_m, float(x_m.sum())


def compile_power_feasibility(
    s: NetworkScenario, gains: LinkGains, eta: float
) -> ConeProgram:
    """Cone feasibility test for min-SINR target eta in T_km = sqrt(P_km).

    Per-user cone: || [ sqrt(M G^2) rho_m sqrt(x_m + sigma^2) T_km ;
    sqrt(sigma_H^2 (X + M sigma^2)) ] || <= L_k(T)/sqrt(eta) with
    L_k(T) = sqrt(M G^2 N S P_k) sum_m gamma_m beta_km T_km; per-UxNB
    budget cone ||T_.m|| <= sqrt(P_m); T >= 0.
    """
    if eta <= 0.0:
        raise DomainError("eta must be positive")
    if s.radio.sigma2_haps == 0.0:
        # Without the receiver-noise constant each user's cone is
        # homogeneous in the user's own column, so T = 0 passes vacuously
        # and the feasibility test certifies nothing.  The noiseless-hub
        # max-min problem decouples per user and has a closed-form
        # optimum instead (see the terrestrial baseline).
        raise DegenerateScenarioError(
            "power feasibility compile requires sigma2_haps > 0"
        )
    k_n, m_n = s.n_users, s.n_uxnbs
    n_var = k_n * m_n
    g2 = s.radio.g_tx ** 2
    mg2 = m_n * g2
    sigma2 = s.radio.sigma2_uxnb
    sigma2_h = s.radio.sigma2_haps
    x_m, x_tot = _denominator_terms(s, gains)
    cones = []
    for k in range(k_n):
        a = np.zeros((m_n + 1, n_var))
        b = np.zeros(m_n + 1)
        for m in range(m_n):
            a[m, k * m_n + m] = math.sqrt(mg2 * (x_m[m] + sigma2)) * gains.rho[m]
        b[m_n] = math.sqrt(sigma2_h * (x_tot + m_n * sigma2))
        e = np.zeros(n_var)
        coef = math.sqrt(mg2 * s.radio.n_rx * s.radio.s_rx * s.p_user / eta)
        e[k * m_n : (k + 1) * m_n] = coef * gains.gamma * gains.beta[k]
        cones.append((a, b, e, 0.0))
    t_max = math.sqrt(s.p_uxnb)
    for m in range(m_n):
        a = np.zeros((k_n, n_var))
        for k in range(k_n):
            a[k, k * m_n + m] = 1.0
        cones.append((a, np.zeros(k_n), np.zeros(n_var), t_max))
    return ConeProgram(
        c=np.zeros(n_var),
        cones=cones,
        lb=np.zeros(n_var),
        ub=np.full(n_var, t_max),
    )


def _equalize_sinr(
    s: NetworkScenario, gains: LinkGains, alloc: PowerAllocation, eta: float
) -> PowerAllocation:
    """Scale each user's forwarded powers down to hit SINR_k = eta exactly.

    SINR_k depends only on the user's own column of the allocation
    (interference enters through the fixed uplink powers), and is
    monotone in a common scale alpha on that column:
    SINR_k(alpha) = a alpha^2 / (b alpha^2 + c).  Solving for
    SINR_k = eta gives alpha <= 1 whenever the input point achieves
    SINR_k >= eta, so budgets can only loosen.
    """
    k_n, m_n = s.n_users, s.n_uxnbs
    g2 = s.radio.g_tx ** 2
    mg2 = m_n * g2
    sigma2 = s.radio.sigma2_uxnb
    sigma2_h = s.radio.sigma2_haps
    x_m, x_tot = _denominator_terms(s, gains)
    c_const = sigma2_h * (x_tot + m_n * sigma2)
    if c_const == 0.0:
        # Per-user SINR is then invariant to scaling the user's own
        # column, so equalisation by downscaling is impossible.
        return alloc
    p = alloc.p_km.copy()
    for k in range(k_n):
        a_k = (
            mg2 * s.radio.n_rx * s.radio.s_rx * s.p_user
            * float((np.sqrt(p[k]) * gains.beta[k]) @ gains.gamma) ** 2
        )
        b_k = mg2 * float((p[k] * gains.rho2 * (x_m + sigma2)).sum())
        if a_k <= 0.0:
            continue
        denom = a_k - eta * b_k
        if denom <= 0.0:
            continue  # cannot reach eta by downscaling; leave as-is
        alpha2 = eta * c_const / denom
        if alpha2 < 1.0:
            p[k] *= alpha2
    return PowerAllocation(p)


def bisection_power(
    s: NetworkScenario,
    gains: LinkGains,
    eta_min: float = 0.0,
    eta_max: float = 1500.0,
    epsilon: float = 0.01,
    max_doublings: int = 3,
    equalize: bool = True,
):
    """Max-min SINR power allocation by bisection on the target level.

    Each level is a cone-feasibility solve; the upper-level sets nest, so
    the bracket halves every iteration.  If every level in the bracket
    turns out feasible the upper end did not bound the optimum and the
    bracket is doubled (up to ``max_doublings`` times).  The returned
    allocation is the last feasible point with every user's column scaled
    to the common achieved level, making all SINRs equal.

    Returns (PowerAllocation, eta_star, BisectionState).
    """
    if np.all(gains.beta2.sum(axis=1) == 0.0) or np.any(
        gains.beta2.sum(axis=1) == 0.0
    ):
        raise DegenerateScenarioError("a user has zero gain to every UxNB")
    state = BisectionState(eta_min=eta_min, eta_max=eta_max, epsilon=epsilon)
    for attempt in range(max_doublings + 1):
        lo, hi = eta_min, eta_max
        best = None
        saw_infeasible = False
        last_feasible = None
        while hi - lo > epsilon:
            mid = 0.5 * (lo + hi)
            prog = compile_power_feasibility(s, gains, mid)
            res = solve(prog, feasibility_only=True)
            state.iterations += 1
            feasible = res.status == "optimal"
            state.history.append((mid, feasible))
            if feasible:
                lo = mid
                best = res.x.reshape(s.n_users, s.n_uxnbs)
                last_feasible = mid
            else:
                saw_infeasible = True
                hi = mid
        if best is None:
            raise DegenerateScenarioError(
                "power feasibility failed at every bisection level"
            )
        if saw_infeasible:
            break
        if attempt < max_doublings:
            log.warning(
                "bisection bracket [%g, %g] entirely feasible; doubling eta_max",
                eta_min, eta_max,
            )
            eta_max *= 2.0
            state.doublings += 1
            state.eta_max = eta_max
        else:
            break
    alloc = PowerAllocation(np.clip(best, 0.0, None) ** 2)
    eta_star = last_feasible
    if equalize:
        alloc = _equalize_sinr(s, gains, alloc, eta_star)
    state.best_alloc = alloc
    return alloc, eta_star, state


def make_sca_state(
    s: NetworkScenario, gains: LinkGains, alloc: PowerAllocation
) -> ScaState:
    """Linearization point from the current geometry and allocation."""
    k_n, m_n = s.n_users, s.n_uxnbs
    g2 = s.radio.g_tx ** 2
    mg2 = m_n * g2
    sigma2 = s.radio.sigma2_uxnb
    sigma2_h = s.radio.sigma2_haps
    x_m, x_tot = _denominator_terms(s, gains)
    p = alloc.p_km
    t_l = np.sqrt(
        mg2 * (p * gains.rho2 * (x_m + sigma2)).sum(axis=1)
        + sigma2_h * (x_tot + m_n * sigma2)
    )
    beta_l = gains.beta.copy()
    c_bar = 10.0 ** (gains.eta_db / 20.0) / math.sqrt(gains.beta0)
    coef = np.sqrt(mg2 * s.radio.n_rx * s.radio.s_rx * s.p_user)
    l_k = coef * ((alloc.t_km * beta_l) @ gains.gamma)
    zeta = float(np.min(l_k / t_l)) ** 0.5 if np.all(t_l > 0) else 0.0
    if np.any(t_l <= 0.0) or np.any(beta_l <= 0.0):
        raise DomainError("non-positive linearization point")
    return ScaState(
        x=s.uxnbs[:, 0].copy(),
        y=s.uxnbs[:, 1].copy(),
        t_l=t_l,
        beta_l=beta_l,
        zeta=zeta,
        gamma_bar=gains.gamma.copy(),
        rho_bar=gains.rho.copy(),
        c_bar=c_bar,
    )


def compile_placement_step(
    s: NetworkScenario, alloc: PowerAllocation, state: ScaState
) -> ConeProgram:
    """SCA surrogate of the placement problem as a cone program.

    Variables are [x (M), y (M), zeta, t (K), beta (K*M)] with the
    max-min target eta = zeta^4.  The 1/t and 1/beta terms are replaced
    by their first-order Taylor lower bounds at (t_l, beta_l); backhaul
    gains and excess-loss constants stay frozen at the linearization
    geometry.
    """
    if np.any(state.t_l <= 0.0) or np.any(state.beta_l <= 0.0):
        raise DomainError("non-positive linearization point")
    k_n, m_n = s.n_users, s.n_uxnbs
    n_var = 2 * m_n + 1 + k_n + k_n * m_n
    ix = lambda m: m                       # noqa: E731
    iy = lambda m: m_n + m                 # noqa: E731
    iz = 2 * m_n
    it = lambda k: 2 * m_n + 1 + k         # noqa: E731
    ib = lambda k, m: 2 * m_n + 1 + k_n + k * m_n + m   # noqa: E731

    g2 = s.radio.g_tx ** 2
    mg2 = m_n * g2
    sigma2 = s.radio.sigma2_uxnb
    sigma2_h = s.radio.sigma2_haps
    x_m, x_tot = _denominator_terms(s, gains=_GainsView(state, s))
    coef = math.sqrt(mg2 * s.radio.n_rx * s.radio.s_rx * s.p_user)
    p = alloc.p_km
    t_sqrt = alloc.t_km

    cones = []
    # (i) rotated cone ||(2 zeta, w_k - L_k)|| <= w_k + L_k with
    # w_k = 2/t_l - t_k/t_l^2 and L_k affine in beta_k.
    for k in range(k_n):
        w_lin = np.zeros(n_var)
        w_lin[it(k)] = -1.0 / state.t_l[k] ** 2
        w_const = 2.0 / state.t_l[k]
        l_lin = np.zeros(n_var)
        for m in range(m_n):
            l_lin[ib(k, m)] = coef * state.gamma_bar[m] * t_sqrt[k, m]
        a = np.zeros((2, n_var))
        a[0, iz] = 2.0
        a[1] = w_lin - l_lin
        b = np.array([0.0, w_const])
        cones.append((a, b, w_lin + l_lin, w_const))

    # (ii) distance cones: c_bar_km ||(x_uk - x_m, y_uk - y_m, z_d)|| <=
    # 2/beta_l - beta_km/beta_l^2.
    z_d = float(s.uxnbs[0, 2])
    for k in range(k_n):
        for m in range(m_n):
            c = state.c_bar[k, m]
            a = np.zeros((3, n_var))
            a[0, ix(m)] = -c
            a[1, iy(m)] = -c
            b = np.array([c * s.users[k, 0], c * s.users[k, 1], c * z_d])
            e = np.zeros(n_var)
            bl = state.beta_l[k, m]
            e[ib(k, m)] = -1.0 / bl**2
            cones.append((a, b, e, 2.0 / bl))

    # (iii) t_k bounds the root of the interference-plus-noise power,
    # a weighted norm of the beta block plus a constant.
    for k in range(k_n):
        a = np.zeros((k_n * m_n + 1, n_var))
        row = 0
        for kp in range(k_n):
            for m in range(m_n):
                w = (mg2 * state.rho_bar[m] ** 2 * p[k, m] + sigma2_h) * s.p_user
                a[row, ib(kp, m)] = math.sqrt(w)
                row += 1
        b = np.zeros(k_n * m_n + 1)
        b[row] = math.sqrt(
            mg2 * float((p[k] * state.rho_bar**2).sum()) * sigma2
            + m_n * sigma2_h * sigma2
        )
        e = np.zeros(n_var)
        e[it(k)] = 1.0
        cones.append((a, b, e, 0.0))

    # (iv)/(v) box bounds and positivity.
    lb = np.full(n_var, -np.inf)
    ub = np.full(n_var, np.inf)
    x_min, x_max, y_min, y_max = s.area
    lb[:m_n] = x_min
    ub[:m_n] = x_max
    lb[m_n : 2 * m_n] = y_min
    ub[m_n : 2 * m_n] = y_max
    lb[iz] = 0.0
    ub[iz] = (4.0 * max(state.zeta, 1.0) ** 4 + 1500.0) ** 0.25
    lb[2 * m_n + 1 :] = 0.0
    beta_cap = 1.0 / (np.min(state.c_bar) * z_d)
    ub[2 * m_n + 1 + k_n :] = 2.0 * beta_cap
    ub[2 * m_n + 1 : 2 * m_n + 1 + k_n] = 10.0 * state.t_l.max()

    c_obj = np.zeros(n_var)
    c_obj[iz] = 1.0
    return ConeProgram(c=c_obj, cones=cones, lb=lb, ub=ub)


class _GainsView:
    """Minimal gains adapter exposing beta2 for denominator constants."""

    def __init__(self, state: ScaState, s: NetworkScenario):
        self.beta2 = state.beta_l**2


def sca_placement_step(
    s: NetworkScenario, alloc: PowerAllocation, gains: LinkGains
):
    """One placement solve; returns (new_positions, residual report)."""
    state = make_sca_state(s, gains, alloc)
    prog = compile_placement_step(s, alloc, state)
    res = solve(prog, tol=1e-7)
    if res.status != "optimal":
        raise SolverError(f"placement solve failed with status {res.status}")
    m_n = s.n_uxnbs
    x_new = np.clip(res.x[:m_n], s.area[0], s.area[1])
    y_new = np.clip(res.x[m_n : 2 * m_n], s.area[2], s.area[3])
    k_n = s.n_users
    t_sol = res.x[2 * m_n + 1 : 2 * m_n + 1 + k_n]
    # Taylor lower-bound check: 1/t >= 2/t_l - t/t_l^2 for all t > 0.
    surrogate = 2.0 / state.t_l - t_sol / state.t_l**2
    with np.errstate(divide="ignore"):
        true_inv = np.where(t_sol > 0, 1.0 / np.maximum(t_sol, 1e-300), np.inf)
    residuals = {
        "zeta": float(res.x[2 * m_n]),
        "taylor_gap_min": float(np.min(true_inv - surrogate)),
        "max_violation": res.max_violation,
    }
    positions = np.column_stack([x_new, y_new, s.uxnbs[:, 2]])
    return positions, residuals


def damped_position_update(
    s: NetworkScenario,
    alloc: PowerAllocation,
    target: np.ndarray,
    fractions=(1.0, 0.5, 0.25, 0.125),
):
    """Pick the best fractional move toward the SCA target positions.

    The surrogate freezes interference gains at the old geometry, so the
    full step can overshoot; evaluating the true closed form along the
    segment keeps the outer loop monotone.  Returns
    (scenario, gains, min_sinr, fraction); fraction 0 means no move.
    """
    gains0 = compute_link_gains(s)
    best = (s, gains0, closed_form_sinr(s, gains0, alloc).min_sinr()[0], 0.0)
    for frac in fractions:
        pos = s.uxnbs.copy()
        pos[:, :2] = (1.0 - frac) * s.uxnbs[:, :2] + frac * target[:, :2]
        cand = s.with_uxnb_positions(pos)
        g = compute_link_gains(cand)
        mn = closed_form_sinr(cand, g, alloc).min_sinr()[0]
        if mn > best[2]:
            best = (cand, g, mn, frac)
    return best


def bcd_optimize(
    s: NetworkScenario,
    max_outer: int = 10,
    tol: float = 1e-3,
    eta_max: float = 1500.0,
    epsilon: float = 0.01,
) -> OptimizationTrace:
    """Joint placement and power optimization by block coordinate descent.

    Each outer iteration runs one SCA placement step at the current
    allocation, recomputes the true gains at the moved positions, then a
    full bisection power solve.  A move that lowers the true min-SINR is
    reverted (the surrogate is a lower bound only at the returned point,
    so a rare degrading step is possible) and the loop stops.
    """
    trace = OptimizationTrace()
    cur = s
    gains = compute_link_gains(cur)
    alloc, eta, bstate = bisection_power(
        cur, gains, eta_max=eta_max, epsilon=epsilon
    )
    report = closed_form_sinr(cur, gains, alloc)
    best_min = report.min_sinr()[0]
    trace.iterations.append(
        {
            "min_sinr": best_min,
            "min_rate_bps_hz": float(rate_from_sinr(best_min)),
            "eta": eta,
            "bisection_iters": bstate.iterations,
            "positions": cur.uxnbs.copy(),
            "alloc": alloc,
            "sca_residuals": None,
        }
    )
    for outer in range(1, max_outer + 1):
        try:
            positions, residuals = sca_placement_step(cur, alloc, gains)
        except SolverError as exc:
            raise SolverError(f"outer iteration {outer}: {exc}") from exc
        # The surrogate freezes interference gains at the old geometry, so
        # the full step can overshoot; back off along the segment and keep
        # the first fraction whose re-optimized min-SINR improves.
        accepted = None
        iters_this_outer = 0
        for frac in (1.0, 0.5, 0.25, 0.125):
            pos = cur.uxnbs.copy()
            pos[:, :2] = (1.0 - frac) * cur.uxnbs[:, :2] + frac * positions[:, :2]
            cand = cur.with_uxnb_positions(pos)
            cand_gains = compute_link_gains(cand)
            cand_alloc, cand_eta, cand_state = bisection_power(
                cand, cand_gains, eta_max=eta_max, epsilon=epsilon
            )
            iters_this_outer += cand_state.iterations
            cand_min = closed_form_sinr(
                cand, cand_gains, cand_alloc
            ).min_sinr()[0]
            if cand_min > best_min:
                accepted = (cand, cand_gains, cand_alloc, cand_eta, cand_min)
                residuals["move_fraction"] = frac
                break
        if accepted is None:
            log.info(
                "outer %d: no placement fraction improved min-SINR %.6g; "
                "stopping", outer, best_min,
            )
            trace.converged = True
            break
        cand, cand_gains, cand_alloc, cand_eta, cand_min = accepted
        cand_state.iterations = iters_this_outer
        improvement = cand_min - best_min
        cur, gains, alloc, eta = cand, cand_gains, cand_alloc, cand_eta
        best_min = cand_min
        trace.iterations.append(
            {
                "min_sinr": best_min,
                "min_rate_bps_hz": float(rate_from_sinr(best_min)),
                "eta": eta,
                "bisection_iters": cand_state.iterations,
                "positions": cur.uxnbs.copy(),
                "alloc": alloc,
                "sca_residuals": residuals,
            }
        )
        if improvement < tol * max(best_min, 1.0):
            trace.converged = True
            break
    return trace
