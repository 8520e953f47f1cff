"""Dense second-order cone solver (log-barrier interior point).

Problems are stated in the standard form

    maximize    c^T x
    subject to  || A_i x + b_i || <= e_i^T x + d_i     (cones)
                g_j^T x <= h_j                          (linear rows)
                lb <= x <= ub                           (bounds)

and solved with a two-phase scheme: phase I minimizes a single shared
slack added to every constraint to find a strictly feasible point (the
problem is feasible iff the optimal slack is <= tol), then a standard
logarithmic-barrier path following with damped Newton steps.  All linear
algebra is dense; sizes here are a few hundred variables at most.

The implementation normalizes rows per cone and equilibrates columns
before solving because channel-gain coefficients span ~16 orders of
magnitude.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError, ValidationError


@dataclass
class ConeProgram:
    """A second-order cone program in standard inequality form."""

    c: np.ndarray                       # (n,) objective, maximized
    cones: list = field(default_factory=list)   # (A, b, e, d) tuples
    lin_g: np.ndarray = None            # (p, n) rows g_j
    lin_h: np.ndarray = None            # (p,)
    lb: np.ndarray = None               # (n,), -inf allowed
    ub: np.ndarray = None               # (n,), +inf allowed

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        norm = []
        for A, b, e, d in self.cones:
            A = np.atleast_2d(np.asarray(A, dtype=float))
            if A.size == 0:
                A = A.reshape(0, n)
            b = np.atleast_1d(np.asarray(b, dtype=float))
            e = np.asarray(e, dtype=float)
            if A.shape[1] != n or e.shape != (n,) or b.shape[0] != A.shape[0]:
                raise ValidationError("inconsistent cone dimensions")
            norm.append((A, b, e, float(d)))
        self.cones = norm
        if self.lin_g is None:
            self.lin_g = np.zeros((0, n))
            self.lin_h = np.zeros(0)
        else:
            self.lin_g = np.atleast_2d(np.asarray(self.lin_g, dtype=float))
            self.lin_h = np.atleast_1d(np.asarray(self.lin_h, dtype=float))
            if self.lin_g.shape != (self.lin_h.shape[0], n):
                raise ValidationError("inconsistent linear-row dimensions")
        self.lb = (
            np.full(n, -np.inf) if self.lb is None
            else np.asarray(self.lb, dtype=float)
        )
        self.ub = (
            np.full(n, np.inf) if self.ub is None
            else np.asarray(self.ub, dtype=float)
        )
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValidationError("bounds must have length n")
        if np.any(self.lb > self.ub):
            raise ValidationError("lb > ub")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def to_dict(self) -> dict:
        return {
            "c": self.c.tolist(),
            "cones": [
                {"A": A.tolist(), "b": b.tolist(), "e": e.tolist(), "d": d}
                for A, b, e, d in self.cones
            ],
            "lin_g": self.lin_g.tolist(),
            "lin_h": self.lin_h.tolist(),
            "lb": [None if not np.isfinite(v) else v for v in self.lb],
            "ub": [None if not np.isfinite(v) else v for v in self.ub],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ConeProgram":
        lb = [(-np.inf if v is None else v) for v in d["lb"]]
        ub = [(np.inf if v is None else v) for v in d["ub"]]
        return cls(
            c=np.array(d["c"]),
            cones=[(c["A"], c["b"], c["e"], c["d"]) for c in d["cones"]],
            lin_g=np.array(d["lin_g"]) if d["lin_g"] else None,
            lin_h=np.array(d["lin_h"]) if d["lin_g"] else None,
            lb=np.array(lb),
            ub=np.array(ub),
        )


@dataclass
class SolveResult:
    """Outcome of one solve call."""

    x: np.ndarray
    status: str                 # optimal | infeasible | max_iter
    objective: float
    barrier_iterations: int
    newton_iterations: int
    phase1_slack: float = math.nan
    max_violation: float = math.nan


def check_point(prog: ConeProgram, x: np.ndarray) -> float:
    """Worst constraint violation of x (<= 0 means feasible)."""
    worst = -np.inf
    for A, b, e, d in prog.cones:
        worst = max(worst, np.linalg.norm(A @ x + b) - (e @ x + d))
    if prog.lin_g.shape[0]:
        worst = max(worst, float(np.max(prog.lin_g @ x - prog.lin_h)))
    worst = max(worst, float(np.max(prog.lb - x, initial=-np.inf)))
    worst = max(worst, float(np.max(x - prog.ub, initial=-np.inf)))
    return worst


class _Barrier:
    """Barrier terms for a conic feasibility region in equilibrated coords."""

    def __init__(self, cones, lin_g, lin_h, lb, ub):
        self.cones = [
            (A, b, e, d, 2.0 * (A.T @ A) - 2.0 * np.outer(e, e))
            for A, b, e, d in cones
        ]
        # Flattened curvature stack lets the Hessian accumulate as one
        # matrix-vector product instead of a Python loop over cones.
        n = cones[0][2].shape[0] if cones else 0
        if cones and len(cones) * n * n <= 50_000_000:
            self.curv_flat = np.stack(
                [c[4].reshape(-1) for c in self.cones]
            )
        else:
            self.curv_flat = None
        self.lin_g = lin_g
        self.lin_h = lin_h
        self.lb = lb
        self.ub = ub
        self.n_terms = (
            len(cones)
            + lin_g.shape[0]
            + int(np.isfinite(lb).sum())
            + int(np.isfinite(ub).sum())
        )

    def value(self, x):
        total = 0.0
        for A, b, e, d, _ in self.cones:
            u = A @ x + b
            v = e @ x + d
            z = v * v - u @ u
            if v <= 0.0 or z <= 0.0:
                return np.inf
            total -= math.log(z)
        if self.lin_g.shape[0]:
            slack = self.lin_h - self.lin_g @ x
            if np.any(slack <= 0.0):
                return np.inf
            total -= float(np.sum(np.log(slack)))
        fin_l = np.isfinite(self.lb)
        fin_u = np.isfinite(self.ub)
        sl = x[fin_l] - self.lb[fin_l]
        su = self.ub[fin_u] - x[fin_u]
        if np.any(sl <= 0.0) or np.any(su <= 0.0):
            return np.inf
        total -= float(np.sum(np.log(sl)) + np.sum(np.log(su)))
        return total

    def grad_hess(self, x):
        n = x.shape[0]
        g = np.zeros(n)
        h = np.zeros((n, n))
        if self.cones:
            n_c = len(self.cones)
            gz_mat = np.empty((n_c, n))
            z_arr = np.empty(n_c)
            for i, (A, b, e, d, curv) in enumerate(self.cones):
                u = A @ x + b
                v = e @ x + d
                z_arr[i] = v * v - u @ u
                gz_mat[i] = 2.0 * v * e - 2.0 * (A.T @ u)
            inv_z = 1.0 / z_arr
            g -= gz_mat.T @ inv_z
            scaled = gz_mat * inv_z[:, None]
            h += scaled.T @ scaled
            if self.curv_flat is not None:
                h += (self.curv_flat.T @ inv_z).reshape(n, n)
            else:
                for i, (_, _, _, _, curv) in enumerate(self.cones):
                    h += curv * inv_z[i]
        if self.lin_g.shape[0]:
            slack = self.lin_h - self.lin_g @ x
            g += self.lin_g.T @ (1.0 / slack)
            h += (self.lin_g.T / slack**2) @ self.lin_g
        fin_l = np.isfinite(self.lb)
        fin_u = np.isfinite(self.ub)
        sl = x - self.lb
        su = self.ub - x
        g[fin_l] -= 1.0 / sl[fin_l]
        g[fin_u] += 1.0 / su[fin_u]
        diag = np.zeros(n)
        diag[fin_l] += 1.0 / sl[fin_l] ** 2
        diag[fin_u] += 1.0 / su[fin_u] ** 2
        h[np.diag_indices(n)] += diag
        return g, h


def _newton_minimize(obj_c, barrier, x0, t, tol=1e-9, max_iter=60, stop=None):
    """Minimize t * obj_c^T x + barrier(x) by damped Newton from x0.

    ``stop(x)`` may end the descent early (phase-I strict-feasibility
    shortcut; any later iterate only decreases the same objective).
    """
    x = x0.copy()
    iters = 0
    if stop is not None and stop(x):
        return x, iters
    for _ in range(max_iter):
        iters += 1
        g_b, h_b = barrier.grad_hess(x)
        grad = t * obj_c + g_b
        hess = h_b
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            ridge = 1e-12 * np.trace(hess) / hess.shape[0] + 1e-300
            step = np.linalg.solve(hess + ridge * np.eye(hess.shape[0]), -grad)
        decrement = float(-grad @ step)
        if decrement < 0.0:
            # Hessian numerically indefinite; fall back to gradient descent.
            step = -grad / max(np.linalg.norm(grad), 1e-300)
            decrement = float(-grad @ step)
        if decrement / 2.0 < tol:
            break
        f0 = t * float(obj_c @ x) + barrier.value(x)
        alpha = 1.0
        while alpha > 1e-14:
            xn = x + alpha * step
            fn = t * float(obj_c @ xn) + barrier.value(xn)
            if np.isfinite(fn) and fn <= f0 - 1e-4 * alpha * decrement:
                break
            alpha *= 0.5
        else:
            break
        x = xn
        if stop is not None and stop(x):
            break
    return x, iters


def _barrier_solve(obj_c, barrier, x0, tol, mu=20.0, t0=1.0, max_outer=80,
                   stop=None):
    """Path-following loop; stop(x) may end early (phase I shortcut)."""
    x = x0
    t = t0
    newton_total = 0
    outer = 0
    while outer < max_outer:
        outer += 1
        x, it = _newton_minimize(obj_c, barrier, x, t)
        newton_total += it
        if stop is not None and stop(x):
            break
        if barrier.n_terms / t < tol:
            break
        t *= mu
    return x, outer, newton_total


def _equilibrate(prog: ConeProgram):
    """Column scaling x = D xt making constraint columns O(1)."""
    n = prog.n
    colmax = np.abs(prog.c).astype(float)
    for A, b, e, d in prog.cones:
        if A.shape[0]:
            colmax = np.maximum(colmax, np.abs(A).max(axis=0))
        colmax = np.maximum(colmax, np.abs(e))
    if prog.lin_g.shape[0]:
        colmax = np.maximum(colmax, np.abs(prog.lin_g).max(axis=0))
    fin = np.isfinite(prog.ub) & (prog.ub != 0)
    colmax[fin] = np.maximum(colmax[fin], 1.0 / np.abs(prog.ub[fin]))
    colmax[colmax == 0.0] = 1.0
    d_scale = 2.0 ** -np.round(np.log2(colmax))
    return d_scale


def _scaled_parts(prog: ConeProgram, d_scale):
    """Cones/rows in equilibrated coordinates with per-cone row scaling."""
    cones = []
    for A, b, e, d in prog.cones:
        As = A * d_scale
        es = e * d_scale
        r = max(
            np.abs(As).max(initial=0.0), np.abs(b).max(initial=0.0),
            np.abs(es).max(initial=0.0), abs(d),
        )
        r = r if r > 0 else 1.0
        cones.append((As / r, b / r, es / r, d / r))
    lin_g = prog.lin_g * d_scale
    lin_h = prog.lin_h.copy()
    for j in range(lin_g.shape[0]):
        r = max(np.abs(lin_g[j]).max(initial=0.0), abs(lin_h[j]))
        r = r if r > 0 else 1.0
        lin_g[j] /= r
        lin_h[j] /= r
    lb = prog.lb / d_scale
    ub = prog.ub / d_scale
    return cones, lin_g, lin_h, lb, ub


def solve(
    prog: ConeProgram,
    tol: float = 1e-8,
    tol_feas: float = 1e-9,
    feasibility_only: bool = False,
) -> SolveResult:
    """Solve a cone program; status 'infeasible' when phase I fails.

    With ``feasibility_only`` the solver returns right after phase I with
    any strictly feasible point (used by bisection, which only needs the
    feasible/infeasible verdict).
    """
    n = prog.n
    d_scale = _equilibrate(prog)
    cones, lin_g, lin_h, lb, ub = _scaled_parts(prog, d_scale)

    # ---- phase I: shared slack s, minimize s ----
    x0 = np.zeros(n)
    fin_both = np.isfinite(lb) & np.isfinite(ub)
    x0[fin_both] = 0.5 * (lb[fin_both] + ub[fin_both])
    only_l = np.isfinite(lb) & ~np.isfinite(ub)
    only_u = ~np.isfinite(lb) & np.isfinite(ub)
    x0[only_l] = lb[only_l] + 1.0
    x0[only_u] = ub[only_u] - 1.0
    cones1 = []
    unit = np.zeros(n + 1)
    unit[n] = 1.0
    for A, b, e, d in cones:
        A1 = np.hstack([A, np.zeros((A.shape[0], 1))])
        e1 = np.append(e, 1.0)
        cones1.append((A1, b, e1, d))
    if lin_g.shape[0]:
        g1 = np.hstack([lin_g, -np.ones((lin_g.shape[0], 1))])
    else:
        g1 = np.zeros((0, n + 1))
    # bounds become linear rows so the slack can relax them too
    fin_l = np.isfinite(lb)
    fin_u = np.isfinite(ub)
    rows_l = np.hstack([-np.eye(n)[fin_l], -np.ones((fin_l.sum(), 1))])
    rows_u = np.hstack([np.eye(n)[fin_u], -np.ones((fin_u.sum(), 1))])
    g_all = np.vstack([g1, rows_l, rows_u])
    h_all = np.concatenate([lin_h, -lb[fin_l], ub[fin_u]])

    viol0 = max(
        max(
            (np.linalg.norm(A @ x0 + b) - (e @ x0 + d) for A, b, e, d in cones),
            default=-np.inf,
        ),
        float(np.max(g_all[:, :n] @ x0 - h_all, initial=-np.inf)),
    )
    s0 = viol0 + 1.0 if np.isfinite(viol0) else 1.0
    z0 = np.append(x0, s0)
    bar1 = _Barrier(
        cones1, g_all, h_all,
        np.append(np.full(n, -np.inf), -np.inf),
        np.append(np.full(n, np.inf), s0 + 1.0),
    )
    strict_margin = 10.0 * tol_feas

    # Inline path-following on the slack with two early exits: a strictly
    # feasible point (s below -margin) or an infeasibility certificate
    # (barrier gap lower-bounds s* above tol_feas).
    z_opt = z0
    t = 1.0
    mu = 20.0
    out1 = 0
    newt1 = 0
    stop1 = (
        (lambda z: z[n] < -strict_margin) if feasibility_only else None
    )
    while out1 < 80:
        out1 += 1
        z_opt, it = _newton_minimize(unit, bar1, z_opt, t, stop=stop1)
        newt1 += it
        if z_opt[n] < -strict_margin:
            break
        if z_opt[n] - bar1.n_terms / t > tol_feas:
            break
        if bar1.n_terms / t < tol_feas:
            break
        t *= mu
    s_star = float(z_opt[n])
    x_feas = z_opt[:n]
    if s_star > tol_feas:
        x_ret = x_feas * d_scale
        return SolveResult(
            x=x_ret, status="infeasible",
            objective=float(prog.c @ x_ret),
            barrier_iterations=out1, newton_iterations=newt1,
            phase1_slack=s_star, max_violation=check_point(prog, x_ret),
        )
    if feasibility_only:
        x_ret = x_feas * d_scale
        return SolveResult(
            x=x_ret, status="optimal",
            objective=float(prog.c @ x_ret),
            barrier_iterations=out1, newton_iterations=newt1,
            phase1_slack=s_star, max_violation=check_point(prog, x_ret),
        )

    # ---- phase II: maximize c^T x from the strictly feasible point ----
    if s_star > -strict_margin:
        # feasible but not strictly; nudge by re-running phase I a bit
        # deeper is pointless -- accept the boundary point as optimal-ish.
        x_ret = x_feas * d_scale
        return SolveResult(
            x=x_ret, status="optimal",
            objective=float(prog.c @ x_ret),
            barrier_iterations=out1, newton_iterations=newt1,
            phase1_slack=s_star, max_violation=check_point(prog, x_ret),
        )
    bar2 = _Barrier(cones, lin_g, lin_h, lb, ub)
    c_sc = prog.c * d_scale
    c_norm = np.linalg.norm(c_sc)
    obj = -c_sc / c_norm if c_norm > 0 else np.zeros(n)
    x_opt, out2, newt2 = _barrier_solve(obj, bar2, x_feas, tol=tol)
    x_ret = x_opt * d_scale
    viol = check_point(prog, x_ret)
    if viol > math.sqrt(tol_feas):
        raise SolverError(f"phase II left the feasible set (violation {viol:g})")
    return SolveResult(
        x=x_ret, status="optimal",
        objective=float(prog.c @ x_ret),
        barrier_iterations=out1 + out2,
        newton_iterations=newt1 + newt2,
        phase1_slack=s_star, max_violation=viol,
    )
