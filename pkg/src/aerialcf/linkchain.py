"""Monte Carlo oracle for the closed-form SINR.

Executes the literal two-slot signal chain on sampled channels, noise and
re-emission phases: per-UxNB match filtering, per-symbol power
normalization and allocation, analog beamforming over the sub-THz hop,
and beam combining at the HAPS.  The empirical SINR uses the
use-and-then-forget estimator (deterministic decoding coefficient
E[y s*]), matching the bound semantics of the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import LinkGains, steering_access, steering_backhaul_rx
from .errors import DomainError
from .rate import PowerAllocation
from .scenario import NetworkScenario, access_geometry, backhaul_geometry


@dataclass(frozen=True)
class TrialDraw:
    """All randomness of one Monte Carlo trial.

    Unit-power constant-modulus symbols (uniform phase, so the per-symbol
    normalization stage is distortion-free), Rician channel draws across
    the receive UPAs, receiver noise at UxNBs and HAPS, and one uniform
    re-emission phase per UxNB.
    """

    symbols: np.ndarray           # (K,)
    channels: np.ndarray          # (K, M, N)
    uxnb_noise: np.ndarray        # (M, N)
    haps_noise: np.ndarray        # (K, S)
    reemission_phase: np.ndarray  # (M,)


@dataclass(frozen=True)
class EmpiricalSinr:
    """Per-user empirical use-and-then-forget SINR with diagnostics."""

    alpha: np.ndarray          # (K,) complex, estimated desired coefficient
    total_power: np.ndarray    # (K,) E|y^k|^2
    sinr: np.ndarray           # (K,)
    trials: int
    ci95: np.ndarray           # (K,) approximate half-width on sinr
    term_power: dict = field(default_factory=dict)   # name -> (K,) powers
    alpha_desired: np.ndarray = None  # (K,) complex, desired-path coefficient
    discarded: int = 0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "discarded": self.discarded,
            "sinr": self.sinr.tolist(),
            "sinr_db": (10.0 * np.log10(np.maximum(self.sinr, 1e-300))).tolist(),
            "total_power": self.total_power.tolist(),
            "ci95": self.ci95.tolist(),
            "term_power": {k: v.tolist() for k, v in self.term_power.items()},
        }


class ChainWorkspace:
    """Precomputed steering/combining quantities for one scenario."""

    def __init__(self, s: NetworkScenario, gains: LinkGains):
        self.scenario = s
        self.gains = gains
        k_n, m_n = s.n_users, s.n_uxnbs
        n = s.radio.n_rx
        self.a_km = np.empty((k_n, m_n, n), dtype=complex)
        for k in range(k_n):
            for m in range(m_n):
                self.a_km[k, m] = steering_access(access_geometry(s, k, m), s.radio)
        self.c_m = np.empty((m_n, s.radio.s_rx), dtype=complex)
        for m in range(m_n):
            self.c_m[m] = steering_backhaul_rx(backhaul_geometry(s, m), s.radio)
        # Combining weight per HAPS element: wbar_s = sum_m conj(c_ms).
        self.wbar = np.conj(self.c_m).sum(axis=0)            # (S,)
        # Effective per-UxNB combining factor sum_s wbar_s c_ms.
        self.q_comb = self.c_m @ self.wbar                   # (M,)
        self.gamma = gains.gamma
        self.reemit_amp = np.sqrt((1.0 - gains.tau) * gains.rho2)
        self.g_tx = s.radio.g_tx

    def draw_trial(self, rng: np.random.Generator) -> TrialDraw:
        """One trial's randomness, drawn in a fixed documented order."""
        s = self.scenario
        k_n, m_n = s.n_users, s.n_uxnbs
        n, s_rx = s.radio.n_rx, s.radio.s_rx

        def cn(shape, var=1.0):
            re = rng.standard_normal(shape)
            im = rng.standard_normal(shape)
            return math.sqrt(var / 2.0) * (re + 1j * im)

        symbols = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, k_n))
        diffuse = cn((k_n, m_n, n))
        beta = self.gains.beta[:, :, None]
        p = self.gains.p_los[:, :, None]
        channels = beta * (np.sqrt(p) * self.a_km + np.sqrt(1.0 - p) * diffuse)
        uxnb_noise = cn((m_n, n), var=s.radio.sigma2_uxnb)
        omega = rng.uniform(0.0, 2.0 * math.pi, m_n)
        haps_noise = cn((k_n, s_rx), var=s.radio.sigma2_haps)
        return TrialDraw(
            symbols=symbols,
            channels=channels,
            uxnb_noise=uxnb_noise,
            haps_noise=haps_noise,
            reemission_phase=omega,
        )


def _transceive_components(ws: ChainWorkspace, draw: TrialDraw, alloc: PowerAllocation):
    """Per-UxNB outputs split by origin (desired/users/noise), (K, M) each.

    Returns None for a trial hitting a zero normalization factor
    (probability-zero event, discarded by the caller).
    """
    s = ws.scenario
    sqrt_pk = math.sqrt(s.p_user)
    tx = sqrt_pk * draw.symbols                              # (K,)
    sig_mn = np.einsum("kmn,k->mn", draw.channels, tx)       # (M, N)
    y_mn = sig_mn + draw.uxnb_noise
    mf = np.conj(draw.channels) / np.abs(draw.channels)      # (K, M, N)

    comb_sig = np.einsum("mn,kmn->km", sig_mn, mf)           # all-user part
    comb_des = np.einsum("kmn,kmn->km", draw.channels, mf) * tx[:, None]
    comb_noise = np.einsum("mn,kmn->km", draw.uxnb_noise, mf)
    comb_total = comb_sig + comb_noise
    norm = np.abs(comb_total)
    if np.any(norm == 0.0):
        return None
    scale = alloc.t_km / norm                                # sqrt(P_km)/|y_comb|
    return {
        "desired": comb_des * scale,
        "users": (comb_sig - comb_des) * scale,
        "uxnb_noise": comb_noise * scale,
    }


def uxnb_transceive(
    ws: ChainWorkspace, draw: TrialDraw, m: int, alloc: PowerAllocation
) -> np.ndarray:
    """Match-filtered, normalized, power-allocated per-user outputs of UxNB m."""
    comps = _transceive_components(ws, draw, alloc)
    if comps is None:
        raise DomainError("zero normalization factor in trial")
    return sum(comps.values())[:, m]


def haps_receive(
    ws: ChainWorkspace, y_km: np.ndarray, draw: TrialDraw, with_noise: bool = True
):
    """HAPS beam combining of the forwarded signals.

    Returns (direct, reemitted, noise) contributions to the per-user
    combined output; the full receive output is their sum.
    """
    g = ws.g_tx
    direct = g * np.einsum("km,m->k", y_km, ws.q_comb * ws.gamma)
    reemit = g * np.einsum(
        "km,m->k",
        y_km,
        ws.q_comb * ws.reemit_amp * np.exp(1j * draw.reemission_phase),
    )
    noise = draw.haps_noise @ ws.wbar if with_noise else np.zeros(y_km.shape[0])
    return direct, reemit, noise


def estimate_empirical_sinr(
    s: NetworkScenario,
    gains: LinkGains,
    alloc: PowerAllocation,
    trials: int,
    seed: int,
) -> EmpiricalSinr:
    """Monte Carlo estimate of the per-user use-and-then-forget SINR.

    Each trial owns an independent child RNG stream spawned from the root
    seed, so results are bit-reproducible and independent of any batching.
    Per-term powers come from replaying the (linear) chain on each signal
    component with the trial's normalization factors held fixed.
    """
    if trials < 1000:
        raise DomainError("at least 1000 trials are required")
    ws = ChainWorkspace(s, gains)
    k_n = s.n_users
    children = np.random.SeedSequence(seed).spawn(trials)

    sum_alpha = np.zeros(k_n, dtype=complex)
    sum_alpha_des = np.zeros(k_n, dtype=complex)
    sum_ys2 = np.zeros(k_n)          # sum |y s*|^2 for the alpha CI
    sum_pow = np.zeros(k_n)
    sum_pow2 = np.zeros(k_n)
    terms = {
        name: np.zeros(k_n)
        for name in ("desired", "users", "uxnb_noise", "reemission", "haps_noise")
    }
    discarded = 0

    for child in children:
        rng = np.random.Generator(np.random.PCG64(child))
        draw = ws.draw_trial(rng)
        comps = _transceive_components(ws, draw, alloc)
        if comps is None:
            discarded += 1
            continue
        y_km_total = comps["desired"] + comps["users"] + comps["uxnb_noise"]
        d_des, _, _ = haps_receive(ws, comps["desired"], draw, with_noise=False)
        d_usr, _, _ = haps_receive(ws, comps["users"], draw, with_noise=False)
        d_nse, _, _ = haps_receive(ws, comps["uxnb_noise"], draw, with_noise=False)
        _, reemit, hn = haps_receive(ws, y_km_total, draw, with_noise=True)
        y_tot = d_des + d_usr + d_nse + reemit + hn

        cs = np.conj(draw.symbols)
        sum_alpha += y_tot * cs
        sum_alpha_des += d_des * cs
        sum_ys2 += np.abs(y_tot * cs) ** 2
        p = np.abs(y_tot) ** 2
        sum_pow += p
        sum_pow2 += p**2
        terms["desired"] += np.abs(d_des) ** 2
        terms["users"] += np.abs(d_usr) ** 2
        terms["uxnb_noise"] += np.abs(d_nse) ** 2
        terms["reemission"] += np.abs(reemit) ** 2
        terms["haps_noise"] += np.abs(hn) ** 2

    n_eff = trials - discarded
    if n_eff < 1000:
        raise DomainError("too many discarded trials")
    alpha = sum_alpha / n_eff
    alpha_des = sum_alpha_des / n_eff
    total = sum_pow / n_eff
    a2 = np.abs(alpha) ** 2
    residual = total - a2
    # Residuals below float resolution of the total power are rounding
    # noise from a distortion-free chain; report the +inf sentinel.
    floor = 1e-12 * total
    with np.errstate(divide="ignore"):
        sinr = np.where(residual > floor, a2 / np.maximum(residual, 1e-300), np.inf)

    # Delta-method CI: combine the estimator spread of |alpha|^2 and of
    # the residual power; approximate, reported rather than hidden.
    var_alpha_mean = np.maximum(sum_ys2 / n_eff - a2, 0.0) / n_eff
    std_a2 = 2.0 * np.abs(alpha) * np.sqrt(var_alpha_mean)
    var_pow_mean = np.maximum(sum_pow2 / n_eff - total**2, 0.0) / n_eff
    std_res = np.sqrt(var_pow_mean + std_a2**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.sqrt(
            (std_a2 / np.maximum(a2, 1e-300)) ** 2
            + (std_res / np.maximum(residual, 1e-300)) ** 2
        )
    ci95 = 1.96 * np.where(np.isfinite(sinr), sinr * rel, np.inf)

    return EmpiricalSinr(
        alpha=alpha,
        total_power=total,
        sinr=sinr,
        trials=n_eff,
        ci95=ci95,
        term_power={k: v / n_eff for k, v in terms.items()},
        alpha_desired=alpha_des,
        discarded=discarded,
    )


def exact_normalization_moment(
    s: NetworkScenario, gains: LinkGains
) -> np.ndarray:
    """Per-link second moment of the normalization factor, E[P_NF^2].

    For the pure-LoS case this is N^2 beta^2_{km} P_k plus the
    cross-steering user leakage plus N sigma^2; used to characterize the
    approximation baked into the closed form's statistical normalizer.
    """
    ws = ChainWorkspace(s, gains)
    k_n, m_n = s.n_users, s.n_uxnbs
    n = s.radio.n_rx
    out = np.empty((k_n, m_n))
    beta = gains.beta
    for k in range(k_n):
        for m in range(m_n):
            # steering cross-correlations |<a_k'm, a_km>|^2 at full LoS;
            # diffuse parts contribute N beta^2 per interferer instead.
            acc = 0.0
            for kp in range(k_n):
                p = gains.p_los[kp, m]
                chi2 = abs(np.vdot(ws.a_km[k, m], ws.a_km[kp, m])) ** 2
                acc += s.p_user * gains.beta2[kp, m] * (p * chi2 + (1.0 - p) * n)
            out[k, m] = acc + n * s.radio.sigma2_uxnb
    return out
