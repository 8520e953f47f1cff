"""Closed-form per-user SINR and achievable rate.

The SINR is the use-and-then-forget bound of the two-slot chain
(match filter at each UxNB, analog beamforming over the sub-THz backhaul,
beam combining at the HAPS).  All computation is in linear units; dB
conversion happens only at reporting boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channel import LinkGains
from .errors import DomainError, ValidationError
from .scenario import NetworkScenario


@dataclass(frozen=True)
class PowerAllocation:
    """K x M allocation of UxNB transmit power across user streams (W)."""

    p_km: np.ndarray

    def __post_init__(self):
        p = np.array(self.p_km, dtype=float)
        if p.ndim != 2:
            raise ValidationError("PowerAllocation.p_km must be a K x M matrix")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValidationError("PowerAllocation entries must be finite and >= 0")
        p.flags.writeable = False
        object.__setattr__(self, "p_km", p)

    @property
    def t_km(self) -> np.ndarray:
        """Square-root reparameterization T with T^2 = P."""
        return np.sqrt(self.p_km)

    def column_sums(self) -> np.ndarray:
        return self.p_km.sum(axis=0)

    @classmethod
    def uniform(cls, scenario: NetworkScenario) -> "PowerAllocation":
        """Each UxNB splits its budget equally among all users."""
        k, m = scenario.n_users, scenario.n_uxnbs
        return cls(np.full((k, m), scenario.p_uxnb / k))


@dataclass(frozen=True)
class SinrReport:
    """Per-user SINR/rate with the additive term breakdown.

    Terms are in the normalized units of the use-and-then-forget
    decomposition (desired power over the four interference-plus-noise
    contributions); ``sinr = desired / (sum of the other four)`` holds to
    floating-point accuracy.
    """

    sinr: np.ndarray            # (K,)
    rate: np.ndarray            # (K,) bits/s/Hz
    desired: np.ndarray         # (K,)
    user_interference: np.ndarray
    forwarded_noise: np.ndarray
    reemission: np.ndarray
    haps_noise: np.ndarray
    f_norm2: float
    scheme: str = "aerial_cellfree"

    def min_sinr(self):
        """Minimum SINR and its user index (lowest index wins ties)."""
        idx = int(np.argmin(self.sinr))
        return float(self.sinr[idx]), idx

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "sinr": self.sinr.tolist(),
            "rate_bps_hz": self.rate.tolist(),
            "terms": {
                "desired_power": self.desired.tolist(),
                "user_interference": self.user_interference.tolist(),
                "forwarded_noise": self.forwarded_noise.tolist(),
                "reemission": self.reemission.tolist(),
                "haps_noise": self.haps_noise.tolist(),
            },
            "f_norm2": self.f_norm2,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def rate_from_sinr(sinr):
    """Spectral efficiency log2(1 + SINR) in bits/s/Hz."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise DomainError("SINR must be non-negative")
    return np.log2(1.0 + sinr)


def normalization_second_moment(s: NetworkScenario, gains: LinkGains) -> float:
    """Second moment of the match-filter power-normalization factor.

    F^2 = (N / M^2) (sum_m sum_k' beta^2_{k'm} P_k' + M sigma^2), the
    closed form's statistical stand-in for the per-symbol normalizer.
    """
    n = s.radio.n_rx
    m = s.n_uxnbs
    x = float(np.sum(gains.beta2) * s.p_user)
    return (n / m**2) * (x + m * s.radio.sigma2_uxnb)


def closed_form_sinr(
    s: NetworkScenario, gains: LinkGains, alloc: PowerAllocation,
    scheme: str = "aerial_cellfree",
) -> SinrReport:
    """Closed-form use-and-then-forget SINR with the term breakdown.

    The desired power and the four impairment terms are computed from the
    term-by-term decomposition of the received combined signal; their
    ratio reproduces the single-expression closed form exactly.
    """
    if not np.all(np.isfinite(gains.beta2)):
        raise DomainError("non-finite access gains")
    n = s.radio.n_rx
    g2 = s.radio.g_tx ** 2
    s_rx = s.radio.s_rx
    m = s.n_uxnbs
    p_k = s.p_user
    sigma2 = s.radio.sigma2_uxnb
    sigma2_h = s.radio.sigma2_haps
    p = alloc.p_km
    sqrt_p = alloc.t_km
    beta = gains.beta
    gamma = gains.gamma
    rho2 = gains.rho2
    tau = gains.tau

    f2 = normalization_second_moment(s, gains)
    # per-UxNB interference mass: sum_k' beta^2_{k'm} P_k'
    x_m = gains.beta2.sum(axis=0) * p_k

    coherent = (sqrt_p * beta) @ gamma                      # (K,)
    desired = g2 * n**2 * s_rx**2 * p_k * coherent**2 / f2
    user_interf = n * s_rx * g2 / f2 * (p * (gains.gamma2 * x_m)).sum(axis=1)
    fwd_noise = n * s_rx * g2 / f2 * (p * (gains.gamma2 * sigma2)).sum(axis=1)
    reemit = (
        n * s_rx * g2 / f2
        * (p * ((1.0 - tau) * rho2 * (x_m + sigma2))).sum(axis=1)
    )
    haps_noise = np.full(s.n_users, m * s_rx * sigma2_h)

    denom = user_interf + fwd_noise + reemit + haps_noise
    sinr = desired / denom
    return SinrReport(
        sinr=sinr,
        rate=rate_from_sinr(sinr),
        desired=desired,
        user_interference=user_interf,
        forwarded_noise=fwd_noise,
        reemission=reemit,
        haps_noise=haps_noise,
        f_norm2=f2,
        scheme=scheme,
    )


def closed_form_sinr_direct(
    s: NetworkScenario, gains: LinkGains, alloc: PowerAllocation
) -> np.ndarray:
    """Single-expression evaluation of the closed-form SINR (no breakdown)."""
    n = s.radio.n_rx
    g2 = s.radio.g_tx ** 2
    s_rx = s.radio.s_rx
    m = s.n_uxnbs
    p_k = s.p_user
    sigma2 = s.radio.sigma2_uxnb
    sigma2_h = s.radio.sigma2_haps
    p = alloc.p_km
    x_m = gains.beta2.sum(axis=0) * p_k
    x_tot = float(x_m.sum())
    num = m * g2 * n * s_rx * p_k * ((alloc.t_km * gains.beta) @ gains.gamma) ** 2
    den = (
        m * g2 * (p * (gains.rho2 * x_m)).sum(axis=1)
        + m * g2 * (p * gains.rho2).sum(axis=1) * sigma2
        + sigma2_h * (x_tot + m * sigma2)
    )
    return num / den


def min_sinr(report: SinrReport):
    """Minimum SINR over users; deterministic lowest-index tie-break."""
    if report.sinr.size == 0:
        raise DomainError("empty SINR report")
    return report.min_sinr()
