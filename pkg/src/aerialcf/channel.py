"""Deterministic channel quantities and random channel sampling.

Access links (user -> UxNB, sub-6 GHz) use an elevation-dependent
LoS-probability model with Rician small-scale fading; backhaul links
(UxNB -> HAPS, sub-THz) are pure LoS with free-space loss plus
Beer-Lambert molecular absorption.  Steering vectors assume
half-wavelength UPA spacing and unit-gain omnidirectional elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GeometryError
from .scenario import (
    SPEED_OF_LIGHT,
    AccessGeometry,
    BackhaulGeometry,
    Environment,
    NetworkScenario,
    RadioParams,
    access_geometry,
    backhaul_geometry,
)


@dataclass(frozen=True)
class AccessGain:
    """Large-scale quantities of one user->UxNB link (linear power units)."""

    beta2_km: float   # mean channel power gain per element
    p_los: float
    eta_km: float     # linear excess-loss factor
    beta0: float      # gain at the 1 m reference distance


@dataclass(frozen=True)
class BackhaulGain:
    """Large-scale quantities of one UxNB->HAPS link."""

    rho2_m: float     # free-space power gain
    tau_m: float      # Beer-Lambert transmittance, in (0, 1]
    gamma2_m: float   # rho2_m * tau_m
    h_e_m: float      # slant effective medium height, m


def reference_gain(freq_hz: float) -> float:
    """Free-space power gain at the 1 m reference distance."""
    return (4.0 * math.pi * freq_hz / SPEED_OF_LIGHT) ** -2


def los_probability(theta_deg: float, env: Environment) -> float:
    """Probability of a LoS access link at elevation ``theta_deg``.

    Logistic in the elevation angle: 1 / (1 + A exp(-B (theta - A))).
    """
    if not 0.0 <= theta_deg <= 90.0:
        raise DomainError(f"elevation angle {theta_deg} outside [0, 90] degrees")
    return 1.0 / (1.0 + env.a * math.exp(-env.b * (theta_deg - env.a)))


def access_gain(geom: AccessGeometry, radio: RadioParams, env: Environment) -> AccessGain:
    """Mean access-link power gain from geometry and environment."""
    if geom.d_km < 1.0:
        raise DomainError(
            f"access distance {geom.d_km} m below the 1 m reference distance"
        )
    beta0 = reference_gain(radio.f_sub6)
    p_los = los_probability(geom.theta_deg, env)
    eta_db = p_los * env.eta_los_db + (1.0 - p_los) * env.eta_nlos_db
    eta = 10.0 ** (-eta_db / 10.0)
    beta2 = eta * beta0 * geom.d_km ** -2
    return AccessGain(beta2_km=beta2, p_los=p_los, eta_km=eta, beta0=beta0)


def backhaul_gain(
    geom: BackhaulGeometry,
    radio: RadioParams,
    ka_db_km: float,
    he_m: float,
    haps_height: float,
    uxnb_height: float,
) -> BackhaulGain:
    """Backhaul power gain: free-space loss times Beer-Lambert transmittance.

    ``he_m`` is the nadir effective medium height in m; the slant value
    scales with d_m / (h_HAPS - z_d).
    """
    if geom.d_m <= 1.0:
        raise DomainError(f"backhaul distance {geom.d_m} m too short")
    if haps_height <= uxnb_height:
        raise GeometryError("HAPS must be above the UxNB")
    gamma0 = reference_gain(radio.f_thz)
    rho2 = gamma0 * geom.d_m ** -2
    h_e_slant = he_m * geom.d_m / (haps_height - uxnb_height)
    tau = 10.0 ** (-(ka_db_km * h_e_slant / 1000.0) / 10.0)
    return BackhaulGain(rho2_m=rho2, tau_m=tau, gamma2_m=rho2 * tau, h_e_m=h_e_slant)


def _upa_steering(
    n_w: int, n_l: int, theta_deg: float, phi_rad: float, bulk_phase_cycles: float
) -> np.ndarray:
    """Unit-modulus UPA steering entries, row-major over (w, l).

    Half-wavelength spacing makes the per-element increment
    pi * sin(theta) * {cos, sin}(phi); ``bulk_phase_cycles`` is d/lambda
    for the common distance term (0 when absent).
    """
    st = math.sin(math.radians(theta_deg))
    aw = math.pi * st * math.cos(phi_rad)
    al = math.pi * st * math.sin(phi_rad)
    iw = np.arange(n_w)[:, None]
    il = np.arange(n_l)[None, :]
    phase = 2.0 * math.pi * bulk_phase_cycles + aw * iw + al * il
    return np.exp(1j * phase).reshape(-1)


def steering_access(geom: AccessGeometry, radio: RadioParams) -> np.ndarray:
    """Receive steering vector of a UxNB toward one user (length N)."""
    return _upa_steering(
        radio.n_w, radio.n_l, geom.theta_deg, geom.phi_rad,
        geom.d_km / radio.lambda_sub6,
    )


def steering_backhaul_tx(geom: BackhaulGeometry, radio: RadioParams) -> np.ndarray:
    """Transmit steering vector of a UxNB toward the HAPS (length G)."""
    return _upa_steering(
        radio.g_w, radio.g_l, geom.theta_deg, geom.phi_rad,
        geom.d_m / radio.lambda_thz,
    )


def steering_backhaul_rx(geom: BackhaulGeometry, radio: RadioParams) -> np.ndarray:
    """HAPS receive steering vector for one UxNB (length S, no bulk phase)."""
    return _upa_steering(radio.s_w, radio.s_l, geom.theta_deg, geom.phi_rad, 0.0)


def sample_access_channel(
    beta2: float, p_los: float, steering: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One Rician draw of the access channel across the receive UPA.

    h_n = sqrt(beta2) (sqrt(p_los) a_n + sqrt(1 - p_los) w_n) with w_n
    i.i.d. standard complex Gaussian, so E|h_n|^2 = beta2.
    """
    n = steering.shape[0]
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    return math.sqrt(beta2) * (
        math.sqrt(p_los) * steering + math.sqrt(1.0 - p_los) * w
    )


@dataclass(frozen=True)
class LinkGains:
    """Vectorized large-scale gains for a whole scenario.

    Access arrays are (K, M); backhaul arrays are (M,).  ``p_los`` may be
    overridden (e.g. forced to 1) for oracle runs.
    """

    beta2: np.ndarray     # (K, M)
    p_los: np.ndarray     # (K, M)
    eta_db: np.ndarray    # (K, M), mean excess loss in dB
    beta0: float
    rho2: np.ndarray      # (M,)
    tau: np.ndarray       # (M,)
    gamma2: np.ndarray    # (M,)

    @property
    def beta(self) -> np.ndarray:
        return np.sqrt(self.beta2)

    @property
    def gamma(self) -> np.ndarray:
        return np.sqrt(self.gamma2)

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(self.rho2)


def compute_link_gains(s: NetworkScenario, p_los_override: float = None) -> LinkGains:
    """Evaluate all access and backhaul large-scale gains of a scenario."""
    k_n, m_n = s.n_users, s.n_uxnbs
    beta2 = np.empty((k_n, m_n))
    p_los = np.empty((k_n, m_n))
    eta_db = np.empty((k_n, m_n))
    beta0 = reference_gain(s.radio.f_sub6)
    for k in range(k_n):
        for m in range(m_n):
            geom = access_geometry(s, k, m)
            p = (
                p_los_override
                if p_los_override is not None
                else los_probability(geom.theta_deg, s.env)
            )
            e_db = p * s.env.eta_los_db + (1.0 - p) * s.env.eta_nlos_db
            p_los[k, m] = p
            eta_db[k, m] = e_db
            beta2[k, m] = 10.0 ** (-e_db / 10.0) * beta0 * geom.d_km ** -2
    rho2 = np.empty(m_n)
    tau = np.empty(m_n)
    for m in range(m_n):
        bg = backhaul_gain(
            backhaul_geometry(s, m),
            s.radio,
            s.absorption_ka,
            s.effective_height_he,
            s.haps[2],
            s.uxnbs[m, 2],
        )
        rho2[m] = bg.rho2_m
        tau[m] = bg.tau_m
    return LinkGains(
        beta2=beta2, p_los=p_los, eta_db=eta_db, beta0=beta0,
        rho2=rho2, tau=tau, gamma2=rho2 * tau,
    )


def terrestrial_link_gains(
    s: NetworkScenario, path_loss_exponent: float = 3.7
) -> LinkGains:
    """Rayleigh (NLoS-only) access gains with an ideal wired backhaul.

    Access gain is beta0 * d^-exponent with p_los = 0; the backhaul stage
    is a dimensionless pass-through (rho = gamma = tau = 1).
    """
    k_n, m_n = s.n_users, s.n_uxnbs
    beta0 = reference_gain(s.radio.f_sub6)
    beta2 = np.empty((k_n, m_n))
    for k in range(k_n):
        for m in range(m_n):
            d = access_geometry(s, k, m).d_km
            beta2[k, m] = beta0 * d ** -path_loss_exponent
    ones = np.ones(m_n)
    return LinkGains(
        beta2=beta2,
        p_los=np.zeros((k_n, m_n)),
        eta_db=np.zeros((k_n, m_n)),
        beta0=beta0,
        rho2=ones,
        tau=ones.copy(),
        gamma2=ones.copy(),
    )
