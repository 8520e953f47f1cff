"""Comparison schemes: aerial cellular and terrestrial cell-free.

Neither baseline has its own closed form; both are restrictions/limits
of the cell-free SINR expression.  Aerial cellular keeps the full HAPS
backhaul but forwards each user from a single serving UxNB; terrestrial
cell-free keeps distributed match filtering but assumes a perfect wired
fronthaul (the backhaul stage becomes a dimensionless pass-through and
the HAPS noise vanishes, at which point the array sizes G and S cancel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkGains
from .errors import ValidationError
from .rate import PowerAllocation, SinrReport, closed_form_sinr, rate_from_sinr
from .scenario import NetworkScenario


@dataclass(frozen=True)
class Association:
    """Single-serving-UxNB mapping for the cellular baseline."""

    serving: np.ndarray   # (K,) UxNB index per user
    load: np.ndarray      # (M,) served-user count per UxNB

    def __post_init__(self):
        if int(self.load.sum()) != self.serving.shape[0]:
            raise ValidationError("association loads do not sum to K")


def associate_max_gain(gains: LinkGains, n_uxnbs: int) -> Association:
    """Serve each user from its strongest UxNB; ties to the lowest index."""
    serving = np.argmax(gains.beta2, axis=1)
    load = np.bincount(serving, minlength=n_uxnbs)
    return Association(serving=serving, load=load)


def cellular_allocation(
    s: NetworkScenario, assoc: Association
) -> PowerAllocation:
    """Each UxNB splits its budget uniformly among its served users."""
    p = np.zeros((s.n_users, s.n_uxnbs))
    for k, m in enumerate(assoc.serving):
        p[k, m] = s.p_uxnb / assoc.load[m]
    return PowerAllocation(p)


def aerial_cellular_sinr(s: NetworkScenario, gains: LinkGains):
    """Cellular-baseline SINR: single-UxNB forwarding over the HAPS link.

    The restricted allocation zeroes every non-serving entry, which
    removes the corresponding coherent numerator contributions while all
    interference terms (co-forwarded users, forwarded noise, HAPS noise)
    remain.  Returns (SinrReport, Association).
    """
    assoc = associate_max_gain(gains, s.n_uxnbs)
    alloc = cellular_allocation(s, assoc)
    report = closed_form_sinr(s, gains, alloc, scheme="aerial_cellular")
    return report, assoc


def make_terrestrial(s: NetworkScenario, ap_height: float = 10.0) -> NetworkScenario:
    """Terrestrial variant: same grid, access points at ground height."""
    positions = s.uxnbs.copy()
    positions[:, 2] = ap_height
    return NetworkScenario(
        users=s.users,
        uxnbs=positions,
        haps=s.haps,
        area=s.area,
        radio=s.radio,
        env=s.env,
        absorption_ka=s.absorption_ka,
        effective_height_he=s.effective_height_he,
        p_user=s.p_user,
        p_uxnb=s.p_uxnb,
    )


def terrestrial_max_min_power(s: NetworkScenario, gains: LinkGains):
    """Optimal forwarded-power weighting for the ideal-fronthaul SINR.

    With no hub noise the SINR is invariant to scaling a user's own
    column, so only the direction of each column matters and the users
    decouple: maximizing the Rayleigh quotient
    (sum_m d_m beta_km)^2 / sum_m d_m^2 (x_m + sigma^2) per user gives
    d_km proportional to beta_km / (x_m + sigma^2) and optimum
    SINR_k = N P_k sum_m beta_km^2 / (x_m + sigma^2).  Columns are
    rescaled uniformly to fit the per-UxNB budgets (any positive scale
    achieves the same SINRs).  Returns (PowerAllocation, eta_star) where
    eta_star = min_k SINR_k.
    """
    sigma2 = s.radio.sigma2_uxnb
    x_m = gains.beta2.sum(axis=0) * s.p_user
    t = gains.beta / (x_m + sigma2)              # (K, M) per-user directions
    col_norm = np.sqrt((t ** 2).sum(axis=0))     # (M,)
    scale = np.sqrt(s.p_uxnb) / col_norm.max()
    alloc = PowerAllocation((scale * t) ** 2)
    eta_star = float(
        (s.radio.n_rx * s.p_user * (gains.beta2 / (x_m + sigma2)).sum(axis=1)).min()
    )
    return alloc, eta_star


def terrestrial_cellfree_sinr(
    s: NetworkScenario, gains: LinkGains, alloc: PowerAllocation
) -> SinrReport:
    """Cell-free uplink SINR with an ideal fronthaul.

    SINR_k = N P_k (sum_m sqrt(P_km) beta_km)^2 /
             sum_m P_km (sum_k' beta^2_k'm P_k' + sigma^2);
    independent of the backhaul array sizes and invariant to a uniform
    scaling of the forwarded powers P_km.
    """
    n = s.radio.n_rx
    sigma2 = s.radio.sigma2_uxnb
    x_m = gains.beta2.sum(axis=0) * s.p_user
    desired = n * s.p_user * ((alloc.t_km * gains.beta).sum(axis=1)) ** 2
    user_interf = (alloc.p_km * x_m).sum(axis=1)
    fwd_noise = alloc.p_km.sum(axis=1) * sigma2
    zeros = np.zeros(s.n_users)
    sinr = desired / (user_interf + fwd_noise)
    return SinrReport(
        sinr=sinr,
        rate=rate_from_sinr(sinr),
        desired=desired,
        user_interference=user_interf,
        forwarded_noise=fwd_noise,
        reemission=zeros,
        haps_noise=zeros.copy(),
        f_norm2=1.0,
        scheme="terrestrial_cellfree",
    )
