"""Network geometry and radio-parameter bookkeeping.

Holds the node layout (terrestrial users, UAV base stations, one HAPS),
the radio parameters of both hops (sub-6 GHz access, sub-THz backhaul),
and the propagation environment constants.  All angle conventions are
fixed here: elevation angles are stored in degrees, azimuth angles in
radians (atan2 convention, east = 0, counterclockwise positive).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from importlib import resources

import numpy as np

from .errors import GeometryError, ValidationError

SPEED_OF_LIGHT = 3.0e8
SCHEMA_VERSION = 1


def noise_power_w(noise_psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in W for a flat PSD (dBm/Hz) over a bandwidth."""
    return 10.0 ** ((noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz


@dataclass(frozen=True)
class RadioParams:
    """Carrier/bandwidth/noise parameters and UPA element counts.

    ``n_w x n_l`` is the receive UPA of each UxNB (sub-6 GHz),
    ``g_w x g_l`` the transmit UPA of each UxNB (sub-THz), and
    ``s_w x s_l`` the receive UPA of the HAPS (sub-THz).
    """

    f_sub6: float = 2.0e9
    f_thz: float = 120.0e9
    bandwidth: float = 1.0e6
    noise_psd: float = -174.0          # dBm/Hz
    sigma2_uxnb: float = field(default=None)  # W, per UxNB antenna element
    sigma2_haps: float = field(default=None)  # W, per HAPS antenna element
    n_w: int = 2
    n_l: int = 2
    g_w: int = 3
    g_l: int = 3
    s_w: int = 20
    s_l: int = 20

    def __post_init__(self):
        if self.sigma2_uxnb is None:
            object.__setattr__(
                self, "sigma2_uxnb", noise_power_w(self.noise_psd, self.bandwidth)
            )
        if self.sigma2_haps is None:
            object.__setattr__(
                self, "sigma2_haps", noise_power_w(self.noise_psd, self.bandwidth)
            )
        for name in ("f_sub6", "f_thz", "bandwidth"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"RadioParams.{name} must be positive")
        for name in ("n_w", "n_l", "g_w", "g_l", "s_w", "s_l"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"RadioParams.{name} must be an integer >= 1")
        for name in ("sigma2_uxnb", "sigma2_haps"):
            if getattr(self, name) < 0:
                raise ValidationError(f"RadioParams.{name} must be non-negative")

    @property
    def n_rx(self) -> int:
        return self.n_w * self.n_l

    @property
    def g_tx(self) -> int:
        return self.g_w * self.g_l

    @property
    def s_rx(self) -> int:
        return self.s_w * self.s_l

    @property
    def lambda_sub6(self) -> float:
        return SPEED_OF_LIGHT / self.f_sub6

    @property
    def lambda_thz(self) -> float:
        return SPEED_OF_LIGHT / self.f_thz


@dataclass(frozen=True)
class Environment:
    """Air-to-ground propagation constants for one environment class.

    ``a`` and ``b`` parameterize the elevation-dependent LoS probability,
    ``eta_los_db``/``eta_nlos_db`` are the excess path losses (dB) on top
    of free space for LoS/NLoS conditions.
    """

    name: str
    a: float
    b: float
    eta_los_db: float
    eta_nlos_db: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValidationError("Environment.a must be positive")
        if self.b <= 0:
            raise ValidationError("Environment.b must be positive")
        if not (self.eta_nlos_db >= self.eta_los_db >= 0):
            raise ValidationError(
                "Environment excess losses must satisfy eta_nlos_db >= eta_los_db >= 0"
            )


def _environment_table() -> dict:
    text = resources.files("aerialcf.data").joinpath("environments.json").read_text()
    return json.loads(text)


def load_environment(name: str) -> Environment:
    """Load one of the shipped environment presets (suburban/urban/dense_urban)."""
    table = _environment_table()
    if name not in table:
        raise ValidationError(
            f"unknown environment {name!r}; available: {sorted(table)}"
        )
    row = table[name]
    return Environment(name=name, **row)


@dataclass(frozen=True)
class AccessGeometry:
    """User-to-UxNB link geometry (distance m, elevation deg, azimuth rad)."""

    d_km: float
    theta_deg: float
    phi_rad: float


@dataclass(frozen=True)
class BackhaulGeometry:
    """UxNB-to-HAPS link geometry (distance m, elevation deg, azimuth rad)."""

    d_m: float
    theta_deg: float
    phi_rad: float


@dataclass(frozen=True)
class NetworkScenario:
    """Immutable snapshot of one network drop.

    ``users`` is (K, 2) ground coordinates in m, ``uxnbs`` is (M, 3) UAV
    coordinates, ``haps`` is the (3,) HAPS position.  ``area`` is
    (x_min, x_max, y_min, y_max) and bounds the UxNB flight range.
    """

    users: np.ndarray
    uxnbs: np.ndarray
    haps: np.ndarray
    area: tuple
    radio: RadioParams
    env: Environment
    absorption_ka: float = 0.5        # dB/km
    effective_height_he: float = 1600.0  # m, absorbing-layer height at nadir
    p_user: float = 0.2               # W, transmit power of each user
    p_uxnb: float = 10 ** ((25.0 - 30.0) / 10.0)  # W, total power per UxNB

    def __post_init__(self):
        users = np.array(self.users, dtype=float)
        uxnbs = np.array(self.uxnbs, dtype=float)
        haps = np.array(self.haps, dtype=float)
        if users.ndim != 2 or users.shape[1] != 2 or users.shape[0] < 1:
            raise ValidationError("NetworkScenario.users must have shape (K, 2), K >= 1")
        if uxnbs.ndim != 2 or uxnbs.shape[1] != 3 or uxnbs.shape[0] < 1:
            raise ValidationError("NetworkScenario.uxnbs must have shape (M, 3), M >= 1")
        if haps.shape != (3,):
            raise ValidationError("NetworkScenario.haps must have shape (3,)")
        x_min, x_max, y_min, y_max = self.area
        if not (x_min < x_max and y_min < y_max):
            raise ValidationError("NetworkScenario.area bounds are inverted")
        eps = 1e-9
        if (
            np.any(uxnbs[:, 0] < x_min - eps)
            or np.any(uxnbs[:, 0] > x_max + eps)
            or np.any(uxnbs[:, 1] < y_min - eps)
            or np.any(uxnbs[:, 1] > y_max + eps)
        ):
            raise ValidationError("NetworkScenario.uxnbs outside the area bounds")
        if np.any(uxnbs[:, 2] >= haps[2]):
            raise GeometryError("every UxNB must fly below the HAPS altitude")
        if self.p_user <= 0:
            raise ValidationError("NetworkScenario.p_user must be positive")
        if self.p_uxnb <= 0:
            raise ValidationError("NetworkScenario.p_uxnb must be positive")
        if self.absorption_ka < 0:
            raise ValidationError("NetworkScenario.absorption_ka must be non-negative")
        if self.effective_height_he <= 0:
            raise ValidationError("NetworkScenario.effective_height_he must be positive")
        for arr in (users, uxnbs, haps):
            arr.flags.writeable = False
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "uxnbs", uxnbs)
        object.__setattr__(self, "haps", haps)
        object.__setattr__(self, "area", tuple(float(v) for v in self.area))

    @property
    def n_users(self) -> int:
        return self.users.shape[0]

    @property
    def n_uxnbs(self) -> int:
        return self.uxnbs.shape[0]

    def with_uxnb_positions(self, xy: np.ndarray) -> "NetworkScenario":
        """Return a copy with new horizontal UxNB positions (heights kept)."""
        xy = np.asarray(xy, dtype=float)
        new = np.column_stack([xy[:, 0], xy[:, 1], self.uxnbs[:, 2]])
        return NetworkScenario(
            users=self.users,
            uxnbs=new,
            haps=self.haps,
            area=self.area,
            radio=self.radio,
            env=self.env,
            absorption_ka=self.absorption_ka,
            effective_height_he=self.effective_height_he,
            p_user=self.p_user,
            p_uxnb=self.p_uxnb,
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "users": self.users.tolist(),
            "uxnbs": self.uxnbs.tolist(),
            "haps": self.haps.tolist(),
            "area": list(self.area),
            "radio": asdict(self.radio),
            "env": asdict(self.env),
            "absorption_ka": self.absorption_ka,
            "effective_height_he": self.effective_height_he,
            "p_user": self.p_user,
            "p_uxnb": self.p_uxnb,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkScenario":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported scenario schema_version {d.get('schema_version')!r}"
            )
        return cls(
            users=np.array(d["users"], dtype=float),
            uxnbs=np.array(d["uxnbs"], dtype=float),
            haps=np.array(d["haps"], dtype=float),
            area=tuple(d["area"]),
            radio=RadioParams(**d["radio"]),
            env=Environment(**d["env"]),
            absorption_ka=d["absorption_ka"],
            effective_height_he=d["effective_height_he"],
            p_user=d["p_user"],
            p_uxnb=d["p_uxnb"],
        )

    @classmethod
    def from_json(cls, text: str) -> "NetworkScenario":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to draw one random scenario.

    Users are dropped i.i.d. uniform over the square area; UxNBs start on
    a regular ceil(sqrt(M)) grid at fixed height; the HAPS sits over the
    area center.
    """

    n_users: int = 16
    n_uxnbs: int = 16
    area_side: float = 1000.0
    uxnb_height: float = 120.0
    haps_height: float = 20000.0
    radio: RadioParams = field(default_factory=RadioParams)
    environment: str = "urban"
    absorption_ka: float = 0.5
    effective_height_he: float = 1600.0
    p_user: float = 0.2
    p_uxnb_dbm: float = 25.0

    def __post_init__(self):
        if not isinstance(self.n_users, int) or self.n_users < 1:
            raise ValidationError("ScenarioConfig.n_users must be an integer >= 1")
        if not isinstance(self.n_uxnbs, int) or self.n_uxnbs < 1:
            raise ValidationError("ScenarioConfig.n_uxnbs must be an integer >= 1")
        if self.area_side <= 0:
            raise ValidationError("ScenarioConfig.area_side must be positive")
        if not (0 < self.uxnb_height < self.haps_height):
            raise ValidationError(
                "ScenarioConfig.uxnb_height must lie in (0, haps_height)"
            )


def uxnb_grid(n_uxnbs: int, area: tuple, height: float) -> np.ndarray:
    """Regular ceil(sqrt(M)) grid placement, row-major indexing.

    The grid has spacing side/g and is inset half a spacing from the
    edges; only the first M positions (row-major in y, then x) are used.
    """
    x_min, x_max, y_min, y_max = area
    g = math.ceil(math.sqrt(n_uxnbs))
    xs = x_min + (x_max - x_min) * (np.arange(g) + 0.5) / g
    ys = y_min + (y_max - y_min) * (np.arange(g) + 0.5) / g
    pos = []
    for iy in range(g):
        for ix in range(g):
            pos.append((xs[ix], ys[iy], height))
            if len(pos) == n_uxnbs:
                return np.array(pos)
    return np.array(pos)


def build_scenario(config: ScenarioConfig, seed: int) -> NetworkScenario:
    """Draw a reproducible random scenario from a config and a seed."""
    area = (0.0, config.area_side, 0.0, config.area_side)
    rng = np.random.default_rng(seed)
    users = np.column_stack(
        [
            rng.uniform(0.0, config.area_side, config.n_users),
            rng.uniform(0.0, config.area_side, config.n_users),
        ]
    )
    uxnbs = uxnb_grid(config.n_uxnbs, area, config.uxnb_height)
    haps = np.array(
        [config.area_side / 2.0, config.area_side / 2.0, config.haps_height]
    )
    return NetworkScenario(
        users=users,
        uxnbs=uxnbs,
        haps=haps,
        area=area,
        radio=config.radio,
        env=load_environment(config.environment),
        absorption_ka=config.absorption_ka,
        effective_height_he=config.effective_height_he,
        p_user=config.p_user,
        p_uxnb=10 ** ((config.p_uxnb_dbm - 30.0) / 10.0),
    )


def access_geometry(s: NetworkScenario, k: int, m: int) -> AccessGeometry:
    """Geometry of the user k -> UxNB m access link."""
    xu, yu = s.users[k]
    xd, yd, zd = s.uxnbs[m]
    dx, dy = xu - xd, yu - yd
    d = math.sqrt(dx * dx + dy * dy + zd * zd)
    theta = math.degrees(math.asin(zd / d))
    phi = math.atan2(dy, dx)
    return AccessGeometry(d_km=d, theta_deg=theta, phi_rad=phi)


def backhaul_geometry(s: NetworkScenario, m: int) -> BackhaulGeometry:
    """Geometry of the UxNB m -> HAPS backhaul link."""
    xd, yd, zd = s.uxnbs[m]
    xh, yh, zh = s.haps
    if zd >= zh:
        raise GeometryError("UxNB height must be below the HAPS altitude")
    dx, dy, dz = xh - xd, yh - yd, zh - zd
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    theta = math.degrees(math.asin(dz / d))
    phi = math.atan2(dy, dx)
    return BackhaulGeometry(d_m=d, theta_deg=theta, phi_rad=phi)
