"""Two-tier network drops: hexagonal macro grid with pico BSs and users
dropped uniformly inside each macrocell."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid network configuration or configuration file."""


class Tier(str, enum.Enum):
    MACRO = "macro"
    PICO = "pico"


def dbm_to_w(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def w_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


@dataclass(frozen=True)
class NetworkConfig:
    # geometry
    inter_site_distance: float = 1.0  # km
    num_mbs: int = 7
    pbs_per_macrocell: int = 4
    users_per_macrocell: int = 30
    # powers (dBm) and antennas
    mbs_tx_power: float = 46.0
    pbs_tx_power: float = 30.0
    mbs_antennas: int = 100
    streams: int = 10
    mbs_amp_coeff: float = 4.0
    pbs_amp_coeff: float = 2.0
    pbs_circuit_power: float = 13.6  # W
    # macro circuit power coefficients: sum_i c_i0 S^i + M sum_i c_i1 S^i
    c00: float = 4.0
    c10: float = 4.8
    c20: float = 0.0
    c30: float = 2.08e-8
    c01: float = 1.0
    c11: float = 9.5e-8
    c21: float = 6.25e-8
    # radio
    bandwidth: float = 10e6  # Hz
    noise_psd: float = -174.0  # dBm/Hz
    shadowing_std: float = 8.0  # dB
    # linear SINR threshold, scalar or one per user
    sinr_thresholds: float | tuple[float, ...] = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if isinstance(self.sinr_thresholds, list):
            object.__setattr__(self, "sinr_thresholds", tuple(self.sinr_thresholds))
        self.validate()

    @property
    def num_users(self) -> int:
        return self.num_mbs * self.users_per_macrocell

    @property
    def num_bs(self) -> int:
        return self.num_mbs * (1 + self.pbs_per_macrocell)

    def validate(self) -> None:
        if self.num_mbs < 1 or self.users_per_macrocell < 1:
            raise ConfigError("num_mbs and users_per_macrocell must be >= 1")
        if self.pbs_per_macrocell < 0:
            raise ConfigError("pbs_per_macrocell must be >= 0")
        if not (self.mbs_antennas >= self.streams >= 1):
            raise ConfigError(
                f"need mbs_antennas >= streams >= 1, got M={self.mbs_antennas}, S={self.streams}"
            )
        positive = ("inter_site_distance", "mbs_amp_coeff", "pbs_amp_coeff",
                    "pbs_circuit_power", "bandwidth")
        for name in positive:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        for name in ("mbs_tx_power", "pbs_tx_power", "noise_psd"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.shadowing_std >= 0:
            raise ConfigError("shadowing_std must be >= 0")
        taus = np.atleast_1d(np.asarray(self.sinr_thresholds, dtype=float))
        if np.any(taus < 0) or not np.all(np.isfinite(taus)):
            raise ConfigError("sinr_thresholds must be finite and >= 0")
        if taus.size not in (1, self.num_users):
            raise ConfigError(
                f"sinr_thresholds needs 1 or {self.num_users} entries, got {taus.size}"
            )

    def thresholds(self) -> np.ndarray:
        """Per-user linear SINR thresholds, broadcast from a scalar if needed."""
        taus = np.atleast_1d(np.asarray(self.sinr_thresholds, dtype=float))
        return np.broadcast_to(taus, (self.num_users,)).copy()

    def with_updates(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


_INT_FIELDS = {"num_mbs", "pbs_per_macrocell", "users_per_macrocell",
               "mbs_antennas", "streams", "rng_seed"}


def parse_config_text(text: str, base: NetworkConfig | None = None) -> NetworkConfig:
    """Parse ``key = value`` lines (``#`` starts a comment).

    ``sinr_thresholds`` accepts a comma-separated list. Unknown or repeated
    keys raise :class:`ConfigError`.
    """
    known = {f.name for f in fields(NetworkConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key == "sinr_thresholds":
                parts = [float(p) for p in value.split(",") if p.strip()]
                values[key] = parts[0] if len(parts) == 1 else tuple(parts)
            elif key in _INT_FIELDS:
                values[key] = int(value)
            else:
                values[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return replace(base or NetworkConfig(), **values)


def load_config(path: str | Path) -> NetworkConfig:
    return parse_config_text(Path(path).read_text())


def format_config(config: NetworkConfig) -> str:
    lines = []
    for f in fields(NetworkConfig):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ", ".join(repr(v) for v in value)
        lines.append(f"{f.name} = {value!r}" if not isinstance(value, str) else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BaseStation:
    id: int
    tier: Tier
    position: tuple[float, float]  # km
    tx_power: float  # W
    amp_coeff: float
    circuit_power: float  # W
    antennas: int = 1

    def __post_init__(self):
        if self.tier is Tier.PICO and self.antennas != 1:
            raise ConfigError("pico BSs have a single antenna")
        if not self.alpha > 0:
            raise ConfigError(f"BS {self.id}: total power alpha must be positive")

    @property
    def alpha(self) -> float:
        """Total consumed power rho * p + p_c (W)."""
        return self.amp_coeff * self.tx_power + self.circuit_power


@dataclass(frozen=True)
class User:
    id: int
    position: tuple[float, float]  # km
    sinr_threshold: float = 0.0

    def __post_init__(self):
        if self.sinr_threshold < 0:
            raise ConfigError("sinr_threshold must be >= 0")


@dataclass(frozen=True)
class Scenario:
    config: NetworkConfig
    base_stations: tuple[BaseStation, ...]
    users: tuple[User, ...]
    # N x K shadowing realisation in dB, one independent draw per link
    shadow_db: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "base_stations", tuple(self.base_stations))
        object.__setattr__(self, "users", tuple(self.users))
        if not self.base_stations or not self.users:
            raise ConfigError("a scenario needs at least one BS and one user")
        tiers = [bs.tier for bs in self.base_stations]
        if tiers != sorted(tiers, key=lambda t: t is Tier.PICO):
            raise ConfigError("macro BSs must precede pico BSs")
        shape = (len(self.base_stations), len(self.users))
        shadow = np.zeros(shape) if self.shadow_db is None else np.array(self.shadow_db, dtype=float)
        if shadow.shape != shape:
            raise ConfigError(f"shadow_db must be {shape}, got {shadow.shape}")
        shadow.setflags(write=False)
        object.__setattr__(self, "shadow_db", shadow)

    @property
    def num_bs(self) -> int:
        return len(self.base_stations)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def bs_positions(self) -> np.ndarray:
        return np.array([bs.position for bs in self.base_stations], dtype=float)

    @property
    def user_positions(self) -> np.ndarray:
        return np.array([u.position for u in self.users], dtype=float)

    @property
    def is_macro(self) -> np.ndarray:
        return np.array([bs.tier is Tier.MACRO for bs in self.base_stations])

    @property
    def tx_power(self) -> np.ndarray:
        return np.array([bs.tx_power for bs in self.base_stations])

    @property
    def alpha(self) -> np.ndarray:
        return np.array([bs.alpha for bs in self.base_stations])

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([u.sinr_threshold for u in self.users])

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.config == other.config and self.base_stations == other.base_stations
                and self.users == other.users
                and np.array_equal(self.shadow_db, other.shadow_db))

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "base_stations": [
                {**asdict(bs), "tier": bs.tier.value, "position": list(bs.position)}
                for bs in self.base_stations
            ],
            "users": [{**asdict(u), "position": list(u.position)} for u in self.users],
            "shadow_db": self.shadow_db.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        config = NetworkConfig(**data["config"])
        bss = [BaseStation(**{**b, "tier": Tier(b["tier"]), "position": tuple(b["position"])})
               for b in data["base_stations"]]
        users = [User(**{**u, "position": tuple(u["position"])}) for u in data["users"]]
        return cls(config, bss, users, np.array(data["shadow_db"], dtype=float))

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "Scenario":
        if isinstance(source, Path) or not source.lstrip().startswith("{"):
            source = Path(source).read_text()
        return cls.from_dict(json.loads(source))


def _hex_axial(count: int) -> list[tuple[int, int]]:
    # center, then ring by ring, counter-clockwise from the +x direction
    out = [(0, 0)]
    directions = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
    ring = 1
    while len(out) < count:
        q, r = ring, 0
        for d in range(6):
            dq, dr = directions[(d + 2) % 6]
            for _ in range(ring):
                out.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    return out[:count]


def build_macro_grid(config: NetworkConfig) -> list[tuple[float, float]]:
    """Macro sites on a hexagonal lattice centered at the origin.

    Neighbouring sites are exactly ``inter_site_distance`` apart; sites fill
    rings outward so 7 gives the center plus its first ring.
    """
    if config.num_mbs < 1:
        raise ConfigError("num_mbs must be >= 1")
    isd = config.inter_site_distance
    pts = []
    for q, r in _hex_axial(config.num_mbs):
        x = isd * (q + r / 2.0)
        y = isd * (math.sqrt(3) / 2.0) * r
        pts.append((x + 0.0, y + 0.0))
    return pts


def in_hexagon(points, center, inter_site_distance: float) -> np.ndarray:
    """True where points lie in the macrocell hexagon around ``center``.

    The cell's edges face the six neighbours, so its apothem is isd/2.
    """
    rel = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(center, dtype=float)
    apothem = inter_site_distance / 2.0
    angles = np.deg2rad([0.0, 60.0, 120.0])
    normals = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return np.all(np.abs(rel @ normals.T) <= apothem * (1 + 1e-12), axis=1)


def sample_in_hexagon(rng: np.random.Generator, center, inter_site_distance: float,
                      count: int) -> np.ndarray:
    """Uniform samples inside a macrocell hexagon by rejection."""
    radius = inter_site_distance / math.sqrt(3)  # circumradius, along y
    apothem = inter_site_distance / 2.0  # along x
    out = np.empty((0, 2))
    while len(out) < count:
        need = count - len(out)
        cand = rng.uniform([-apothem, -radius], [apothem, radius], size=(2 * need + 4, 2))
        cand = cand[in_hexagon(cand, (0.0, 0.0), inter_site_distance)]
        out = np.vstack([out, cand[:need]])
    return out + np.asarray(center, dtype=float)


def circuit_power(tier: Tier, M: int, S: int, config: NetworkConfig) -> float:
    """Circuit power consumption of a BS (W)."""
    if Tier(tier) is Tier.PICO:
        return float(config.pbs_circuit_power)
    if not (M >= S >= 1):
        raise ConfigError(f"need M >= S >= 1, got M={M}, S={S}")
    return macro_static_power(S, config) + M * macro_per_antenna_power(S, config)


def macro_static_power(S: int, config: NetworkConfig) -> float:
    return config.c00 + config.c10 * S + config.c20 * S**2 + config.c30 * S**3


def macro_per_antenna_power(S: int, config: NetworkConfig) -> float:
    return config.c01 + config.c11 * S + config.c21 * S**2


def _children(seed: int) -> tuple[np.random.Generator, ...]:
    pbs_ss, users_ss, shadow_ss = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(pbs_ss), np.random.default_rng(users_ss),
            np.random.default_rng(shadow_ss))


def drop_scenario(config: NetworkConfig) -> Scenario:
    """Draw one network realisation from ``config.rng_seed``.

    PBS positions, user positions and shadowing come from independent child
    streams of the seed, so changing one count leaves the other draws alone.
    """
    config.validate()
    pbs_rng, user_rng, shadow_rng = _children(config.rng_seed)
    centers = build_macro_grid(config)
    isd = config.inter_site_distance
    S, M = config.streams, config.mbs_antennas

    p_mbs = float(dbm_to_w(config.mbs_tx_power))
    p_pbs = float(dbm_to_w(config.pbs_tx_power))
    pc_mbs = circuit_power(Tier.MACRO, M, S, config)

    bss: list[BaseStation] = []
    for c in centers:
        bss.append(BaseStation(len(bss), Tier.MACRO, c, p_mbs, config.mbs_amp_coeff,
                               pc_mbs, antennas=M))
    for c in centers:
        for pos in sample_in_hexagon(pbs_rng, c, isd, config.pbs_per_macrocell):
            bss.append(BaseStation(len(bss), Tier.PICO, (float(pos[0]), float(pos[1])),
                                   p_pbs, config.pbs_amp_coeff, config.pbs_circuit_power))

    taus = config.thresholds()
    users: list[User] = []
    for c in centers:
        for pos in sample_in_hexagon(user_rng, c, isd, config.users_per_macrocell):
            k = len(users)
            users.append(User(k, (float(pos[0]), float(pos[1])), float(taus[k])))

    # user-major draw: appending users appends columns without touching others
    shadow = shadow_rng.normal(0.0, config.shadowing_std, size=(len(users), len(bss))).T
    return Scenario(config, bss, users, shadow)


def make_scenario(
    bs_tiers: Sequence[str | Tier],
    bs_positions,
    user_positions,
    config: NetworkConfig | None = None,
    tx_power_w: Sequence[float] | None = None,
    shadow_db=None,
    thresholds=None,
) -> Scenario:
    """Hand-built scenario for small experiments and tests.

    Powers and circuit powers follow ``config`` unless ``tx_power_w`` overrides
    the transmit powers. ``thresholds`` (scalar or per user) defaults to the
    config's scalar threshold.
    """
    config = config or NetworkConfig()
    tiers = [Tier(t) for t in bs_tiers]
    S, M = config.streams, config.mbs_antennas
    bss = []
    for n, (tier, pos) in enumerate(zip(tiers, bs_positions)):
        if tx_power_w is not None:
            p = float(tx_power_w[n])
        else:
            p = float(dbm_to_w(config.mbs_tx_power if tier is Tier.MACRO else config.pbs_tx_power))
        if tier is Tier.MACRO:
            bss.append(BaseStation(n, tier, tuple(map(float, pos)), p, config.mbs_amp_coeff,
                                   circuit_power(tier, M, S, config), antennas=M))
        else:
            bss.append(BaseStation(n, tier, tuple(map(float, pos)), p, config.pbs_amp_coeff,
                                   config.pbs_circuit_power))
    user_positions = np.atleast_2d(np.asarray(user_positions, dtype=float))
    if thresholds is None:
        thresholds = np.atleast_1d(np.asarray(config.sinr_thresholds, dtype=float))[0]
    taus = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if taus.size not in (1, len(user_positions)):
        raise ConfigError("sinr_thresholds must be scalar or one per user")
    taus = np.broadcast_to(taus, (len(user_positions),))
    users = [User(k, (float(pos[0]), float(pos[1])), float(taus[k]))
             for k, pos in enumerate(user_positions)]
    return Scenario(config, bss, users, shadow_db)
