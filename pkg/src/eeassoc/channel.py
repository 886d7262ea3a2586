"""Large-scale channel: log-distance pathloss per tier, log-normal shadowing,
thermal noise."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import Scenario, Tier

MIN_DISTANCE_KM = 0.010

# (intercept dB, slope dB/decade) with distance in km
PATHLOSS_MODELS = {
    Tier.MACRO: (128.1, 37.6),
    Tier.PICO: (140.7, 36.7),
}


def pathloss_db(tier, distance_km):
    """Pathloss in dB; distances below 10 m are clamped to 10 m."""
    a, b = PATHLOSS_MODELS[Tier(tier)]
    d = np.maximum(np.asarray(distance_km, dtype=float), MIN_DISTANCE_KM)
    return a + b * np.log10(d)


def channel_gain(tier, distance_km, shadow_db=0.0):
    """Linear power gain including a shadowing term given in dB."""
    return 10.0 ** (-(pathloss_db(tier, distance_km) - np.asarray(shadow_db, dtype=float)) / 10.0)


def noise_power(noise_psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in W over ``bandwidth_hz``."""
    if not bandwidth_hz > 0:
        raise ValueError("bandwidth must be positive")
    return 10.0 ** ((noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz


@dataclass(frozen=True)
class GainMatrix:
    g: np.ndarray  # N x K, read-only

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.ndim != 2:
            raise ValueError("gain matrix must be 2-D (BS x user)")
        if not (np.all(np.isfinite(g)) and np.all(g > 0)):
            raise ValueError("gains must be strictly positive and finite")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def shape(self) -> tuple[int, int]:
        return self.g.shape

    def to_csv(self, path: str | Path) -> None:
        write_matrix_csv(path, self.g)


def write_matrix_csv(path: str | Path, matrix: np.ndarray) -> None:
    """Row = BS index, column = user index."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bs"] + [f"user{k}" for k in range(matrix.shape[1])])
        for n, row in enumerate(matrix):
            w.writerow([n] + [repr(float(v)) for v in row])


def distances_km(scenario: Scenario) -> np.ndarray:
    bs = scenario.bs_positions
    ue = scenario.user_positions
    return np.linalg.norm(bs[:, None, :] - ue[None, :, :], axis=2)


def build_gain_matrix(scenario: Scenario) -> GainMatrix:
    d = distances_km(scenario)
    macro = scenario.is_macro[:, None]
    pl = np.where(macro, pathloss_db(Tier.MACRO, d), pathloss_db(Tier.PICO, d))
    return GainMatrix(10.0 ** (-(pl - scenario.shadow_db) / 10.0))
