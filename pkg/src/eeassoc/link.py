"""Per-link SINR and achievable rate tables."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import GainMatrix, noise_power
from .scenario import Scenario, Tier


def kappa(M: int, S: int) -> float:
    """Massive-MIMO array gain factor (M - S + 1) / S of the macro tier."""
    if not (M >= S >= 1):
        raise ValueError(f"need M >= S >= 1, got M={M}, S={S}")
    return (M - S + 1) / S


def _noise(scenario: Scenario) -> float:
    cfg = scenario.config
    return noise_power(cfg.noise_psd, cfg.bandwidth)


def sinr(n: int, k: int, gains: GainMatrix, scenario: Scenario, noise_w: float | None = None) -> float:
    """SINR of user ``k`` served by BS ``n``; every other BS interferes at full power."""
    g = gains.g
    p = scenario.tx_power
    sigma2 = _noise(scenario) if noise_w is None else noise_w
    interference = sum(p[j] * g[j, k] for j in range(len(p)) if j != n)
    signal = p[n] * g[n, k]
    if scenario.base_stations[n].tier is Tier.MACRO:
        signal *= kappa(scenario.config.mbs_antennas, scenario.config.streams)
    return signal / (interference + sigma2)


def rate(n: int, k: int, sinr_value: float, scenario: Scenario) -> float:
    """Achievable rate in bits/s; a macro BS carries S streams."""
    if sinr_value < 0:
        raise ValueError("SINR must be >= 0")
    cfg = scenario.config
    streams = cfg.streams if scenario.base_stations[n].tier is Tier.MACRO else 1
    return cfg.bandwidth * streams * np.log2(1.0 + sinr_value)


@dataclass(frozen=True)
class LinkTable:
    sinr: np.ndarray  # N x K, linear
    rate: np.ndarray  # N x K, bits/s
    alpha: np.ndarray  # N, total consumed power per BS (W)
    tau: np.ndarray  # K, linear SINR thresholds
    is_macro: np.ndarray  # N, bool
    kappa: float = 1.0

    def __post_init__(self):
        arrays = {}
        for name in ("sinr", "rate", "alpha", "tau"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            arrays[name] = a
        is_macro = np.array(self.is_macro, dtype=bool)
        is_macro.setflags(write=False)
        arrays["is_macro"] = is_macro
        for name, a in arrays.items():
            object.__setattr__(self, name, a)
        N, K = self.sinr.shape
        if self.rate.shape != (N, K) or self.alpha.shape != (N,) or self.tau.shape != (K,) \
                or self.is_macro.shape != (N,):
            raise ValueError("inconsistent LinkTable dimensions")
        if not (np.all(np.isfinite(self.sinr)) and np.all(self.sinr >= 0)):
            raise ValueError("SINR entries must be finite and >= 0")
        if not (np.all(np.isfinite(self.rate)) and np.all(self.rate >= 0)):
            raise ValueError("rate entries must be finite and >= 0")
        if not np.all(self.alpha > 0):
            raise ValueError("alpha must be positive")
        if np.any(self.tau < 0):
            raise ValueError("thresholds must be >= 0")

    @classmethod
    def from_arrays(cls, sinr, rate, alpha, tau=0.0, is_macro=None, kappa: float = 1.0) -> "LinkTable":
        """Build a table from raw matrices; ``tau`` may be a scalar."""
        sinr = np.asarray(sinr, dtype=float)
        N, K = sinr.shape
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (K,))
        if is_macro is None:
            is_macro = np.zeros(N, dtype=bool)
        return cls(sinr, rate, alpha, tau, is_macro, kappa)

    @property
    def num_bs(self) -> int:
        return self.sinr.shape[0]

    @property
    def num_users(self) -> int:
        return self.sinr.shape[1]

    def permute_users(self, order) -> "LinkTable":
        order = np.asarray(order)
        return LinkTable(self.sinr[:, order], self.rate[:, order], self.alpha,
                         self.tau[order], self.is_macro, self.kappa)

    def to_csv(self, path: str | Path) -> None:
        """Long format: one row per (BS, user) link."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bs", "user", "macro", "sinr", "rate_bits_per_s", "alpha_w", "tau"])
            for n in range(self.num_bs):
                for k in range(self.num_users):
                    w.writerow([n, k, int(self.is_macro[n]), repr(float(self.sinr[n, k])),
                                repr(float(self.rate[n, k])), repr(float(self.alpha[n])),
                                repr(float(self.tau[k]))])


def sinr_matrix(tx_power, g, is_macro, kappa_value: float, noise_w: float) -> np.ndarray:
    received = np.asarray(tx_power, dtype=float)[:, None] * np.asarray(g, dtype=float)
    interference = received.sum(axis=0, keepdims=True) - received
    gain = np.where(np.asarray(is_macro)[:, None], kappa_value, 1.0)
    return gain * received / (interference + noise_w)


def build_link_table(scenario: Scenario, gains: GainMatrix) -> LinkTable:
    if gains.shape != (scenario.num_bs, scenario.num_users):
        raise ValueError(f"gain matrix {gains.shape} does not match scenario "
                         f"({scenario.num_bs}, {scenario.num_users})")
    cfg = scenario.config
    kap = kappa(cfg.mbs_antennas, cfg.streams)
    is_macro = scenario.is_macro
    s = sinr_matrix(scenario.tx_power, gains.g, is_macro, kap, _noise(scenario))
    streams = np.where(is_macro, cfg.streams, 1)[:, None]
    r = cfg.bandwidth * streams * np.log2(1.0 + s)
    return LinkTable(s, r, scenario.alpha, scenario.thresholds, is_macro, kap)
