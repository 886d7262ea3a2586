import itertools

import numpy as np
import pytest

from eeassoc.channel import build_gain_matrix
from eeassoc.link import LinkTable, build_link_table
from eeassoc.scenario import NetworkConfig, drop_scenario

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def desk_link(seed: int, **changes) -> LinkTable:
    scenario = drop_scenario(NetworkConfig(rng_seed=seed, **changes))
    return build_link_table(scenario, build_gain_matrix(scenario))


# -- independent reference implementations (no solver code) --------------------

def ref_true_objective(choice, rate, alpha) -> float:
    total = 0.0
    for k, n in enumerate(choice):
        load = sum(1 for c in choice if c == n)
        total += rate[n][k] / load / alpha[n]
    return total


def ref_relaxed_objective(choice, rate, alpha) -> float:
    total = 0.0
    for k, n in enumerate(choice):
        load = sum(1 for c in choice if c == n)
        total += rate[n][k] / (1 + load) / alpha[n]
    return total


def ref_enumerate(link: LinkTable, objective, respect_constraints=False):
    N, K = link.sinr.shape
    best, arg = -np.inf, None
    for choice in itertools.product(range(N), repeat=K):
        if respect_constraints and any(link.sinr[n, k] < link.tau[k] for k, n in enumerate(choice)):
            continue
        v = objective(choice, link.rate, link.alpha)
        if v > best:
            best, arg = v, choice
    return arg, best


def ref_residuals(x, lam, omega, rate, alpha):
    x = np.asarray(x, dtype=float)
    load = x.sum(axis=1)
    scale = (alpha * (1 + load))[:, None]
    return scale * lam - x, scale * omega - rate, 1.0 / scale[:, 0]


def ref_select(lam, omega, mu, sinr, alpha):
    N, K = sinr.shape
    x = np.zeros((N, K))
    penalty = [alpha[n] * sum(lam[n, i] * omega[n, i] for i in range(K)) for n in range(N)]
    for k in range(K):
        best, arg = -np.inf, 0
        for n in range(N):
            u = omega[n, k] + mu[k] * sinr[n, k] - penalty[n]
            if u > best:
                best, arg = u, n
        x[arg, k] = 1
    return x


@pytest.fixture
def small_config():
    return NetworkConfig(num_mbs=1, pbs_per_macrocell=2, users_per_macrocell=5)
