"""Objective evaluation, reference association policies and the
exhaustive-search oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .association import Association, MalformedAssociation
from .link import LinkTable

MAX_ENUMERATION = 10**6
_CHUNK = 1 << 16


class InstanceTooLarge(ValueError):
    pass


class AllInfeasible(ValueError):
    """No assignment meets every user's SINR threshold."""


@dataclass(frozen=True)
class ObjectiveReport:
    sum_ee: float  # bits/J
    feasible: bool
    per_user_ee: np.ndarray  # bits/J
    effective_rate: np.ndarray  # bits/s, rate shared equally over the serving BS's load
    violations: tuple[int, ...]

    @property
    def avg_rate(self) -> float:
        return float(np.mean(self.effective_rate))

    @property
    def avg_ee(self) -> float:
        return float(np.mean(self.per_user_ee))


def evaluate_objective(assoc: Association, link: LinkTable) -> ObjectiveReport:
    """Sum energy efficiency with the true load-shared rate r_nk / L_n."""
    if assoc.shape != link.sinr.shape:
        raise MalformedAssociation(
            f"association shape {assoc.shape} does not match link table {link.sinr.shape}")
    choice = assoc.choice
    users = np.arange(link.num_users)
    load = assoc.load
    eff = link.rate[choice, users] / load[choice]
    ee = eff / link.alpha[choice]
    served = link.sinr[choice, users]
    violations = tuple(int(k) for k in np.nonzero(served < link.tau)[0])
    return ObjectiveReport(float(ee.sum()), not violations, ee, eff, violations)


def max_sinr_association(link: LinkTable) -> Association:
    # np.argmax returns the first maximum: ties go to the lowest BS index
    return Association.from_choice(np.argmax(link.sinr, axis=0), link.num_bs)


def max_rate_association(link: LinkTable) -> Association:
    return Association.from_choice(np.argmax(link.rate, axis=0), link.num_bs)


def infeasible_users(link: LinkTable) -> np.ndarray:
    """Users whose threshold no BS can meet."""
    return np.nonzero(link.sinr.max(axis=0) < link.tau)[0]


def _choices(start: int, stop: int, N: int, K: int) -> np.ndarray:
    # lexicographic order of itertools.product(range(N), repeat=K): user 0 most significant
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, K), dtype=np.int64)
    for k in range(K - 1, -1, -1):
        out[:, k] = idx % N
        idx //= N
    return out


def brute_force_optimum(link: LinkTable, respect_constraints: bool = True
                        ) -> tuple[Association, ObjectiveReport]:
    """Exhaustive maximisation of the sum EE over all N^K assignments.

    Ties keep the first assignment in lexicographic order.
    """
    N, K = link.sinr.shape
    total = N**K
    if total > MAX_ENUMERATION:
        raise InstanceTooLarge(f"N^K = {N}^{K} exceeds {MAX_ENUMERATION} assignments")
    users = np.arange(K)
    best_val, best_choice = -np.inf, None
    for start in range(0, total, _CHUNK):
        c = _choices(start, min(start + _CHUNK, total), N, K)
        load = (c[:, :, None] == np.arange(N)).sum(axis=1)
        served_load = np.take_along_axis(load, c, axis=1)
        val = (link.rate[c, users] / (served_load * link.alpha[c])).sum(axis=1)
        if respect_constraints:
            ok = np.all(link.sinr[c, users] >= link.tau, axis=1)
            val = np.where(ok, val, -np.inf)
        i = int(np.argmax(val))
        if val[i] > best_val:
            best_val, best_choice = val[i], c[i]
    if best_choice is None:
        raise AllInfeasible("every assignment violates some SINR threshold")
    assoc = Association.from_choice(best_choice, N)
    return assoc, evaluate_objective(assoc, link)
