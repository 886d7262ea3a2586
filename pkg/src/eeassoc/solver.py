"""Energy-efficient association (EEA): two-layer iterative solver.

The inner layer picks, for every user, the BS maximising its Lagrangian
utility and runs projected subgradient steps on the SINR multipliers ``mu``.
The outer layer drives the load-coupling parameters ``lam`` and the per-link
EE parameters ``omega`` to their fixed point with a diagonally scaled
Newton-like step and backtracking on the squared residual.

Everything is vectorised over the N x K link grid; the scalar helpers
(:func:`residual_phi` and friends) exist for inspection and testing.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .association import Association
from .baselines import ObjectiveReport, evaluate_objective, infeasible_users, max_sinr_association
from .link import LinkTable


class LineSearchFailure(RuntimeError):
    """No backtracking exponent up to ``m_max`` satisfied the decrease test."""


@dataclass(frozen=True)
class SolverParams:
    xi: float = 0.5  # backtracking base
    epsilon: float = 0.01  # sufficient-decrease slack
    T1: int = 200
    T2: int = 50
    mu_step: float = 0.05
    residual_tol: float = 1e-6
    inner_tol: float = 1e-8
    m_max: int = 30
    # rescale lam to unit sum after every outer step; off by default because the
    # rescale moves lam off its fixed point and the residual test can never pass
    normalize_lambda: bool = False

    def __post_init__(self):
        if not (0 < self.xi < 1 and 0 < self.epsilon < 1):
            raise ValueError("xi and epsilon must lie in (0, 1)")
        if min(self.T1, self.T2, self.m_max) < 1:
            raise ValueError("T1, T2 and m_max must be >= 1")
        if not (self.mu_step > 0 and self.residual_tol > 0 and self.inner_tol > 0):
            raise ValueError("mu_step and tolerances must be positive")


@dataclass(frozen=True)
class LineSearchRecord:
    t1: int
    m: int
    step: float  # xi ** m
    before: float  # squared residual sum at the current parameters
    after: float  # squared residual sum at the accepted trial point
    trial_assoc: Association


@dataclass
class SolverState:
    assoc: Association
    lam: np.ndarray  # N x K
    omega: np.ndarray  # N x K
    mu: np.ndarray  # K
    constrained: np.ndarray  # K bool; False where the SINR constraint was dropped
    t1: int = 0
    t2: int = 0
    residual_history: list[float] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)
    searches: list[LineSearchRecord] = field(default_factory=list)
    trace: list[tuple] = field(default_factory=list)
    selection_mu: np.ndarray | None = None  # mu behind the latest selection pass
    _inner_rows: list[tuple[int, float, float]] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class PerUser:
    bs: np.ndarray
    sinr: np.ndarray
    effective_rate: np.ndarray
    ee: np.ndarray


@dataclass
class AssociationResult:
    assoc: Association
    sum_ee: float
    converged: bool
    status: str  # "converged" | "line_search_failed" | "max_iterations"
    iterations: tuple[int, int]  # (outer, inner total)
    residual_history: list[float]
    objective_history: list[float]
    per_user: PerUser
    report: ObjectiveReport
    infeasible_users: tuple[int, ...]
    max_abs_phi: float
    max_abs_psi: float
    state: SolverState

    @property
    def feasible(self) -> bool:
        return self.report.feasible

    def write_trace(self, path: str | Path) -> None:
        write_trace(path, self.state.trace)


TRACE_COLUMNS = ("t1", "t2", "G", "F", "residual_norm", "m")


def write_trace(path: str | Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for t1, t2, G, F, res, m in rows:
            w.writerow([t1, t2, repr(G), repr(F), repr(res), "" if m is None else m])


# -- fixed-point quantities ---------------------------------------------------

def _denominator(assoc: Association, link: LinkTable) -> np.ndarray:
    """alpha_n * (1 + L_n), the +1 keeping empty BSs finite."""
    return link.alpha * (1.0 + assoc.load)


def fixed_point_parameters(assoc: Association, link: LinkTable) -> tuple[np.ndarray, np.ndarray]:
    """(lam, omega) that zero both residuals for the given association."""
    den = _denominator(assoc, link)[:, None]
    return assoc.x / den, link.rate / den


def residuals(state: SolverState, link: LinkTable, assoc: Association | None = None,
              lam=None, omega=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(phi, psi, chi) on the full grid; chi is per BS."""
    assoc = state.assoc if assoc is None else assoc
    lam = state.lam if lam is None else lam
    omega = state.omega if omega is None else omega
    den = _denominator(assoc, link)
    phi = den[:, None] * lam - assoc.x
    psi = den[:, None] * omega - link.rate
    return phi, psi, 1.0 / den


def residual_phi(n: int, k: int, state: SolverState, link: LinkTable) -> float:
    L = state.assoc.load[n]
    return float(link.alpha[n] * state.lam[n, k] * (1 + L) - state.assoc.x[n, k])


def residual_psi(n: int, k: int, state: SolverState, link: LinkTable) -> float:
    L = state.assoc.load[n]
    return float(link.alpha[n] * state.omega[n, k] * (1 + L) - link.rate[n, k])


def chi(n: int, state: SolverState, link: LinkTable) -> float:
    return float(1.0 / (link.alpha[n] * (1 + state.assoc.load[n])))


def squared_residual(phi: np.ndarray, psi: np.ndarray) -> float:
    return float(np.sum(phi * phi) + np.sum(psi * psi))


# -- inner layer ----------------------------------------------------------

def utilities(link: LinkTable, lam: np.ndarray, omega: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Per-(BS, user) selection utility omega + mu * SINR - alpha * sum_i lam * omega."""
    penalty = link.alpha * np.sum(lam * omega, axis=1)
    return omega + mu[None, :] * link.sinr - penalty[:, None]


def _select(link, lam, omega, mu) -> Association:
    return Association.from_choice(np.argmax(utilities(link, lam, omega, mu), axis=0),
                                   link.num_bs)


def inner_select(state: SolverState, link: LinkTable) -> Association:
    """Every user independently picks its best BS; ties go to the lowest index."""
    return _select(link, state.lam, state.omega, state.mu)


def inner_objective(assoc: Association, state: SolverState, link: LinkTable) -> float:
    """G(x): the load-penalised sum of EE parameters, without the mu term."""
    penalty = link.alpha * np.sum(state.lam * state.omega, axis=1)
    return float(np.sum(assoc.x * (state.omega - penalty[:, None])))


def outer_objective(assoc: Association, omega: np.ndarray) -> float:
    """F(x, omega) = sum of the EE parameters of the chosen links."""
    return float(np.sum(assoc.x * omega))


def update_mu(state: SolverState, link: LinkTable, params: SolverParams) -> np.ndarray:
    """Projected subgradient step on mu for ``state.assoc``, then unit-sum scaling.

    Users with a dropped constraint keep mu = 0. If the step clamps every
    multiplier to zero the normalisation is undefined, so mu restarts uniform
    over the constrained users.
    """
    users = np.arange(link.num_users)
    slack = link.sinr[state.assoc.choice, users] - link.tau
    mu = np.maximum(0.0, state.mu - params.mu_step * slack)
    mu = np.where(state.constrained, mu, 0.0)
    total = mu.sum()
    if total > 0:
        return mu / total
    n_active = int(state.constrained.sum())
    if n_active == 0:
        return np.zeros_like(mu)
    return np.where(state.constrained, 1.0 / n_active, 0.0)


def inner_loop(state: SolverState, link: LinkTable, params: SolverParams) -> Association:
    """Alternate selection and multiplier updates until G settles or T2 passes.

    G is compared against its value for the incoming association, so an
    association that cannot change stops after one pass.
    """
    rows = []
    g_prev = inner_objective(state.assoc, state, link)
    for _ in range(params.T2):
        state.selection_mu = state.mu
        state.assoc = inner_select(state, link)
        g = inner_objective(state.assoc, state, link)
        state.mu = update_mu(state, link, params)
        state.t2 += 1
        rows.append((state.t2, g, outer_objective(state.assoc, state.omega)))
        if abs(g - g_prev) <= params.inner_tol * abs(g_prev):
            break
        g_prev = g
    state._inner_rows = rows
    return state.assoc


# -- outer layer ----------------------------------------------------------

def _newton_point(state, link, step, phi, psi, chi_n):
    lam = state.lam - step * chi_n[:, None] * phi
    omega = np.maximum(state.omega - step * chi_n[:, None] * psi, 0.0)
    return lam, omega


def line_search(state: SolverState, link: LinkTable, params: SolverParams) -> int:
    """Smallest m with ||res(trial)||^2 <= (1 - eps xi^m) ||res||^2.

    The trial association is re-selected at the stepped parameters, so the
    residual is a genuinely nonlinear function of (lam, omega) and
    backtracking matters. Raises :class:`LineSearchFailure` past ``m_max``.
    """
    phi, psi, chi_n = residuals(state, link)
    before = squared_residual(phi, psi)
    for m in range(params.m_max + 1):
        step = params.xi**m
        lam, omega = _newton_point(state, link, step, phi, psi, chi_n)
        trial = _select(link, lam, omega, state.mu)
        p2, q2, _ = residuals(state, link, trial, lam, omega)
        after = squared_residual(p2, q2)
        if after <= (1.0 - params.epsilon * step) * before:
            state.searches.append(LineSearchRecord(state.t1, m, step, before, after, trial))
            return m
    raise LineSearchFailure(f"no m <= {params.m_max} satisfied the decrease test at t1={state.t1}")


def outer_update(state: SolverState, m: int, link: LinkTable, params: SolverParams
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton-like step on (lam, omega) for the current association.

    The residuals are affine in (lam, omega) with slope 1/chi, so m = 0
    lands exactly on the fixed point of ``state.assoc``.
    """
    phi, psi, chi_n = residuals(state, link)
    lam, omega = _newton_point(state, link, params.xi**m, phi, psi, chi_n)
    if params.normalize_lambda:
        lam = lam / lam.sum()
    state.lam, state.omega = lam, omega
    return lam, omega


def init_state(link: LinkTable, params: SolverParams | None = None) -> SolverState:
    """Max-SINR seed with (lam, omega) at its fixed point and uniform mu."""
    assoc = max_sinr_association(link)
    lam, omega = fixed_point_parameters(assoc, link)
    constrained = np.ones(link.num_users, dtype=bool)
    constrained[infeasible_users(link)] = False
    n_active = int(constrained.sum())
    mu = np.where(constrained, 1.0 / max(n_active, 1), 0.0)
    return SolverState(assoc, lam, omega, mu, constrained)


def solve(link: LinkTable, params: SolverParams | None = None,
          callback: Callable[[SolverState, LineSearchRecord], None] | None = None
          ) -> AssociationResult:
    """Run EEA to a certified fixed point, a line-search failure, or T1 outer steps.

    ``callback(state, record)`` is invoked after each accepted line search and
    before the parameters move, e.g. to audit the decrease condition.
    """
    params = params or SolverParams()
    state = init_state(link, params)
    status = "max_iterations"
    max_phi = max_psi = math.inf
    while state.t1 < params.T1:
        inner_loop(state, link, params)
        phi, psi, _ = residuals(state, link)
        max_phi = float(np.max(np.abs(phi)))
        max_psi = float(np.max(np.abs(psi)))
        norm = math.sqrt(squared_residual(phi, psi))
        state.residual_history.append(norm)
        state.objective_history.append(outer_objective(state.assoc, state.omega))
        t1 = state.t1 + 1

        if max_phi <= params.residual_tol and max_psi <= params.residual_tol:
            status = "converged"
            _flush_trace(state, t1, norm, None)
            break
        try:
            m = line_search(state, link, params)
        except LineSearchFailure:
            status = "line_search_failed"
            _flush_trace(state, t1, norm, None)
            break
        _flush_trace(state, t1, norm, m)
        if callback is not None:
            callback(state, state.searches[-1])
        outer_update(state, m, link, params)
        state.t1 = t1

    report = evaluate_objective(state.assoc, link)
    choice = state.assoc.choice
    users = np.arange(link.num_users)
    per_user = PerUser(choice, link.sinr[choice, users], report.effective_rate, report.per_user_ee)
    return AssociationResult(
        assoc=state.assoc,
        sum_ee=report.sum_ee,
        converged=status == "converged",
        status=status,
        iterations=(len(state.residual_history), state.t2),
        residual_history=list(state.residual_history),
        objective_history=list(state.objective_history),
        per_user=per_user,
        report=report,
        infeasible_users=tuple(int(k) for k in np.nonzero(~state.constrained)[0]),
        max_abs_phi=max_phi,
        max_abs_psi=max_psi,
        state=state,
    )


def _flush_trace(state: SolverState, t1: int, norm: float, m: int | None) -> None:
    for t2, g, f in state._inner_rows:
        state.trace.append((t1, t2, g, f, norm, m))
    state._inner_rows = []
