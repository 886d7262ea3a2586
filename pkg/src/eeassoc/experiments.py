"""Monte-Carlo sweeps over one network parameter, with CSV output."""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .baselines import (MAX_ENUMERATION, brute_force_optimum, evaluate_objective,
                        infeasible_users, max_rate_association, max_sinr_association)
from .channel import build_gain_matrix
from .link import LinkTable, build_link_table
from .scenario import ConfigError, NetworkConfig, _INT_FIELDS, drop_scenario, load_config
from .solver import SolverParams, solve

POLICIES = ("eea", "max_sinr", "max_rate", "oracle")
AXIS_ALIASES = {"pbs_power_dbm": "pbs_tx_power", "mbs_antennas": "mbs_antennas"}
RESULT_COLUMNS = ("axis", "axis_value", "policy", "drop", "sum_ee_bits_per_joule",
                  "avg_rate_bits_per_s", "avg_ee_bits_per_joule", "converged", "outer_iters")
SUMMARY_COLUMNS = ("axis_value", "policy", "metric", "mean", "ci95_halfwidth", "drops")
METRICS = ("sum_ee", "avg_rate", "avg_ee")


def axis_field(axis: str) -> str:
    """NetworkConfig field behind a sweep axis; any numeric field is a custom axis."""
    name = AXIS_ALIASES.get(axis, axis)
    numeric = {f.name for f in fields(NetworkConfig)} - {"sinr_thresholds", "rng_seed"}
    if name not in numeric:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return name


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[float, ...]
    drops_per_point: int = 10
    policies: tuple[str, ...] = ("eea", "max_sinr", "max_rate")
    base_config: NetworkConfig = NetworkConfig()
    seed: int = 0
    solver: SolverParams = SolverParams()

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "policies", tuple(self.policies))
        axis_field(self.axis)
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.drops_per_point < 1:
            raise ConfigError("drops_per_point must be >= 1")
        unknown = set(self.policies) - set(POLICIES)
        if unknown or not self.policies:
            raise ConfigError(f"unknown policies {sorted(unknown)}; choose from {POLICIES}")
        if "oracle" in self.policies:
            for v in self.values:
                cfg = self.config_for(v, 0)
                if cfg.num_bs ** cfg.num_users > MAX_ENUMERATION:
                    raise ConfigError("oracle policy needs N^K <= 1e6")

    def config_for(self, value, drop: int) -> NetworkConfig:
        name = axis_field(self.axis)
        value = int(value) if name in _INT_FIELDS else float(value)
        return self.base_config.with_updates(**{name: value}, rng_seed=drop_seed(self.seed, drop))


@dataclass(frozen=True)
class TrialRecord:
    axis: str
    axis_value: float
    policy: str
    drop: int
    sum_ee: float  # bits/J
    avg_rate: float  # bits/s
    avg_ee: float  # bits/J
    converged: bool
    outer_iters: int

    def row(self) -> list:
        return [self.axis, repr(self.axis_value), self.policy, self.drop, repr(self.sum_ee),
                repr(self.avg_rate), repr(self.avg_ee), int(self.converged), self.outer_iters]


@dataclass(frozen=True)
class SummaryRow:
    axis_value: float
    policy: str
    metric: str
    mean: float
    ci95_halfwidth: float
    drops: int


def drop_seed(seed: int, drop: int) -> int:
    """Scenario seed for a drop; independent of the axis value."""
    return int(np.random.SeedSequence([seed, drop]).generate_state(1)[0])


def link_for(config: NetworkConfig) -> LinkTable:
    scenario = drop_scenario(config)
    return build_link_table(scenario, build_gain_matrix(scenario))


def _relax_infeasible(link: LinkTable) -> LinkTable:
    bad = infeasible_users(link)
    if bad.size == 0:
        return link
    tau = link.tau.copy()
    tau[bad] = 0.0
    return LinkTable(link.sinr, link.rate, link.alpha, tau, link.is_macro, link.kappa)


def run_policies(link: LinkTable, policies: Sequence[str], params: SolverParams):
    """Yield (policy, report, converged, outer_iters, solver_result_or_None)."""
    for policy in POLICIES:
        if policy not in policies:
            continue
        if policy == "eea":
            res = solve(link, params)
            yield policy, res.report, res.converged, res.iterations[0], res
        elif policy == "max_sinr":
            yield policy, evaluate_objective(max_sinr_association(link), link), True, 0, None
        elif policy == "max_rate":
            yield policy, evaluate_objective(max_rate_association(link), link), True, 0, None
        else:
            relaxed = _relax_infeasible(link)
            assoc, _ = brute_force_optimum(relaxed, respect_constraints=True)
            yield policy, evaluate_objective(assoc, link), True, 0, None


def run_sweep(spec: SweepSpec, trace_dir: str | Path | None = None) -> list[TrialRecord]:
    """Every (axis value, drop, policy) trial, in that sort order."""
    records = []
    for value in spec.values:
        for d in range(spec.drops_per_point):
            link = link_for(spec.config_for(value, d))
            for policy, rep, conv, iters, res in run_policies(link, spec.policies, spec.solver):
                records.append(TrialRecord(spec.axis, float(value), policy, d, rep.sum_ee,
                                           rep.avg_rate, rep.avg_ee, bool(conv), int(iters)))
                if res is not None and trace_dir is not None:
                    res.write_trace(Path(trace_dir) / f"trace_{value:g}_{d}.csv")
    return records


def summarize(records: Iterable[TrialRecord]) -> list[SummaryRow]:
    """Per-(value, policy) mean and 1.96 sd / sqrt(n) half-width.

    A single drop has no spread estimate; its half-width is reported as 0.
    """
    groups: dict[tuple[float, str], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.axis_value, r.policy), []).append(r)
    order = {p: i for i, p in enumerate(POLICIES)}
    out = []
    for (value, policy) in sorted(groups, key=lambda g: (g[0], order.get(g[1], 99))):
        group = groups[(value, policy)]
        for metric in METRICS:
            xs = np.array([getattr(r, metric) for r in group], dtype=float)
            half = 1.96 * xs.std(ddof=1) / math.sqrt(xs.size) if xs.size > 1 else 0.0
            out.append(SummaryRow(value, policy, metric, float(xs.mean()), float(half), xs.size))
    return out


def write_results(path: str | Path, records: Sequence[TrialRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in records:
            w.writerow(r.row())


def write_summary(path: str | Path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in rows:
            w.writerow([repr(s.axis_value), s.policy, s.metric, repr(s.mean),
                        repr(s.ci95_halfwidth), s.drops])


def read_results(path: str | Path) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [TrialRecord(r["axis"], float(r["axis_value"]), r["policy"], int(r["drop"]),
                        float(r["sum_ee_bits_per_joule"]), float(r["avg_rate_bits_per_s"]),
                        float(r["avg_ee_bits_per_joule"]), r["converged"] == "1",
                        int(r["outer_iters"])) for r in rows]


ORACLE_CHECK_OVERRIDES = dict(num_mbs=1, pbs_per_macrocell=2, users_per_macrocell=5,
                              sinr_thresholds=0.0)


def oracle_check(instances: int, seed: int = 0, base: NetworkConfig | None = None,
                 params: SolverParams | None = None, **overrides) -> list[dict]:
    """EEA against the exhaustive optimum on small drops (3 BSs, 5 users by default)."""
    base = (base or NetworkConfig()).with_updates(**{**ORACLE_CHECK_OVERRIDES, **overrides})
    params = params or SolverParams()
    rows = []
    for i in range(instances):
        link = link_for(base.with_updates(rng_seed=drop_seed(seed, i)))
        res = solve(link, params)
        _, best = brute_force_optimum(link, respect_constraints=True)
        rows.append({"instance": i, "eea_sum_ee": res.sum_ee, "oracle_sum_ee": best.sum_ee,
                     "ratio": res.sum_ee / best.sum_ee, "converged": res.converged})
    return rows


def _parse_list(text: str, conv=float) -> list:
    return [conv(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eeassoc",
        description="Monte-Carlo sweeps of energy-efficient user association in two-tier "
                    "massive-MIMO HetNets.",
        epilog="Writes results.csv, summary.csv and (with --trace) traces/trace_<value>_<drop>.csv.",
    )
    p.add_argument("--config", type=Path, help="key = value network configuration file")
    p.add_argument("--sweep", default="pbs_power_dbm",
                   help="axis: pbs_power_dbm, mbs_antennas, or any numeric config key")
    p.add_argument("--values", default="22,26,30,34,38", help="comma-separated axis values")
    p.add_argument("--drops", type=int, default=10, help="drops per axis value")
    p.add_argument("--policies", default="eea,max_sinr,max_rate",
                   help=f"comma-separated subset of {','.join(POLICIES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--trace", action="store_true", help="write per-iteration EEA traces")
    p.add_argument("--oracle-check", action="store_true",
                   help="compare EEA with brute force on --drops small instances (3 BSs, 5 users)")
    return p


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        base = load_config(args.config) if args.config else NetworkConfig()
        args.out.mkdir(parents=True, exist_ok=True)
        if args.oracle_check:
            rows = oracle_check(args.drops, args.seed, base)
            with open(args.out / "oracle_check.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["instance", "eea_sum_ee", "oracle_sum_ee", "ratio", "converged"])
                for r in rows:
                    w.writerow([r["instance"], repr(r["eea_sum_ee"]), repr(r["oracle_sum_ee"]),
                                repr(r["ratio"]), int(r["converged"])])
            within = sum(r["ratio"] >= 0.95 for r in rows)
            print(f"EEA within 5% of oracle: {within}/{len(rows)} = {within / len(rows):.3f}")
            return 0
        name = axis_field(args.sweep)
        conv = int if name in _INT_FIELDS else float
        spec = SweepSpec(args.sweep, _parse_list(args.values, conv), args.drops,
                         tuple(_parse_list(args.policies, str.strip)), base, args.seed)
        trace_dir = None
        if args.trace:
            trace_dir = args.out / "traces"
            trace_dir.mkdir(exist_ok=True)
        records = run_sweep(spec, trace_dir)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"eeassoc: error: {exc}", file=sys.stderr)
        return 2
    write_results(args.out / "results.csv", records)
    write_summary(args.out / "summary.csv", summarize(records))
    print(f"wrote {len(records)} trials to {args.out / 'results.csv'}")
    return 0


def main() -> None:
    sys.exit(cli_main())
