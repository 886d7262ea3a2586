"""Sum-energy-efficiency user association for massive-MIMO two-tier HetNets."""
from .association import Association, MalformedAssociation
from .baselines import (AllInfeasible, InstanceTooLarge, ObjectiveReport, brute_force_optimum,
                        evaluate_objective, max_rate_association, max_sinr_association)
from .channel import GainMatrix, build_gain_matrix, channel_gain, noise_power, pathloss_db
from .link import LinkTable, build_link_table, kappa
from .scenario import (BaseStation, ConfigError, NetworkConfig, Scenario, Tier, User,
                       build_macro_grid, circuit_power, drop_scenario, load_config)
from .solver import AssociationResult, SolverParams, SolverState, solve

__all__ = [
    "Association", "AssociationResult", "AllInfeasible", "BaseStation", "ConfigError",
    "GainMatrix", "InstanceTooLarge", "LinkTable", "MalformedAssociation", "NetworkConfig",
    "ObjectiveReport", "Scenario", "SolverParams", "SolverState", "Tier", "User",
    "brute_force_optimum", "build_gain_matrix", "build_link_table", "build_macro_grid",
    "channel_gain", "circuit_power", "drop_scenario", "evaluate_objective", "kappa",
    "load_config", "max_rate_association", "max_sinr_association", "noise_power",
    "pathloss_db", "solve",
]
