"""Secrecy energy-efficiency toolkit for NOMA two-way AF relay networks."""

from .config import SystemConfig, ConfigError, load_config
from .channel import Topology, ChannelState, generate_topology, path_loss_db, sample_channels
from .rates import (ScAllocation, PairRates, EveChannel2x2, alpha_normalizer,
                    gamma_normalizer, interference_terms, sinr_pair_nocj,
                    sinr_pair_cj, eve_channel, eve_rate, secrecy_rate,
                    system_ee)
from .matching import (Matching, MatchingError, InstanceTooLargeError,
                       ftpa_power, scas1, scas2, random_assignment,
                       exhaustive_best)
from .power import (PowerAllocation, SolveReport, InfeasiblePowerError,
                    dinkelbach_allocate, inner_solve, grid_oracle,
                    per_sc_cap_mode)
from .harness import Scenario, ResultTable, run_scenario, cdf, emit_csv

__version__ = "0.1.0"

__all__ = [
    "SystemConfig", "ConfigError", "load_config",
    "Topology", "ChannelState", "generate_topology", "path_loss_db",
    "sample_channels",
    "ScAllocation", "PairRates", "EveChannel2x2", "alpha_normalizer",
    "gamma_normalizer", "interference_terms", "sinr_pair_nocj",
    "sinr_pair_cj", "eve_channel", "eve_rate", "secrecy_rate", "system_ee",
    "Matching", "MatchingError", "InstanceTooLargeError", "ftpa_power",
    "scas1", "scas2", "random_assignment", "exhaustive_best",
    "PowerAllocation", "SolveReport", "InfeasiblePowerError",
    "dinkelbach_allocate", "inner_solve", "grid_oracle", "per_sc_cap_mode",
    "Scenario", "ResultTable", "run_scenario", "cdf", "emit_csv",
    "__version__",
]
