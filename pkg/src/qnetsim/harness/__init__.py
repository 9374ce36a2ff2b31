"""Experiment harness: topology, demand, runs, metrics, sweeps."""

from .config import ConfigError, SimConfig, hub_and_spoke_config, load_config, parse_config
from .demand import DemandSpec, Injection, InvalidDemand, generate_demand
from .experiment import DeliveryOracle, RunResult, run_experiment, run_records_csv
from .metrics import Metrics, cdf_points, compute_metrics, quantile
from .sweep import execute_cell, run_sweep, sweep_cells
from .topology import (
    InvalidTopology,
    LinkSpec,
    Network,
    NodeSpec,
    TopologySpec,
    build_network,
)

__all__ = [
    "ConfigError",
    "DeliveryOracle",
    "DemandSpec",
    "Injection",
    "InvalidDemand",
    "InvalidTopology",
    "LinkSpec",
    "Metrics",
    "Network",
    "NodeSpec",
    "RunResult",
    "SimConfig",
    "TopologySpec",
    "build_network",
    "cdf_points",
    "compute_metrics",
    "execute_cell",
    "generate_demand",
    "hub_and_spoke_config",
    "load_config",
    "parse_config",
    "quantile",
    "run_experiment",
    "run_records_csv",
    "run_sweep",
    "sweep_cells",
]
