"""Simulator and analytic models for grant-free random access with massive
MIMO, covering the conventional drop-on-low-SINR system and the
immediate-re-transmission system with combined-copy decoding."""

from .params import (DerivedThresholds, SystemParams, UnstableSystemError,
                     db_to_linear, linear_to_db)
from .analytic import (asymptotic_sinr_limit, collision_probability,
                       conventional_throughput, derive_thresholds,
                       effective_arrival_rate, expected_pc_free, irt_stable,
                       k_gamma, max_conventional_throughput,
                       max_irt_throughput, mean_pis_bounds, mean_sinr_approx,
                       poisson_cdf, sufficient_conditions, tau_pis)
from .chanmodel import (ChannelEstimate, SinrSample, assign_preambles,
                        correlator_estimate, draw_channels, realized_sinr,
                        realized_sinr_all, rtd_accumulate)
from .protosim import (DeviceState, MetricsAccumulator, SlotLedger,
                       measure_tau, run_slot, run_trial)
from .queuedyn import (ChainState, drift_diagnostic, estimate_stationary_mean,
                       q_gamma, step_chain)
from .experiment import ExperimentConfig, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ChainState", "ChannelEstimate", "DerivedThresholds", "DeviceState",
    "ExperimentConfig", "MetricsAccumulator", "SinrSample", "SlotLedger",
    "SystemParams", "UnstableSystemError", "assign_preambles",
    "asymptotic_sinr_limit", "collision_probability",
    "conventional_throughput", "correlator_estimate", "db_to_linear",
    "derive_thresholds", "drift_diagnostic", "draw_channels",
    "effective_arrival_rate", "estimate_stationary_mean", "expected_pc_free",
    "irt_stable", "k_gamma", "linear_to_db", "max_conventional_throughput",
    "max_irt_throughput", "mean_pis_bounds", "mean_sinr_approx",
    "measure_tau", "poisson_cdf", "q_gamma", "realized_sinr",
    "realized_sinr_all", "rtd_accumulate", "run_experiment", "run_slot",
    "run_trial", "step_chain", "sufficient_conditions", "tau_pis",
]
