"""Parameter-sweep experiment runner with CSV output.

One experiment sweeps a single parameter (arrival rate, decoding threshold
in dB, antenna count, or preamble count) over an inclusive range and runs
the selected system(s) at every point, pairing simulated metrics with the
closed-form predictions. Output is a flat CSV, byte-identical for a given
configuration and master seed regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic, protosim, queuedyn
from .params import SystemParams, UnstableSystemError

EXPERIMENT_MODES = ("conventional", "irt", "both", "analytic-only", "chain")
SWEEP_NAMES = ("lambda", "Gamma_dB", "M", "L")

CSV_COLUMNS = ("mode", "throughput", "throughput_hw", "tau_pis", "tau_pis_hw",
               "analytic_throughput", "tau_lower", "tau_upper", "tau_approx",
               "stable", "unstable", "mean_in_service")

# config-file keys -> ExperimentConfig field names
_FILE_KEYS = {
    "mode": "mode", "sweep": "sweep", "from": "start", "to": "stop",
    "step": "step", "M": "M", "L": "L", "gamma_dB": "gamma_dB",
    "Gamma_dB": "Gamma_dB", "lambda": "lam", "slots": "slots",
    "warmup": "warmup", "trials": "trials", "seed": "master_seed",
    "out": "output_path", "jobs": "jobs",
}
_INT_FIELDS = {"M", "L", "slots", "warmup", "trials", "master_seed", "jobs"}
_FLOAT_FIELDS = {"start", "stop", "step", "gamma_dB", "Gamma_dB", "lam"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "both"
    sweep: str = "lambda"
    start: float = 2.0
    stop: float = 40.0
    step: float = 2.0
    M: int = 100
    L: int = 64
    gamma_dB: float = 6.0
    Gamma_dB: float = 6.0
    lam: float = 20.0
    slots: int = 100_000
    warmup: int | None = None    # resolved to max(1000, slots // 10)
    trials: int = 1
    master_seed: int = 1
    output_path: str | None = None
    jobs: int = 1

    def resolved_warmup(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return max(1000, self.slots // 10)

    def validate(self) -> None:
        if self.mode not in EXPERIMENT_MODES:
            raise ConfigError(f"mode must be one of {EXPERIMENT_MODES}, "
                              f"got {self.mode!r}")
        if self.sweep not in SWEEP_NAMES:
            raise ConfigError(f"sweep must be one of {SWEEP_NAMES}, "
                              f"got {self.sweep!r}")
        if not self.step > 0:
            raise ConfigError(f"step must be > 0, got {self.step}")
        if self.stop < self.start:
            raise ConfigError("sweep range is empty: to < from")
        if self.mode != "analytic-only":
            if self.trials < 1:
                raise ConfigError("trials must be >= 1 for simulation modes")
            if self.slots <= self.resolved_warmup():
                raise ConfigError(
                    f"slots ({self.slots}) must exceed warmup "
                    f"({self.resolved_warmup()})")
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.M < 1 or self.L < 1:
            raise ConfigError("M and L must be positive integers")
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        for v in self.sweep_values():
            if self.sweep in ("M", "L") and abs(v - round(v)) > 1e-9:
                raise ConfigError(f"sweep over {self.sweep} requires integer "
                                  f"values, got {v}")
            if self.sweep == "lambda" and v < 0:
                raise ConfigError("swept lambda values must be >= 0")

    def sweep_values(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(n)]

    def params_at(self, value: float) -> SystemParams:
        fields = {"M": self.M, "L": self.L, "gamma_dB": self.gamma_dB,
                  "Gamma_dB": self.Gamma_dB, "lam": self.lam}
        if self.sweep in ("M", "L"):
            fields[self.sweep] = int(round(value))
        elif self.sweep == "Gamma_dB":
            fields["Gamma_dB"] = value
        else:
            fields["lam"] = value
        return SystemParams.from_db(M=fields["M"], L=fields["L"],
                                    gamma_db=fields["gamma_dB"],
                                    Gamma_db=fields["Gamma_dB"],
                                    lam=fields["lam"])


def parse_config_file(path: str) -> dict:
    """Read a flat `key = value` config file into ExperimentConfig kwargs."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                                  f"got {text!r}")
            key, _, raw = text.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _FILE_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            field = _FILE_KEYS[key]
            try:
                if field in _INT_FIELDS:
                    values[field] = int(raw)
                elif field in _FLOAT_FIELDS:
                    values[field] = float(raw)
                else:
                    values[field] = raw
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: "
                                  f"{raw!r}") from exc
    return values


def build_config(file_values: dict | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Merge defaults, config-file values, and CLI overrides (highest wins)."""
    merged: dict = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        config = ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def _trial_seed(config: ExperimentConfig, point: int, trial: int):
    return np.random.SeedSequence(entropy=config.master_seed,
                                  spawn_key=(point, trial))


def _run_sim_task(args) -> protosim.MetricsAccumulator:
    config, point_idx, mode, trial_idx, value = args
    params = config.params_at(value)
    seed = _trial_seed(config, point_idx, trial_idx)
    return protosim.run_trial(mode, params, config.slots,
                              config.resolved_warmup(), seed)


def _run_chain_task(args) -> tuple[float, float, bool]:
    config, point_idx, trial_idx, value = args
    params = config.params_at(value)
    seed = _trial_seed(config, point_idx, trial_idx)
    try:
        mu, hw = queuedyn.estimate_stationary_mean(
            params, config.slots, config.resolved_warmup(), seed)
        return mu, hw, False
    except UnstableSystemError:
        return math.nan, math.nan, True


def _analytic_columns(mode: str, params: SystemParams) -> dict:
    lbar = analytic.effective_arrival_rate(params.lam, params.L)
    stable = analytic.irt_stable(params)
    row = {"stable": stable, "tau_lower": None, "tau_upper": None,
           "tau_approx": None}
    if mode == "conventional":
        row["analytic_throughput"] = analytic.conventional_throughput(
            params.lam, params)
    else:
        row["analytic_throughput"] = lbar
        if stable:
            lo, up, ap = analytic.tau_pis(params)
            row.update(tau_lower=lo, tau_upper=up, tau_approx=ap)
    return row


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Execute the sweep and return one row dict per point per mode.

    Rows appear in sweep order; per-point seeds depend only on the master
    seed, the point index, and the trial index, so results never depend on
    scheduling. Writes CSV to config.output_path when set.
    """
    config.validate()
    values = config.sweep_values()
    sim_modes = {"conventional": ["conventional"], "irt": ["irt"],
                 "both": ["conventional", "irt"], "analytic-only": [],
                 "chain": []}[config.mode]

    tasks = []
    for p, value in enumerate(values):
        for mode in sim_modes:
            for trial in range(config.trials):
                tasks.append((config, p, mode, trial, value))
    chain_tasks = []
    if config.mode == "chain":
        for p, value in enumerate(values):
            for trial in range(config.trials):
                chain_tasks.append((config, p, trial, value))

    if config.jobs > 1 and (tasks or chain_tasks):
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            sim_results = list(pool.map(_run_sim_task, tasks))
            chain_results = list(pool.map(_run_chain_task, chain_tasks))
    else:
        sim_results = [_run_sim_task(t) for t in tasks]
        chain_results = [_run_chain_task(t) for t in chain_tasks]

    rows: list[dict] = []
    i = 0
    for p, value in enumerate(values):
        params = config.params_at(value)
        for mode in sim_modes:
            trials = sim_results[i:i + config.trials]
            i += config.trials
            rows.append(_sim_row(config, mode, value, params, trials))
        if config.mode == "analytic-only":
            for mode in ("conventional", "irt"):
                row = {"sweep_value": value, "mode": mode,
                       "throughput": None, "throughput_hw": None,
                       "tau_pis": None, "tau_pis_hw": None,
                       "unstable": None, "mean_in_service": None}
                row.update(_analytic_columns(mode, params))
                rows.append(row)
    if config.mode == "chain":
        for p, value in enumerate(values):
            params = config.params_at(value)
            trials = chain_results[p * config.trials:(p + 1) * config.trials]
            rows.append(_chain_row(value, params, trials))

    if config.output_path:
        write_csv(rows, config.sweep, config.output_path)
    return rows


def _sim_row(config: ExperimentConfig, mode: str, value: float,
             params: SystemParams,
             trials: list[protosim.MetricsAccumulator]) -> dict:
    thr = [m.throughput for m in trials]
    tau = [m.mean_retx for m in trials]
    mis = [m.mean_in_service for m in trials]
    unstable = any(m.unstable_flag for m in trials)
    if len(trials) >= 2:
        thr_hw = _across_trials_hw(thr)
        tau_hw = _across_trials_hw(tau)
    else:
        thr_hw = trials[0].throughput_hw
        tau_hw = trials[0].mean_retx_hw
    row = {"sweep_value": value, "mode": mode,
           "throughput": _nanmean(thr), "throughput_hw": thr_hw,
           "tau_pis": _nanmean(tau), "tau_pis_hw": tau_hw,
           "unstable": unstable, "mean_in_service": _nanmean(mis)}
    row.update(_analytic_columns(mode, params))
    return row


def _chain_row(value: float, params: SystemParams,
               trials: list[tuple[float, float, bool]]) -> dict:
    lbar = analytic.effective_arrival_rate(params.lam, params.L)
    mus = [t[0] for t in trials]
    unstable = any(t[2] for t in trials)
    mu = _nanmean(mus)
    if len(trials) >= 2:
        tau_hw = _across_trials_hw([m / lbar for m in mus]) if lbar > 0 else math.nan
    else:
        tau_hw = trials[0][1] / lbar if lbar > 0 else math.nan
    row = {"sweep_value": value, "mode": "chain",
           "throughput": lbar if not unstable else math.nan,
           "throughput_hw": 0.0 if not unstable else math.nan,
           "tau_pis": mu / lbar if lbar > 0 else math.nan,
           "tau_pis_hw": tau_hw,
           "unstable": unstable, "mean_in_service": mu}
    row.update(_analytic_columns("chain", params))
    return row


def _nanmean(xs) -> float:
    vals = [x for x in xs if not (isinstance(x, float) and math.isnan(x))]
    return float(np.mean(vals)) if vals else math.nan


def _across_trials_hw(xs) -> float:
    vals = [x for x in xs if not (isinstance(x, float) and math.isnan(x))]
    if len(vals) < 2:
        return math.nan
    return float(1.96 * np.std(vals, ddof=1) / math.sqrt(len(vals)))


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


def csv_text(rows: list[dict], sweep_name: str) -> str:
    """Render rows as CSV text, floats at 6 significant digits."""
    header = [sweep_name] + list(CSV_COLUMNS)
    lines = [",".join(header)]
    for row in rows:
        cells = [format_cell(row["sweep_value"])]
        cells += [format_cell(row[c]) for c in CSV_COLUMNS]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(rows: list[dict], sweep_name: str, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(rows, sweep_name))


def all_points_unstable(rows: list[dict]) -> bool:
    """True when every simulated row tripped the watchdog."""
    sim_rows = [r for r in rows if r["unstable"] is not None]
    return bool(sim_rows) and all(r["unstable"] for r in sim_rows)
