"""Acceptance checks for the whole package.

Each criterion function recomputes its quantities from scratch at the
stated tolerances and returns a CriterionResult with one detail line per
sub-check. `run_all` executes every criterion (or a subset) in order;
long simulation runs are cached within the process so overlapping
criteria share them.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import analytic, chanmodel, protosim, queuedyn
from .experiment import ExperimentConfig, run_experiment, csv_text
from .params import SystemParams, UnstableSystemError, linear_to_db

BASE_SEED = 20260808

# reference operating point used throughout: 100 antennas, 64 preambles,
# SNR and decoding threshold both 6 dB, arrival rate 20 per slot
STANDARD = SystemParams.from_db(M=100, L=64, gamma_db=6.0, Gamma_db=6.0,
                                lam=20.0)

_TRIAL_CACHE: dict = {}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        return f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] {self.name}"


def _check(details: list[str], ok: bool, text: str) -> bool:
    details.append(f"  [{'ok' if ok else 'FAIL'}] {text}")
    return ok


def _cached_trial(mode: str, params: SystemParams, slots: int, warmup: int,
                  seed: int) -> protosim.MetricsAccumulator:
    key = (mode, params.M, params.L, params.gamma, params.Gamma, params.lam,
           slots, warmup, seed)
    if key not in _TRIAL_CACHE:
        _TRIAL_CACHE[key] = protosim.run_trial(mode, params, slots, warmup,
                                               seed)
    return _TRIAL_CACHE[key]


def _stable_cached_trials():
    return [(key, m) for key, m in _TRIAL_CACHE.items() if not m.unstable_flag]


def criterion_1() -> CriterionResult:
    """Closed-form reproduction at the reference operating point."""
    details: list[str] = []
    t0 = time.perf_counter()
    p = STANDARD
    lbar = analytic.effective_arrival_rate(p.lam, p.L)
    eta_con, _ = analytic.max_conventional_throughput(p)
    eta_irt = analytic.max_irt_throughput(p)
    gamma_bound_db = linear_to_db(p.M / (lbar * p.b1))
    m_bound = lbar * p.Gamma * p.b1
    lam_gb1 = p.lam * p.Gamma * p.b1
    elapsed = time.perf_counter() - t0

    ok = _check(details, math.floor(analytic.k_gamma(p)) == 20,
                f"single-shot decodability cutoff floor = "
                f"{math.floor(analytic.k_gamma(p))} (expected 20)")
    ok &= _check(details, abs(eta_con - 13.13) <= 0.02,
                 f"peak conventional throughput = {eta_con:.4f} (13.13 +- 0.02)")
    ok &= _check(details, abs(eta_irt - 20.07) <= 0.02,
                 f"peak stable re-transmission throughput = {eta_irt:.4f} "
                 f"(20.07 +- 0.02)")
    ok &= _check(details, abs(lbar - 14.63) <= 0.005,
                 f"effective arrival rate = {lbar:.4f} (14.63 +- 0.005)")
    ok &= _check(details, abs(gamma_bound_db - 7.37) <= 0.02,
                 f"threshold stability bound = {gamma_bound_db:.4f} dB "
                 f"(7.37 +- 0.02)")
    ok &= _check(details, abs(m_bound - 72.88) <= 0.05,
                 f"antenna stability bound = {m_bound:.4f} (72.88 +- 0.05)")
    ok &= _check(details, abs(lam_gb1 - 99.62) <= 0.05,
                 f"arrival-rate sufficient-condition bound = {lam_gb1:.4f} "
                 f"(99.62 +- 0.05)")
    ok &= _check(details, elapsed < 1.0, f"runtime {elapsed:.3f} s < 1 s")
    return CriterionResult(1, "closed-form reproduction", ok, details)


def criterion_2() -> CriterionResult:
    """Empirical mean realized SINR versus the mean-SINR formula."""
    details: list[str] = []
    t0 = time.perf_counter()
    p = SystemParams.from_db(M=100, L=64, gamma_db=10.0, Gamma_db=10.0)
    rng = np.random.default_rng(BASE_SEED + 2)
    draws = 10_000
    ok = True
    for K in (5, 10, 20, 40, 80):
        total = 0.0
        count = 0
        for _ in range(draws):
            V = chanmodel.draw_channels(K, p.M, rng)
            total += float(chanmodel.realized_sinr_all(V, p.gamma).sum())
            count += K
        emp = total / count
        approx = analytic.mean_sinr_approx(K, 0, p)
        rel = abs(emp - approx) / approx
        ok &= _check(details, rel <= 0.05,
                     f"K={K}: empirical mean {emp:.4f} vs formula "
                     f"{approx:.4f}, relative error {rel:.2%} (<= 5%)")
    elapsed = time.perf_counter() - t0
    ok &= _check(details, elapsed < 120.0, f"runtime {elapsed:.1f} s < 2 min")
    return CriterionResult(2, "realized-SINR mean versus formula", ok, details)


def criterion_3() -> CriterionResult:
    """Simulated throughput of both systems versus closed forms."""
    details: list[str] = []
    t0 = time.perf_counter()
    slots, warmup = 100_000, 10_000
    ok = True
    for i, lam in enumerate((5.0, 10.0, 15.0, 20.0)):
        p = SystemParams.from_db(M=100, L=64, gamma_db=6.0, Gamma_db=6.0,
                                 lam=lam)
        lbar = analytic.effective_arrival_rate(lam, p.L)
        m_irt = _cached_trial("irt", p, slots, warmup, BASE_SEED + 30 + i)
        rel = abs(m_irt.throughput - lbar) / lbar
        ok &= _check(details, rel <= 0.02 and not m_irt.unstable_flag,
                     f"irt lam={lam:g}: throughput {m_irt.throughput:.4f} vs "
                     f"{lbar:.4f}, relative error {rel:.2%} (<= 2%)")
        m_con = _cached_trial("conventional", p, slots, warmup,
                              BASE_SEED + 40 + i)
        pred = analytic.conventional_throughput(lam, p)
        gap = abs(m_con.throughput - pred)
        ok &= _check(details, gap <= 3.0 * m_con.throughput_hw,
                     f"conventional lam={lam:g}: throughput "
                     f"{m_con.throughput:.4f} vs closed form {pred:.4f}, "
                     f"|gap| {gap:.4f} (<= 3 half-widths = "
                     f"{3.0 * m_con.throughput_hw:.4f})")
    elapsed = time.perf_counter() - t0
    ok &= _check(details, elapsed < 600.0, f"runtime {elapsed:.1f} s < 10 min")
    return CriterionResult(3, "simulated versus analytic throughput", ok,
                           details)


def criterion_4() -> CriterionResult:
    """Stability frontier in the antenna count."""
    details: list[str] = []
    slots, warmup = 30_000, 3_000
    bound = analytic.effective_arrival_rate(20.0, 64) \
        * STANDARD.Gamma * STANDARD.b1
    ok = True
    unstable_ms, stable_ms = [], []
    for i, M in enumerate((60, 70, 75, 80, 100)):
        p = SystemParams.from_db(M=M, L=64, gamma_db=6.0, Gamma_db=6.0,
                                 lam=20.0)
        m = _cached_trial("irt", p, slots, warmup, BASE_SEED + 50 + i)
        (unstable_ms if m.unstable_flag else stable_ms).append(M)
        if M <= 70:
            ok &= _check(details, m.unstable_flag,
                         f"M={M}: watchdog tripped = {m.unstable_flag} "
                         f"(expected True, stopped at slot {m.slots_run})")
        elif M >= 80:
            ok &= _check(details,
                         not m.unstable_flag and math.isfinite(m.mean_retx),
                         f"M={M}: stable with finite tau = {m.mean_retx:.3f}")
        else:
            details.append(f"  [ok] M={M}: near-frontier point, "
                           f"unstable={m.unstable_flag}")
    u_max = max(unstable_ms) if unstable_ms else -math.inf
    s_min = min(stable_ms) if stable_ms else math.inf
    ok &= _check(details, u_max < s_min,
                 f"frontier is monotone: unstable up to M={u_max}, stable "
                 f"from M={s_min}")
    ok &= _check(details, u_max <= 1.1 * bound and s_min >= 0.9 * bound,
                 f"empirical frontier within ({u_max}, {s_min}) overlaps "
                 f"{bound:.2f} +- 10%")
    return CriterionResult(4, "stability frontier in antenna count", ok,
                           details)


def criterion_5() -> CriterionResult:
    """Stationary occupancy inside the closed-form sandwich."""
    details: list[str] = []
    lower, upper, _ = analytic.mean_pis_bounds(STANDARD)
    ok = True
    mu, hw = queuedyn.estimate_stationary_mean(STANDARD, steps=1_000_000,
                                               burn_in=100_000,
                                               seed=BASE_SEED + 5)
    ok &= _check(details, lower <= mu <= upper,
                 f"chain occupancy {mu:.3f} (+- {hw:.3f}) in "
                 f"[{lower:.2f}, {upper:.2f}]")
    ok &= _check(details, hw < 0.02 * mu,
                 f"chain confidence half-width {hw:.3f} < 2% of mean")
    m = _cached_trial("irt", STANDARD, 100_000, 10_000, BASE_SEED + 33)
    ok &= _check(details, lower <= m.mean_in_service <= upper,
                 f"slot-simulation occupancy {m.mean_in_service:.3f} in "
                 f"[{lower:.2f}, {upper:.2f}]")
    return CriterionResult(5, "occupancy sandwich bounds", ok, details)


def _random_params(rng: np.random.Generator) -> SystemParams:
    return SystemParams.from_db(
        M=int(rng.integers(10, 301)),
        L=int(rng.integers(8, 129)),
        gamma_db=float(rng.uniform(0.0, 12.0)),
        Gamma_db=float(rng.uniform(0.0, 12.0)),
        lam=float(rng.uniform(0.1, 96.0)),
    )


def criterion_6() -> CriterionResult:
    """Ordering, oracle, implication, conservation, and drift properties."""
    details: list[str] = []
    rng = np.random.default_rng(BASE_SEED + 6)
    ok = True

    stable_sets = []
    while len(stable_sets) < 1000:
        p = _random_params(rng)
        if analytic.irt_stable(p):
            stable_sets.append(p)
    violations = 0
    for p in stable_sets:
        eta_con, _ = analytic.max_conventional_throughput(p)
        if analytic.max_irt_throughput(p) < eta_con - 1e-9:
            violations += 1
    ok &= _check(details, violations == 0,
                 f"max stable re-transmission throughput >= peak "
                 f"conventional throughput on {len(stable_sets)} stable "
                 f"sets ({violations} violations)")

    mismatches = 0
    for K in range(1, 10_001):
        q = 0
        while analytic.mean_sinr_approx(K, q, STANDARD) < STANDARD.Gamma:
            q += 1
        if q != queuedyn.q_gamma(K, STANDARD):
            mismatches += 1
    ok &= _check(details, mismatches == 0,
                 f"re-transmission depth formula equals brute-force minimum "
                 f"for K in [1, 10000] ({mismatches} mismatches)")

    implication_fails = 0
    for _ in range(1000):
        p = _random_params(rng)
        cond_L, cond_lam = analytic.sufficient_conditions(p)
        if (cond_L or cond_lam) and not analytic.irt_stable(p):
            implication_fails += 1
    ok &= _check(details, implication_fails == 0,
                 f"each sufficient condition implies stability over 1000 "
                 f"random sets ({implication_fails} failures)")

    # make sure the reference runs exist even when run standalone
    _cached_trial("irt", STANDARD, 100_000, 10_000, BASE_SEED + 33)
    _cached_trial("conventional", STANDARD, 100_000, 10_000, BASE_SEED + 43)
    conservation_fails = 0
    little_fails = 0
    n_stable = 0
    n_irt = 0
    for key, m in _stable_cached_trials():
        n_stable += 1
        balance = m.pc_drops_total + m.sinr_drops_total + m.decoded_total \
            + m.in_service_final
        if balance != m.raw_arrivals_total:
            conservation_fails += 1
        if key[0] == "irt" and m.decoded_total > 0:
            n_irt += 1
            gap = abs(m.mean_in_service - m.mean_retx * m.throughput)
            if gap / m.mean_in_service > 0.03:
                little_fails += 1
    ok &= _check(details, n_stable > 0 and conservation_fails == 0,
                 f"flow conservation exact on {n_stable} stable runs "
                 f"({conservation_fails} failures)")
    ok &= _check(details, n_irt > 0 and little_fails == 0,
                 f"occupancy = transmissions-per-decode x throughput within "
                 f"3% on {n_irt} stable re-transmission runs "
                 f"({little_fails} failures)")

    ks = np.arange(0, 10_001)
    unstable_std = SystemParams.from_db(M=60, L=64, gamma_db=6.0,
                                        Gamma_db=6.0, lam=20.0)
    ok &= _check(details, _drift_sign_matches(STANDARD, ks, stable=True),
                 "drift negative beyond a finite state at the stable "
                 "reference point")
    ok &= _check(details, _drift_sign_matches(unstable_std, ks, stable=False),
                 "drift eventually positive at the unstable reference point "
                 "(M=60)")
    drift_fails = 0
    checked = 0
    for _ in range(200):
        p = _random_params(rng)
        lbar = analytic.effective_arrival_rate(p.lam, p.L)
        rho = lbar * p.Gamma * p.b1 / p.M
        if 0.95 <= rho <= 1.05:
            continue  # near the boundary the crossover can exceed the scan
        checked += 1
        if not _drift_sign_matches(p, ks, stable=analytic.irt_stable(p)):
            drift_fails += 1
    ok &= _check(details, checked > 50 and drift_fails == 0,
                 f"drift tail sign matches the stability verdict on "
                 f"{checked} random sets ({drift_fails} failures)")
    return CriterionResult(6, "property suites", ok, details)


def _drift_sign_matches(p: SystemParams, ks: np.ndarray, stable: bool) -> bool:
    # the drift sawtooths (slope -1 with upward jumps at each depth step),
    # so the verdict lives in the sign of the tail after the LAST crossing
    drifts = np.array([queuedyn.drift_diagnostic(int(k), p) for k in ks])
    if stable:
        nonneg = np.nonzero(drifts >= 0)[0]
        tail = int(nonneg[-1]) + 1 if len(nonneg) else 0
        return tail <= int(0.9 * len(ks)) and bool((drifts[tail:] < 0).all())
    nonpos = np.nonzero(drifts <= 0)[0]
    tail = int(nonpos[-1]) + 1 if len(nonpos) else 0
    return tail <= int(0.9 * len(ks)) and bool((drifts[tail:] > 0).all())


def criterion_7() -> CriterionResult:
    """Byte-identical CSV re-runs with the same master seed."""
    details: list[str] = []
    config = ExperimentConfig(mode="both", sweep="lambda", start=10.0,
                              stop=18.0, step=8.0, slots=2500, warmup=500,
                              trials=1, master_seed=777)
    text_a = csv_text(run_experiment(config), config.sweep)
    text_b = csv_text(run_experiment(config), config.sweep)
    ok = _check(details, text_a == text_b,
                "two sequential runs render identical CSV bytes")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "sweep.csv")
        run_experiment(ExperimentConfig(mode="both", sweep="lambda",
                                        start=10.0, stop=18.0, step=8.0,
                                        slots=2500, warmup=500, trials=1,
                                        master_seed=777, output_path=path,
                                        jobs=2))
        with open(path, "rb") as fh:
            file_bytes = fh.read()
    ok &= _check(details, file_bytes == text_a.encode(),
                 "parallel run (jobs=2) writes the same bytes")
    return CriterionResult(7, "deterministic CSV output", ok, details)


def criterion_8() -> CriterionResult:
    """Qualitative sweep shapes: monotone delay trends and preamble-count
    saturation of the conventional system."""
    details: list[str] = []
    ok = True
    slots, warmup = 100_000, 10_000

    taus = []
    for i, lam in enumerate((5.0, 10.0, 15.0, 20.0)):
        p = SystemParams.from_db(M=100, L=64, gamma_db=6.0, Gamma_db=6.0,
                                 lam=lam)
        taus.append(_cached_trial("irt", p, slots, warmup,
                                  BASE_SEED + 30 + i).mean_retx)
    mono = all(a <= b + 1e-12 for a, b in zip(taus, taus[1:]))
    ok &= _check(details, mono and taus[-1] > taus[0] + 0.1,
                 f"transmissions per decode increase with arrival rate: "
                 f"{[f'{t:.3f}' for t in taus]}")

    taus_g = []
    for i, g_db in enumerate((3.0, 5.0, 6.5)):
        p = SystemParams.from_db(M=100, L=64, gamma_db=6.0, Gamma_db=g_db,
                                 lam=20.0)
        taus_g.append(_cached_trial("irt", p, 20_000, 2_000,
                                    BASE_SEED + 80 + i).mean_retx)
    mono = all(a <= b + 1e-12 for a, b in zip(taus_g, taus_g[1:]))
    ok &= _check(details, mono and taus_g[-1] > taus_g[0] + 0.1,
                 f"transmissions per decode increase with the decoding "
                 f"threshold: {[f'{t:.3f}' for t in taus_g]}")

    taus_l = []
    for i, L in enumerate((32, 64, 96)):
        p = SystemParams.from_db(M=100, L=L, gamma_db=6.0, Gamma_db=6.0,
                                 lam=20.0)
        taus_l.append(_cached_trial("irt", p, 20_000, 2_000,
                                    BASE_SEED + 90 + i).mean_retx)
    mono = all(a <= b + 1e-12 for a, b in zip(taus_l, taus_l[1:]))
    ok &= _check(details, mono and taus_l[-1] > taus_l[0] + 0.05,
                 f"transmissions per decode increase with preamble count: "
                 f"{[f'{t:.3f}' for t in taus_l]}")

    thr_l = []
    for i, L in enumerate((16, 64, 256)):
        p = SystemParams.from_db(M=100, L=L, gamma_db=6.0, Gamma_db=6.0,
                                 lam=20.0)
        thr_l.append(_cached_trial("conventional", p, 10_000, 1_000,
                                   BASE_SEED + 95 + i).throughput)
    ok &= _check(details,
                 thr_l[1] - thr_l[0] > 3.0 and thr_l[2] - thr_l[1] < 0.8,
                 f"conventional throughput saturates in the preamble count: "
                 f"{[f'{t:.3f}' for t in thr_l]}")
    return CriterionResult(8, "qualitative sweep shapes", ok, details)


_CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def run_all(only=None) -> list[CriterionResult]:
    """Run every acceptance criterion (or the selected subset) in order."""
    numbers = sorted(_CRITERIA) if only is None else sorted(only)
    results = []
    for n in numbers:
        if n not in _CRITERIA:
            raise ValueError(f"no criterion {n}; known: {sorted(_CRITERIA)}")
        results.append(_CRITERIA[n]())
    return results
