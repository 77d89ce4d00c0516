"""Closed-form expressions for both random-access systems.

Collision probabilities, effective arrival rates, throughputs, stability
conditions, and queue/delay bounds. Everything here is a pure function of
the inputs; no randomness is involved.
"""

from __future__ import annotations

import math

import numpy as np

from .params import DerivedThresholds, SystemParams, UnstableSystemError

# exp(-lam) underflows below this; switch the Poisson CDF to log space
_LOG_SPACE_LAMBDA = 700.0


def collision_probability(K: int, L: int) -> float:
    """Probability that one of K active devices picks a preamble chosen by
    another device, out of L equiprobable preambles."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if L < 1:
        raise ValueError("L must be >= 1")
    return 1.0 - (1.0 - 1.0 / L) ** (K - 1)


def expected_pc_free(K: int, L: int) -> float:
    """Expected number of devices whose preamble choice is unique among K."""
    if K < 0:
        raise ValueError("K must be >= 0")
    if L < 1:
        raise ValueError("L must be >= 1")
    if K == 0:
        return 0.0
    return K * (1.0 - 1.0 / L) ** (K - 1)


def effective_arrival_rate(lam: float, L: int) -> float:
    """Mean number of collision-free new arrivals per slot, lam * exp(-lam/L)."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return lam * math.exp(-lam / L)


def mean_sinr_approx(K: int, q: int, params: SystemParams) -> float:
    """Approximate mean SINR of a collision-free device after q
    re-transmissions, with K concurrent data transmitters.

    Linear in the number of combined copies (q + 1) and decreasing in K.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if q < 0:
        raise ValueError("q must be >= 0")
    denom = K * params.b1 + params.b0
    if denom <= 0:
        raise ValueError("invalid params: K*b1 + b0 must be positive")
    return (q + 1) * params.M / denom


def asymptotic_sinr_limit(K: int, gamma: float) -> float:
    """Large-antenna limit of mean SINR per antenna with K transmitters."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return 1.0 / ((K - 1) + (K + 1.0 / gamma) / gamma)


def k_gamma(params: SystemParams) -> float:
    """Largest concurrent-transmitter count for which a single transmission
    meets the decoding threshold under the mean-SINR model."""
    return (params.M / params.Gamma - params.b0) / params.b1


def poisson_cdf(n: int, lam):
    """P[X <= n] for X ~ Poisson(lam).

    Term recursion in linear space, with a log-space fallback for rates
    large enough that exp(-lam) underflows. `lam` may be a scalar or a
    numpy array; the result matches its shape.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise ValueError("lam must be >= 0")
    scalar = lam_arr.ndim == 0
    lam_arr = np.atleast_1d(lam_arr)
    out = np.zeros_like(lam_arr)
    if n >= 0:
        small = lam_arr <= _LOG_SPACE_LAMBDA
        if np.any(small):
            lm = lam_arr[small]
            # terms more than ~60 sigma above the rate are below double
            # resolution; stopping there leaves the value bit-identical
            top = float(lm.max())
            k_stop = min(n, int(top + 60.0 * math.sqrt(top) + 60.0))
            term = np.exp(-lm)
            total = term.copy()
            for k in range(1, k_stop + 1):
                term = term * lm / k
                total += term
            out[small] = np.minimum(total, 1.0)
        if np.any(~small):
            for i in np.nonzero(~small)[0]:
                lm = lam_arr[i]
                sigma = math.sqrt(lm)
                k_lo = max(0, int(min(n, lm) - 60.0 * sigma - 60.0))
                k_hi = min(n, int(lm + 60.0 * sigma + 60.0))
                ks = np.arange(k_lo, k_hi + 1, dtype=float)
                logs = -lm + ks * math.log(lm) - _log_factorial(ks)
                peak = logs.max()
                out[i] = min(math.exp(
                    peak + math.log(np.exp(logs - peak).sum())), 1.0)
    return float(out[0]) if scalar else out


def _log_factorial(ks: np.ndarray) -> np.ndarray:
    return np.array([math.lgamma(k + 1.0) for k in ks])


def conventional_throughput(lam: float, params: SystemParams) -> float:
    """Mean successfully decoded packets per slot in the system that drops
    every packet whose first transmission misses the threshold."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    n = math.floor(k_gamma(params)) - 1
    if n < 0:
        return 0.0
    lbar = effective_arrival_rate(lam, params.L)
    return lbar * poisson_cdf(n, lbar)


def _golden_section_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return f(x), x


def max_conventional_throughput(params: SystemParams) -> tuple[float, float]:
    """Maximum of conventional_throughput over the arrival rate, and the
    maximizing rate.

    Coarse grid over lam in (0, 10 L] at step L/1000, then golden-section
    refinement of the best bracket. The decodability cutoff does not depend
    on lam, so the objective is smooth in lam and the refinement is safe.
    """
    L = params.L
    n = math.floor(k_gamma(params)) - 1
    if n < 0:
        return 0.0, 0.0
    step = L / 1000.0
    lams = np.arange(step, 10.0 * L + step / 2.0, step)
    lbars = lams * np.exp(-lams / L)
    vals = lbars * poisson_cdf(n, lbars)
    # the objective depends on lam only through the effective rate, so two
    # rates can reach the same peak; refine around the smallest one
    peak = float(vals.max())
    j = int(np.argmax(vals >= peak - 1e-3))
    while j + 1 < len(vals) and vals[j + 1] >= vals[j]:
        j += 1
    lo = lams[max(j - 1, 0)]
    hi = lams[min(j + 1, len(lams) - 1)]

    def objective(lam):
        return conventional_throughput(lam, params)

    best, arg = _golden_section_max(objective, lo, hi, tol=step * 1e-6)
    if best < vals[j]:
        best, arg = float(vals[j]), float(lams[j])
    return float(best), float(arg)


def irt_stable(params: SystemParams) -> bool:
    """Whether the re-transmitting system is stable at the configured
    arrival rate: the antenna count must exceed lambda_bar * Gamma * b1."""
    lbar = effective_arrival_rate(params.lam, params.L)
    return params.M > lbar * params.Gamma * params.b1


def max_irt_throughput(params: SystemParams) -> float:
    """Maximum stable throughput of the re-transmitting system:
    min(L/e, M / (Gamma * b1))."""
    return min(params.L / math.e, params.M / (params.Gamma * params.b1))


def sufficient_conditions(params: SystemParams) -> tuple[bool, bool]:
    """Two simple sufficient conditions for stability.

    cond_L:      M > (L/e) * Gamma * b1, independent of the arrival rate.
    cond_lambda: M > lam * Gamma * b1, independent of the preamble count.
    Each implies irt_stable.
    """
    gb1 = params.Gamma * params.b1
    cond_L = params.M > (params.L / math.e) * gb1
    cond_lambda = params.M > params.lam * gb1
    return cond_L, cond_lambda


def mean_pis_bounds(params: SystemParams) -> tuple[float, float, float]:
    """Bounds and an approximation for the stationary mean number of
    packets in service of the re-transmitting system.

    Returns (lower, upper, approx). Both upper and approx are clamped below
    at the lower bound: the raw linear-drift upper bound is invalid (falls
    below lambda_bar) in the light-load regime where no re-transmissions
    ever occur.
    """
    lbar = effective_arrival_rate(params.lam, params.L)
    gb0 = params.Gamma * params.b0
    margin = params.M - lbar * params.Gamma * params.b1
    if margin <= 0:
        raise UnstableSystemError(
            "mean packets-in-service diverges: M <= lambda_bar * Gamma * b1")
    lower = lbar
    upper = max(lower, lbar * (params.M + gb0) / margin)
    approx = max(lower, lbar * (params.M / 2.0 + gb0) / margin)
    return lower, upper, approx


def tau_pis(params: SystemParams) -> tuple[float, float, float]:
    """Bounds and an approximation for the mean number of transmissions
    until a packet in service is acknowledged.

    Little's law applied to mean_pis_bounds: each value there divided by
    lambda_bar. Returns (lower, upper, approx), all clamped below at 1.
    """
    gb0 = params.Gamma * params.b0
    margin = params.M - effective_arrival_rate(params.lam, params.L) \
        * params.Gamma * params.b1
    if margin <= 0:
        raise UnstableSystemError(
            "mean re-transmission count diverges: M <= lambda_bar * Gamma * b1")
    upper = max(1.0, (params.M + gb0) / margin)
    approx = max(1.0, (params.M / 2.0 + gb0) / margin)
    return 1.0, upper, approx


def _invert_effective_rate(target: float, L: int) -> float:
    # smallest lam in (0, L] with lam * exp(-lam/L) == target
    if target <= 0:
        return 0.0
    lo, hi = 0.0, float(L)
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if effective_arrival_rate(mid, L) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def derive_thresholds(params: SystemParams) -> DerivedThresholds:
    """Compute every derived operating threshold for one parameter set."""
    eta_con, lambda_con = max_conventional_throughput(params)
    eta_irt = max_irt_throughput(params)
    return DerivedThresholds(
        lambda_bar=effective_arrival_rate(params.lam, params.L),
        K_Gamma=k_gamma(params),
        eta_con=eta_con,
        eta_irt=eta_irt,
        lambda_con=lambda_con,
        lambda_irt=_invert_effective_rate(eta_irt, params.L),
        stable=irt_stable(params),
    )
