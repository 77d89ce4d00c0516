"""Scalar Markov-chain abstraction of the re-transmitting system.

The number of packets in service evolves as the sum of the newest
collision-free arrivals and the arrivals of the last Q slots, where Q is
the re-transmission depth required for decodability at the previous
occupancy. Stepping the recursion directly gives an independent route to
the stationary occupancy, to compare against the closed-form bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import effective_arrival_rate
from .params import SystemParams, UnstableSystemError
from .protosim import watchdog_ceiling

_INITIAL_WINDOW = 64


def q_gamma(K: int, params: SystemParams) -> int:
    """Minimum number of re-transmissions for decodability with K
    concurrent transmitters, under the mean-SINR model; 0 when a single
    transmission already meets the threshold."""
    if K < 0:
        raise ValueError("K must be >= 0")
    need = params.Gamma * (K * params.b1 + params.b0) / params.M - 1.0
    return max(0, math.ceil(need))


@dataclass
class ChainState:
    """Current occupancy plus the ring buffer of recent arrival counts.

    `window` stores past per-slot arrivals; `head` is the position of the
    most recent one and `stored` how many are valid. The buffer is grown
    geometrically before the needed depth can outrun it.
    """

    k_bar: int = 0
    window: list = field(default_factory=lambda: [0] * _INITIAL_WINDOW)
    head: int = -1
    stored: int = 0

    def recent_arrivals(self, depth: int) -> list[int]:
        """The last `depth` arrival counts, most recent first."""
        cap = len(self.window)
        return [self.window[(self.head - j) % cap]
                for j in range(min(depth, self.stored))]


def _ensure_capacity(state: ChainState, need: int) -> None:
    cap = len(state.window)
    if 2 * need <= cap:
        return
    new_cap = cap
    while new_cap < 2 * need:
        new_cap *= 2
    recent = state.recent_arrivals(state.stored)
    state.window = list(reversed(recent)) + [0] * (new_cap - len(recent))
    state.head = len(recent) - 1
    state.stored = len(recent)


def step_chain(state: ChainState, params: SystemParams,
               rng: np.random.Generator) -> ChainState:
    """Advance the occupancy recursion by one slot.

    Draws the new collision-free arrival count, adds the arrivals of the
    last Q slots (Q from the previous occupancy), and pushes the new count
    into the window. Mutates and returns `state`.
    """
    Q = q_gamma(state.k_bar, params)
    _ensure_capacity(state, Q)
    a = int(rng.poisson(effective_arrival_rate(params.lam, params.L)))
    total = a
    cap = len(state.window)
    for j in range(min(Q, state.stored)):
        total += state.window[(state.head - j) % cap]
    state.k_bar = total
    state.head = (state.head + 1) % cap
    state.window[state.head] = a
    state.stored = min(state.stored + 1, cap)
    return state


def drift_diagnostic(k: int, params: SystemParams) -> float:
    """Expected one-step change of the occupancy from state k:
    lambda_bar * (1 + Q(k)) - k. Negative beyond a finite state exactly
    when the stability condition holds."""
    if k < 0:
        raise ValueError("k must be >= 0")
    lbar = effective_arrival_rate(params.lam, params.L)
    return lbar * (1 + q_gamma(k, params)) - k


def estimate_stationary_mean(params: SystemParams, steps: int, burn_in: int,
                             seed, ceiling: int | None = None,
                             n_batches: int = 50) -> tuple[float, float]:
    """Time-average occupancy after burn-in, with a batch-means 95%
    confidence half-width.

    Raises UnstableSystemError when the occupancy exceeds the watchdog
    ceiling (default 100 * max(lambda_bar, 1)).
    """
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if steps <= burn_in:
        raise ValueError("steps must exceed burn_in")
    if ceiling is None:
        ceiling = watchdog_ceiling(params)
    rng = np.random.default_rng(seed)
    state = ChainState()
    kept = np.empty(steps - burn_in)
    for t in range(steps):
        step_chain(state, params, rng)
        if state.k_bar > ceiling:
            raise UnstableSystemError(
                f"occupancy {state.k_bar} exceeded ceiling {ceiling} "
                f"at step {t}")
        if t >= burn_in:
            kept[t - burn_in] = state.k_bar
    mu_hat = float(kept.mean())
    nb = min(n_batches, len(kept))
    hw = math.nan
    if nb >= 2:
        cut = (len(kept) // nb) * nb
        batches = kept[:cut].reshape(nb, -1).mean(axis=1)
        hw = float(1.96 * np.std(batches, ddof=1) / math.sqrt(nb))
    return mu_hat, hw
