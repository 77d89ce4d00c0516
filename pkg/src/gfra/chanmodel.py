"""Channel-level physical layer: Rayleigh channel vectors, preamble
selection, correlator channel estimates, and the realized post-beamforming
SINR of a collision-free device.

Channel vectors are plain complex numpy arrays of length M, normalized so
each entry is standard complex Gaussian (receive power absorbed into the
SNR). The SINR expression already averages over the additive noise, so no
per-symbol noise is ever simulated; decoding is driven by the realized
vectors alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelEstimate:
    """Correlator output for one preamble, in normalized units.

    entries  superposition of the choosing devices' vectors plus noise
    collided True when two or more devices chose this preamble
    """

    entries: np.ndarray
    collided: bool


@dataclass(frozen=True)
class SinrSample:
    """Realized conditional SINR of one device in one slot."""

    value: float
    k_concurrent: int


def draw_channels(count: int, M: int, rng: np.random.Generator) -> np.ndarray:
    """Draw `count` independent channel vectors as a (count, M) complex
    array; real and imaginary parts are independent N(0, 1/2)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if M < 1:
        raise ValueError("M must be >= 1")
    re = rng.standard_normal((count, M))
    im = rng.standard_normal((count, M))
    return (re + 1j * im) / np.sqrt(2.0)


def assign_preambles(K: int, L: int,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform independent preamble choices for K devices.

    Returns (choices, pc_free) where choices[i] in [0, L) and pc_free holds
    the indices of devices whose preamble was chosen by no other device.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if L < 1:
        raise ValueError("L must be >= 1")
    if K == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    choices = rng.integers(0, L, size=K)
    counts = np.bincount(choices, minlength=L)
    pc_free = np.nonzero(counts[choices] == 1)[0]
    return choices, pc_free


def correlator_estimate(vectors: np.ndarray, gamma: float,
                        rng: np.random.Generator) -> ChannelEstimate:
    """Estimate of the channel behind one preamble: the sum of all choosing
    devices' vectors plus white noise of per-entry variance 1/gamma."""
    V = np.atleast_2d(np.asarray(vectors))
    if V.shape[0] < 1:
        raise ValueError("at least one device must have chosen the preamble")
    M = V.shape[1]
    noise = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) \
        * np.sqrt(0.5 / gamma)
    return ChannelEstimate(entries=V.sum(axis=0) + noise,
                           collided=V.shape[0] >= 2)


def realized_sinr_all(V: np.ndarray, gamma: float) -> np.ndarray:
    """Realized conditional SINR for every row of V against all others.

    V is the (K, M) matrix of all concurrent transmitters' channel vectors.
    For device k with squared norm n_k, the interference-plus-noise power is

        sum_{k' != k} (gamma^2 |v_k^H v_k'|^2 + gamma ||v_k'||^2) / n_k
        + gamma + M / n_k

    and the signal power is gamma^2 n_k + gamma.
    """
    V = np.asarray(V)
    K, M = V.shape
    n = np.einsum("km,km->k", V.real, V.real) + np.einsum("km,km->k", V.imag, V.imag)
    if np.any(n <= 0):
        raise ValueError("zero-norm channel vector")
    cross = np.abs(V @ V.conj().T) ** 2
    np.fill_diagonal(cross, 0.0)
    interf = cross.sum(axis=1)
    denom = (gamma ** 2 * interf + gamma * (n.sum() - n)) / n + gamma + M / n
    return (gamma ** 2 * n + gamma) / denom


def realized_sinr(target: int, channels: np.ndarray, gamma: float,
                  M: int) -> SinrSample:
    """Realized conditional SINR of the collision-free device `target`.

    `channels` holds the channel vectors of all concurrent data
    transmitters, including the target itself.
    """
    V = np.atleast_2d(np.asarray(channels))
    K, m = V.shape
    if m != M:
        raise ValueError(f"channel vectors have length {m}, expected M={M}")
    if not 0 <= target < K:
        raise ValueError("target index out of range")
    values = realized_sinr_all(V, gamma)
    return SinrSample(value=float(values[target]), k_concurrent=K)


def rtd_accumulate(history) -> float:
    """Combined SINR after re-transmissions: the plain sum of the per-slot
    realized SINR values of one device."""
    total = 0.0
    count = 0
    for sample in history:
        total += sample.value if isinstance(sample, SinrSample) else float(sample)
        count += 1
    if count == 0:
        raise ValueError("history must contain at least one sample")
    return total
