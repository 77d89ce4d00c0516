"""System parameters and derived operating thresholds.

All SINR-related math is done in linear scale; dB values are converted
once at the interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class UnstableSystemError(ValueError):
    """Raised when a quantity is requested that only exists for a stable system."""


def db_to_linear(x_db: float) -> float:
    """Convert a dB value to linear scale."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a linear value to dB."""
    if x <= 0:
        raise ValueError("dB conversion requires a positive linear value")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """Static configuration of one random-access cell.

    Attributes
    ----------
    M : int
        Number of base-station antennas.
    L : int
        Number of orthogonal preambles (equals the preamble length).
    gamma : float
        Operating SNR (receive power over noise density), linear scale.
    Gamma : float
        SINR threshold for successful decoding, linear scale.
    lam : float
        Mean number of new active devices per slot.
    """

    M: int
    L: int
    gamma: float
    Gamma: float
    lam: float = 0.0

    def __post_init__(self):
        if self.M < 1 or int(self.M) != self.M:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if self.L < 1 or int(self.L) != self.L:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.Gamma > 0:
            raise ValueError(f"Gamma must be positive, got {self.Gamma}")
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")

    @classmethod
    def from_db(cls, M: int, L: int, gamma_db: float, Gamma_db: float,
                lam: float = 0.0) -> "SystemParams":
        """Build params with SNR and decoding threshold given in dB."""
        return cls(M=M, L=L, gamma=db_to_linear(gamma_db),
                   Gamma=db_to_linear(Gamma_db), lam=lam)

    @property
    def b1(self) -> float:
        """Slope constant of the mean-SINR denominator, 1 + 1/gamma (> 1)."""
        return 1.0 + 1.0 / self.gamma

    @property
    def b0(self) -> float:
        """Offset constant of the mean-SINR denominator, 1/gamma^2 - 1."""
        return 1.0 / self.gamma ** 2 - 1.0


@dataclass(frozen=True)
class DerivedThresholds:
    """Operating thresholds derived from a SystemParams instance.

    lambda_bar   effective rate of collision-free arrivals per slot
    K_Gamma      largest concurrent-transmitter count decodable in one shot
    eta_con      maximum throughput of the drop-on-low-SINR system
    eta_irt      maximum stable throughput of the re-transmitting system
    lambda_con   arrival rate that achieves eta_con
    lambda_irt   arrival rate that achieves eta_irt
    stable       whether the re-transmitting system is stable at lam
    """

    lambda_bar: float
    K_Gamma: float
    eta_con: float
    eta_irt: float
    lambda_con: float
    lambda_irt: float
    stable: bool
