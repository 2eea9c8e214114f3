"""BPSK modulation and the two-user Gaussian multiple-access wiretap channel."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

BOB = "bob"
EVE = "eve"


@dataclass(frozen=True)
class ChannelParams:
    """Transmit powers and per-tap noise variances (all linear)."""

    p1: float
    p2: float
    sigma2_bob: float
    sigma2_eve: float

    def __post_init__(self):
        if self.p1 <= 0 or self.p2 <= 0:
            raise ValueError("transmit powers must be positive")
        if self.sigma2_eve < self.sigma2_bob:
            warnings.warn(
                "eavesdropper noise below legitimate noise: outside the degraded regime",
                stacklevel=2,
            )

    def sigma2(self, tap: str) -> float:
        if tap == BOB:
            return self.sigma2_bob
        if tap == EVE:
            return self.sigma2_eve
        raise ValueError(f"unknown tap {tap!r}")


def bpsk(bits: np.ndarray) -> np.ndarray:
    """Map bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def bpsk_demap(symbols: np.ndarray) -> np.ndarray:
    return (np.asarray(symbols) < 0).astype(np.uint8)


def transmit(x1: np.ndarray, x2: np.ndarray, params: ChannelParams, tap: str,
             rng: np.random.Generator) -> np.ndarray:
    """y = sqrt(p1) x1 + sqrt(p2) x2 + N(0, sigma^2 of the tap)."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ValueError(f"codeword shapes differ: {x1.shape} vs {x2.shape}")
    sigma2 = params.sigma2(tap)
    y = math.sqrt(params.p1) * x1 + math.sqrt(params.p2) * x2
    if sigma2 > 0:
        y = y + math.sqrt(sigma2) * rng.standard_normal(x1.shape)
    return y


def snr_db(params: ChannelParams, tap: str) -> float:
    """Sum-power SNR of the tap in dB."""
    sigma2 = params.sigma2(tap)
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive for an SNR")
    return 10.0 * math.log10((params.p1 + params.p2) / sigma2)
