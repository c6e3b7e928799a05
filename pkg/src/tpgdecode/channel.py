"""BPSK over AWGN.

The noise scale ``sigma`` is tied to the SNR through
``SNR = 10 log10(1 / (2 sigma^2 rho))`` and each noise component has
variance ``sigma^2 / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def modulate(c) -> np.ndarray:
    """Binary to bipolar: 0 -> +1, 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(c, dtype=float)


def demap(x) -> np.ndarray:
    return (1.0 - np.asarray(x, dtype=float)) / 2.0


def snr_to_sigma(snr_db: float, rho: float) -> float:
    if rho <= 0:
        raise ValueError(f"rate must be positive, got {rho}")
    return float(np.sqrt(10.0 ** (-snr_db / 10.0) / (2.0 * rho)))


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    rho: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rate must be positive, got {self.rho}")

    @property
    def sigma(self) -> float:
        return snr_to_sigma(self.snr_db, self.rho)

    @property
    def noise_var(self) -> float:
        """Per-component noise variance."""
        return self.sigma ** 2 / 2.0


@dataclass(frozen=True)
class ChannelOutput:
    y: np.ndarray
    llr: np.ndarray  # 2 y / sigma^2


def llr_tpg(y, sigma: float) -> np.ndarray:
    """LLR under the ``2 y / sigma^2`` convention."""
    return 2.0 * np.asarray(y) / sigma ** 2


def llr_exact(y, sigma: float) -> np.ndarray:
    """LLR consistent with the true per-component variance sigma^2/2."""
    return 4.0 * np.asarray(y) / sigma ** 2


def transmit(x, cfg: ChannelConfig, rng: np.random.Generator, sigma: float | None = None) -> ChannelOutput:
    """Add Gaussian noise of variance ``sigma^2/2`` to the bipolar word ``x``.

    ``sigma`` overrides the value derived from ``cfg`` (used for the noiseless
    limit in tests).
    """
    if sigma is None:
        sigma = cfg.sigma
    x = np.asarray(x, dtype=float)
    y = x + (sigma / np.sqrt(2.0)) * rng.standard_normal(x.shape)
    return ChannelOutput(y=y, llr=llr_tpg(y, sigma))
