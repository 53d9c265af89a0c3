"""Bernoulli-Gaussian impulsive noise and a log-normal multipath channel.

Variances are per real dimension against a signal with unit variance per
dimension, so ``sigma_w^2 = 10**(-snr_db/10)`` and
``sigma_i^2 = 10**(-sinr_db/10)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_generator


@dataclass(frozen=True)
class NoiseConfig:
    p: float = 0.01
    snr_db: float = 25.0
    sinr_db: float = -15.0

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not 0.0 <= self.p <= 1.0:
            out.append("probability out of range")
        if math.isnan(self.snr_db) or math.isnan(self.sinr_db):
            out.append("SNR/SINR must be numbers")
        return out

    @property
    def sigma_w2(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def sigma_i2(self) -> float:
        return 10.0 ** (-self.sinr_db / 10.0)

    @property
    def weights(self) -> tuple[float, float]:
        return 1.0 - self.p, self.p

    @property
    def component_variances(self) -> tuple[float, float]:
        """Per-dimension variances of the two mixture components."""
        return self.sigma_w2, self.sigma_w2 + self.sigma_i2

    @property
    def total_variance(self) -> float:
        return self.sigma_w2 + self.p * self.sigma_i2


def impulse_mask(rng, shape, p: float) -> np.ndarray:
    return as_generator(rng).random(shape) < p


def noise_samples(rng, shape, cfg: NoiseConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``(background, impulsive, mask)`` arrays of the given shape.

    Draw order is fixed (mask, background, impulse) so a stream reproduces
    the same realization regardless of how the caller combines the parts.
    """
    gen = as_generator(rng)
    mask = gen.random(shape) < cfg.p
    bg = math.sqrt(cfg.sigma_w2) * (gen.standard_normal(shape) + 1j * gen.standard_normal(shape))
    g = math.sqrt(cfg.sigma_i2) * (gen.standard_normal(shape) + 1j * gen.standard_normal(shape))
    return bg, np.where(mask, g, 0.0), mask


def add_noise(frame, cfg: NoiseConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """Received samples ``s + n_w + b*g`` and the impulse mask ``b``."""
    frame = np.asarray(frame, dtype=np.complex128)
    if cfg.p == 0.0 and math.isinf(cfg.snr_db) and cfg.snr_db > 0:
        return frame.copy(), np.zeros(frame.shape, dtype=bool)
    bg, imp, mask = noise_samples(rng, frame.shape, cfg)
    return frame + bg + imp, mask


def gaussian_pdf(x, variance: float):
    x = np.asarray(x, dtype=float)
    return np.exp(-(x**2) / (2 * variance)) / math.sqrt(2 * math.pi * variance)


def total_noise_pdf(x, cfg: NoiseConfig):
    """Two-component Gaussian mixture density of one real noise dimension."""
    (p0, p1), (v0, v1) = cfg.weights, cfg.component_variances
    return p0 * gaussian_pdf(x, v0) + p1 * gaussian_pdf(x, v1)


@dataclass(frozen=True)
class SelectiveChannel:
    taps: np.ndarray

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    def frequency_response(self, n: int) -> np.ndarray:
        return np.fft.fft(self.taps, n)


def sample_selective(rng, n_taps: int = 4, sigma_ln: float = 0.5, *, raw: bool = False):
    """Log-normal tap magnitudes with uniform phases, normalized to unit power gain.

    With ``raw=True`` the unnormalized magnitudes are returned as well.
    """
    if n_taps < 1:
        raise ValueError("need at least one tap")
    if sigma_ln < 0:
        raise ValueError("sigma_ln must be non-negative")
    gen = as_generator(rng)
    mags = np.exp(sigma_ln * gen.standard_normal(n_taps))
    phases = gen.uniform(0.0, 2 * np.pi, n_taps) if sigma_ln > 0 or n_taps > 1 else np.zeros(1)
    taps = mags * np.exp(1j * phases)
    taps = taps / math.sqrt(np.sum(np.abs(taps) ** 2))
    ch = SelectiveChannel(taps)
    return (ch, mags) if raw else ch


def apply_selective(frame, ch: SelectiveChannel) -> np.ndarray:
    """Circular convolution of each frame with the channel taps."""
    frame = np.asarray(frame, dtype=np.complex128)
    n = frame.shape[-1]
    if ch.n_taps > n:
        raise ValueError(f"channel has {ch.n_taps} taps but frame length is {n}")
    h = np.zeros(n, dtype=np.complex128)
    h[: ch.n_taps] = ch.taps
    return np.fft.ifft(np.fft.fft(frame, axis=-1) * np.fft.fft(h), axis=-1)
