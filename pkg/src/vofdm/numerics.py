"""Numeric substrate: unitary DFT, Gaussian tail, seeded random streams."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _dft_direct(x: np.ndarray, inverse: bool) -> np.ndarray:
    # O(L^2) kernel along the last axis
    n = x.shape[-1]
    k = np.arange(n)
    sign = 1.0 if inverse else -1.0
    kernel = np.exp(sign * 2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)
    return x @ kernel


def dft(x, inverse: bool = False, axis: int = -1) -> np.ndarray:
    """Unitary DFT along ``axis``.

    The inverse uses ``exp(+j2*pi*q*l/L)/sqrt(L)``, the forward transform
    ``exp(-j2*pi*q*l/L)/sqrt(L)``, so the pair preserves energy.
    Power-of-two lengths go through numpy's FFT; other lengths use the
    direct O(L^2) sum.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 0 or x.shape[axis] == 0:
        raise ValueError("zero-length transform")
    n = x.shape[axis]
    if _is_pow2(n):
        if inverse:
            return np.fft.ifft(x, axis=axis, norm="ortho")
        return np.fft.fft(x, axis=axis, norm="ortho")
    moved = np.moveaxis(x, axis, -1)
    return np.moveaxis(_dft_direct(moved, inverse), -1, axis)


def idft(x, axis: int = -1) -> np.ndarray:
    return dft(x, inverse=True, axis=axis)


def q_function(x):
    """Upper tail probability of the standard normal, Q(x) = 0.5*erfc(x/sqrt(2))."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Streams with distinct ids are derived through numpy's ``SeedSequence``
    spawn keys, so each trial can be regenerated independently of the
    order in which trials are executed.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys: int) -> "RngStream":
        # Fold extra keys into the stream id deterministically.
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *keys))
        return RngStream(self.seed, int(ss.generate_state(1, dtype=np.uint64)[0] >> 1))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


def gaussian_pair(rng, variance_per_dim: float, size=None) -> np.ndarray | complex:
    """Complex Gaussian draw(s) with independent re/im of the given variance each."""
    if variance_per_dim < 0:
        raise ValueError("variance must be non-negative")
    gen = as_generator(rng)
    shape = () if size is None else size
    scale = math.sqrt(variance_per_dim)
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    z = scale * (re + 1j * im)
    if size is None:
        return complex(z)
    return z
