"""Memoryless receiver front-ends: identity, nulling (blanking) and clipping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("identity", "nulling", "clipping")


@dataclass(frozen=True)
class Preprocessor:
    kind: str = "identity"
    threshold: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown preprocessor {self.kind!r}; expected one of {KINDS}")
        if self.kind != "identity" and not self.threshold > 0:
            raise ValueError("threshold must be positive")

    def __call__(self, samples):
        return apply(self, samples)


def identity() -> Preprocessor:
    return Preprocessor("identity")


def nulling(threshold: float) -> Preprocessor:
    return Preprocessor("nulling", threshold)


def clipping(threshold: float) -> Preprocessor:
    return Preprocessor("clipping", threshold)


def apply(pp: Preprocessor, samples) -> np.ndarray:
    """Apply ``pp`` sample by sample; envelopes ``<= T`` always pass unchanged."""
    r = np.asarray(samples, dtype=np.complex128)
    if pp.kind == "identity":
        return r.copy()
    mag = np.abs(r)
    over = mag > pp.threshold
    if pp.kind == "nulling":
        return np.where(over, 0.0, r)
    # phase-preserving clamp; mag > T > 0 wherever the division is used
    scale = np.where(over, pp.threshold / np.where(over, mag, 1.0), 1.0)
    return r * scale
