"""Exhaustive threshold search and (M, p, SINR) sweeps."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .channel import NoiseConfig
from .modem import ModemConfig
from .numerics import RngStream
from .preprocess import Preprocessor

SIGMA_S = math.sqrt(2.0)
OBJECTIVES = ("max_output_snr", "min_ber")


@dataclass(frozen=True)
class SweepSpec:
    m_values: tuple = (1, 16, 32, 64)
    p_values: tuple = (0.01,)
    sinr_grid_db: tuple = tuple(range(-40, 1, 5))
    snr_db: float = 25.0
    threshold_grid: tuple = (0.05, 20 * SIGMA_S, 0.05)
    mode: str = "nulling"
    objective: str = "max_output_snr"
    trials_per_point: int = 3907
    n_subcarriers: int = 256
    qam_order: int = 4
    method: str = "mc"
    near_optimal_db: float = 0.05

    def problems(self) -> list[str]:
        out = []
        lo, hi, step = self.threshold_grid
        if not lo > 0:
            out.append("threshold grid lower bound must be > 0")
        if not step > 0:
            out.append("threshold grid step must be > 0")
        if hi < lo:
            out.append("threshold grid upper bound must be >= lower bound")
        if hi > 20 * SIGMA_S + 1e-9:
            out.append("threshold grid upper bound exceeds 20*sigma_s")
        for name in ("m_values", "p_values", "sinr_grid_db"):
            if len(getattr(self, name)) == 0:
                out.append(f"{name} must be non-empty")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                out.append("probability out of range")
        for m in self.m_values:
            if m < 1 or self.n_subcarriers % m:
                out.append(f"M must divide N (M={m}, N={self.n_subcarriers})")
        if self.mode not in ("nulling", "clipping"):
            out.append(f"unknown mode {self.mode!r}")
        if self.objective not in OBJECTIVES:
            out.append(f"objective must be one of {OBJECTIVES}")
        if self.method not in ("mc", "analytic"):
            out.append("method must be 'mc' or 'analytic'")
        if self.trials_per_point < 1:
            out.append("trials_per_point must be >= 1")
        return out

    def thresholds(self) -> np.ndarray:
        lo, hi, step = self.threshold_grid
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        # rounding keeps grid values like 2.2 free of accumulated float noise
        return np.round(lo + step * np.arange(n), 12)


@dataclass
class OptimumRecord:
    m: int
    p: float
    sinr_db: float
    mode: str
    optimal_threshold: float
    objective_value: float
    objective_kind: str
    boundary: bool
    near_optimal_lo: float
    near_optimal_hi: float
    n_samples: int
    method: str = "mc"
    curve: np.ndarray | None = field(default=None, repr=False)

    def as_row(self) -> dict:
        row = asdict(self)
        row.pop("curve")
        return row


def _objective_curve(point, spec: SweepSpec, thresholds: np.ndarray, rng):
    m, p, sinr, mode = point
    noise = NoiseConfig(p, spec.snr_db, sinr)
    cfg = ModemConfig(spec.n_subcarriers, m, spec.qam_order)
    if spec.objective == "max_output_snr":
        if spec.method == "analytic":
            if m != 1:
                raise ValueError("the closed-form objective only describes M = 1")
            vals = np.full(thresholds.shape, -np.inf)
            for j, t in enumerate(thresholds):
                try:
                    vals[j] = metrics.output_snr_analytic(t, noise, mode).gamma_db
                except ValueError:
                    pass
            return vals, 0
        gamma, n = metrics.output_snr_sweep(cfg, noise, mode, thresholds, spec.trials_per_point, rng)
        return metrics.to_db(gamma), n
    pps = [Preprocessor(mode, float(t)) for t in thresholds]
    counts = metrics.ber_counts(cfg, noise, pps, spec.trials_per_point, rng)
    # maximize the negative BER so ties and argmax logic are shared
    return -np.array([c.ber for c in counts]), counts[0].bits


def optimize_threshold(point, spec: SweepSpec, rng) -> OptimumRecord:
    """Grid argmax of the objective at one ``(M, p, sinr_db, mode)`` point.

    All thresholds are scored on one signal/noise realization. Ties go to
    the smallest threshold. ``near_optimal_lo/hi`` bound the thresholds whose
    score is within ``spec.near_optimal_db`` of the best (output SNR only).
    """
    m, p, sinr, mode = point
    thresholds = spec.thresholds()
    vals, n = _objective_curve(point, spec, thresholds, rng)
    finite = np.isfinite(vals) | (vals == np.inf)
    if not finite.any():
        raise ValueError(f"objective failed at every threshold for point M={m}, p={p}, SINR={sinr}")
    scored = np.where(finite, vals, -np.inf)
    k = int(np.argmax(scored))
    best = scored[k]
    if spec.objective == "max_output_snr":
        close = np.flatnonzero(scored >= best - spec.near_optimal_db)
    else:
        close = np.array([k])
    value = float(best) if spec.objective == "max_output_snr" else float(-best)
    return OptimumRecord(
        m=m,
        p=p,
        sinr_db=sinr,
        mode=mode,
        optimal_threshold=float(thresholds[k]),
        objective_value=value,
        objective_kind=spec.objective,
        boundary=k in (0, len(thresholds) - 1),
        near_optimal_lo=float(thresholds[close.min()]),
        near_optimal_hi=float(thresholds[close.max()]),
        n_samples=int(n),
        method=spec.method,
        curve=vals,
    )


def point_stream(rng: RngStream, ip: int, isinr: int) -> RngStream:
    """Stream for one (p, SINR) cell; shared by every M so noise is common."""
    return rng.child(ip, isinr)


def _work(args):
    point, spec, stream = args
    return optimize_threshold(point, spec, stream)


def sweep_points(spec: SweepSpec, rng: RngStream):
    for (ip, p), (isn, sinr), m in itertools.product(
        enumerate(spec.p_values), enumerate(spec.sinr_grid_db), spec.m_values
    ):
        yield (m, p, sinr, spec.mode), point_stream(rng, ip, isn)


def run_sweep(spec: SweepSpec, rng: RngStream, workers: int = 1, keep_curves: bool = False) -> list[OptimumRecord]:
    """One optimum per (p, SINR, M) cell, in that nesting order.

    Each cell owns its random stream, so the result is the same for any
    ``workers`` count.
    """
    problems = spec.problems()
    if problems:
        raise ValueError("; ".join(problems))
    jobs = [(point, spec, stream) for point, stream in sweep_points(spec, rng)]
    records = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(_work, jobs)
            records = list(results)
    else:
        for point, _, stream in jobs:
            try:
                records.append(optimize_threshold(point, spec, stream))
            except ValueError as exc:
                m, p, sinr, _ = point
                raise ValueError(f"sweep failed at M={m}, p={p}, SINR={sinr} dB: {exc}") from exc
    if not keep_curves:
        for r in records:
            r.curve = None
    return records
