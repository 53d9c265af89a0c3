"""Figures of merit: PAPR CCDF, noise-detection error, output SNR and BER."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import modem
from .channel import NoiseConfig, apply_selective, noise_samples, sample_selective
from .numerics import RngStream, as_generator, q_function
from .preprocess import Preprocessor, apply

SNR_CAP_DB = 200.0
LOW_CONFIDENCE_EXCEEDANCES = 20
CHUNK_FRAMES = 4096


def to_db(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, 10 * np.log10(np.where(x > 0, x, 1.0)), -np.inf)
    out = np.minimum(np.where(np.isnan(x), SNR_CAP_DB, out), SNR_CAP_DB)
    return float(out) if out.ndim == 0 else out


def exact_sum(parts) -> np.ndarray | float:
    """Correctly rounded sum over the first axis, independent of part order."""
    arr = np.asarray(parts, dtype=float)
    if arr.ndim == 1:
        return math.fsum(arr)
    flat = arr.reshape(arr.shape[0], -1)
    out = np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])])
    return out.reshape(arr.shape[1:])


def _chunks(n_frames: int, chunk: int = CHUNK_FRAMES):
    start, idx = 0, 0
    while start < n_frames:
        size = min(chunk, n_frames - start)
        yield idx, size
        start += size
        idx += 1


def _stream(rng, idx: int) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.child(idx).generator()
    return as_generator(rng)


# ---------------------------------------------------------------- PAPR / CCDF


@dataclass
class CcdfCurve:
    thresholds: np.ndarray
    ccdf: np.ndarray
    exceedances: np.ndarray
    n_samples: int

    @property
    def points(self):
        return list(zip(self.thresholds.tolist(), self.ccdf.tolist()))

    @property
    def low_confidence(self) -> np.ndarray:
        return self.exceedances < LOW_CONFIDENCE_EXCEEDANCES


def ccdf(papr_samples, grid) -> CcdfCurve:
    """Fraction of samples strictly above each grid value (same units for both)."""
    samples = np.sort(np.asarray(papr_samples, dtype=float).ravel())
    if samples.size == 0:
        raise ValueError("empty PAPR sample set")
    grid = np.asarray(grid, dtype=float)
    exceed = samples.size - np.searchsorted(samples, grid, side="right")
    return CcdfCurve(grid, exceed / samples.size, exceed, samples.size)


def papr_at_ccdf(papr_samples, level: float) -> float:
    """Smallest PAPR value x with Pr(PAPR > x) <= level."""
    samples = np.sort(np.asarray(papr_samples, dtype=float).ravel())
    n = samples.size
    k = int(math.ceil(n * (1.0 - level))) - 1
    return float(samples[min(max(k, 0), n - 1)])


def papr_samples(cfg: modem.ModemConfig, n_frames: int, rng) -> np.ndarray:
    """Linear PAPR of ``n_frames`` random frames (oversampled per ``cfg``)."""
    out = []
    for idx, size in _chunks(n_frames):
        gen = _stream(rng, idx)
        grid = modem.qam_map(modem.random_bits(gen, cfg, size), cfg)
        out.append(modem.papr(modem.oversampled_frame(grid, cfg)))
    return np.concatenate(out)


# ---------------------------------------------------------------- detection error


def p_detection_error(cfg: modem.ModemConfig, noise: NoiseConfig, T, trials: int, rng):
    """Monte-Carlo Pr(|s + n_w| > T) * (1 - p) with impulses switched off.

    ``T`` may be a scalar or an array; one realization serves every value.
    ``trials`` counts frames.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    thresholds = np.atleast_1d(np.asarray(T, dtype=float))
    counts = []
    sw = math.sqrt(noise.sigma_w2)
    for idx, size in _chunks(trials):
        gen = _stream(rng, idx)
        _, _, frames = modem.transmit(gen, cfg, size)
        shape = frames.shape
        r = frames + sw * (gen.standard_normal(shape) + 1j * gen.standard_normal(shape))
        env = np.sort(np.abs(r).ravel())
        counts.append(env.size - np.searchsorted(env, thresholds, side="right"))
    total = trials * cfg.n_subcarriers
    est = exact_sum(counts) / total * (1.0 - noise.p)
    return float(est[0]) if np.ndim(T) == 0 else est


# ---------------------------------------------------------------- output SNR


@dataclass
class SnrEstimate:
    gamma_linear: float
    r1: float
    n_samples: int

    @property
    def gamma_db(self) -> float:
        return to_db(self.gamma_linear)


def _gamma(r1, s_ys, s_yy, s_ss):
    # E|R s|^2 / E|y - R s|^2 on sums; zero distortion maps to +inf
    signal = r1**2 * s_ss
    distortion = s_yy - 2 * r1 * s_ys + r1**2 * s_ss
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(distortion > 1e-300 * np.maximum(s_ss, 1.0), signal / np.maximum(distortion, 1e-300), np.inf)
    return g


def output_snr_mc(sent, received, *, r1_form: str = "real") -> SnrEstimate:
    """Output SNR with the optimal real scaling ``R1``.

    ``r1_form="real"`` uses ``R1 = E[Re(y s*)] / 2``; ``"squared"`` uses the
    fourth-moment form ``E[|y s*|^2] / 2``, kept for comparison only.
    """
    s = np.asarray(sent, dtype=np.complex128).ravel()
    y = np.asarray(received, dtype=np.complex128).ravel()
    if s.size == 0 or s.size != y.size:
        raise ValueError("sent and received streams must be non-empty and of equal length")
    n = s.size
    s_ys = math.fsum(np.real(y * np.conj(s)))
    s_yy = math.fsum(np.abs(y) ** 2)
    s_ss = math.fsum(np.abs(s) ** 2)
    if r1_form == "real":
        r1 = 0.5 * s_ys / n
    elif r1_form == "squared":
        r1 = 0.5 * math.fsum(np.abs(y * np.conj(s)) ** 2) / n
    else:
        raise ValueError(f"unknown r1_form {r1_form!r}")
    return SnrEstimate(float(_gamma(r1, s_ys, s_yy, s_ss)), r1, n)


@dataclass
class ThresholdSums:
    """Per-threshold sufficient statistics for the output SNR of one mode.

    Partial sums from independent chunks merge by exact summation, so the
    final estimate does not depend on the order chunks were processed in.
    """

    thresholds: np.ndarray
    s_ys: list = field(default_factory=list)
    s_yy: list = field(default_factory=list)
    s_ss: list = field(default_factory=list)
    n: int = 0

    def add(self, sent, received, mode: str):
        s = np.asarray(sent, dtype=np.complex128).ravel()
        r = np.asarray(received, dtype=np.complex128).ravel()
        ys, yy = threshold_partials(s, r, self.thresholds, mode)
        self.s_ys.append(ys)
        self.s_yy.append(yy)
        self.s_ss.append(math.fsum(np.abs(s) ** 2))
        self.n += s.size

    def merge(self, other: "ThresholdSums") -> "ThresholdSums":
        return ThresholdSums(
            self.thresholds,
            self.s_ys + other.s_ys,
            self.s_yy + other.s_yy,
            self.s_ss + other.s_ss,
            self.n + other.n,
        )

    def gamma(self) -> np.ndarray:
        s_ys = exact_sum(self.s_ys)
        s_yy = exact_sum(self.s_yy)
        s_ss = exact_sum(self.s_ss)
        r1 = 0.5 * s_ys / self.n
        return _gamma(r1, s_ys, s_yy, s_ss)


def threshold_partials(s: np.ndarray, r: np.ndarray, thresholds, mode: str):
    """Sums of Re(y s*) and |y|^2 for every threshold at once.

    Samples are sorted by envelope so each threshold is a prefix/suffix split.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    env = np.abs(r)
    order = np.argsort(env, kind="stable")
    env = env[order]
    cross = np.real(r * np.conj(s))[order]
    power = env**2
    zeros = np.zeros(1)
    c_pre = np.concatenate([zeros, np.cumsum(cross)])
    p_pre = np.concatenate([zeros, np.cumsum(power)])
    k = np.searchsorted(env, thresholds, side="right")
    if mode == "identity":
        k = np.full_like(k, env.size)
        return c_pre[k], p_pre[k]
    if mode == "nulling":
        return c_pre[k], p_pre[k]
    if mode == "clipping":
        unit = np.where(env > 0, cross / np.where(env > 0, env, 1.0), 0.0)
        u_suf = np.concatenate([np.cumsum(unit[::-1])[::-1], zeros])
        finite_t = np.where(np.isfinite(thresholds), thresholds, 0.0)
        ys = c_pre[k] + finite_t * u_suf[k]
        yy = p_pre[k] + finite_t**2 * (env.size - k)
        return ys, yy
    raise ValueError(f"unknown mode {mode!r}")


def simulate_received(cfg: modem.ModemConfig, noise: NoiseConfig, n_frames: int, gen, selective=None):
    """One chunk of (reference signal, received samples, bits).

    With a selective channel spec ``(n_taps, sigma_ln)`` a fresh channel is
    drawn per frame and the reference is the channel-filtered signal.
    """
    bits, _, frames = modem.transmit(gen, cfg, n_frames)
    if selective is not None:
        n_taps, sigma_ln = selective
        frames = np.stack([apply_selective(f, sample_selective(gen, n_taps, sigma_ln)) for f in frames])
    bg, imp, _ = noise_samples(gen, frames.shape, noise)
    return frames, frames + bg + imp, bits


def output_snr_sweep(
    cfg: modem.ModemConfig,
    noise: NoiseConfig,
    mode: str,
    thresholds,
    n_frames: int,
    rng,
    selective=None,
) -> tuple[np.ndarray, int]:
    """Monte-Carlo output SNR (linear) over a threshold grid.

    Every threshold sees the same signal and noise realization.
    Returns ``(gamma, n_samples)``.
    """
    sums = ThresholdSums(np.asarray(thresholds, dtype=float))
    for idx, size in _chunks(n_frames):
        gen = _stream(rng, idx)
        ref, r, _ = simulate_received(cfg, noise, size, gen, selective)
        sums.add(ref, r, mode)
    return sums.gamma(), sums.n


def _analytic_terms(T: float, noise: NoiseConfig, mode: str):
    # mixture component i has per-dimension variance 1 + sigma_i^2 at the receiver
    for p_i, var_i in zip(noise.weights, noise.component_variances):
        v = 1.0 + var_i
        e = math.exp(-(T**2) / (2 * v))
        if mode == "nulling":
            xi = T / (2 * v) * e
        elif mode == "clipping":
            xi = -math.sqrt(math.pi / (2 * v)) * q_function(T / math.sqrt(v))
        else:
            raise ValueError(f"unknown mode {mode!r}")
        yield p_i, var_i, v, e, xi


def output_snr_analytic(T: float, noise: NoiseConfig, mode: str, *, form: str = "derived") -> SnrEstimate:
    """Closed-form output SNR of a Gaussian-signal receiver with nulling or clipping.

    ``form="derived"`` uses the output power
    ``E_o = 2 + 2*sum p_i*(s_i^2 - G_i*exp(-T^2/(2(1+s_i^2))))`` with
    ``G_i = 1+s_i^2+T^2/2`` (nulling) or ``1+s_i^2`` (clipping).
    ``form="factored"`` evaluates ``2 + 2*sum p_i*(s_i^2 - G_i)*exp(...)``
    with ``G_i = 1+s_i^2`` / ``1+T^2+s_i^2``; it does not reduce to the
    input SNR as T grows and is kept only for audit.
    """
    if not T > 0:
        raise ValueError("threshold must be positive")
    r2 = 1.0
    e_o = 2.0
    for p_i, var_i, v, e, xi in _analytic_terms(T, noise, mode):
        r2 -= p_i * (e + T * xi)
        if form == "derived":
            gamma_i = v + T**2 / 2 if mode == "nulling" else v
            e_o += 2 * p_i * (var_i - gamma_i * e)
        elif form == "factored":
            gamma_i = v if mode == "nulling" else v + T**2
            e_o += 2 * p_i * (var_i - gamma_i) * e
        else:
            raise ValueError(f"unknown form {form!r}")
    denom = e_o - 2 * r2**2
    if not denom > 0:
        raise ValueError(f"analytic model out of validity range at T={T}")
    return SnrEstimate(2 * r2**2 / denom, r2, 0)


def output_snr_analytic_curve(thresholds, noise: NoiseConfig, mode: str, **kw) -> np.ndarray:
    return np.array([output_snr_analytic(t, noise, mode, **kw).gamma_linear for t in thresholds])


# ---------------------------------------------------------------- BER


@dataclass
class BerEstimate:
    errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits


def ber_counts(
    cfg: modem.ModemConfig,
    noise: NoiseConfig,
    pps,
    trials: int,
    rng,
    selective=None,
) -> list[BerEstimate]:
    """Bit-error counts for several preprocessors over one shared realization."""
    if trials < 1:
        raise ValueError("need at least one trial")
    pps = list(pps)
    errors = np.zeros(len(pps), dtype=np.int64)
    n_bits = 0
    for idx, size in _chunks(trials):
        gen = _stream(rng, idx)
        _, r, bits = simulate_received(cfg, noise, size, gen, selective)
        n_bits += bits.size
        for j, pp in enumerate(pps):
            decided = modem.qam_demap(modem.vofdm_demodulate(apply(pp, r), cfg), cfg)
            errors[j] += int(np.count_nonzero(decided != bits))
    return [BerEstimate(int(e), n_bits) for e in errors]


def ber(cfg: modem.ModemConfig, noise: NoiseConfig, pp: Preprocessor, trials: int, rng) -> float:
    """End-to-end hard-decision bit error rate over ``trials`` frames."""
    return ber_counts(cfg, noise, [pp], trials, rng)[0].ber
