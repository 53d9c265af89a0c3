"""Vector-OFDM transmitter and receiver.

A frame of N QAM symbols is blocked column-wise into an ``M x L`` grid
(column ``l`` holds symbols ``lM .. lM+M-1``), a length-L inverse DFT is
applied to every row, and the time-domain columns are concatenated into a
length-N sample vector. ``M = 1`` is conventional OFDM, ``M = N`` is
single-carrier transmission.

All array functions accept leading batch dimensions: a ``(n_frames, N)``
array of frames maps to an ``(n_frames, M, L)`` stack of grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_generator, dft, idft

QAM_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class ModemConfig:
    n_subcarriers: int = 256
    vb_size: int = 1
    qam_order: int = 4
    oversampling: int = 1

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.n_subcarriers < 1:
            out.append("N must be a positive integer")
        if self.vb_size < 1:
            out.append("M must be a positive integer")
        elif self.n_subcarriers >= 1 and self.n_subcarriers % self.vb_size:
            out.append("M must divide N")
        if self.qam_order not in QAM_ORDERS:
            out.append(f"qam_order must be one of {QAM_ORDERS}")
        if self.oversampling < 1:
            out.append("oversampling must be >= 1")
        return out

    @property
    def n_blocks(self) -> int:
        return self.n_subcarriers // self.vb_size

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.qam_order))

    @property
    def bits_per_frame(self) -> int:
        return self.n_subcarriers * self.bits_per_symbol


def _pam_levels(side: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-power PAM levels indexed by Gray label, and the Gray->position map."""
    positions = np.arange(side)
    # unit mean-square per real dimension: mean of (2i-side+1)^2 is (side^2-1)/3
    levels = (2 * positions - side + 1) / math.sqrt((side**2 - 1) / 3)
    gray = positions ^ (positions >> 1)
    gray_to_pos = np.empty(side, dtype=np.int64)
    gray_to_pos[gray] = positions
    return levels, gray_to_pos


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ weights


def _int_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def constellation(qam_order: int) -> np.ndarray:
    """All constellation points, indexed by the integer value of their bit label."""
    k = int(math.log2(qam_order))
    labels = np.arange(qam_order)
    bits = _int_to_bits(labels, k)
    return map_symbols(bits.reshape(-1), qam_order)


def map_symbols(bits, qam_order: int) -> np.ndarray:
    """Gray-mapped square QAM with ``E|S|^2 = 2``; first half of each label drives I."""
    bits = np.asarray(bits, dtype=np.int64)
    k = int(math.log2(qam_order))
    half = k // 2
    if bits.shape[-1] % k:
        raise ValueError(f"bit count {bits.shape[-1]} is not a multiple of {k}")
    side = 1 << half
    levels, gray_to_pos = _pam_levels(side)
    groups = bits.reshape(*bits.shape[:-1], -1, k)
    i_lab = _bits_to_int(groups[..., :half])
    q_lab = _bits_to_int(groups[..., half:])
    return levels[gray_to_pos[i_lab]] + 1j * levels[gray_to_pos[q_lab]]


def demap_symbols(symbols, qam_order: int) -> np.ndarray:
    """Minimum-distance hard decisions back to bits (separable per dimension)."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    k = int(math.log2(qam_order))
    half = k // 2
    side = 1 << half
    scale = math.sqrt((side**2 - 1) / 3)
    pos_to_gray = np.arange(side) ^ (np.arange(side) >> 1)

    def decide(x):
        pos = np.clip(np.rint((x * scale + side - 1) / 2), 0, side - 1).astype(np.int64)
        return _int_to_bits(pos_to_gray[pos], half)

    bits = np.concatenate([decide(symbols.real), decide(symbols.imag)], axis=-1)
    return bits.reshape(*symbols.shape[:-1], -1)


def to_grid(symbols, cfg: ModemConfig) -> np.ndarray:
    """Column-wise blocking of length-N vectors into ``M x L`` grids."""
    symbols = np.asarray(symbols)
    if symbols.shape[-1] != cfg.n_subcarriers:
        raise ValueError(f"expected length {cfg.n_subcarriers}, got {symbols.shape[-1]}")
    blocks = symbols.reshape(*symbols.shape[:-1], cfg.n_blocks, cfg.vb_size)
    return np.swapaxes(blocks, -1, -2)


def from_grid(grid, cfg: ModemConfig) -> np.ndarray:
    grid = np.asarray(grid)
    return np.swapaxes(grid, -1, -2).reshape(*grid.shape[:-2], cfg.n_subcarriers)


def _check_grid(grid: np.ndarray, cfg: ModemConfig):
    if grid.shape[-2:] != (cfg.vb_size, cfg.n_blocks):
        raise ValueError(
            f"grid shape {grid.shape[-2:]} does not match M x L = {cfg.vb_size} x {cfg.n_blocks}"
        )


def qam_map(bits, cfg: ModemConfig) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != cfg.bits_per_frame:
        raise ValueError(f"expected {cfg.bits_per_frame} bits per frame, got {bits.shape[-1]}")
    return to_grid(map_symbols(bits, cfg.qam_order), cfg)


def qam_demap(grid, cfg: ModemConfig) -> np.ndarray:
    grid = np.asarray(grid)
    _check_grid(grid, cfg)
    return demap_symbols(from_grid(grid, cfg), cfg.qam_order)


def vofdm_modulate(grid, cfg: ModemConfig) -> np.ndarray:
    """Row-wise length-L IDFT, then concatenation of the time-domain columns."""
    grid = np.asarray(grid, dtype=np.complex128)
    _check_grid(grid, cfg)
    return from_grid(idft(grid, axis=-1), cfg)


def vofdm_demodulate(frame, cfg: ModemConfig) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.complex128)
    if frame.shape[-1] != cfg.n_subcarriers:
        raise ValueError(f"frame length {frame.shape[-1]} != N = {cfg.n_subcarriers}")
    return dft(to_grid(frame, cfg), axis=-1)


def ofdm_modulate(symbols) -> np.ndarray:
    """Reference conventional OFDM transmitter: a single N-point unitary IDFT."""
    return idft(np.asarray(symbols, dtype=np.complex128))


def ofdm_demodulate(frame) -> np.ndarray:
    return dft(np.asarray(frame, dtype=np.complex128))


def oversampled_frame(grid, cfg: ModemConfig) -> np.ndarray:
    """Time samples with each row's IDFT interpolated by ``cfg.oversampling``.

    Zero padding is inserted in the middle of each length-L row spectrum so
    the interpolated waveform passes through the Nyquist-rate samples.
    """
    grid = np.asarray(grid, dtype=np.complex128)
    _check_grid(grid, cfg)
    j = cfg.oversampling
    if j == 1:
        return vofdm_modulate(grid, cfg)
    n_b = cfg.n_blocks
    padded = np.zeros((*grid.shape[:-1], n_b * j), dtype=np.complex128)
    lo = (n_b + 1) // 2
    padded[..., :lo] = grid[..., :lo]
    padded[..., n_b * j - (n_b - lo):] = grid[..., lo:]
    if n_b % 2 == 0:
        # split the Nyquist bin so real rows stay real
        padded[..., lo] = grid[..., lo] / 2
        padded[..., n_b * j - (n_b - lo)] = grid[..., lo] / 2
    time = np.fft.ifft(padded, axis=-1) * (j * n_b) / math.sqrt(n_b)
    return np.swapaxes(time, -1, -2).reshape(*grid.shape[:-2], cfg.n_subcarriers * j)


def papr(frame) -> np.ndarray | float:
    """Peak over mean sample power of each frame (linear)."""
    frame = np.asarray(frame, dtype=np.complex128)
    power = np.abs(frame) ** 2
    mean = power.mean(axis=-1)
    if np.any(mean == 0):
        raise ValueError("undefined PAPR for an all-zero frame")
    out = power.max(axis=-1) / mean
    if np.ndim(out) == 0:
        return float(out)
    return out


def random_bits(rng, cfg: ModemConfig, n_frames: int | None = None) -> np.ndarray:
    gen = as_generator(rng)
    shape = (cfg.bits_per_frame,) if n_frames is None else (n_frames, cfg.bits_per_frame)
    return gen.integers(0, 2, size=shape, dtype=np.uint8)


def transmit(rng, cfg: ModemConfig, n_frames: int):
    """Random bits, their symbol grids and time frames for ``n_frames`` frames."""
    bits = random_bits(rng, cfg, n_frames)
    grid = qam_map(bits, cfg)
    return bits, grid, vofdm_modulate(grid, cfg)
