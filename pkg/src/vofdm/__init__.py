"""Vector OFDM over Bernoulli-Gaussian impulsive noise with nulling/clipping receivers."""

__version__ = "0.1.0"

from .channel import NoiseConfig, SelectiveChannel, add_noise, apply_selective, sample_selective, total_noise_pdf
from .modem import ModemConfig, papr, qam_demap, qam_map, vofdm_demodulate, vofdm_modulate
from .numerics import RngStream, dft, gaussian_pair, idft, q_function
from .preprocess import Preprocessor, apply, clipping, identity, nulling

__all__ = [
    "ModemConfig",
    "NoiseConfig",
    "Preprocessor",
    "RngStream",
    "SelectiveChannel",
    "add_noise",
    "apply",
    "apply_selective",
    "clipping",
    "dft",
    "gaussian_pair",
    "identity",
    "idft",
    "nulling",
    "papr",
    "q_function",
    "qam_demap",
    "qam_map",
    "sample_selective",
    "total_noise_pdf",
    "vofdm_demodulate",
    "vofdm_modulate",
]
