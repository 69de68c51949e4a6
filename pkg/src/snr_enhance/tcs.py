"""Speech PSD estimation by temporal cepstrum smoothing (TCS).

The floored maximum-likelihood speech PSD is taken to the cepstral
domain, smoothed over time with quefrency-dependent constants (weak
smoothing for the spectral envelope and the pitch peak, strong smoothing
elsewhere) and transformed back with a bias correction.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidConfigError, ShapeError

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class TcsConfig:
    xi_ml_min: float = 10.0 ** (-2.0)
    kappa: float = 0.5 * EULER_GAMMA
    alpha_env: float = 0.2
    alpha_high: float = 0.96
    env_quefrency_ms: float = 2.5
    pitch_min_hz: float = 70.0
    pitch_max_hz: float = 400.0
    pitch_peak_threshold: float = 0.2
    pitch_vicinity: int = 1

    def __post_init__(self):
        if not self.xi_ml_min > 0:
            raise InvalidConfigError(f"xi_ml_min must be positive, got {self.xi_ml_min}")
        if not 0.0 <= self.alpha_env <= self.alpha_high < 1.0:
            raise InvalidConfigError(
                "need 0 <= alpha_env <= alpha_high < 1, got "
                f"{self.alpha_env}, {self.alpha_high}")
        if not 0 < self.pitch_min_hz < self.pitch_max_hz:
            raise InvalidConfigError("pitch search range must satisfy 0 < min < max")


@dataclass
class TcsState:
    """Smoothed cepstrum of the previous frame; ``None`` before the first frame."""

    smoothed_cepstrum: np.ndarray = None
    last_pitch_bin: int = field(default=-1)

    @property
    def initialized(self):
        return self.smoothed_cepstrum is not None


def ml_speech_psd(noisy_power, noise_psd, xi_ml_min):
    """Floored maximum-likelihood speech PSD ``noise * max(|Y|^2/noise - 1, floor)``."""
    noise_psd = np.asarray(noise_psd, dtype=np.float64)
    if np.any(noise_psd <= 0):
        raise DomainError("noise PSD must be strictly positive")
    gamma = np.asarray(noisy_power, dtype=np.float64) / noise_psd
    return noise_psd * np.maximum(gamma - 1.0, xi_ml_min)


def to_cepstrum(log_psd_half):
    """Real cepstrum of a half spectrum (length ``frame_len // 2 + 1``)."""
    log_psd_half = np.asarray(log_psd_half, dtype=np.float64)
    return np.fft.irfft(log_psd_half, n=2 * (len(log_psd_half) - 1))


def from_cepstrum(smoothed, kappa):
    """Back-transform a cepstrum to a PSD: ``exp(DFT(c)[k] + kappa)`` on the half spectrum."""
    return np.exp(np.fft.rfft(np.asarray(smoothed, dtype=np.float64)).real + kappa)


def envelope_cutoff(sample_rate_hz, config):
    """Number of low quefrency bins treated as spectral envelope."""
    return int(round(config.env_quefrency_ms * 1e-3 * sample_rate_hz))


def pitch_search_range(sample_rate_hz, config):
    lo = int(round(sample_rate_hz / config.pitch_max_hz))
    hi = int(round(sample_rate_hz / config.pitch_min_hz))
    return lo, hi


def smoothing_constants(ml_cepstrum, sample_rate_hz, config):
    """Quefrency-dependent smoothing constants for one frame.

    Returns
    -------
    alpha : ndarray
        One constant per cepstral bin, mirrored for the upper half.
    pitch_bin : int
        Detected pitch quefrency, or -1 when the frame is judged unvoiced.
    """
    n = len(ml_cepstrum)
    half = n // 2
    alpha = np.full(half + 1, config.alpha_high)
    alpha[:min(envelope_cutoff(sample_rate_hz, config), half + 1)] = config.alpha_env

    lo, hi = pitch_search_range(sample_rate_hz, config)
    hi = min(hi, half)
    pitch_bin = -1
    if lo <= hi:
        q = lo + int(np.argmax(ml_cepstrum[lo:hi + 1]))
        if ml_cepstrum[q] > config.pitch_peak_threshold:
            pitch_bin = q
            v = config.pitch_vicinity
            alpha[max(q - v, 0):min(q + v, half) + 1] = config.alpha_env
    # bin n - q shares the constant of bin q
    full = np.concatenate([alpha, alpha[1:n - half][::-1]])
    return full, pitch_bin


def smooth_update(state, ml_cepstrum, config, sample_rate_hz=16000, alpha=None):
    """Recursive smoothing of the ML cepstrum; updates ``state`` in place.

    ``alpha`` overrides the computed smoothing constants (scalar or vector).
    """
    ml_cepstrum = np.asarray(ml_cepstrum, dtype=np.float64)
    if not state.initialized:
        state.smoothed_cepstrum = ml_cepstrum.copy()
        return state.smoothed_cepstrum.copy()
    if state.smoothed_cepstrum.shape != ml_cepstrum.shape:
        raise ShapeError(
            f"cepstrum length {len(ml_cepstrum)} does not match state length "
            f"{len(state.smoothed_cepstrum)}")
    if alpha is None:
        alpha, state.last_pitch_bin = smoothing_constants(ml_cepstrum, sample_rate_hz, config)
    state.smoothed_cepstrum = (1.0 - alpha) * ml_cepstrum + alpha * state.smoothed_cepstrum
    return state.smoothed_cepstrum.copy()


def estimate(state, noisy_power, noise_psd, config=TcsConfig(), sample_rate_hz=16000):
    """Speech PSD of one frame (ML estimate, cepstral smoothing, back-transform)."""
    ml = ml_speech_psd(noisy_power, noise_psd, config.xi_ml_min)
    smoothed = smooth_update(state, to_cepstrum(np.log(ml)), config, sample_rate_hz)
    return from_cepstrum(smoothed, config.kappa)
