"""Framing, sqrt-Hann windowing and overlap-add resynthesis.

The forward DFT is unnormalized and the inverse carries the 1/frame_len
factor (numpy's ``rfft``/``irfft`` convention), so periodogram values are
on the same scale in every module.
"""
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, InvalidConfigError, ShapeError


@dataclass(frozen=True)
class StftConfig:
    """STFT geometry. Defaults: 32 ms frames at 16 kHz, 50 % overlap."""

    sample_rate_hz: int = 16000
    frame_len: int = 512
    hop: int = 256

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise InvalidConfigError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if self.frame_len < 4 or self.frame_len % 2:
            raise InvalidConfigError(f"frame_len must be even and >= 4, got {self.frame_len}")
        if 2 * self.hop != self.frame_len:
            raise InvalidConfigError(
                f"hop must be frame_len/2 ({self.frame_len // 2}), got {self.hop}")

    @property
    def n_bins(self):
        return self.frame_len // 2 + 1

    @classmethod
    def for_rate(cls, sample_rate_hz, frame_ms=32.0):
        frame_len = int(round(sample_rate_hz * frame_ms / 1000.0))
        frame_len += frame_len % 2
        return cls(sample_rate_hz, frame_len, frame_len // 2)


@dataclass
class Spectrogram:
    """Complex STFT coefficients, shape ``(n_frames, n_bins)``."""

    frames: np.ndarray
    config: StftConfig

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.complex128)
        if self.frames.ndim != 2 or self.frames.shape[1] != self.config.n_bins:
            raise ShapeError(
                f"expected frames of shape (n, {self.config.n_bins}), got {self.frames.shape}")

    @property
    def n_frames(self):
        return self.frames.shape[0]

    def power(self):
        """Periodogram |Y|^2 per frame and bin."""
        return self.frames.real ** 2 + self.frames.imag ** 2

    def __len__(self):
        return self.n_frames


def sqrt_hann_window(frame_len):
    """Periodic square-root Hann window.

    ``w[n]**2 + w[n + frame_len//2]**2 == 1``, so analysis plus synthesis
    with this window is constant-overlap-add at 50 % overlap.
    """
    if frame_len < 4 or frame_len % 2:
        raise InvalidConfigError(f"frame_len must be even and >= 4, got {frame_len}")
    n = np.arange(frame_len)
    # clip guards the tiny negative rounding at n = 0
    return np.sqrt(np.clip(0.5 - 0.5 * np.cos(2.0 * np.pi * n / frame_len), 0.0, None))


def n_frames_for(n_samples, config):
    if n_samples < config.frame_len:
        return 0
    return (n_samples - config.frame_len) // config.hop + 1


def synthesis_length(n_frames, config):
    return (n_frames - 1) * config.hop + config.frame_len


def analyze(signal, config=StftConfig()):
    """Split ``signal`` into windowed frames and take the half-spectrum DFT.

    Trailing samples that do not fill a whole frame are dropped.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a mono 1-D signal, got shape {x.shape}")
    n_frames = n_frames_for(len(x), config)
    if n_frames == 0:
        raise EmptyInputError(
            f"signal has {len(x)} samples, need at least one frame of {config.frame_len}")
    win = sqrt_hann_window(config.frame_len)
    segments = np.lib.stride_tricks.sliding_window_view(x, config.frame_len)[::config.hop]
    frames = np.fft.rfft(segments[:n_frames] * win, axis=1)
    # DC and Nyquist bins of a real signal are real
    frames[:, 0] = frames[:, 0].real
    frames[:, -1] = frames[:, -1].real
    return Spectrogram(frames, config)


def synthesize(spec):
    """Inverse DFT, synthesis windowing and overlap-add."""
    config = spec.config
    if spec.n_frames == 0:
        raise EmptyInputError("cannot synthesize an empty spectrogram")
    win = sqrt_hann_window(config.frame_len)
    segments = np.fft.irfft(spec.frames, n=config.frame_len, axis=1) * win
    out = np.zeros(synthesis_length(spec.n_frames, config))
    hop, n = config.hop, config.frame_len
    # two interleaved passes; frames within one pass do not overlap
    for start in (0, 1):
        idx = np.arange(start, spec.n_frames, 2)
        if len(idx) == 0:
            continue
        out[start * hop:start * hop + len(idx) * n] += segments[idx].reshape(-1)
    return out
