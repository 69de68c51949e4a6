"""Frame-causal enhancement with a Wiener gain or a DNN-estimated mask."""
from dataclasses import dataclass, field

import numpy as np

from . import mlp
from .errors import ConfigurationError, DomainError, InvalidConfigError, ShapeError
from .features import FeatureKind, extract
from .noise_tracker import NoiseTrackerConfig, NoiseTrackState
from .stft import Spectrogram, StftConfig, analyze, synthesize
from .tcs import TcsConfig, TcsState, estimate as tcs_estimate

G_MIN_DEFAULT = 10.0 ** (-20.0 / 20.0)
G_MIN_LISTENING = 10.0 ** (-15.0 / 20.0)


@dataclass(frozen=True)
class NonMl:
    """Statistical path: SPP noise tracker + TCS speech PSD + Wiener gain."""


@dataclass(frozen=True)
class Ml:
    """DNN path: features of ``kind`` fed to ``model``, output used as mask."""

    kind: FeatureKind
    model: mlp.MlpModel

    def __post_init__(self):
        expected = self.kind.stacked_dim()
        if self.model.input_dim != expected:
            raise ConfigurationError(
                f"model input dim {self.model.input_dim} does not match feature kind "
                f"{self.kind.cli_name!r} dim {expected}")


@dataclass(frozen=True)
class EnhanceConfig:
    g_min: float = G_MIN_DEFAULT
    path: object = field(default_factory=NonMl)
    stft: StftConfig = field(default_factory=StftConfig)
    tracker: NoiseTrackerConfig = field(default_factory=NoiseTrackerConfig)
    tcs: TcsConfig = field(default_factory=TcsConfig)

    def __post_init__(self):
        if not 0.0 < self.g_min < 1.0:
            raise InvalidConfigError(f"g_min must lie in (0, 1), got {self.g_min}")
        if isinstance(self.path, Ml) and self.path.model.output_dim != self.stft.n_bins:
            raise ConfigurationError(
                f"model output dim {self.path.model.output_dim} != {self.stft.n_bins} bins")

    @classmethod
    def from_db(cls, g_min_db=-20.0, **kwargs):
        return cls(g_min=10.0 ** (g_min_db / 20.0), **kwargs)


def wiener_gain(speech_psd, noise_psd):
    speech_psd = np.asarray(speech_psd, dtype=np.float64)
    noise_psd = np.asarray(noise_psd, dtype=np.float64)
    if np.any(speech_psd <= 0) or np.any(noise_psd <= 0):
        raise DomainError("speech and noise PSDs must be strictly positive")
    return speech_psd / (speech_psd + noise_psd)


def apply_gain(gain, g_min, frame):
    """``max(gain, g_min) * Y``; works per frame or on whole spectrogram arrays."""
    gain = np.asarray(gain, dtype=np.float64)
    frame = np.asarray(frame)
    if gain.shape != frame.shape:
        raise ShapeError(f"gain shape {gain.shape} does not match frame shape {frame.shape}")
    return np.maximum(gain, g_min) * frame


def nonml_gains(noisy, config):
    """Wiener gains for every frame, before the minimum-gain floor."""
    power = noisy.power()
    tracker = NoiseTrackState.from_periodograms(power, config.tracker)
    tcs_state = TcsState()
    fs = config.stft.sample_rate_hz
    gains = np.empty_like(power)
    for i, frame in enumerate(power):
        noise_psd, _ = tracker.update(frame)
        speech_psd = tcs_estimate(tcs_state, frame, noise_psd, config.tcs, fs)
        gains[i] = wiener_gain(speech_psd, noise_psd)
    return gains


def ml_gains(noisy, path, config):
    tracker = NoiseTrackState.from_periodograms(noisy.power(), config.tracker)
    stream = extract(noisy, path.kind, tracker, TcsState(), config.tcs)
    return mlp.forward(path.model, stream.vectors)


def enhance_spectrogram(noisy, config=EnhanceConfig()):
    """Return ``(enhanced, applied_gains)`` for a noisy spectrogram.

    ``applied_gains`` already includes the minimum-gain floor.
    """
    if isinstance(config.path, Ml):
        raw = ml_gains(noisy, config.path, config)
    elif isinstance(config.path, NonMl):
        raw = nonml_gains(noisy, config)
    else:
        raise ConfigurationError(f"unknown enhancement path {config.path!r}")
    applied = np.maximum(raw, config.g_min)
    return Spectrogram(applied * noisy.frames, noisy.config), applied


def enhance(signal, config=EnhanceConfig()):
    """Enhance a mono signal; output length follows :func:`stft.synthesize`."""
    noisy = analyze(signal, config.stft)
    enhanced, _ = enhance_spectrogram(noisy, config)
    return synthesize(enhanced)
