"""DNN input features: noisy log-spectra, noise-aware and SNR-normalized kinds.

Every kind is built per frame, then three past frames are appended as
context. The a priori / a posteriori SNR kinds are ratios of quantities
that all scale with the input power, so they do not change when the
input level changes.
"""
import enum
import struct
from dataclasses import dataclass

import numpy as np

from . import tcs as tcs_mod
from .errors import CorruptFileError, DomainError, InvalidConfigError
from .noise_tracker import NoiseTrackerConfig, NoiseTrackState
from .tcs import TcsConfig, TcsState

LOG_FLOOR = 1e-12
CONTEXT = 3
DUMP_MAGIC = b"SNRFEAT1"


class FeatureKind(enum.Enum):
    LOG_PERIODOGRAM = 0              # Y
    LOG_PERIODOGRAM_PLUS_NOISE = 1   # Y, N
    LOG_APRIORI_SNR = 2              # xi
    LOG_APOSTERIORI_SNR = 3          # gamma
    LOG_APRIORI_PLUS_APOSTERIORI = 4  # xi, gamma

    @property
    def cli_name(self):
        return _CLI_NAMES[self]

    @property
    def n_parts(self):
        return 2 if self in (FeatureKind.LOG_PERIODOGRAM_PLUS_NOISE,
                             FeatureKind.LOG_APRIORI_PLUS_APOSTERIORI) else 1

    @property
    def needs_speech_psd(self):
        return self in (FeatureKind.LOG_APRIORI_SNR, FeatureKind.LOG_APRIORI_PLUS_APOSTERIORI)

    @property
    def scale_invariant(self):
        return self in (FeatureKind.LOG_APRIORI_SNR, FeatureKind.LOG_APOSTERIORI_SNR,
                        FeatureKind.LOG_APRIORI_PLUS_APOSTERIORI)

    def frame_dim(self, n_bins=257):
        return self.n_parts * n_bins

    def stacked_dim(self, n_bins=257, context=CONTEXT):
        return self.frame_dim(n_bins) * (context + 1)

    @classmethod
    def parse(cls, name):
        for kind, label in _CLI_NAMES.items():
            if name == label:
                return kind
        raise InvalidConfigError(
            f"unknown feature kind {name!r}; valid kinds: {', '.join(_CLI_NAMES.values())}")


_CLI_NAMES = {
    FeatureKind.LOG_PERIODOGRAM: "y",
    FeatureKind.LOG_PERIODOGRAM_PLUS_NOISE: "y+n",
    FeatureKind.LOG_APRIORI_SNR: "xi",
    FeatureKind.LOG_APOSTERIORI_SNR: "gamma",
    FeatureKind.LOG_APRIORI_PLUS_APOSTERIORI: "xi+gamma",
}
KIND_NAMES = tuple(_CLI_NAMES.values())


@dataclass
class FeatureStream:
    """Context-stacked feature vectors, shape ``(n_frames, dim)``."""

    vectors: np.ndarray
    kind: FeatureKind

    @property
    def n_frames(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.n_frames


def log_periodogram(frame):
    """``ln(|Y|^2 + 1e-12)`` of a complex frame (or frames)."""
    frame = np.asarray(frame)
    return np.log(frame.real ** 2 + frame.imag ** 2 + LOG_FLOOR)


def snr_features(noisy_power, speech_psd, noise_psd):
    """Log a priori SNR and log a posteriori SNR of one frame."""
    noise_psd = np.asarray(noise_psd, dtype=np.float64)
    speech_psd = np.asarray(speech_psd, dtype=np.float64)
    if np.any(noise_psd <= 0) or np.any(speech_psd <= 0):
        raise DomainError("speech and noise PSDs must be strictly positive")
    log_apriori = np.log(speech_psd / noise_psd)
    log_aposteriori = np.log(np.asarray(noisy_power, dtype=np.float64) / noise_psd + LOG_FLOOR)
    return log_apriori, log_aposteriori


def stack_context(per_frame, context=CONTEXT):
    """Append ``context`` past frames to each frame, newest first.

    Frames before the start of the stream are replaced by frame 0.
    """
    if context < 0:
        raise InvalidConfigError(f"context must be >= 0, got {context}")
    v = np.asarray(per_frame, dtype=np.float64)
    if v.shape[0] == 0:
        return v.reshape(0, v.shape[1] * (context + 1) if v.ndim == 2 else 0)
    idx = np.arange(v.shape[0])
    parts = [v[np.maximum(idx - lag, 0)] for lag in range(context + 1)]
    return np.concatenate(parts, axis=1)


def frame_features(kind, noisy_power, noise_psd, speech_psd=None):
    """Unstacked feature vector(s) for the given kind. Works on 1-D or 2-D input."""
    if kind is FeatureKind.LOG_PERIODOGRAM:
        return np.log(noisy_power + LOG_FLOOR)
    if kind is FeatureKind.LOG_PERIODOGRAM_PLUS_NOISE:
        return np.concatenate([np.log(noisy_power + LOG_FLOOR), np.log(noise_psd)], axis=-1)
    if kind is FeatureKind.LOG_APOSTERIORI_SNR:
        return np.log(noisy_power / noise_psd + LOG_FLOOR)
    log_apriori, log_aposteriori = snr_features(noisy_power, speech_psd, noise_psd)
    if kind is FeatureKind.LOG_APRIORI_SNR:
        return log_apriori
    return np.concatenate([log_apriori, log_aposteriori], axis=-1)


@dataclass
class EstimatorTrace:
    """Per-frame estimator outputs collected while extracting features."""

    noise_psd: np.ndarray
    speech_psd: np.ndarray = None


def run_estimators(noisy, tracker, tcs_state=None, tcs_config=TcsConfig()):
    """Drive the noise tracker (and TCS if a state is given) over all frames.

    The values for frame ``l`` are those produced after consuming frame ``l``.
    """
    power = noisy.power()
    noise = np.empty_like(power)
    speech = np.empty_like(power) if tcs_state is not None else None
    fs = noisy.config.sample_rate_hz
    for i, frame in enumerate(power):
        noise[i], _ = tracker.update(frame)
        if speech is not None:
            speech[i] = tcs_mod.estimate(tcs_state, frame, noise[i], tcs_config, fs)
    return EstimatorTrace(noise, speech)


def extract(noisy, kind, tracker, tcs_state=None, tcs_config=TcsConfig(),
            context=CONTEXT, return_trace=False):
    """Feature stream of ``kind`` for the spectrogram ``noisy``.

    Parameters
    ----------
    noisy : Spectrogram
    kind : FeatureKind
    tracker : NoiseTrackState
        Initialized tracker; it is advanced through every frame.
    tcs_state : TcsState, optional
        Needed by the a priori SNR kinds; a fresh state is created if omitted.
    """
    if kind.needs_speech_psd and tcs_state is None:
        tcs_state = TcsState()
    trace = run_estimators(noisy, tracker, tcs_state if kind.needs_speech_psd else None,
                           tcs_config)
    per_frame = frame_features(kind, noisy.power(), trace.noise_psd, trace.speech_psd)
    stream = FeatureStream(stack_context(per_frame, context), kind)
    return (stream, trace) if return_trace else stream


def extract_from_spectrogram(noisy, kind, tracker_config=NoiseTrackerConfig(),
                             tcs_config=TcsConfig(), context=CONTEXT, return_trace=False):
    """Like :func:`extract` with estimators initialized from the stream itself."""
    tracker = NoiseTrackState.from_periodograms(noisy.power(), tracker_config)
    return extract(noisy, kind, tracker, TcsState(), tcs_config, context, return_trace)


def write_dump(path, stream):
    """Write ``SNRFEAT1`` little-endian feature dump."""
    v = np.ascontiguousarray(stream.vectors, dtype="<f8")
    with open(path, "wb") as f:
        f.write(DUMP_MAGIC)
        f.write(struct.pack("<III", stream.kind.value, v.shape[0], v.shape[1]))
        f.write(v.tobytes())


def read_dump(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != DUMP_MAGIC:
        raise CorruptFileError(f"bad feature dump magic {data[:8]!r}")
    if len(data) < 20:
        raise CorruptFileError("truncated feature dump header")
    kind_id, n, dim = struct.unpack_from("<III", data, 8)
    body = data[20:]
    if len(body) != 8 * n * dim:
        raise CorruptFileError(f"feature dump body has {len(body)} bytes, expected {8 * n * dim}")
    return FeatureStream(np.frombuffer(body, dtype="<f8").reshape(n, dim).astype(np.float64),
                         FeatureKind(kind_id))

