"""Objective quality measures: segmental SNR and log-spectral distance."""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ShapeError
from .stft import StftConfig, analyze

SEG_SNR_MIN_DB = -10.0
SEG_SNR_MAX_DB = 35.0
SILENT_FRAME_REL = 1e-10
LSD_FLOOR = 1e-10


@dataclass
class MetricReport:
    seg_snr_db: float
    lsd_db: float
    seg_snr_frames: np.ndarray
    lsd_frames: np.ndarray


def _check_lengths(clean, test):
    clean = np.asarray(clean, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if clean.shape != test.shape:
        raise ShapeError(f"length mismatch: clean has {clean.shape[0]} samples, "
                         f"test has {test.shape[0]}")
    return clean, test


def segmental_snr_frames(clean, test, frame_len=512, hop=256):
    """Per-frame clamped SNR in dB of the frames that carry clean energy."""
    clean, test = _check_lengths(clean, test)
    if not np.any(clean):
        raise DegenerateInputError("clean reference is all zeros")
    if len(clean) < frame_len:
        frame_len = hop = len(clean)
    idx = np.arange(0, len(clean) - frame_len + 1, hop)[:, None] + np.arange(frame_len)
    s_energy = np.sum(clean[idx] ** 2, axis=1)
    e_energy = np.sum((clean[idx] - test[idx]) ** 2, axis=1)
    keep = s_energy >= SILENT_FRAME_REL * s_energy.mean()
    s_energy, e_energy = s_energy[keep], e_energy[keep]
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(s_energy / e_energy)
    return np.clip(snr, SEG_SNR_MIN_DB, SEG_SNR_MAX_DB)


def segmental_snr(clean, test, frame_len=512, hop=256):
    """Mean per-frame SNR, clamped to [-10, 35] dB, skipping silent clean frames."""
    return float(np.mean(segmental_snr_frames(clean, test, frame_len, hop)))


def lsd_frames(clean, test, stft=StftConfig()):
    clean, test = _check_lengths(clean, test)
    s = analyze(clean, stft).power()
    t = analyze(test, stft).power()
    d = 10.0 * np.log10((s + LSD_FLOOR) / (t + LSD_FLOOR))
    return np.mean(d * d, axis=1)


def log_spectral_distance(clean, test, stft=StftConfig()):
    """RMS over frames and bins of the dB difference between power spectra."""
    return float(np.sqrt(np.mean(lsd_frames(clean, test, stft))))


def evaluate(clean, test, stft=StftConfig()):
    seg = segmental_snr_frames(clean, test, stft.frame_len, stft.hop)
    lsd = lsd_frames(clean, test, stft)
    return MetricReport(float(np.mean(seg)), float(np.sqrt(np.mean(lsd))), seg, np.sqrt(lsd))
