"""Mono 16 kHz WAV reading and writing (16-bit PCM or 32-bit float)."""
import warnings

import numpy as np
from scipy.io import wavfile

from .errors import AudioFormatError

EXPECTED_RATE = 16000
PCM16 = "pcm16"
FLOAT32 = "float32"


def read_wav(path, expected_rate=EXPECTED_RATE):
    """Return ``(samples, fmt)`` with samples as float64 in [-1, 1).

    No resampling or downmixing is done; other rates, channel counts or
    sample formats raise :class:`AudioFormatError`.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except ValueError as exc:
        raise AudioFormatError(f"{path}: unreadable WAV file ({exc})") from None
    if rate != expected_rate:
        raise AudioFormatError(f"{path}: sample rate {rate} Hz, expected {expected_rate}")
    if data.ndim != 1:
        raise AudioFormatError(f"{path}: {data.shape[1]} channels, expected mono")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0, PCM16
    if data.dtype == np.float32:
        return data.astype(np.float64), FLOAT32
    raise AudioFormatError(f"{path}: sample format {data.dtype} not supported "
                           "(need 16-bit PCM or 32-bit float)")


def write_wav(path, samples, fmt=PCM16, rate=EXPECTED_RATE):
    samples = np.asarray(samples, dtype=np.float64)
    if fmt == PCM16:
        data = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
    elif fmt == FLOAT32:
        data = samples.astype(np.float32)
    else:
        raise AudioFormatError(f"unknown output format {fmt!r}")
    wavfile.write(path, rate, data)
