"""Synthetic test material: harmonic speech surrogates and simple noises."""
import numpy as np


def harmonic_speech(duration_s, rng, fs=16000, max_freq=5000.0):
    """Voiced-syllable surrogate for speech.

    Syllables of 120-350 ms separated by short pauses. Each syllable is a
    harmonic complex with a drifting fundamental (90-240 Hz) shaped by
    three random formant resonances and a raised-cosine envelope.
    """
    rng = np.random.default_rng(rng)
    n = int(round(duration_s * fs))
    out = np.zeros(n)
    pos = int(rng.uniform(0.03, 0.12) * fs)
    base_f0 = rng.uniform(90.0, 240.0)
    while pos < n:
        length = min(int(rng.uniform(0.12, 0.35) * fs), n - pos)
        if length < int(0.04 * fs):
            break
        t = np.arange(length) / fs
        f0 = base_f0 * rng.uniform(0.85, 1.15) * (
            1.0 + 0.08 * np.sin(2 * np.pi * rng.uniform(1.0, 4.0) * t + rng.uniform(0, 2 * np.pi)))
        phase = 2 * np.pi * np.cumsum(f0) / fs
        formants = [(rng.uniform(300, 900), 90.0), (rng.uniform(900, 2500), 140.0),
                    (rng.uniform(2400, 3500), 220.0)]
        seg = np.zeros(length)
        for h in range(1, int(max_freq // f0.min()) + 1):
            freq = h * f0
            amp = sum(g / (1.0 + ((freq - fc) / bw) ** 2)
                      for (fc, bw), g in zip(formants, (1.0, 0.6, 0.3)))
            amp = amp + 0.02
            seg += np.where(freq < max_freq, amp, 0.0) * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
        env = np.sin(np.pi * np.arange(length) / length) ** 2
        out[pos:pos + length] = rng.uniform(0.4, 1.0) * env * seg / np.max(np.abs(seg))
        pos += length + int(rng.uniform(0.04, 0.2) * fs)
    return out


def white_noise(n, rng):
    return np.random.default_rng(rng).standard_normal(n)


def modulated_white_noise(n, rng, fs=16000, mod_hz=None, depth=0.8):
    """White noise with a slow sinusoidal amplitude modulation."""
    rng = np.random.default_rng(rng)
    if mod_hz is None:
        mod_hz = rng.uniform(0.5, 2.0)
    t = np.arange(n) / fs
    env = 1.0 + depth * np.sin(2 * np.pi * mod_hz * t + rng.uniform(0, 2 * np.pi))
    return env * rng.standard_normal(n)
