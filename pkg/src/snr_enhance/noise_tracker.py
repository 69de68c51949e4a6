"""Noise PSD tracking driven by a speech presence probability (SPP).

Per bin and frame the posterior P(H1|Y) is computed with a fixed
hypothetical SNR, the noise periodogram is estimated as the
SPP-weighted mix of the noisy periodogram and the previous PSD, and the
result is recursively smoothed. A smoothed copy of the SPP detects bins
stuck at P ~ 1 and clamps them so the estimate can still rise.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyInputError, InvalidConfigError, ShapeError

FLOOR_REL = 1e-12
# only engages for all-zero initialization data
FLOOR_ABS = 1e-300


@dataclass(frozen=True)
class NoiseTrackerConfig:
    xi_h1: float = 10.0 ** (-15.0 / 10.0)
    beta: float = 0.8
    spp_smooth: float = 0.9
    spp_clamp: float = 0.99
    init_frames: int = 5

    def __post_init__(self):
        if not self.xi_h1 > 0:
            raise InvalidConfigError(f"xi_h1 must be positive, got {self.xi_h1}")
        if not 0.0 <= self.beta < 1.0:
            raise InvalidConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if not 0.0 <= self.spp_smooth < 1.0:
            raise InvalidConfigError(f"spp_smooth must lie in [0, 1), got {self.spp_smooth}")
        if not 0.0 < self.spp_clamp < 1.0:
            raise InvalidConfigError(f"spp_clamp must lie in (0, 1), got {self.spp_clamp}")
        if self.init_frames < 1:
            raise InvalidConfigError(f"init_frames must be >= 1, got {self.init_frames}")


def spp(noisy_power, prev_noise_psd, xi_h1):
    """Posterior speech presence probability with equal priors.

    Parameters
    ----------
    noisy_power : array_like
        Noisy periodogram |Y|^2.
    prev_noise_psd : array_like
        Noise PSD estimate of the previous frame, strictly positive.
    xi_h1 : float
        Fixed a priori SNR assumed under speech presence (linear).

    Returns
    -------
    ndarray or float
        ``1 / (1 + (1 + xi_h1) * exp(-gamma * xi_h1 / (1 + xi_h1)))`` with
        ``gamma = noisy_power / prev_noise_psd``.
    """
    prev = np.asarray(prev_noise_psd, dtype=np.float64)
    if np.any(prev <= 0):
        raise DomainError("previous noise PSD must be strictly positive")
    gamma = np.asarray(noisy_power, dtype=np.float64) / prev
    p = 1.0 / (1.0 + (1.0 + xi_h1) * np.exp(-gamma * (xi_h1 / (1.0 + xi_h1))))
    return p if p.ndim else float(p)


@dataclass
class NoiseTrackState:
    """Streaming state of the tracker for one audio stream.

    Attributes
    ----------
    noise_psd : ndarray
        Current noise PSD estimate per bin (strictly positive).
    spp_bar : ndarray
        Recursively smoothed SPP used by the stagnation safeguard.
    frames_seen : int
        Number of frames consumed by :meth:`update`.
    floor : float
        Lower bound applied to ``noise_psd``.
    """

    noise_psd: np.ndarray
    spp_bar: np.ndarray
    config: NoiseTrackerConfig = field(default_factory=NoiseTrackerConfig)
    frames_seen: int = 0
    floor: float = FLOOR_ABS

    @classmethod
    def from_periodograms(cls, periodograms, config=NoiseTrackerConfig()):
        """Initialize from the mean of the given noisy periodograms.

        Only the first ``config.init_frames`` rows are used.
        """
        p = np.atleast_2d(np.asarray(periodograms, dtype=np.float64))
        if p.size == 0:
            raise EmptyInputError("noise tracker initialization needs at least one frame")
        if np.any(p < 0):
            raise DomainError("periodogram entries must be nonnegative")
        p = p[:config.init_frames]
        floor = max(FLOOR_REL * float(p.mean()), FLOOR_ABS)
        noise_psd = np.maximum(p.mean(axis=0), floor)
        return cls(noise_psd, np.zeros_like(noise_psd), config, 0, floor)

    def update(self, noisy_power, spp_override=None):
        """Consume one frame of |Y|^2; return ``(noise_psd, spp)``.

        ``spp_override`` replaces the computed probability before the
        safeguard and is meant for testing the recursion in isolation.
        """
        cfg = self.config
        y2 = np.asarray(noisy_power, dtype=np.float64)
        if y2.shape != self.noise_psd.shape:
            raise ShapeError(f"expected {self.noise_psd.shape[0]} bins, got shape {y2.shape}")
        if np.any(y2 < 0):
            raise DomainError("noisy power must be nonnegative")
        prev = self.noise_psd
        if spp_override is None:
            p = spp(y2, prev, cfg.xi_h1)
        else:
            p = np.broadcast_to(np.asarray(spp_override, dtype=np.float64), y2.shape).copy()
        self.spp_bar = cfg.spp_smooth * self.spp_bar + (1.0 - cfg.spp_smooth) * p
        stuck = self.spp_bar > cfg.spp_clamp
        p = np.where(stuck, np.minimum(p, cfg.spp_clamp), p)
        noise_periodogram = (1.0 - p) * y2 + p * prev
        self.noise_psd = np.maximum((1.0 - cfg.beta) * noise_periodogram + cfg.beta * prev,
                                    self.floor)
        self.frames_seen += 1
        return self.noise_psd.copy(), p

    def scaled(self, factor):
        """Copy of the state with all power quantities multiplied by ``factor``."""
        return NoiseTrackState(self.noise_psd * factor, self.spp_bar.copy(), self.config,
                               self.frames_seen, self.floor * factor)


def track(power, config=NoiseTrackerConfig()):
    """Run the tracker over a whole ``(n_frames, n_bins)`` periodogram.

    The state is initialized from the leading frames of ``power`` and then
    every frame, including those, is consumed in order.
    """
    power = np.asarray(power, dtype=np.float64)
    state = NoiseTrackState.from_periodograms(power, config)
    psd = np.empty_like(power)
    probs = np.empty_like(power)
    for i, frame in enumerate(power):
        psd[i], probs[i] = state.update(frame)
    return psd, probs
