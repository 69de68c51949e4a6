"""Single-channel speech enhancement with SNR-normalized DNN features.

Statistical building blocks (SPP noise tracking, cepstrally smoothed
speech PSD, Wiener gain) double as feature generators for a feed-forward
mask estimator trained on ideal ratio masks.
"""
from .enhance import EnhanceConfig, Ml, NonMl, enhance
from .features import FeatureKind, FeatureStream, extract, extract_from_spectrogram
from .mlp import MlpModel, glorot_init
from .noise_tracker import NoiseTrackerConfig, NoiseTrackState
from .stft import Spectrogram, StftConfig, analyze, synthesize
from .tcs import TcsConfig, TcsState

__version__ = "0.1.0"
