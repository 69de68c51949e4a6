"""Training data synthesis and the mask-estimator training loop."""
import os
import shlex
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from . import mlp
from .errors import (CorpusError, DegenerateInputError, EmptyInputError, InvalidConfigError,
                     ManifestError, ShapeError, TrainingDivergedError)
from .features import extract
from .noise_tracker import NoiseTrackerConfig, NoiseTrackState
from .stft import Spectrogram, StftConfig, analyze, synthesize
from .tcs import TcsConfig, TcsState

INIT_SECONDS = 2.0
PAD_FRACTION = 0.15
THREADS_ENV = "SNR_ENHANCE_THREADS"


def worker_count(default=None):
    """Worker cap from ``SNR_ENHANCE_THREADS`` (unset: ``default`` or CPU count)."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            n = int(value)
        except ValueError:
            raise InvalidConfigError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
        return max(n, 1)
    return default or os.cpu_count() or 1


# --------------------------------------------------------------------------
# corpus description

@dataclass(frozen=True)
class MixtureSpec:
    speech_path: str
    noise_path: str
    snr_db: float
    peak_db: float
    seed: int = 0
    noise_pad_fraction: float = PAD_FRACTION

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise InvalidConfigError(f"snr_db must be finite, got {self.snr_db}")
        if not (np.isfinite(self.peak_db) and self.peak_db <= 0.0):
            raise InvalidConfigError(f"peak_db must be finite and <= 0, got {self.peak_db}")


_MANIFEST_KEYS = {"speech", "noise", "snr", "peak", "seed"}


def parse_manifest(path):
    """Parse ``speech=<path> noise=<path> snr=<dB> peak=<dB> seed=<u64>`` lines.

    Relative paths are resolved against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    specs = []
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = {}
        try:
            tokens = shlex.split(line)
        except ValueError as exc:
            raise ManifestError(str(exc), line_no) from None
        for token in tokens:
            key, sep, value = token.partition("=")
            if not sep or key not in _MANIFEST_KEYS:
                raise ManifestError(f"malformed field {token!r}", line_no)
            fields[key] = value
        missing = _MANIFEST_KEYS - fields.keys()
        if missing:
            raise ManifestError(f"missing field(s) {', '.join(sorted(missing))}", line_no)
        try:
            seed = int(fields["seed"])
            if not 0 <= seed < 2 ** 64:
                raise ValueError("seed out of u64 range")
            spec = MixtureSpec(str(base / fields["speech"]), str(base / fields["noise"]),
                               float(fields["snr"]), float(fields["peak"]), seed)
        except (ValueError, InvalidConfigError) as exc:
            raise ManifestError(str(exc), line_no) from None
        specs.append(spec)
    return specs


# --------------------------------------------------------------------------
# mixing and targets

@dataclass
class Mixture:
    noisy: np.ndarray
    clean: np.ndarray
    noise: np.ndarray
    noise_gain: float
    speech_start: int
    speech_stop: int


def mix(speech, noise, snr_db, peak_db, rng, pad_fraction=PAD_FRACTION, lead=0):
    """Embed ``speech`` in a random excerpt of ``noise``.

    The output holds ``lead`` noise-only samples, the sentence, then a
    noise-only pad of ``pad_fraction`` times the sentence length. Speech is
    scaled to the requested peak level; the noise is scaled so the energy
    ratio over the sentence extent equals ``snr_db``.
    """
    speech = np.asarray(speech, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    rng = np.random.default_rng(rng)
    peak = np.max(np.abs(speech)) if speech.size else 0.0
    if peak == 0.0:
        raise DegenerateInputError("speech signal is silent")
    n_speech = len(speech)
    pad = int(round(pad_fraction * n_speech))
    total = lead + n_speech + pad
    if len(noise) < total:
        raise CorpusError(f"noise has {len(noise)} samples, need at least {total}")
    offset = int(rng.integers(0, len(noise) - total + 1))
    excerpt = noise[offset:offset + total]

    clean = np.zeros(total)
    clean[lead:lead + n_speech] = speech * (10.0 ** (peak_db / 20.0) / peak)
    e_s = np.sum(clean[lead:lead + n_speech] ** 2)
    e_n = np.sum(excerpt[lead:lead + n_speech] ** 2)
    if e_n == 0.0:
        raise DegenerateInputError("noise excerpt is silent over the sentence extent")
    gain = np.sqrt(e_s / (e_n * 10.0 ** (snr_db / 10.0)))
    noise_scaled = gain * excerpt
    return Mixture(clean + noise_scaled, clean, noise_scaled, float(gain), lead, lead + n_speech)


def irm_targets(clean, noise):
    """Ideal ratio mask from oracle speech and noise spectrograms (0/0 -> 0)."""
    if clean.frames.shape != noise.frames.shape:
        raise ShapeError(f"spectrogram shapes differ: {clean.frames.shape} vs {noise.frames.shape}")
    s2 = clean.power()
    n2 = noise.power()
    total = s2 + n2
    return np.divide(s2, total, out=np.zeros_like(s2), where=total > 0)


@dataclass
class TrainingExample:
    features: np.ndarray
    targets: np.ndarray
    kind: object = None

    def __post_init__(self):
        if self.features.shape[0] != self.targets.shape[0]:
            raise ShapeError(f"{self.features.shape[0]} feature frames vs "
                             f"{self.targets.shape[0]} target frames")

    @property
    def n_frames(self):
        return self.features.shape[0]


@dataclass(frozen=True)
class DatasetConfig:
    stft: StftConfig = field(default_factory=StftConfig)
    tracker: NoiseTrackerConfig = field(default_factory=NoiseTrackerConfig)
    tcs: TcsConfig = field(default_factory=TcsConfig)
    init_seconds: float = INIT_SECONDS
    pad_fraction: float = PAD_FRACTION

    @property
    def init_samples(self):
        return int(round(self.init_seconds * self.stft.sample_rate_hz))

    @property
    def init_frames(self):
        # frames starting inside the initialization span
        return -(-self.init_samples // self.stft.hop)


def build_example(speech, noise, snr_db, peak_db, kind, rng, config=DatasetConfig(),
                  return_mixture=False):
    """Mix, extract features and IRM targets, drop the initialization frames."""
    mixture = mix(speech, noise, snr_db, peak_db, rng, config.pad_fraction, config.init_samples)
    noisy = analyze(mixture.noisy, config.stft)
    tracker = NoiseTrackState.from_periodograms(noisy.power(), config.tracker)
    stream = extract(noisy, kind, tracker, TcsState(), config.tcs)
    targets = irm_targets(analyze(mixture.clean, config.stft), analyze(mixture.noise, config.stft))
    skip = config.init_frames
    example = TrainingExample(stream.vectors[skip:], targets[skip:], kind)
    return (example, mixture) if return_mixture else example


def build_dataset(corpus, kind, config=DatasetConfig(), loader=None, workers=None):
    """One :class:`TrainingExample` per :class:`MixtureSpec`, in corpus order.

    ``loader(path) -> ndarray`` defaults to reading 16 kHz mono WAV files.
    """
    if not corpus:
        raise EmptyInputError("corpus is empty")
    if loader is None:
        from .wavio import read_wav

        def loader(p):
            return read_wav(p, config.stft.sample_rate_hz)[0]

    cache = {}

    def load(p):
        if p not in cache:
            cache[p] = loader(p)
        return cache[p]

    for spec in corpus:
        load(spec.speech_path)
        load(spec.noise_path)

    def one(spec):
        return build_example(cache[spec.speech_path], cache[spec.noise_path], spec.snr_db,
                             spec.peak_db, kind, np.random.default_rng(spec.seed), config)

    n_workers = min(workers or worker_count(), len(corpus))
    if n_workers <= 1:
        return [one(spec) for spec in corpus]
    with ThreadPoolExecutor(n_workers) as pool:
        return list(pool.map(one, corpus))


# --------------------------------------------------------------------------
# training loop

@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    loss_eps: float = 0.1
    learning_rate: float = 0.005
    early_stop_window: int = 10
    early_stop_rel_improvement: float = 0.01
    validation_fraction: float = 0.15
    max_epochs: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if not self.loss_eps > 0:
            raise InvalidConfigError(f"loss_eps must be positive, got {self.loss_eps}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidConfigError("validation_fraction must lie in (0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1 or self.early_stop_window < 1:
            raise InvalidConfigError("batch_size, max_epochs and early_stop_window must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    train_j: float
    val_j: float


@dataclass
class TrainingHistory:
    """Per-epoch losses; ``initial_val_j`` is measured before the first update."""

    records: list = field(default_factory=list)
    initial_val_j: float = float("nan")
    best_epoch: int = 0
    stopped_early: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def val_j(self):
        return [r.val_j for r in self.records]

    @property
    def train_j(self):
        return [r.train_j for r in self.records]

    @property
    def best_val_j(self):
        return min(self.val_j) if self.records else self.initial_val_j

    def to_tsv(self):
        return "".join(f"{r.epoch}\t{r.train_j!r}\t{r.val_j!r}\n" for r in self.records)


def should_stop(val_history, window=10, rel_improvement=0.01):
    """True once the last ``window`` epochs failed to beat the earlier best by ``rel_improvement``."""
    if len(val_history) <= window:
        return False
    best_before = min(val_history[:-window])
    return min(val_history[-window:]) >= (1.0 - rel_improvement) * best_before


def stack_examples(examples):
    x = np.concatenate([e.features for e in examples], axis=0)
    y = np.concatenate([e.targets for e in examples], axis=0)
    return x, y


def dataset_loss(model, inputs, targets, eps=0.1, chunk=4096):
    """Mean per-frame loss over a frame set."""
    total = 0.0
    for start in range(0, len(inputs), chunk):
        y_hat = mlp.forward(model, inputs[start:start + chunk])
        total += float(np.sum(mlp.frame_losses(y_hat, targets[start:start + chunk], eps)))
    return total / len(inputs)


def split_examples(dataset, fraction, rng):
    """Utterance-level train/validation split."""
    n = len(dataset)
    if n < 2:
        raise EmptyInputError("need at least two examples to hold out a validation set")
    n_val = min(max(1, int(round(fraction * n))), n - 1)
    order = rng.permutation(n)
    val = [dataset[i] for i in sorted(order[:n_val])]
    train = [dataset[i] for i in sorted(order[n_val:])]
    return train, val


def train(dataset, model_dims, config=TrainConfig(), rng=None, verbose=None):
    """Train a mask estimator with AdaGrad and early stopping.

    Parameters
    ----------
    dataset : list of TrainingExample
    model_dims : sequence of int
        Layer widths including input and output.
    config : TrainConfig
    rng : numpy.random.Generator or int, optional
        Defaults to ``config.rng_seed``.
    verbose : callable, optional
        Called with each :class:`EpochRecord`.

    Returns
    -------
    model : MlpModel
        Parameters of the epoch with the lowest validation loss.
    history : TrainingHistory
    """
    if not dataset:
        raise EmptyInputError("dataset is empty")
    rng = np.random.default_rng(config.rng_seed if rng is None else rng)
    train_set, val_set = split_examples(dataset, config.validation_fraction, rng)
    x_train, y_train = stack_examples(train_set)
    x_val, y_val = stack_examples(val_set)
    if x_train.shape[1] != model_dims[0]:
        raise ShapeError(f"features have dim {x_train.shape[1]}, model expects {model_dims[0]}")

    model = mlp.glorot_init(model_dims, rng)
    opt = mlp.AdaGradState.for_model(model, config.learning_rate)
    history = TrainingHistory(initial_val_j=dataset_loss(model, x_val, y_val, config.loss_eps))
    best_model, best_j = model.copy(), np.inf

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(x_train))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            grads, batch_j = mlp.backward(model, x_train[idx], y_train[idx], config.loss_eps)
            if not np.isfinite(batch_j):
                raise TrainingDivergedError(epoch)
            mlp.adagrad_step(model, opt, grads)
            total += batch_j * len(idx)
        val_j = dataset_loss(model, x_val, y_val, config.loss_eps)
        if not np.isfinite(val_j):
            raise TrainingDivergedError(epoch, "validation loss became non-finite")
        record = EpochRecord(epoch, total / len(order), val_j)
        history.records.append(record)
        if verbose is not None:
            verbose(record)
        if val_j < best_j:
            best_j, best_model, history.best_epoch = val_j, model.copy(), epoch
        if should_stop(history.val_j, config.early_stop_window, config.early_stop_rel_improvement):
            history.stopped_early = True
            break
    return best_model, history


# --------------------------------------------------------------------------
# low-quality anchor stimulus

def anchor_signal(speech, noise, rng, fs=16000, snr_db=-5.0, peak_db=None, cutoff_hz=2000.0,
                  numtaps=101, dd_alpha=0.9, g_min=0.1, tracker_config=NoiseTrackerConfig(),
                  return_details=False):
    """Low-pass filtered speech in noise enhanced with a decision-directed Wiener filter.

    The speech is low-passed (linear-phase FIR), mixed at ``snr_db`` and
    enhanced with the SPP noise tracker, a decision-directed a priori SNR
    and a Wiener gain floored at ``g_min``.

    With ``return_details`` the result is a dict that also holds the
    filtered speech and noise components and the applied gains.
    """
    speech = np.asarray(speech, dtype=np.float64)
    taps = sps.firwin(numtaps, cutoff_hz, fs=fs)
    lowpassed = np.convolve(speech, taps)[(numtaps - 1) // 2:][:len(speech)]
    if peak_db is None:
        peak = np.max(np.abs(lowpassed))
        if peak == 0.0:
            raise DegenerateInputError("speech signal is silent")
        peak_db = 20.0 * np.log10(peak)
    mixture = mix(lowpassed, noise, snr_db, peak_db, rng, pad_fraction=0.0)

    config = StftConfig.for_rate(fs)
    noisy = analyze(mixture.noisy, config)
    power = noisy.power()
    tracker = NoiseTrackState.from_periodograms(power, tracker_config)
    gains = np.empty_like(power)
    prev_clean_power = np.zeros(config.n_bins)
    prev_noise = tracker.noise_psd.copy()
    for i, frame in enumerate(power):
        noise_psd, _ = tracker.update(frame)
        gamma = frame / noise_psd
        xi = dd_alpha * prev_clean_power / prev_noise + (1.0 - dd_alpha) * np.maximum(gamma - 1.0, 0.0)
        gains[i] = np.maximum(xi / (1.0 + xi), g_min)
        prev_clean_power = gains[i] ** 2 * frame
        prev_noise = noise_psd
    out = synthesize(Spectrogram(gains * noisy.frames, config))
    if not return_details:
        return out
    comp = {}
    for name, x in (("speech", mixture.clean), ("noise", mixture.noise)):
        comp[name] = synthesize(Spectrogram(gains * analyze(x, config).frames, config))
    return {"signal": out, "speech_component": comp["speech"], "noise_component": comp["noise"],
            "gains": gains, "mixture": mixture}

