"""Train a small ratio-mask estimator on synthetic speech and compare feature kinds.

Run: ``python demos/04_train_mask_estimator.py`` (about a minute on one core)
"""
# %%
import numpy as np

from snr_enhance import synthetic, training
from snr_enhance.enhance import EnhanceConfig, Ml, enhance
from snr_enhance.features import FeatureKind
from snr_enhance.metrics import segmental_snr
from snr_enhance.training import TrainConfig, build_example

fs = 16000
rng = np.random.default_rng(1234)

# %% [markdown]
# Each "utterance" is a harmonic complex with formant-like envelopes,
# embedded in white or amplitude-modulated white noise at a random SNR and
# peak level. A 2 s noise-only lead warms up the estimators and is cut
# from the training frames.

# %%
corpus = []
for i in range(12):
    speech = synthetic.harmonic_speech(rng.uniform(3.0, 5.0), rng)
    make_noise = synthetic.white_noise if i % 2 == 0 else synthetic.modulated_white_noise
    corpus.append((speech, make_noise(10 * fs, rng), rng.uniform(-5, 15),
                   rng.uniform(-26, -6), int(rng.integers(2 ** 32))))

held_rng = np.random.default_rng(99)
held = training.mix(synthetic.harmonic_speech(2.5, held_rng),
                    synthetic.white_noise(8 * fs, held_rng), 0.0, -12.0, held_rng, lead=2 * fs)
a, b = held.speech_start, held.speech_stop
print(f"held-out noisy segSNR: {segmental_snr(held.clean[a:b], held.noisy[a:b]):.2f} dB")

# %%
for kind in (FeatureKind.LOG_APRIORI_PLUS_APOSTERIORI, FeatureKind.LOG_PERIODOGRAM):
    data = [build_example(s, n, snr, peak, kind, np.random.default_rng(seed))
            for s, n, snr, peak, seed in corpus]
    model, history = training.train(data, [kind.stacked_dim(), 128, 128, 257],
                                    TrainConfig(rng_seed=0))
    out = enhance(held.noisy, EnhanceConfig(path=Ml(kind, model)))
    print(f"{kind.cli_name:9s} stopped after {len(history)} epochs, best epoch "
          f"{history.best_epoch}, val J {history.val_j[0]:.1f} -> {history.best_val_j:.1f}, "
          f"segSNR {segmental_snr(held.clean[a:b], out[a:b]):.2f} dB")
