"""Why SNR features: they do not change when the input level changes.

Run: ``python demos/03_scale_invariant_features.py``
"""
# %%
import numpy as np

from snr_enhance import synthetic, training
from snr_enhance.features import FeatureKind, extract_from_spectrogram
from snr_enhance.stft import analyze

fs = 16000
rng = np.random.default_rng(3)
speech = synthetic.harmonic_speech(2.0, rng)
noise = synthetic.modulated_white_noise(6 * fs, rng)
m = training.mix(speech, noise, 5.0, -6.0, rng, lead=2 * fs)

# %% [markdown]
# The same mixture is presented at peak levels from -6 dB down to -40 dB.
# Log a priori and a posteriori SNRs are ratios of PSDs estimated from the
# signal itself, so a gain ``c`` cancels. The log periodogram instead moves
# by ``ln(c^2)`` in every entry.

# %%
reference = {k: extract_from_spectrogram(analyze(m.noisy), k).vectors for k in FeatureKind}
for peak_db in (-12, -24, -40):
    c = 10 ** ((peak_db + 6) / 20)
    spec = analyze(c * m.noisy)
    print(f"peak {peak_db} dB (ln c^2 = {np.log(c * c):6.2f})")
    for kind in FeatureKind:
        diff = extract_from_spectrogram(spec, kind).vectors - reference[kind]
        print(f"  {kind.cli_name:9s} dim {diff.shape[1]}  median shift {np.median(diff):8.3f}  "
              f"max |shift| {np.max(np.abs(diff)):.2e}")

# %% [markdown]
# A network trained on the SNR kinds therefore never sees level variation
# in its inputs, whereas for ``y`` and ``y+n`` it must learn the
# invariance from data.
