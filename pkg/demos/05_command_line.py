"""The ``snr-enhance`` command line on WAV files, driven from Python.

Run: ``python demos/05_command_line.py``
"""
# %%
import tempfile
from pathlib import Path

import numpy as np

from snr_enhance import synthetic
from snr_enhance.cli import main
from snr_enhance.wavio import read_wav, write_wav

fs = 16000
rng = np.random.default_rng(5)
work = Path(tempfile.mkdtemp())
speech = 0.3 * synthetic.harmonic_speech(4.0, rng)
noise = 0.05 * synthetic.white_noise(10 * fs, rng)
write_wav(work / "speech.wav", speech)
write_wav(work / "noise.wav", noise)
write_wav(work / "noisy.wav", speech + noise[:len(speech)])

# %% [markdown]
# Statistical enhancement, then objective scores against the clean file.
# ``eval`` needs equal lengths, so the clean file is cut to the output length.

# %%
main(["enhance", str(work / "noisy.wav"), str(work / "enhanced.wav"), "--gmin-db", "-20"])
out, _ = read_wav(work / "enhanced.wav")
write_wav(work / "clean_cut.wav", speech[:len(out)])
write_wav(work / "noisy_cut.wav", (speech + noise[:len(speech)])[:len(out)])
main(["eval", str(work / "clean_cut.wav"), str(work / "noisy_cut.wav")])
main(["eval", str(work / "clean_cut.wav"), str(work / "enhanced.wav")])

# %% [markdown]
# Feature dumps and a short training run from a manifest. Paths in the
# manifest are relative to the manifest file.

# %%
main(["features", str(work / "noisy.wav"), str(work / "feat.bin"), "--kind", "xi+gamma"])
(work / "corpus.txt").write_text(
    "# speech noise snr peak seed\n"
    "speech=speech.wav noise=noise.wav snr=0 peak=-6 seed=1\n"
    "speech=speech.wav noise=noise.wav snr=10 peak=-20 seed=2\n"
    "speech=speech.wav noise=noise.wav snr=5 peak=-12 seed=3\n")
(work / "settings.txt").write_text("train.max_epochs = 5\nkind = gamma\n")
main(["train", str(work / "corpus.txt"), str(work / "model.bin"), "--dims", "1028,64,257",
      "--config", str(work / "settings.txt")])
print((work / "model.bin.history.tsv").read_text())
code = main(["enhance", str(work / "noisy.wav"), str(work / "ml.wav"), "--mode", "ml",
             "--kind", "gamma", "--model", str(work / "model.bin")])
print("exit code", code)
