import numpy as np
import pytest

from snr_enhance import synthetic, training
from snr_enhance.errors import (CorpusError, DegenerateInputError, EmptyInputError,
                                ManifestError, ShapeError, TrainingDivergedError)
from snr_enhance.features import FeatureKind as K
from snr_enhance.stft import Spectrogram, StftConfig, analyze, n_frames_for
from snr_enhance.training import (DatasetConfig, MixtureSpec, TrainConfig, TrainingExample,
                                  build_dataset, build_example, irm_targets, mix, parse_manifest,
                                  should_stop, train)

FS = 16000


@pytest.fixture(scope="module")
def sources():
    rng = np.random.default_rng(30)
    return synthetic.harmonic_speech(1.0, rng), synthetic.white_noise(4 * FS, rng)


class TestMix:
    def test_unit_gain_at_equal_energy(self):
        rng = np.random.default_rng(0)
        s = rng.standard_normal(1000)
        n = np.tile(s, 2)
        m = mix(s, n, 0.0, 20 * np.log10(np.max(np.abs(s))), np.random.default_rng(1),
                pad_fraction=0.0)
        # excerpt energy matches when the offset lands on a copy of s
        e_n = np.sum(m.noise[m.speech_start:m.speech_stop] ** 2) / m.noise_gain ** 2
        assert m.noise_gain == pytest.approx(np.sqrt(np.sum(s ** 2) / e_n), rel=1e-12)

    @pytest.mark.parametrize("snr", [-5.0, 0.0, 7.5, 15.0])
    def test_realized_snr(self, sources, snr):
        m = mix(*sources, snr, -12.0, np.random.default_rng(2))
        sl = slice(m.speech_start, m.speech_stop)
        realized = 10 * np.log10(np.sum(m.clean[sl] ** 2) / np.sum(m.noise[sl] ** 2))
        assert realized == pytest.approx(snr, abs=1e-9)

    def test_peak_and_layout(self, sources):
        speech, noise = sources
        m = mix(speech, noise, 5.0, -18.0, np.random.default_rng(3), lead=100)
        assert np.max(np.abs(m.clean)) == pytest.approx(10 ** (-18 / 20), rel=1e-12)
        assert (m.speech_start, m.speech_stop) == (100, 100 + len(speech))
        assert len(m.noisy) == 100 + len(speech) + round(0.15 * len(speech))
        assert not np.any(m.clean[:100]) and not np.any(m.clean[m.speech_stop:])
        np.testing.assert_array_equal(m.noisy, m.clean + m.noise)

    def test_high_snr_limit(self, sources):
        m = mix(*sources, 100.0, -6.0, np.random.default_rng(4))
        sl = slice(m.speech_start, m.speech_stop)
        assert np.linalg.norm(m.noisy[sl] - m.clean[sl]) <= 1e-4 * np.linalg.norm(m.clean[sl])

    def test_errors(self, sources):
        speech, noise = sources
        with pytest.raises(CorpusError):
            mix(speech, noise[:len(speech)], 0.0, -6.0, np.random.default_rng(0))
        with pytest.raises(DegenerateInputError):
            mix(np.zeros(100), noise, 0.0, -6.0, np.random.default_rng(0))

    def test_deterministic(self, sources):
        a = mix(*sources, 0.0, -6.0, np.random.default_rng(9))
        b = mix(*sources, 0.0, -6.0, np.random.default_rng(9))
        np.testing.assert_array_equal(a.noisy, b.noisy)


class TestIrm:
    def _spec(self, power, n_frames=1):
        frame = np.zeros(257)
        frame[:len(power)] = power
        return Spectrogram(np.tile(np.sqrt(frame), (n_frames, 1)) + 0j, StftConfig())

    def test_values(self):
        s = self._spec([1.0, 3.0, 2.0, 0.0])
        n = self._spec([1.0, 1.0, 0.0, 0.0])
        np.testing.assert_allclose(irm_targets(s, n)[0, :4], [0.5, 0.75, 1.0, 0.0], rtol=1e-15)

    def test_shape(self):
        with pytest.raises(ShapeError):
            irm_targets(self._spec([1.0], 2), self._spec([1.0]))

    def test_noise_pad_near_zero(self, sources):
        cfg = DatasetConfig()
        ex, m = build_example(*sources, 0.0, -12.0, K.LOG_APOSTERIORI_SNR,
                              np.random.default_rng(0), cfg, return_mixture=True)
        assert np.all((ex.targets >= 0) & (ex.targets <= 1))
        # frames lying entirely inside the pad
        first_pad_frame = -(-m.speech_stop // 256) - cfg.init_frames
        assert np.mean(ex.targets[first_pad_frame:]) <= 0.05


class TestDataset:
    def test_init_frames_dropped(self, sources):
        cfg = DatasetConfig()
        ex, m = build_example(*sources, 0.0, -12.0, K.LOG_APRIORI_SNR,
                              np.random.default_rng(0), cfg, return_mixture=True)
        total = n_frames_for(len(m.noisy), cfg.stft)
        assert cfg.init_frames == 125
        assert ex.n_frames == total - 125
        assert ex.features.shape == (ex.n_frames, 1028)
        assert ex.targets.shape == (ex.n_frames, 257)

    def test_deterministic_and_parallel(self, sources):
        speech, noise = sources
        files = {"s.wav": speech, "n.wav": noise}
        corpus = [MixtureSpec("s.wav", "n.wav", snr, -12.0, seed)
                  for seed, snr in enumerate([-5.0, 0.0, 5.0])]
        a = build_dataset(corpus, K.LOG_APRIORI_PLUS_APOSTERIORI, loader=files.__getitem__,
                          workers=1)
        b = build_dataset(corpus, K.LOG_APRIORI_PLUS_APOSTERIORI, loader=files.__getitem__,
                          workers=3)
        for x, y in zip(a, b):
            assert x.features.tobytes() == y.features.tobytes()
            assert x.targets.tobytes() == y.targets.tobytes()

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            build_dataset([], K.LOG_PERIODOGRAM)


class TestManifest:
    def test_parse(self, tmp_path):
        p = tmp_path / "m.txt"
        p.write_text("# corpus\nspeech=a.wav noise=sub/n.wav snr=-2.5 peak=-6 seed=7  # tail\n\n")
        [spec] = parse_manifest(p)
        assert spec.speech_path == str(tmp_path / "a.wav")
        assert spec.noise_path == str(tmp_path / "sub" / "n.wav")
        assert (spec.snr_db, spec.peak_db, spec.seed) == (-2.5, -6.0, 7)

    def test_error_cites_line(self, tmp_path):
        p = tmp_path / "m.txt"
        good = "speech=a.wav noise=n.wav snr=0 peak=-6 seed=1\n"
        p.write_text(good + good + "speech=a.wav noise=n.wav snr=zero peak=-6 seed=1\n")
        with pytest.raises(ManifestError, match="line 3"):
            parse_manifest(p)

    @pytest.mark.parametrize("line", ["speech=a.wav noise=n.wav snr=0 peak=-6",
                                      "speech=a.wav noise=n.wav snr=0 peak=3 seed=1",
                                      "speech=a.wav noise=n.wav snr=0 peak=-6 seed=-1",
                                      "speech=a.wav bogus noise=n.wav snr=0 peak=-6 seed=1"])
    def test_malformed(self, tmp_path, line):
        p = tmp_path / "m.txt"
        p.write_text(line + "\n")
        with pytest.raises(ManifestError, match="line 1"):
            parse_manifest(p)


class TestEarlyStopping:
    def test_rule(self):
        assert not should_stop([5.0] * 10)
        assert should_stop([5.0] * 11)
        assert not should_stop([5.0] * 10 + [4.94])
        assert should_stop([5.0] * 10 + [4.96])

    @pytest.mark.parametrize("e", [1, 4, 17])
    def test_flat_trace_stops_at_e_plus_10(self, monkeypatch, e):
        trace = iter([10.0 / k for k in range(1, e + 1)] + [10.0 / e] * 1000)
        calls = {"n": 0}

        def fake_loss(model, x, y, eps=0.1):
            calls["n"] += 1
            # the first call is the pre-training measurement
            return 99.0 if calls["n"] == 1 else next(trace)

        monkeypatch.setattr(training, "dataset_loss", fake_loss)
        _, hist = train(_toy_dataset(), [4, 3, 257], TrainConfig(max_epochs=500))
        assert len(hist) == e + 10
        assert hist.stopped_early and hist.best_epoch == e


def _toy_dataset(n=6, frames=40, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        x = rng.standard_normal((frames, 4))
        y = 1 / (1 + np.exp(-np.outer(x[:, 0], np.ones(257))))
        out.append(TrainingExample(x, y))
    return out


class TestTrain:
    def test_learns_toy_problem(self):
        _, hist = train(_toy_dataset(), [4, 16, 257], TrainConfig(batch_size=32, max_epochs=60))
        assert hist.best_val_j <= 0.7 * hist.val_j[0]
        assert len(hist) == len(hist.val_j) == len(hist.to_tsv().splitlines())

    def test_returns_best_epoch(self, monkeypatch):
        trace = iter([5.0, 3.0, 4.0] + [4.0] * 50)
        first = {"done": False}
        models = []

        def fake_loss(model, x, y, eps=0.1):
            if not first["done"]:
                first["done"] = True
                return 9.0
            models.append(model.copy())
            return next(trace)

        monkeypatch.setattr(training, "dataset_loss", fake_loss)
        best, hist = train(_toy_dataset(), [4, 3, 257])
        assert hist.best_epoch == 2 and len(hist) == 12
        for p, q in zip(best.params(), models[1].params()):
            np.testing.assert_array_equal(p, q)

    def test_deterministic(self):
        a, ha = train(_toy_dataset(), [4, 8, 257], TrainConfig(max_epochs=3))
        b, hb = train(_toy_dataset(), [4, 8, 257], TrainConfig(max_epochs=3))
        assert ha.to_tsv() == hb.to_tsv()
        for p, q in zip(a.params(), b.params()):
            assert p.tobytes() == q.tobytes()

    def test_tsv_format(self):
        _, hist = train(_toy_dataset(), [4, 8, 257], TrainConfig(max_epochs=2))
        rows = [line.split("\t") for line in hist.to_tsv().splitlines()]
        assert [int(r[0]) for r in rows] == [1, 2]
        assert all(len(r) == 3 and float(r[2]) == v for r, v in zip(rows, hist.val_j))

    def test_divergence(self):
        data = _toy_dataset()
        data[0].features[3, 1] = np.nan
        with pytest.raises(TrainingDivergedError, match="epoch 1"):
            train(data, [4, 8, 257], TrainConfig(max_epochs=3))

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            train([], [4, 8, 257])
        with pytest.raises(ShapeError):
            train(_toy_dataset(), [5, 8, 257])


class TestAnchor:
    def test_properties(self):
        rng = np.random.default_rng(40)
        speech = 0.3 * synthetic.harmonic_speech(2.0, rng)
        noise = synthetic.white_noise(3 * FS, rng)
        d = training.anchor_signal(speech, noise, np.random.default_rng(1), return_details=True)
        assert np.all((d["gains"] >= 0.1) & (d["gains"] <= 1.0))
        comp = d["speech_component"]
        spectrum = np.abs(np.fft.rfft(comp)) ** 2
        freqs = np.fft.rfftfreq(len(comp), 1 / FS)
        assert np.sum(spectrum[freqs > 2500]) <= 0.01 * np.sum(spectrum)
        again = training.anchor_signal(speech, noise, np.random.default_rng(1))
        np.testing.assert_array_equal(again, d["signal"])
        m = d["mixture"]
        sl = slice(m.speech_start, m.speech_stop)
        assert 10 * np.log10(np.sum(m.clean[sl] ** 2) / np.sum(m.noise[sl] ** 2)) == \
            pytest.approx(-5.0, abs=1e-9)
