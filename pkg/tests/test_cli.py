import numpy as np
import pytest
from scipy.io import wavfile

from snr_enhance import mlp, synthetic
from snr_enhance.cli import main, read_config_file
from snr_enhance.features import read_dump
from snr_enhance.stft import n_frames_for, synthesis_length, StftConfig
from snr_enhance.wavio import read_wav, write_wav

FS = 16000


@pytest.fixture(scope="module")
def wavs(tmp_path_factory):
    d = tmp_path_factory.mktemp("audio")
    rng = np.random.default_rng(50)
    speech = 0.3 * synthetic.harmonic_speech(1.0, rng)
    noise = 0.05 * synthetic.white_noise(6 * FS, rng)
    write_wav(d / "speech.wav", speech)
    write_wav(d / "noise.wav", noise)
    write_wav(d / "noisy.wav", speech + noise[:len(speech)])
    write_wav(d / "noisy_f32.wav", speech + noise[:len(speech)], "float32")
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestEnhance:
    @pytest.mark.parametrize("name,fmt", [("noisy.wav", "pcm16"), ("noisy_f32.wav", "float32")])
    def test_nonml(self, wavs, tmp_path, capsys, name, fmt):
        code, out, _ = run(capsys, "enhance", wavs / name, tmp_path / "o.wav")
        assert code == 0
        x, _ = read_wav(wavs / name)
        y, out_fmt = read_wav(tmp_path / "o.wav")
        n = n_frames_for(len(x), StftConfig())
        assert out_fmt == fmt
        assert len(y) == synthesis_length(n, StftConfig())
        assert f"frames={n}" in out and "seconds=" in out

    def test_ml_dim_mismatch_names_both(self, wavs, tmp_path, capsys):
        mlp.save(mlp.glorot_init([1028, 8, 257]), tmp_path / "m.bin")
        code, _, err = run(capsys, "enhance", wavs / "noisy.wav", tmp_path / "o.wav",
                           "--mode", "ml", "--kind", "xi+gamma", "--model", tmp_path / "m.bin")
        assert code != 0
        assert "1028" in err and "2056" in err

    def test_ml_runs(self, wavs, tmp_path, capsys):
        mlp.save(mlp.glorot_init([1028, 8, 257]), tmp_path / "m.bin")
        code, _, _ = run(capsys, "enhance", wavs / "noisy.wav", tmp_path / "o.wav",
                         "--mode", "ml", "--kind", "gamma", "--model", tmp_path / "m.bin")
        assert code == 0

    def test_ml_without_model(self, wavs, tmp_path, capsys):
        code, _, err = run(capsys, "enhance", wavs / "noisy.wav", tmp_path / "o.wav",
                           "--mode", "ml")
        assert code == 1 and "--model" in err

    def test_wrong_rate(self, tmp_path, capsys):
        wavfile.write(tmp_path / "hi.wav", 44100, np.zeros(44100, np.int16))
        code, _, err = run(capsys, "enhance", tmp_path / "hi.wav", tmp_path / "o.wav")
        assert code == 2 and "16000" in err

    def test_stereo(self, tmp_path, capsys):
        wavfile.write(tmp_path / "st.wav", FS, np.zeros((FS, 2), np.int16))
        code, _, err = run(capsys, "enhance", tmp_path / "st.wav", tmp_path / "o.wav")
        assert code == 2 and "mono" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(capsys, "enhance", tmp_path / "nope.wav", tmp_path / "o.wav")
        assert code == 2

    def test_gmin_flag_overrides_config(self, wavs, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("gmin_db = -3\n")
        run(capsys, "enhance", wavs / "noisy.wav", tmp_path / "a.wav", "--config", cfg)
        run(capsys, "enhance", wavs / "noisy.wav", tmp_path / "b.wav", "--config", cfg,
            "--gmin-db", "-20")
        run(capsys, "enhance", wavs / "noisy.wav", tmp_path / "c.wav")
        a, b, c = (read_wav(tmp_path / f)[0] for f in ("a.wav", "b.wav", "c.wav"))
        np.testing.assert_array_equal(b, c)
        assert np.sum(a ** 2) > np.sum(c ** 2)


class TestFeatures:
    @pytest.mark.parametrize("kind,dim", [("gamma", 1028), ("xi+gamma", 2056), ("y", 1028),
                                          ("y+n", 2056), ("xi", 1028)])
    def test_dims(self, wavs, tmp_path, capsys, kind, dim):
        code, out, _ = run(capsys, "features", wavs / "noisy.wav", tmp_path / "f.bin",
                           "--kind", kind)
        assert code == 0
        assert f"dim={dim}" in out
        assert read_dump(tmp_path / "f.bin").dim == dim

    def test_unknown_kind(self, wavs, tmp_path, capsys):
        code, _, err = run(capsys, "features", wavs / "noisy.wav", tmp_path / "f.bin",
                           "--kind", "snr")
        assert code == 1
        for name in ("y", "y+n", "xi", "gamma", "xi+gamma"):
            assert name in err


class TestEval:
    def test_self(self, wavs, capsys):
        code, out, _ = run(capsys, "eval", wavs / "speech.wav", wavs / "speech.wav")
        assert code == 0
        fields = dict(tok.split("=") for tok in out.split())
        assert fields == {"segsnr_db": "35.0000", "lsd_db": "0.0000"}

    def test_length_mismatch(self, wavs, capsys):
        code, _, err = run(capsys, "eval", wavs / "speech.wav", wavs / "noise.wav")
        assert code == 2
        assert str(FS) in err and str(6 * FS) in err


class TestTrain:
    @pytest.fixture
    def manifest(self, wavs, tmp_path):
        p = tmp_path / "m.txt"
        p.write_text(f"speech={wavs / 'speech.wav'} noise={wavs / 'noise.wav'} snr=0 peak=-6 seed=1\n"
                     f"speech={wavs / 'speech.wav'} noise={wavs / 'noise.wav'} snr=5 peak=-12 seed=2\n")
        return p

    def test_model_and_history(self, manifest, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("train.max_epochs = 3\n")
        argv = ["train", manifest, tmp_path / "a.bin", "--kind", "gamma",
                "--dims", "1028,16,257", "--config", cfg, "--seed", "7"]
        assert run(capsys, *argv)[0] == 0
        raw = (tmp_path / "a.bin").read_bytes()
        assert raw[:8] == b"SNRDNN1\x00"
        assert mlp.load(tmp_path / "a.bin").dims == [1028, 16, 257]
        rows = (tmp_path / "a.bin.history.tsv").read_text().splitlines()
        assert len(rows) == 3 and all(len(r.split("\t")) == 3 for r in rows)

        argv[2] = tmp_path / "b.bin"
        assert run(capsys, *argv)[0] == 0
        assert (tmp_path / "b.bin").read_bytes() == raw

    def test_malformed_line(self, manifest, tmp_path, capsys):
        text = manifest.read_text() + "speech=a.wav noise=b.wav snr=x peak=-6 seed=1\n"
        manifest.write_text(text)
        code, _, err = run(capsys, "train", manifest, tmp_path / "a.bin")
        assert code != 0 and "line 3" in err

    def test_bad_dims(self, manifest, tmp_path, capsys):
        code, _, err = run(capsys, "train", manifest, tmp_path / "a.bin", "--kind", "gamma",
                           "--dims", "2056,8,257")
        assert code == 1 and "1028" in err


class TestUsage:
    def test_no_command(self, capsys):
        assert run(capsys)[0] == 1

    def test_unknown_config_key(self, wavs, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("tracker.bogus = 1\n")
        code, _, err = run(capsys, "features", wavs / "noisy.wav", tmp_path / "f.bin",
                           "--config", cfg)
        assert code == 1 and "bogus" in err

    def test_config_parse(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("# comment\nkind = xi\ntracker.beta = 0.7\ntcs.pitch_vicinity = 2\n")
        top, sections = read_config_file(cfg)
        assert top == {"kind": "xi"}
        assert sections["tracker"] == {"beta": 0.7}
        assert sections["tcs"] == {"pitch_vicinity": 2}

    def test_invalid_config_value(self, wavs, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("tracker.beta = 1.5\n")
        code, _, _ = run(capsys, "features", wavs / "noisy.wav", tmp_path / "f.bin",
                         "--config", cfg)
        assert code == 1
