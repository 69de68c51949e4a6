"""``snr-enhance`` command line: enhance, train, features, eval.

Exit codes: 0 success, 1 usage, 2 I/O or format, 3 numeric failure.

The ``--config`` file holds flat ``key = value`` lines (``#`` comments).
Top-level keys are ``mode``, ``kind``, ``gmin_db``, ``model``, ``seed`` and
``dims``; estimator and training fields use dotted keys such as
``tracker.beta``, ``tcs.alpha_high`` or ``train.batch_size``. Command-line
flags override file values.
"""
import argparse
import dataclasses
import sys
import time
from pathlib import Path

from . import mlp
from .enhance import EnhanceConfig, Ml, NonMl, enhance_spectrogram
from .errors import (AudioFormatError, ConfigurationError, CorpusError, CorruptFileError,
                     DegenerateInputError, DomainError, EmptyInputError, InvalidConfigError,
                     ManifestError, ShapeError, TrainingDivergedError)
from .features import KIND_NAMES, FeatureKind, extract_from_spectrogram, write_dump
from .metrics import evaluate
from .noise_tracker import NoiseTrackerConfig
from .stft import StftConfig, analyze, synthesize
from .tcs import TcsConfig
from .training import DatasetConfig, TrainConfig, build_dataset, parse_manifest, train
from .wavio import read_wav, write_wav

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

_SECTIONS = {"tracker": NoiseTrackerConfig, "tcs": TcsConfig, "train": TrainConfig}
_TOP_KEYS = {"mode", "kind", "gmin_db", "model", "seed", "dims"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# configuration

def _coerce(cls, name, text):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    if name not in fields:
        raise UsageError(f"unknown config key {name!r} for {cls.__name__}; "
                         f"valid: {', '.join(sorted(fields))}")
    default = fields[name].default
    try:
        return type(default)(text)
    except ValueError:
        raise UsageError(f"config key {name!r}: cannot parse {text!r}") from None


def read_config_file(path):
    """Parse a flat ``key = value`` file into ``(top_level, {section: {field: value}})``."""
    top, sections = {}, {s: {} for s in _SECTIONS}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"{path}: line {line_no}: expected 'key = value'")
        section, dot, name = key.partition(".")
        if dot:
            if section not in _SECTIONS:
                raise UsageError(f"{path}: line {line_no}: unknown section {section!r}")
            sections[section][name] = _coerce(_SECTIONS[section], name, value)
        elif key in _TOP_KEYS:
            top[key] = value
        else:
            raise UsageError(f"{path}: line {line_no}: unknown key {key!r}")
    return top, sections


def _settings(args):
    """Merge config file values with flags (flags win)."""
    top, sections = read_config_file(args.config) if args.config else ({}, {s: {} for s in _SECTIONS})
    for key in _TOP_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            top[key] = value
    try:
        top["kind"] = FeatureKind.parse(top.get("kind", "xi+gamma"))
        top["gmin_db"] = float(top.get("gmin_db", -20.0))
        seed = int(top.get("seed", 0))
    except (InvalidConfigError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if not 0 <= seed < 2 ** 64:
        raise UsageError(f"seed must be an unsigned 64-bit integer, got {seed}")
    top["seed"] = seed
    top.setdefault("mode", "nonml")
    if top["mode"] not in ("nonml", "ml"):
        raise UsageError(f"mode must be 'nonml' or 'ml', got {top['mode']!r}")
    tracker = NoiseTrackerConfig(**sections["tracker"])
    tcs = TcsConfig(**sections["tcs"])
    train_cfg = TrainConfig(**{**sections["train"], "rng_seed": seed})
    return top, tracker, tcs, train_cfg


# --------------------------------------------------------------------------
# commands

def cmd_enhance(args):
    top, tracker, tcs, _ = _settings(args)
    signal, fmt = read_wav(args.input)
    if top["mode"] == "ml":
        if not top.get("model"):
            raise UsageError("--mode ml requires --model")
        path = Ml(top["kind"], mlp.load(top["model"]))
    else:
        path = NonMl()
    config = EnhanceConfig.from_db(top["gmin_db"], path=path, tracker=tracker, tcs=tcs)
    start = time.perf_counter()
    noisy = analyze(signal, config.stft)
    enhanced, _ = enhance_spectrogram(noisy, config)
    out = synthesize(enhanced)
    elapsed = time.perf_counter() - start
    write_wav(args.output, out, fmt)
    print(f"frames={noisy.n_frames} seconds={elapsed:.3f}")
    return EXIT_OK


def _parse_dims(text, kind):
    if text is None:
        return mlp.default_dims(kind.stacked_dim())
    try:
        dims = [int(d) for d in str(text).replace("x", ",").split(",") if d.strip()]
    except ValueError:
        raise UsageError(f"--dims must be comma-separated integers, got {text!r}") from None
    if len(dims) < 2:
        raise UsageError("--dims needs at least input and output widths")
    if dims[0] != kind.stacked_dim() or dims[-1] != StftConfig().n_bins:
        raise UsageError(f"--dims {dims} must start with {kind.stacked_dim()} (kind "
                         f"{kind.cli_name!r}) and end with {StftConfig().n_bins}")
    return dims


def cmd_train(args):
    top, tracker, tcs, train_cfg = _settings(args)
    dims = _parse_dims(top.get("dims"), top["kind"])
    corpus = parse_manifest(args.manifest)
    dataset = build_dataset(corpus, top["kind"], DatasetConfig(tracker=tracker, tcs=tcs))

    def report(rec):
        print(f"epoch {rec.epoch}: train_J={rec.train_j:.6g} val_J={rec.val_j:.6g}",
              file=sys.stderr)

    model, history = train(dataset, dims, train_cfg, verbose=report if args.verbose else None)
    mlp.save(model, args.output)
    history_path = args.history or f"{args.output}.history.tsv"
    Path(history_path).write_text(history.to_tsv())
    print(f"epochs={len(history)} best_epoch={history.best_epoch} "
          f"best_val_J={history.best_val_j:.6g}")
    return EXIT_OK


def cmd_features(args):
    top, tracker, tcs, _ = _settings(args)
    signal, _ = read_wav(args.input)
    stream = extract_from_spectrogram(analyze(signal), top["kind"], tracker, tcs)
    write_dump(args.output, stream)
    print(f"frames={stream.n_frames} dim={stream.dim}")
    return EXIT_OK


def cmd_eval(args):
    clean, _ = read_wav(args.clean)
    test, _ = read_wav(args.test)
    report = evaluate(clean, test)
    print(f"segsnr_db={report.seg_snr_db:.4f} lsd_db={report.lsd_db:.4f}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--mode", choices=["nonml", "ml"])
    common.add_argument("--kind", help=f"feature kind: {', '.join(KIND_NAMES)}")
    common.add_argument("--gmin-db", dest="gmin_db", type=float)
    common.add_argument("--model")
    common.add_argument("--seed", type=int)
    common.add_argument("--config")

    parser = _Parser(prog="snr-enhance", description="Single-channel speech enhancement with SNR-normalized DNN features.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enhance", parents=[common], help="enhance a 16 kHz mono WAV file")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("train", parents=[common], help="train a mask estimator")
    p.add_argument("manifest")
    p.add_argument("output", help="model file to write")
    p.add_argument("--dims", help="layer widths, e.g. 2056,1024,1024,1024,257")
    p.add_argument("--history", help="history TSV path (default: <output>.history.tsv)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("features", parents=[common], help="dump a feature stream")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("eval", parents=[common], help="segmental SNR and LSD")
    p.add_argument("clean")
    p.add_argument("test")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, InvalidConfigError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDivergedError, DegenerateInputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, AudioFormatError, CorruptFileError, ManifestError, CorpusError,
            ShapeError, EmptyInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
