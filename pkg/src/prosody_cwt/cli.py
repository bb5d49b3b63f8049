"""Command line: ``prosody-cwt {extract,annotate,evaluate,synth-corpus}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .annotate import analyse, prosodic_tracks, raw_baseline
from .config import Config, defaults_text, load_config
from .errors import InvalidInputError, ParseError, RunError, ValidationError
from .evaluate import (
    ManifestEntry,
    UtteranceResult,
    evaluate_results,
    load_utterance,
    read_manifest,
    run_corpus,
)
from .extract import extract_tracks
from .io import read_wav, write_lines, write_scalogram, write_track, write_word_prosody
from .synth import SynthParams, make_corpus, write_corpus

log = logging.getLogger("prosody_cwt")

EXIT_OK = 0
EXIT_ERROR = 1
# corpus run finished, but some utterances were skipped
EXIT_PARTIAL = 2


def _on_off(text: str) -> bool:
    if text.lower() in ("on", "true", "yes", "1"):
        return True
    if text.lower() in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (command-line flags override --config)")
    g.add_argument("--config", metavar="FILE", help="key=value file; see --dump-config")
    g.add_argument("--frame-shift", type=float, metavar="SEC")
    g.add_argument("--pitch-range", metavar="RANGE", help="male, female or MIN:MAX in Hz")


def _add_annotation(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("annotation")
    g.add_argument("--features", metavar="LIST", help="comma-separated subset of f0,en,dur")
    g.add_argument("--gap-fill-energy", type=_on_off, metavar="on|off")
    g.add_argument("--binarize", choices=("threshold", "kmeans"))
    g.add_argument("--calib-fraction", type=float, metavar="F")
    g.add_argument("--scale-estimation", choices=("utterance", "paragraph"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prosody-cwt",
        description="Word prominence and boundary annotation with wavelet scale-space lines.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--dump-config", action="store_true", help="print the default configuration and exit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("extract", help="f0, voicing and energy tracks from a WAV file")
    p.add_argument("wav")
    p.add_argument("-o", "--out-prefix", required=True, help="writes PREFIX.f0 and PREFIX.en")
    p.add_argument("--timed", action="store_true", help="two-column 'time value' output")
    _add_common(p)

    p = sub.add_parser("annotate", help="per-word prominence and boundary values")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="annotate every utterance of a manifest")
    src.add_argument("--wav", help="single utterance from audio")
    src.add_argument("--f0", help="single utterance from an f0 track (needs --energy)")
    p.add_argument("--energy", help="energy track for --f0")
    p.add_argument("--words", help="alignment of the single utterance")
    p.add_argument("--refs", help="reference labels of the single utterance (threshold calibration)")
    p.add_argument("--id", default="utt", help="utterance id for single-utterance input")
    p.add_argument("-o", "--out", required=True,
                   help="output TSV (single utterance) or directory (manifest)")
    p.add_argument("--dump-dir", help="also write scalograms and lines here")
    _add_common(p)
    _add_annotation(p)

    p = sub.add_parser("evaluate", help="annotate a manifest and score it against references")
    p.add_argument("manifest")
    p.add_argument("-o", "--out-dir", help="per-utterance TSVs and report.{txt,json}")
    p.add_argument("-j", "--jobs", type=int, default=1)
    _add_common(p)
    _add_annotation(p)

    p = sub.add_parser("synth-corpus", help="write a synthetic corpus with planted labels")
    p.add_argument("out_dir")
    p.add_argument("-n", "--utterances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr", type=float, default=20.0, help="signal-to-noise ratio in dB")
    return parser


def make_config(args) -> Config:
    config = load_config(args.config) if getattr(args, "config", None) else Config()
    changes = {}
    for attr, name in [
        ("frame_shift", "frame_shift"), ("pitch_range", "pitch_range"),
        ("features", "features"), ("gap_fill_energy", "gap_fill_energy"),
        ("binarize", "binarize"), ("calib_fraction", "calib_fraction"),
        ("scale_estimation", "scale_estimation"),
    ]:
        value = getattr(args, attr, None)
        if value is not None:
            changes[name] = value
    return config.replace(**changes) if changes else config


def cmd_extract(args, config: Config) -> int:
    audio, rate = read_wav(args.wav)
    f0, _, energy = extract_tracks(audio, rate, config)
    write_track(f"{args.out_prefix}.f0", f0, timed=args.timed)
    write_track(f"{args.out_prefix}.en", energy, timed=args.timed)
    return EXIT_OK


def _single_entry(args) -> ManifestEntry:
    if args.words is None:
        raise InvalidInputError("--words is required for single-utterance input")
    if args.wav:
        tracks = (Path(args.wav),)
    else:
        if args.energy is None:
            raise InvalidInputError("--f0 needs --energy")
        tracks = (Path(args.f0), Path(args.energy))
    return ManifestEntry(args.id, tracks, Path(args.words), Path(args.refs) if args.refs else None)


def cmd_annotate(args, config: Config) -> int:
    entries = read_manifest(args.manifest) if args.manifest else [_single_entry(args)]
    if not entries:
        raise RunError("nothing to annotate")
    dump = Path(args.dump_dir) if args.dump_dir else None
    if dump:
        dump.mkdir(parents=True, exist_ok=True)
    results = []
    for entry in entries:
        utt = load_utterance(entry, config)
        tracks = prosodic_tracks(utt, config)
        an = analyse(utt, config, tracks=tracks)
        results.append(UtteranceResult(utt.id, an.words, raw_baseline(utt, config, tracks=tracks), utt.refs))
        if dump:
            write_scalogram(dump / f"{utt.id}.prom.scalogram", an.prominence_scalogram)
            write_scalogram(dump / f"{utt.id}.bound.scalogram", an.boundary_scalogram)
            write_lines(dump / f"{utt.id}.lines", list(an.peak_lines) + list(an.valley_lines))
    _, binarized = evaluate_results(results, config)
    if args.manifest:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for utt_id, (cwt, _) in binarized.items():
            write_word_prosody(out / f"{utt_id}.tsv", cwt)
    else:
        write_word_prosody(args.out, binarized[entries[0].utt_id][0])
    return EXIT_OK


def cmd_evaluate(args, config: Config) -> int:
    report = run_corpus(args.manifest, config, out_dir=args.out_dir, jobs=args.jobs)
    sys.stdout.write(report.to_text())
    return EXIT_PARTIAL if report.skipped else EXIT_OK


def cmd_synth(args, config: Config) -> int:
    utts = make_corpus(args.utterances, args.seed, SynthParams(snr_db=args.snr))
    manifest = write_corpus(args.out_dir, utts)
    print(manifest)
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "annotate": cmd_annotate,
    "evaluate": cmd_evaluate,
    "synth-corpus": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
    )
    if args.dump_config:
        sys.stdout.write(defaults_text())
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        config = make_config(args)
        return COMMANDS[args.command](args, config)
    except (InvalidInputError, ParseError, ValidationError, RunError, OSError) as exc:
        print(f"prosody-cwt: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
