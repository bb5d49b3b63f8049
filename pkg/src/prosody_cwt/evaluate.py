"""Corpus runs: annotation of every utterance in a manifest, corpus-level
binarization, and accuracy/precision/recall/F-score against references.

Manifest format, one utterance per line::

    utt_id<TAB>tracks<TAB>alignment[<TAB>refs]

``tracks`` is either a single ``.wav`` file (tracks are extracted) or
``f0_path,energy_path``. Relative paths are resolved against the manifest's
directory.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .annotate import (
    WordProsody,
    analyse,
    binarize_kmeans,
    binarize_threshold,
    prosodic_tracks,
    raw_baseline,
)
from .config import Config
from .errors import InvalidInputError, ParseError, RunError
from .extract import extract_tracks
from .io import read_alignment, read_f0_track, read_refs, read_track, read_wav, resolve, write_word_prosody
from .signal import Utterance

log = logging.getLogger(__name__)

TASKS = ("prominence", "boundary")
METHODS = ("cwt_loma", "raw")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def transposed(self) -> "Confusion":
        """Confusion with prediction and reference swapped."""
        return Confusion(self.tp, self.fn, self.fp, self.tn)

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
        }


def metrics(pred, ref) -> Confusion:
    """Confusion counts of boolean predictions against references."""
    p = np.asarray(pred, dtype=bool).reshape(-1)
    r = np.asarray(ref, dtype=bool).reshape(-1)
    if p.size != r.size:
        raise InvalidInputError(f"{p.size} predictions for {r.size} references")
    if p.size == 0:
        raise InvalidInputError("no words to evaluate")
    return Confusion(
        tp=int(np.sum(p & r)),
        fp=int(np.sum(p & ~r)),
        fn=int(np.sum(~p & r)),
        tn=int(np.sum(~p & ~r)),
    )


def majority_baseline(refs) -> float:
    """Accuracy of always predicting the more frequent class."""
    r = np.asarray(refs, dtype=bool).reshape(-1)
    if r.size == 0:
        raise InvalidInputError("no reference labels")
    pos = float(np.mean(r))
    return max(pos, 1.0 - pos)


# ---------------------------------------------------------------- manifest

@dataclass(frozen=True)
class ManifestEntry:
    utt_id: str
    tracks: tuple
    alignment: Path
    refs: Optional[Path] = None
    lineno: int = 0


def read_manifest(path) -> list:
    path = Path(path)
    base = path.parent
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.rstrip("\r\n")
            if not text.strip() or text.lstrip().startswith("#"):
                continue
            cols = text.split("\t")
            if len(cols) not in (3, 4):
                raise ParseError(path, lineno, f"expected 3 or 4 tab-separated columns, got {len(cols)}")
            utt_id = cols[0].strip()
            if not utt_id:
                raise ParseError(path, lineno, "empty utterance id")
            if utt_id in seen:
                raise ParseError(path, lineno, f"duplicate utterance id {utt_id!r}")
            seen.add(utt_id)
            tracks = tuple(resolve(base, p.strip()) for p in cols[1].split(",") if p.strip())
            if len(tracks) == 1 and tracks[0].suffix.lower() != ".wav":
                raise ParseError(path, lineno, "a single track path must be a .wav file")
            if len(tracks) not in (1, 2):
                raise ParseError(path, lineno, "tracks must be a .wav path or 'f0,energy'")
            refs = resolve(base, cols[3].strip()) if len(cols) == 4 and cols[3].strip() else None
            entries.append(ManifestEntry(utt_id, tracks, resolve(base, cols[2].strip()), refs, lineno))
    return entries


def load_utterance(entry: ManifestEntry, config: Config = Config()) -> Utterance:
    """Read (or extract) the tracks, alignment and references of one entry."""
    words = read_alignment(entry.alignment)
    refs = read_refs(entry.refs) if entry.refs is not None else None
    if len(entry.tracks) == 1:
        audio, rate = read_wav(entry.tracks[0])
        f0, voicing, energy = extract_tracks(audio, rate, config)
    else:
        f0, voicing = read_f0_track(entry.tracks[0], frame_shift=config.frame_shift)
        energy = read_track(entry.tracks[1], frame_shift=config.frame_shift)
    return Utterance(entry.utt_id, f0, voicing, energy, words, refs)


# ---------------------------------------------------------------- corpus run

def paragraph_of(utt_id: str, separator: str = "_") -> str:
    """Paragraph key: the id up to its last ``separator`` (the whole id if none)."""
    head, sep, _ = utt_id.rpartition(separator)
    return head if sep else utt_id


def paragraph_word_scales(utterances: Sequence[Utterance], separator: str = "_") -> dict:
    """Word scale per paragraph: summed word spans over summed word counts."""
    spans, counts = {}, {}
    for u in utterances:
        key = paragraph_of(u.id, separator)
        x0, xn = u.words.span
        spans[key] = spans.get(key, 0.0) + (xn - x0)
        counts[key] = counts.get(key, 0) + u.words.n_words
    return {k: spans[k] / counts[k] for k in spans}


@dataclass(frozen=True)
class UtteranceResult:
    utt_id: str
    cwt: list
    raw: list
    refs: Optional[object] = None


def _process(args) -> UtteranceResult:
    utt, config, a_w = args
    tracks = prosodic_tracks(utt, config)
    cwt = analyse(utt, config, a_w=a_w, tracks=tracks).words
    raw = raw_baseline(utt, config, tracks=tracks)
    return UtteranceResult(utt.id, cwt, raw, utt.refs)


def calibration_mask(n: int, config: Config) -> np.ndarray:
    """Which of ``n`` labelled words (in canonical order) calibrate the threshold."""
    k = max(1, int(math.ceil(config.calib_fraction * n - 1e-9)))
    mask = np.zeros(n, dtype=bool)
    if config.calib_selection == "first":
        mask[:k] = True
    else:
        rng = np.random.default_rng(config.calib_seed)
        mask[rng.choice(n, size=k, replace=False)] = True
    return mask


def binarize_values(values, refs, config: Config) -> tuple:
    """Corpus-level binary labels for one task and method.

    ``refs`` holds a boolean per word or None where unlabelled. Returns
    ``(labels, info)`` with ``info`` describing the fitted threshold or
    centroids.
    """
    v = np.asarray(values, dtype=float)
    if config.binarize == "kmeans":
        if v.size >= 2 and np.any(v != v[0]):
            centroids, labels = binarize_kmeans(v)
            return labels, {"centroids": list(centroids)}
        log.warning("all values identical; every word labelled negative")
        return np.zeros(v.size, dtype=bool), {"centroids": None}
    labelled = np.array([r is not None for r in refs], dtype=bool)
    if not labelled.any():
        raise RunError("threshold binarization needs reference labels; use k-means instead")
    idx = np.flatnonzero(labelled)
    calib = idx[calibration_mask(idx.size, config)]
    y = np.array([bool(refs[i]) for i in calib])
    try:
        threshold, labels = binarize_threshold(v, v[calib], y)
    except InvalidInputError as exc:
        raise RunError(str(exc)) from exc
    return labels, {"threshold": threshold, "calibration_words": int(calib.size)}


@dataclass
class CorpusReport:
    features: tuple
    gap_fill_energy: bool
    binarize: str
    n_utterances: int
    n_words: int
    skipped: list = field(default_factory=list)
    majority: dict = field(default_factory=dict)
    scores: dict = field(default_factory=dict)
    binarization: dict = field(default_factory=dict)

    @property
    def feature_label(self) -> str:
        return "_".join(self.features)

    def accuracy(self, method: str, task: str) -> float:
        return self.scores[method][task].accuracy

    def f1(self, method: str, task: str) -> float:
        return self.scores[method][task].f1

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "gap_fill_energy": self.gap_fill_energy,
            "binarize": self.binarize,
            "n_utterances": self.n_utterances,
            "n_words": self.n_words,
            "skipped": list(self.skipped),
            "majority": dict(self.majority),
            "scores": {m: {t: c.as_dict() for t, c in tasks.items()} for m, tasks in self.scores.items()},
            "binarization": self.binarization,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        """Table with the usual acc.% / F-score / prec. / rec. columns per task."""
        rows = [
            (self.feature_label, "cwt_loma"),
            (self.feature_label + "_raw", "raw"),
        ]
        head = f"{'feature':<22}"
        for task in TASKS:
            head += f" | {task.capitalize() + ' Detection':<34}"
        sub = f"{'':<22}"
        for _ in TASKS:
            sub += f" | {'acc.%':>7} {'F-score':>8} {'prec.':>8} {'rec.':>8}"
        lines = [
            f"utterances: {self.n_utterances}  words: {self.n_words}  skipped: {len(self.skipped)}",
            f"features: {','.join(self.features)}  energy gap-filling: {'on' if self.gap_fill_energy else 'off'}"
            f"  binarization: {self.binarize}",
            "",
            head,
            sub,
            "-" * len(sub),
        ]
        for label, method in rows:
            if method not in self.scores:
                continue
            line = f"{label:<22}"
            for task in TASKS:
                c = self.scores[method][task]
                line += f" | {100 * c.accuracy:7.1f} {c.f1:8.2f} {c.precision:8.2f} {c.recall:8.2f}"
            lines.append(line)
        if self.majority:
            line = f"{'majority':<22}"
            for task in TASKS:
                line += f" | {100 * self.majority[task]:7.1f} {'':>8} {'':>8} {'':>8}"
            lines.append(line)
        if self.skipped:
            lines += ["", "skipped: " + ", ".join(self.skipped)]
        return "\n".join(lines) + "\n"


def _word_scales(utterances, config) -> list:
    if config.scale_estimation != "paragraph":
        return [None] * len(utterances)
    scales = paragraph_word_scales(utterances, config.paragraph_separator)
    return [scales[paragraph_of(u.id, config.paragraph_separator)] for u in utterances]


def _safe_process(args):
    try:
        return _process(args), None
    except (ValueError, ArithmeticError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _map(fn, work, jobs):
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, work))
    return [fn(w) for w in work]


def annotate_corpus(utterances: Sequence[Utterance], config: Config = Config(), jobs: int = 1) -> list:
    """Continuous CWT-LoMA and raw values for every utterance, in input order."""
    work = [(u, config, a) for u, a in zip(utterances, _word_scales(utterances, config))]
    return _map(_process, work, jobs)


def _with_binary(words, prom, bound) -> list:
    return [
        WordProsody(w.word_index, w.label, w.prominence, w.boundary, bool(p), bool(b),
                    w.prom_anchor, w.bound_anchor)
        for w, p, b in zip(words, prom, bound)
    ]


def evaluate_results(results: Sequence[UtteranceResult], config: Config) -> tuple:
    """Binarize over the whole corpus and score it.

    Results are processed in utterance-id order, so the calibration subset
    and every output are independent of the manifest order. Returns
    ``(report, binarized)`` where ``binarized`` maps utterance id to
    ``(cwt_words, raw_words)`` with binary labels filled in.
    """
    results = sorted(results, key=lambda r: r.utt_id)
    offsets = np.cumsum([0] + [len(r.cwt) for r in results])
    n_words = int(offsets[-1])

    def refs_for(task):
        out = []
        for r in results:
            if r.refs is None:
                out += [None] * len(r.cwt)
            else:
                out += list(r.refs.prominent if task == "prominence" else r.refs.boundary_after)
        return out

    report = CorpusReport(config.features, config.gap_fill_energy, config.binarize, len(results), n_words)
    labels = {}
    for task in TASKS:
        refs = refs_for(task)
        labelled = np.array([x is not None for x in refs], dtype=bool)
        ref_arr = np.array([bool(x) for x in refs], dtype=bool)
        if labelled.any():
            report.majority[task] = majority_baseline(ref_arr[labelled])
        for method in METHODS:
            attr = "prominence" if task == "prominence" else "boundary"
            values = [getattr(w, attr) for r in results for w in (r.cwt if method == "cwt_loma" else r.raw)]
            lab, info = binarize_values(values, refs, config)
            labels[method, task] = lab
            report.binarization.setdefault(method, {})[task] = info
            if labelled.any():
                report.scores.setdefault(method, {})[task] = metrics(lab[labelled], ref_arr[labelled])

    binarized = {}
    for i, r in enumerate(results):
        sl = slice(offsets[i], offsets[i + 1])
        binarized[r.utt_id] = (
            _with_binary(r.cwt, labels["cwt_loma", "prominence"][sl], labels["cwt_loma", "boundary"][sl]),
            _with_binary(r.raw, labels["raw", "prominence"][sl], labels["raw", "boundary"][sl]),
        )
    return report, binarized


def run_corpus(manifest, config: Config = Config(), out_dir=None, jobs: int = 1) -> CorpusReport:
    """Annotate and evaluate every utterance listed in ``manifest``.

    Utterances that fail to load or annotate are logged and skipped; more
    than ``config.max_failure_fraction`` of them failing is a run-level
    error. With ``out_dir`` set, writes ``<id>.tsv`` (CWT-LoMA),
    ``<id>.raw.tsv`` (raw baseline), ``report.txt`` and ``report.json``.
    """
    entries = read_manifest(manifest)
    if not entries:
        raise RunError(f"{manifest}: manifest lists no utterances")
    utterances, skipped = [], []
    for entry in entries:
        try:
            utterances.append(load_utterance(entry, config))
        except (ValueError, OSError) as exc:
            log.error("skipping %s: %s", entry.utt_id, exc)
            skipped.append(entry.utt_id)

    work = [(u, config, a) for u, a in zip(utterances, _word_scales(utterances, config))]
    results = []
    for utt, (res, err) in zip(utterances, _map(_safe_process, work, jobs)):
        if err is not None:
            log.error("skipping %s: %s", utt.id, err)
            skipped.append(utt.id)
        else:
            results.append(res)

    if len(skipped) > config.max_failure_fraction * len(entries):
        raise RunError(f"{len(skipped)} of {len(entries)} utterances failed")
    if not results:
        raise RunError("no utterance could be processed")

    report, binarized = evaluate_results(results, config)
    report.skipped = sorted(skipped)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for utt_id, (cwt, raw) in binarized.items():
            write_word_prosody(out / f"{utt_id}.tsv", cwt)
            write_word_prosody(out / f"{utt_id}.raw.tsv", raw)
        (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return report
