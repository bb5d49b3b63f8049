"""Synthetic utterances with planted prominences and boundaries.

Each utterance is a sequence of words grouped into phrases. The prosodic
contour is a rise-fall arch over every phrase, plus a bump on every
prominent word and a dip at every phrase junction. f0 and energy are both
driven by this contour, each with its own low-passed noise at the
requested SNR; prominent and phrase-final words are lengthened. Pauses
after some boundaries are silent and unvoiced.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .io import write_alignment, write_refs, write_track
from .signal import (
    DEFAULT_FRAME_SHIFT,
    AlignmentEntry,
    FrameSeries,
    ReferenceLabels,
    Utterance,
    VoicingMask,
    WordAlignment,
)


@dataclass(frozen=True)
class SynthParams:
    snr_db: float = 20.0
    min_words: int = 8
    max_words: int = 14
    base_duration: tuple = (0.18, 0.30)
    prominent_rate: float = 0.6
    min_accent_gap: int = 1
    boundary_rate: float = 0.4
    min_phrase_words: int = 3
    prominent_stretch: float = 1.5
    final_stretch: float = 1.5
    pause_rate: float = 0.5
    pause_duration: tuple = (0.12, 0.25)
    accent_amplitude: tuple = (0.8, 1.2)
    dip_amplitude: tuple = (0.7, 1.0)
    trend_drop: float = 1.2
    arch_skew: float = 0.7
    edge_silence: float = 0.15
    # noise is low-passed to this width (s) so that it reaches the analysed scales
    noise_width: float = 0.025
    frame_shift: float = DEFAULT_FRAME_SHIFT


def _labels(rng, n, p):
    prominent = np.zeros(n, dtype=bool)
    for i in range(n):
        # no accent clash: at least min_accent_gap unaccented words between accents
        recent = prominent[max(0, i - p.min_accent_gap):i]
        if not recent.any() and rng.random() < p.prominent_rate:
            prominent[i] = True
    if not prominent.any():
        prominent[rng.integers(n)] = True
    boundary = np.zeros(n, dtype=bool)
    length = 0
    for i in range(n - 1):
        length += 1
        if length >= p.min_phrase_words and n - 1 - i >= p.min_phrase_words and rng.random() < p.boundary_rate:
            boundary[i] = True
            length = 0
    boundary[-1] = True
    return prominent, boundary


def _coloured_noise(rng, n, sigma_frames):
    """Unit-variance Gaussian noise low-passed by a Gaussian of ``sigma_frames``."""
    x = rng.standard_normal(n)
    if sigma_frames > 0:
        x = gaussian_filter1d(x, sigma_frames, mode="wrap")
    return x / np.std(x)


def make_utterance(rng: np.random.Generator, utt_id: str, params: SynthParams = SynthParams()) -> Utterance:
    p = params
    dt = p.frame_shift
    n = int(rng.integers(p.min_words, p.max_words + 1))
    prominent, boundary = _labels(rng, n, p)

    entries = []
    t = p.edge_silence
    for i in range(n):
        d = rng.uniform(*p.base_duration)
        if prominent[i]:
            d *= p.prominent_stretch
        if boundary[i] and i < n - 1:
            d *= p.final_stretch
        entries.append(AlignmentEntry(f"w{i}", round(t, 3), round(t + d, 3), "word"))
        t = round(t + d, 3)
        if boundary[i] and i < n - 1 and rng.random() < p.pause_rate:
            pd = rng.uniform(*p.pause_duration)
            entries.append(AlignmentEntry("<sil>", t, round(t + pd, 3), "pause"))
            t = round(t + pd, 3)
    total = t + p.edge_silence
    words = WordAlignment(tuple(entries))
    word_list = words.words

    n_frames = int(round(total / dt)) + 1
    times = np.arange(n_frames) * dt
    contour = np.zeros(n_frames)

    # phrase arch: quick rise, long declination, low at both phrase edges
    phrase_start = word_list[0].start
    for i, w in enumerate(word_list):
        if boundary[i]:
            span = (times >= phrase_start) & (times < w.end)
            frac = (times[span] - phrase_start) / max(w.end - phrase_start, dt)
            contour[span] += p.trend_drop * np.sin(np.pi * frac ** p.arch_skew)
            if i + 1 < n:
                phrase_start = word_list[i + 1].start

    for i, w in enumerate(word_list):
        if prominent[i]:
            width = 0.25 * w.duration
            amp = rng.uniform(*p.accent_amplitude)
            contour += amp * np.exp(-0.5 * ((times - w.midpoint) / width) ** 2)
        if boundary[i] and i < n - 1:
            junction = 0.5 * (w.end + word_list[i + 1].start)
            width = 0.3 * min(w.duration, word_list[i + 1].duration)
            amp = rng.uniform(*p.dip_amplitude)
            contour -= amp * np.exp(-0.5 * ((times - junction) / width) ** 2)

    noise_scale = np.std(contour) * 10 ** (-p.snr_db / 20)
    f0 = 120.0 + 25.0 * (contour + noise_scale * _coloured_noise(rng, n_frames, p.noise_width / dt))
    energy = -4.0 + 1.5 * (contour + noise_scale * _coloured_noise(rng, n_frames, p.noise_width / dt))

    speech = np.zeros(n_frames, dtype=bool)
    for w in word_list:
        speech |= (times >= w.start) & (times < w.end)
    voiced = speech.copy()
    # short unvoiced stretches (obstruents) inside some words
    for w in word_list:
        if rng.random() < 0.5:
            c = rng.uniform(w.start, w.end)
            voiced &= ~((times >= c - 0.02) & (times < c + 0.02))
    energy = np.where(speech, energy, -12.0 + 0.1 * rng.standard_normal(n_frames))
    f0 = np.where(voiced, f0, 0.0)

    return Utterance(
        utt_id,
        FrameSeries(f0, dt),
        VoicingMask(voiced),
        FrameSeries(energy, dt),
        words,
        ReferenceLabels(tuple(prominent), tuple(boundary)),
    )


def make_corpus(n_utterances: int = 50, seed: int = 0, params: SynthParams = SynthParams()) -> list:
    rng = np.random.default_rng(seed)
    return [make_utterance(rng, f"synth{i:03d}", params) for i in range(n_utterances)]


def write_corpus(out_dir, utterances) -> Path:
    """Write tracks, alignments, references and a manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for utt in utterances:
        f0_path = out / f"{utt.id}.f0"
        en_path = out / f"{utt.id}.en"
        ali_path = out / f"{utt.id}.words"
        ref_path = out / f"{utt.id}.refs"
        write_track(f0_path, utt.f0)
        write_track(en_path, utt.energy)
        write_alignment(ali_path, utt.words)
        if utt.refs is not None:
            write_refs(ref_path, utt.refs)
        refs = ref_path.name if utt.refs is not None else ""
        rows.append(f"{utt.id}\t{f0_path.name},{en_path.name}\t{ali_path.name}\t{refs}".rstrip("\t"))
    manifest = out / "manifest.tsv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest
