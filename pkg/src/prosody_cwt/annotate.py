"""Word-level prominence and boundary annotation from LoMA/LomA lines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import Config
from .cwt import ScaleGrid, Scalogram, transform
from .errors import InvalidInputError
from .loma import maxima_lines, minima_lines
from .preproc import (
    duration_derivative,
    duration_signal,
    f0_family,
    f0_final_family,
    fill_f0,
    fill_gain,
    gain_family,
)
from .signal import FrameSeries, Utterance, WordAlignment, combine


@dataclass(frozen=True)
class ScaleSelection:
    word_scale: float
    prominence_grid: ScaleGrid
    boundary_grid: ScaleGrid

    @classmethod
    def from_word_scale(cls, a_w: float, octaves: int = 3, per_octave: int = 2) -> "ScaleSelection":
        """Prominence band from ``a_w / 2``, boundary band from ``a_w``, each ``octaves`` wide."""
        if not a_w > 0:
            raise InvalidInputError("word scale must be positive")
        return cls(
            a_w,
            ScaleGrid.octaves(a_w / 2.0, octaves, per_octave),
            ScaleGrid.octaves(a_w, octaves, per_octave),
        )


@dataclass(frozen=True)
class WordProsody:
    word_index: int
    label: str
    prominence: float
    boundary: float
    prom_binary: bool = False
    bound_binary: bool = False
    prom_anchor: Optional[float] = None
    bound_anchor: Optional[float] = None


def word_scale(words) -> float:
    """Average word period: span of the words divided by their count.

    Accepts an :class:`Utterance` or a :class:`WordAlignment`.
    """
    if isinstance(words, Utterance):
        words = words.words
    x0, xn = words.span
    if not xn > x0:
        raise InvalidInputError("utterance has zero duration")
    return (xn - x0) / words.n_words


def selection_for(a_w: float, config: Config) -> ScaleSelection:
    return ScaleSelection.from_word_scale(a_w, config.octaves, config.scales_per_octave)


@dataclass(frozen=True, eq=False)
class ProsodicTracks:
    """Preprocessed inputs on a shared frame grid."""

    f0: Optional[FrameSeries]
    energy: Optional[FrameSeries]
    duration: Optional[FrameSeries]
    duration_slope: Optional[FrameSeries]

    def prominence_inputs(self) -> list:
        return [t for t in (self.f0, self.energy, self.duration) if t is not None]

    def boundary_inputs(self) -> list:
        return [t for t in (self.f0, self.energy, self.duration_slope) if t is not None]


def prosodic_tracks(utt: Utterance, config: Config = Config(),
                    features: Optional[Sequence[str]] = None,
                    gap_fill_energy: Optional[bool] = None) -> ProsodicTracks:
    """Gap-fill f0/energy and build the duration signals for ``utt``.

    Tracks are cut to a common length; the duration signal is evaluated
    on the same frame grid.
    """
    features = tuple(features if features is not None else config.features)
    if not features:
        raise InvalidInputError("no features selected")
    if gap_fill_energy is None:
        gap_fill_energy = config.gap_fill_energy
    n = min(len(utt.f0), len(utt.energy))
    shift = utt.frame_shift
    start = utt.f0.start_time
    f0 = energy = dur = slope = None
    if "f0" in features:
        raw = FrameSeries(utt.f0.values[:n], shift, start)
        mask = type(utt.voicing)(utt.voicing.flags[:n])
        f0 = fill_f0(raw, mask, f0_family(config), f0_final_family(config),
                     fallback=config.f0_unvoiced_fallback)
    if "en" in features:
        energy = FrameSeries(utt.energy.values[:n], shift, start)
        if gap_fill_energy:
            energy = fill_gain(energy, gain_family(config))
    if "dur" in features:
        dur = duration_signal(utt.words, shift, n_frames=n, start_time=start)
        slope = duration_derivative(dur)
    return ProsodicTracks(f0, energy, dur, slope)


def prominence_signal(utt: Utterance, config: Config = Config(), tracks=None) -> FrameSeries:
    tracks = tracks or prosodic_tracks(utt, config)
    return combine(tracks.prominence_inputs())


def boundary_signal(utt: Utterance, config: Config = Config(), tracks=None) -> FrameSeries:
    tracks = tracks or prosodic_tracks(utt, config)
    return combine(tracks.boundary_inputs())


def _frame_range(series: FrameSeries, start: float, end: float):
    """Frames with ``start <= t < end`` (at least the nearest one)."""
    lo = int(math.ceil((start - series.start_time) / series.frame_shift - 1e-9))
    hi = int(math.ceil((end - series.start_time) / series.frame_shift - 1e-9))
    lo = min(max(lo, 0), len(series) - 1)
    hi = min(max(hi, lo + 1), len(series))
    return lo, hi


def _strongest(lines, lo: float, hi: float):
    """Strongest line whose finest-scale point lies in ``[lo, hi)``.

    Lines that start above the finest scale have no finest-scale anchor
    and are never assigned to a word.
    """
    best = None
    for line in lines:
        if line.anchor.scale_index != 0:
            continue
        t = line.anchor.time
        if lo <= t < hi and (best is None or line.strength > best.strength):
            best = line
    return best


@dataclass(frozen=True, eq=False)
class Analysis:
    """Everything computed for one utterance, kept for inspection and plotting."""

    selection: ScaleSelection
    prominence_signal: FrameSeries
    boundary_signal: FrameSeries
    prominence_scalogram: Scalogram
    boundary_scalogram: Scalogram
    peak_lines: list
    valley_lines: list
    words: list


def analyse(utt: Utterance, config: Config = Config(), a_w: Optional[float] = None,
            tracks: Optional[ProsodicTracks] = None) -> Analysis:
    """Run the CWT-LoMA pipeline on one utterance.

    ``a_w`` overrides the per-utterance word scale (paragraph-level
    estimation passes it in).
    """
    tracks = tracks or prosodic_tracks(utt, config)
    psig = combine(tracks.prominence_inputs())
    bsig = combine(tracks.boundary_inputs())
    sel = selection_for(a_w if a_w is not None else word_scale(utt.words), config)
    psg = transform(psig, sel.prominence_grid)
    bsg = transform(bsig, sel.boundary_grid)
    peaks = maxima_lines(psg, config.loma_max_distance, config.loma_both_sides)
    valleys = minima_lines(bsg, config.loma_max_distance, config.loma_both_sides)
    words = assign_words(
        utt.words, peaks, valleys,
        end_time=max(psig.end_time, utt.words.end),
        wrap_start=psig.start_time if config.wrap_final_boundary else None,
    )
    return Analysis(sel, psig, bsig, psg, bsg, peaks, valleys, words)


def assign_words(alignment: WordAlignment, peaks, valleys, end_time: float,
                 wrap_start: Optional[float] = None) -> list:
    """Per-word strongest peak line and boundary-after valley line.

    Prominence: strongest peak line anchored inside the word. Boundary
    after word i: strongest valley line anchored between the peak anchors
    of words i and i+1, falling back to a word's midpoint when it has no
    peak; for the last word the search runs to ``end_time``. Missing
    lines give 0.

    With ``wrap_start`` set, the last word's search also covers
    ``[wrap_start, first word start)``: the transform continues the signal
    periodically, so a final valley can straddle the wrap point and land
    in the leading silence.
    """
    words = alignment.words
    prom = [_strongest(peaks, w.start, w.end) for w in words]
    out = []
    for i, w in enumerate(words):
        left = prom[i].anchor.time if prom[i] is not None else w.midpoint
        if i + 1 < len(words):
            nxt = prom[i + 1]
            right = nxt.anchor.time if nxt is not None else words[i + 1].midpoint
        else:
            right = end_time + 1e-9
        valley = _strongest(valleys, left, right)
        if i + 1 == len(words) and wrap_start is not None:
            wrapped = _strongest(valleys, wrap_start, words[0].start)
            if wrapped is not None and (valley is None or wrapped.strength > valley.strength):
                valley = wrapped
        out.append(WordProsody(
            word_index=i,
            label=w.label,
            prominence=max(0.0, prom[i].strength) if prom[i] is not None else 0.0,
            boundary=max(0.0, valley.strength) if valley is not None else 0.0,
            prom_anchor=prom[i].anchor.time if prom[i] is not None else None,
            bound_anchor=valley.anchor.time if valley is not None else None,
        ))
    return out


def annotate_words(utt: Utterance, config: Config = Config(),
                   features: Optional[Sequence[str]] = None,
                   gap_fill_energy: Optional[bool] = None,
                   a_w: Optional[float] = None) -> list:
    """Continuous prominence and boundary values for every word of ``utt``."""
    tracks = prosodic_tracks(utt, config, features, gap_fill_energy)
    return analyse(utt, config, a_w, tracks).words


def raw_baseline(utt: Utterance, config: Config = Config(),
                 features: Optional[Sequence[str]] = None,
                 gap_fill_energy: Optional[bool] = None,
                 tracks: Optional[ProsodicTracks] = None) -> list:
    """Word maximum and inter-midpoint minimum of the composite signals.

    No wavelet analysis. Boundary values are negated minima, so larger
    means stronger; unlike the LoMA values they may be negative.
    """
    tracks = tracks or prosodic_tracks(utt, config, features, gap_fill_energy)
    psig = combine(tracks.prominence_inputs())
    bsig = combine(tracks.boundary_inputs())
    words = utt.words.words
    end = max(bsig.end_time, utt.words.end) + 1e-9
    out = []
    for i, w in enumerate(words):
        lo, hi = _frame_range(psig, w.start, w.end)
        right = words[i + 1].midpoint if i + 1 < len(words) else end
        blo, bhi = _frame_range(bsig, w.midpoint, right)
        out.append(WordProsody(
            word_index=i,
            label=w.label,
            prominence=float(np.max(psig.values[lo:hi])),
            boundary=float(-np.min(bsig.values[blo:bhi])),
        ))
    return out


def fit_threshold(calib_values, calib_labels) -> tuple:
    """Accuracy-maximizing threshold on a labelled calibration set.

    Candidates are the midpoints between consecutive distinct sorted
    values, plus the smallest value (everything positive) and the next
    float above the largest (everything negative). Ties go to the lowest
    threshold. Returns ``(threshold, accuracy)``.
    """
    v = np.asarray(calib_values, dtype=float)
    y = np.asarray(calib_labels, dtype=bool)
    if v.size != y.size or v.size == 0:
        raise InvalidInputError("calibration values and labels must be non-empty and equal length")
    if y.all() or not y.any():
        raise InvalidInputError(
            "calibration labels contain a single class; use k-means binarization instead"
        )
    order = np.argsort(v, kind="stable")
    sv, sy = v[order], y[order]
    distinct = np.flatnonzero(np.diff(sv) > 0)
    candidates = np.concatenate((
        [sv[0]],
        0.5 * (sv[distinct] + sv[distinct + 1]),
        [np.nextafter(sv[-1], np.inf)],
    ))
    # accuracy at each candidate via counts of positives/negatives below it
    below = np.searchsorted(sv, candidates, side="left")
    neg_below = np.concatenate(([0], np.cumsum(~sy)))[below]
    pos_at_or_above = np.concatenate(([0], np.cumsum(sy[::-1])))[::-1][below]
    acc = (neg_below + pos_at_or_above) / v.size
    best = int(np.argmax(acc))
    return float(candidates[best]), float(acc[best])


def binarize_threshold(values, calib_values, calib_labels) -> tuple:
    """Threshold from the calibration set applied to ``values``.

    Returns ``(threshold, labels)`` with ``labels = values >= threshold``.
    """
    threshold, _ = fit_threshold(calib_values, calib_labels)
    return threshold, np.asarray(values, dtype=float) >= threshold


def _wcss_by_split(sorted_values: np.ndarray) -> np.ndarray:
    """Within-cluster sum of squares for each split ``s`` (low cluster = first s)."""
    x = sorted_values - sorted_values.mean()
    n = x.size
    s1 = np.cumsum(x)
    s2 = np.cumsum(x * x)
    k = np.arange(1, n)
    left = s2[:-1] - s1[:-1] ** 2 / k
    r1 = s1[-1] - s1[:-1]
    r2 = s2[-1] - s2[:-1]
    right = r2 - r1 ** 2 / (n - k)
    return np.maximum(left, 0.0) + np.maximum(right, 0.0)


def binarize_kmeans(values) -> tuple:
    """Exact two-cluster k-means in one dimension.

    The optimal partition of sorted data is a single split; every split
    between distinct values is scored by its within-cluster sum of
    squares. Near-ties (within 1e-9 of the total sum of squares) go to
    the split with the larger low cluster. The high cluster is positive.

    Returns ``((low_centroid, high_centroid), labels)``.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 2 or np.all(v == v[0]):
        raise InvalidInputError("k-means needs at least two distinct values")
    sv = np.sort(v)
    wcss = _wcss_by_split(sv)
    splits = np.flatnonzero(sv[1:] > sv[:-1]) + 1
    scores = wcss[splits - 1]
    tol = 1e-9 * float(np.sum((sv - sv.mean()) ** 2))
    best_s = int(splits[np.flatnonzero(scores <= scores.min() + tol)[-1]])
    low, high = sv[:best_s], sv[best_s:]
    return (float(low.mean()), float(high.mean())), v >= sv[best_s]
