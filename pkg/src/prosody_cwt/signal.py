"""Sampled-signal data model, normalization and signal combination."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, ValidationError

DEFAULT_FRAME_SHIFT = 0.005
WORD_KINDS = ("word", "pause", "breath")

# below this population variance a signal is treated as constant
DEGENERATE_VARIANCE = 1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FrameSeries:
    """Uniformly sampled real signal.

    Frame ``k`` sits at ``start_time + k * frame_shift`` seconds.
    """

    values: np.ndarray
    frame_shift: float = DEFAULT_FRAME_SHIFT
    start_time: float = 0.0

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.size < 1:
            raise InvalidInputError("FrameSeries needs at least one frame")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise InvalidInputError(f"non-finite value at frame {bad}")
        if not self.frame_shift > 0:
            raise InvalidInputError("frame_shift must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frame_shift", float(self.frame_shift))
        object.__setattr__(self, "start_time", float(self.start_time))

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.frame_shift * np.arange(len(self))

    @property
    def end_time(self) -> float:
        """Time of the last frame."""
        return self.start_time + self.frame_shift * (len(self) - 1)

    def with_values(self, values) -> "FrameSeries":
        """Same time base, new values."""
        return FrameSeries(values, self.frame_shift, self.start_time)

    def frame_index(self, t: float) -> int:
        """Nearest frame to time ``t``, clipped to the signal."""
        k = int(round((t - self.start_time) / self.frame_shift))
        return min(max(k, 0), len(self) - 1)


@dataclass(frozen=True, eq=False)
class VoicingMask:
    flags: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "flags", _frozen_array(self.flags, dtype=bool))

    def __len__(self):
        return self.flags.size

    @classmethod
    def from_f0(cls, f0: FrameSeries) -> "VoicingMask":
        """Zero (or negative) f0 marks an unvoiced frame."""
        return cls(f0.values > 0)


@dataclass(frozen=True)
class AlignmentEntry:
    label: str
    start: float
    end: float
    kind: str = "word"

    @property
    def is_word(self) -> bool:
        return self.kind == "word"

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.start + self.end)

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class WordAlignment:
    """Time-ordered word/pause/breath intervals of one utterance."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        for i, e in enumerate(entries):
            if e.kind not in WORD_KINDS:
                raise ValidationError(f"entry {i}: unknown kind {e.kind!r}")
            if not (np.isfinite(e.start) and np.isfinite(e.end)):
                raise ValidationError(f"entry {i}: non-finite time")
            if not e.end > e.start:
                raise ValidationError(f"entry {i} ({e.label!r}): end must exceed start")
            if i and e.start < entries[i - 1].end - 1e-9:
                raise ValidationError(
                    f"entry {i} ({e.label!r}) overlaps or precedes entry {i - 1}"
                )
        if not any(e.is_word for e in entries):
            raise ValidationError("alignment contains no word entries")

    @property
    def words(self) -> list:
        return [e for e in self.entries if e.is_word]

    @property
    def n_words(self) -> int:
        return sum(1 for e in self.entries if e.is_word)

    @property
    def span(self) -> tuple:
        """(first word start, last word end)."""
        words = self.words
        return words[0].start, words[-1].end

    @property
    def end(self) -> float:
        return self.entries[-1].end


@dataclass(frozen=True)
class ReferenceLabels:
    """Binary reference labels, one record per word entry."""

    prominent: tuple
    boundary_after: tuple

    def __post_init__(self):
        p = tuple(bool(x) for x in self.prominent)
        b = tuple(bool(x) for x in self.boundary_after)
        if len(p) != len(b):
            raise ValidationError("prominent and boundary_after lengths differ")
        object.__setattr__(self, "prominent", p)
        object.__setattr__(self, "boundary_after", b)

    def __len__(self):
        return len(self.prominent)


@dataclass(frozen=True)
class Utterance:
    id: str
    f0: FrameSeries
    voicing: VoicingMask
    energy: FrameSeries
    words: WordAlignment
    refs: Optional[ReferenceLabels] = None

    def __post_init__(self):
        if len(self.voicing) != len(self.f0):
            raise ValidationError(f"{self.id}: voicing mask length != f0 length")
        if abs(self.f0.frame_shift - self.energy.frame_shift) > 1e-12:
            raise ValidationError(f"{self.id}: f0 and energy frame shifts differ")
        if self.refs is not None and len(self.refs) != self.words.n_words:
            raise ValidationError(
                f"{self.id}: {len(self.refs)} reference records for "
                f"{self.words.n_words} words"
            )

    @property
    def frame_shift(self) -> float:
        return self.f0.frame_shift


def normalize(series: FrameSeries) -> FrameSeries:
    """Zero mean, unit (population) variance.

    A signal whose variance is below ``1e-12`` maps to all zeros.
    """
    if len(series) < 2:
        raise InvalidInputError("normalize needs at least two frames")
    x = series.values
    centered = x - x.mean()
    var = np.mean(centered ** 2)
    if var < DEGENERATE_VARIANCE:
        return series.with_values(np.zeros_like(x))
    out = centered / np.sqrt(var)
    # one correction pass keeps the moments within 1e-9 for large offsets
    out = out - out.mean()
    return series.with_values(out / np.sqrt(np.mean(out ** 2)))


def combine(tracks: Sequence[FrameSeries]) -> FrameSeries:
    """Sum of normalized tracks, renormalized."""
    tracks = list(tracks)
    if not tracks:
        raise InvalidInputError("combine needs at least one track")
    first = tracks[0]
    for t in tracks[1:]:
        if len(t) != len(first):
            raise InvalidInputError(
                f"track lengths differ: {len(first)} vs {len(t)}"
            )
        if abs(t.frame_shift - first.frame_shift) > 1e-12:
            raise InvalidInputError("track frame shifts differ")
    # sorted summation order makes the result independent of input order
    stacked = np.sort(np.stack([normalize(t).values for t in tracks]), axis=0)
    return normalize(first.with_values(stacked.sum(axis=0)))
