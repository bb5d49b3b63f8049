"""Continuous prosodic signals: gap-filled gain and f0, and word duration.

Gap filling is an iterated "maximum with smoothed copy": the signal is
convolved with a family of Gaussians of geometrically shrinking width,
and after every convolution the pointwise maximum with the original is
taken. Low regions (silences, unvoiced stretches) are pulled up towards
their surroundings while peaks are left untouched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import correlate1d

from .errors import InvalidInputError
from .signal import DEFAULT_FRAME_SHIFT, FrameSeries, VoicingMask, WordAlignment

log = logging.getLogger(__name__)

# Gaussian kernels are cut at this many standard deviations
KERNEL_TRUNCATION = 3.5


@lru_cache(maxsize=1024)
def _gaussian_kernel(sigma: float) -> np.ndarray:
    half = int(np.floor(KERNEL_TRUNCATION * sigma))
    x = np.arange(-half, half + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    k /= k.sum()
    k.setflags(write=False)
    return k


def gaussian_smooth(x: np.ndarray, sigma: float) -> np.ndarray:
    """Convolve with a unit-mass Gaussian of std ``sigma`` frames.

    Edges are handled by reflection, so the output never leaves the
    input's value range.
    """
    return correlate1d(np.asarray(x, dtype=float), _gaussian_kernel(float(sigma)), mode="reflect")


@dataclass(frozen=True)
class SmoothingFamily:
    """Gaussian kernels with widths shrinking geometrically from w_max to w_min.

    Parameters
    ----------
    w_max : float
        Widest kernel, in seconds.
    n : int
        The family has ``n + 1`` members, ``i = 0 .. n``.
    w_min : float
        Narrowest kernel, in frames.
    frame_shift : float
        Used to convert ``w_max`` to frames.

    Member ``i`` has dilation ``w_max ** ((i - n) / n) * w_min ** (-i / n)``
    and standard deviation equal to its reciprocal, so widths run from
    ``w_max`` (i = 0) down to ``w_min`` (i = n), both in frames.
    """

    w_max: float
    n: int
    w_min: float = 1.0
    frame_shift: float = DEFAULT_FRAME_SHIFT

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("smoothing family needs n >= 1")
        if not self.w_min > 0:
            raise InvalidInputError("w_min must be positive")
        if not self.w_max_frames > self.w_min:
            raise InvalidInputError("w_max must exceed w_min")

    @property
    def w_max_frames(self) -> float:
        return self.w_max / self.frame_shift

    @property
    def dilations(self) -> np.ndarray:
        i = np.arange(self.n + 1)
        n = self.n
        return self.w_max_frames ** ((i - n) / n) * self.w_min ** (-i / n)

    @property
    def widths(self) -> np.ndarray:
        """Kernel standard deviations in frames, widest first."""
        return 1.0 / self.dilations

    def kernels(self) -> list:
        return [_gaussian_kernel(float(w)) for w in self.widths]


def gain_family(config) -> SmoothingFamily:
    return SmoothingFamily(config.gain_w_max, config.gain_n, config.w_min, config.frame_shift)


def f0_family(config) -> SmoothingFamily:
    return SmoothingFamily(config.f0_w_max, config.f0_n, config.w_min, config.frame_shift)


def f0_final_family(config) -> SmoothingFamily:
    return SmoothingFamily(config.f0_final_w_max, config.f0_final_n, config.w_min, config.frame_shift)


def _iterated_max(g: np.ndarray, fam: SmoothingFamily) -> np.ndarray:
    current = g
    for width in fam.widths:
        current = np.maximum(g, gaussian_smooth(current, width))
    return current


def fill_gain(g: FrameSeries, fam: SmoothingFamily) -> FrameSeries:
    """Fill silent gaps of a (log) gain track.

    ``g_0 = max(g, g * phi_0)``, ``g_i = max(g, g_{i-1} * phi_i)``; returns
    ``g_n``. The output is bounded below by ``g`` and above by ``max(g)``.
    """
    return g.with_values(_iterated_max(g.values, fam))


def fill_f0_recursion(s: FrameSeries, voicing: VoicingMask, fam: SmoothingFamily) -> FrameSeries:
    """The unvoiced-gap recursion alone, without the final smoothing pass.

    Voiced frames keep their values exactly; unvoiced frames take
    ``max(s, s_{i-1} * phi_i)`` at each step.
    """
    if len(voicing) != len(s):
        raise InvalidInputError("voicing mask and f0 lengths differ")
    voiced = voicing.flags
    x = s.values
    current = x
    for width in fam.widths:
        current = np.where(voiced, x, np.maximum(x, gaussian_smooth(current, width)))
    return s.with_values(current)


def fill_f0(
    s: FrameSeries,
    voicing: VoicingMask,
    fam: SmoothingFamily,
    final: SmoothingFamily | None = None,
    fallback: float = 1.0,
) -> FrameSeries:
    """Interpolate f0 over unvoiced frames, then smooth around the gaps.

    ``final`` defaults to a 25 ms / 50-member family on the same frame
    shift. An utterance without voiced frames yields a constant
    ``fallback`` signal (with a warning).
    """
    if final is None:
        final = SmoothingFamily(0.025, 50, fam.w_min, s.frame_shift)
    if not np.any(voicing.flags):
        log.warning("no voiced frames; using constant f0 %g", fallback)
        return fill_gain(s.with_values(np.full(len(s), float(fallback))), final)
    filled = fill_f0_recursion(s, voicing, fam)
    return fill_gain(filled, final)


def _pause_values(times: np.ndarray, word_list, durations: np.ndarray) -> tuple:
    """Mask of frames inside gaps between words and the value held there.

    A gap frame takes the duration of the nearer adjacent word (the earlier
    one on a tie).
    """
    inside = np.zeros(times.shape, dtype=bool)
    held = np.zeros(times.shape)
    for i in range(len(word_list) - 1):
        a, b = word_list[i].end, word_list[i + 1].start
        if b <= a:
            continue
        gap = (times > a) & (times < b)
        inside |= gap
        held[gap] = np.where(times[gap] - a <= b - times[gap], durations[i], durations[i + 1])
    return inside, held


def duration_signal(
    words: WordAlignment,
    frame_shift: float = DEFAULT_FRAME_SHIFT,
    n_frames: int | None = None,
    start_time: float | None = None,
) -> FrameSeries:
    """Continuous word-duration signal.

    Knots ``(word midpoint, word duration)`` are joined by a natural cubic
    spline. Pauses, breaths and unlabelled gaps between words contribute
    no knots; across them the nearest word's duration is held constant.
    Outside the first/last knot the value is clamped.

    By default the signal spans the words, first start to last end. Pass
    ``n_frames`` and ``start_time`` to evaluate it on another frame grid
    (e.g. that of the f0 track).
    """
    word_list = words.words
    if not word_list:
        raise InvalidInputError("duration signal needs at least one word")
    x0, xn = words.span
    if start_time is None:
        start_time = x0
    if n_frames is None:
        n_frames = int(np.floor((xn - x0) / frame_shift + 1e-9)) + 1
    times = start_time + frame_shift * np.arange(n_frames)
    durations = np.array([w.duration for w in word_list])
    if len(word_list) == 1:
        return FrameSeries(np.full(n_frames, durations[0]), frame_shift, start_time)

    knots = np.array([w.midpoint for w in word_list])
    spline = CubicSpline(knots, durations, bc_type="natural")
    values = spline(np.clip(times, knots[0], knots[-1]))
    inside, held = _pause_values(times, word_list, durations)
    return FrameSeries(np.where(inside, held, values), frame_shift, start_time)


def duration_derivative(d: FrameSeries) -> FrameSeries:
    """Time derivative: central differences inside, one-sided at the ends."""
    if len(d) < 3:
        raise InvalidInputError("duration derivative needs at least three frames")
    return d.with_values(np.gradient(d.values, d.frame_shift, edge_order=1))
