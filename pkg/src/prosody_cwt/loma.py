"""Lines of maximum (and minimum) amplitude across the scales of a scalogram.

Local maxima of the finest scale are visited strongest first. Each one is
attached to the nearest unclaimed maximum of the next coarser scale, on
the side the scale derivative points to and no further than
``max_distance`` seconds away. At coarser levels the visiting order is
the cumulative weighted sum of a maximum and its descendants. Chains of
attached maxima form the lines; a maximum that finds no parent ends its
line, and a maximum that received no child starts a new one.

Only maxima with positive amplitude take part: flat or negative stretches
(far tails, the wrap-around point of a periodically continued bump,
round-off ripple) produce maxima that are not peaks of the signal.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .cwt import Scalogram, ScaleGrid

DEFAULT_MAX_DISTANCE = 0.200
# maxima at or below this fraction of max |W| are not linked
DEFAULT_MIN_RELATIVE_AMPLITUDE = 1e-9


@dataclass(frozen=True)
class ExtremumPoint:
    time: float
    scale_index: int
    amplitude: float
    frame: int


@dataclass(frozen=True)
class LomaLine:
    """A chain of extrema on consecutive scales, finest first.

    For valley lines the amplitudes are those of the negated scalogram,
    so strong valleys have large positive strengths.
    """

    points: tuple
    strength: float
    polarity: str = "peak"

    @property
    def anchor(self) -> ExtremumPoint:
        """Finest-scale point of the line."""
        return self.points[0]

    @property
    def top_scale(self) -> int:
        return self.points[-1].scale_index

    def __len__(self):
        return len(self.points)


def scale_weight(k: int, ratio: float) -> float:
    """Weight of scale ``k`` in a cumulative sum; scale 0 counts fully."""
    if k == 0:
        return 1.0
    return math.log(k + 1) * ratio ** (-k / 2)


def local_maxima_indices(row) -> np.ndarray:
    """Interior ``k`` with ``row[k-1] < row[k] >= row[k+1]``.

    A flat-topped maximum is reported once, at its leftmost frame.
    """
    r = np.asarray(row, dtype=float)
    if r.size < 3:
        return np.zeros(0, dtype=int)
    mid = r[1:-1]
    return np.flatnonzero((mid > r[:-2]) & (mid >= r[2:])) + 1


def local_maxima(row, frame_shift: float, scale_index: int = 0, start_time: float = 0.0) -> list:
    r = np.asarray(row, dtype=float)
    return [
        ExtremumPoint(start_time + k * frame_shift, scale_index, float(r[k]), int(k))
        for k in local_maxima_indices(r)
    ]


def line_strength(line: LomaLine, grid: ScaleGrid) -> float:
    """``sum_k w_k * amplitude_k`` with ``w_0 = 1``, ``w_k = log(k+1) * ratio**(-k/2)``."""
    return float(sum(scale_weight(p.scale_index, grid.ratio) * p.amplitude for p in line.points))


def _find_parent(t, direction, candidates, claimed, max_frames):
    """Nearest unclaimed candidate frame on the requested side.

    ``direction`` is +1 (right, frames >= t), -1 (left, frames <= t) or 0
    (either side; equal distances go to the earlier frame).
    """
    pos = bisect.bisect_left(candidates, t)
    right = left = None
    if direction >= 0:
        i = pos
        while i < len(candidates) and candidates[i] - t <= max_frames:
            if candidates[i] not in claimed:
                right = candidates[i]
                break
            i += 1
    if direction <= 0:
        # a candidate exactly at t sits at index pos
        i = pos if pos < len(candidates) and candidates[pos] == t else pos - 1
        while i >= 0 and t - candidates[i] <= max_frames:
            if candidates[i] not in claimed:
                left = candidates[i]
                break
            i -= 1
    if right is None:
        return left
    if left is None:
        return right
    return left if t - left <= right - t else right


def link_lines(
    sg: Scalogram,
    max_distance: float = DEFAULT_MAX_DISTANCE,
    both_sides: bool = False,
    polarity: str = "peak",
    min_relative_amplitude: float = DEFAULT_MIN_RELATIVE_AMPLITUDE,
) -> list:
    """Link local maxima across scales into lines.

    Parameters
    ----------
    sg : Scalogram
        Rows ordered finest to coarsest.
    max_distance : float
        Largest parent-child time offset, in seconds.
    both_sides : bool
        If the side chosen by the scale derivative has no free candidate,
        try the other side instead of ending the line.
    polarity : str
        Label stored on the returned lines.
    min_relative_amplitude : float
        Maxima not exceeding this fraction of ``max |W|`` are ignored.

    Returns
    -------
    list of LomaLine
        Every maximal chain, sorted by starting scale, then starting time.
    """
    W = sg.coeffs
    n_scales = W.shape[0]
    ratio = sg.grid.ratio
    max_frames = max_distance / sg.frame_shift + 1e-9
    floor = min_relative_amplitude * float(np.max(np.abs(W))) if W.size else 0.0
    maxima = []
    for j in range(n_scales):
        idx = local_maxima_indices(W[j])
        maxima.append(idx[W[j, idx] > floor].tolist())
    weights = [scale_weight(j, ratio) for j in range(n_scales)]

    cum = [dict() for _ in range(n_scales)]
    parent = [dict() for _ in range(n_scales)]
    has_child = [set() for _ in range(n_scales)]
    for m in maxima[0]:
        cum[0][m] = weights[0] * W[0, m]

    for j in range(n_scales - 1):
        order = sorted(maxima[j], key=lambda m: (-cum[j][m], m))
        candidates = maxima[j + 1]
        claimed = has_child[j + 1]
        for t in order:
            diff = W[j + 1, t] - W[j, t]
            direction = 1 if diff > 0 else (-1 if diff < 0 else 0)
            p = _find_parent(t, direction, candidates, claimed, max_frames)
            if p is None and both_sides and direction != 0:
                p = _find_parent(t, -direction, candidates, claimed, max_frames)
            if p is None:
                continue
            parent[j][t] = p
            claimed.add(p)
            cum[j + 1][p] = cum[j][t] + weights[j + 1] * W[j + 1, p]
        for p in candidates:
            if p not in claimed:
                cum[j + 1][p] = weights[j + 1] * W[j + 1, p]

    lines = []
    for j0 in range(n_scales):
        for m in maxima[j0]:
            if m in has_child[j0]:
                continue
            points = []
            j, k = j0, m
            while True:
                points.append(ExtremumPoint(sg.time_of(k), j, float(W[j, k]), int(k)))
                if k not in parent[j]:
                    break
                k = parent[j][k]
                j += 1
            top = points[-1]
            lines.append(LomaLine(tuple(points), float(cum[top.scale_index][top.frame]), polarity))
    return lines


def maxima_lines(sg: Scalogram, max_distance: float = DEFAULT_MAX_DISTANCE,
                 both_sides: bool = False,
                 min_relative_amplitude: float = DEFAULT_MIN_RELATIVE_AMPLITUDE) -> list:
    return link_lines(sg, max_distance, both_sides, "peak", min_relative_amplitude)


def minima_lines(sg: Scalogram, max_distance: float = DEFAULT_MAX_DISTANCE,
                 both_sides: bool = False,
                 min_relative_amplitude: float = DEFAULT_MIN_RELATIVE_AMPLITUDE) -> list:
    """Lines of minimum amplitude: maxima lines of the negated scalogram."""
    return link_lines(sg.scaled(-1.0), max_distance, both_sides, "valley",
                      min_relative_amplitude)
