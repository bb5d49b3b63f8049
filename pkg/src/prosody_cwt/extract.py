"""A small acoustic front-end: log energy and autocorrelation f0.

Meant to make the command line usable on plain WAV files. It makes no
attempt at octave-error correction; for careful work feed externally
extracted tracks instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidInputError
from .signal import DEFAULT_FRAME_SHIFT, FrameSeries, VoicingMask

ENERGY_EPS = 1e-10


@dataclass(frozen=True)
class PitchRange:
    f_min: float
    f_max: float

    def __post_init__(self):
        if not 0 < self.f_min < self.f_max:
            raise InvalidInputError(f"bad pitch range {self.f_min}-{self.f_max} Hz")

    def check(self, sample_rate: float) -> None:
        if self.f_max >= sample_rate / 2:
            raise InvalidInputError(
                f"f_max {self.f_max} Hz is not below the Nyquist frequency {sample_rate / 2} Hz"
            )


MALE = PitchRange(70.0, 300.0)
FEMALE = PitchRange(120.0, 400.0)


def n_frames(n_samples: int, sample_rate: float, frame_shift: float = DEFAULT_FRAME_SHIFT) -> int:
    hop = _hop(sample_rate, frame_shift)
    return 1 + (n_samples - 1) // hop


def _hop(sample_rate, frame_shift):
    return max(1, int(round(frame_shift * sample_rate)))


def _frames(audio: np.ndarray, sample_rate: float, frame_shift: float, length: int) -> np.ndarray:
    """Zero-padded frames of ``length`` samples centred on every hop."""
    hop = _hop(sample_rate, frame_shift)
    count = 1 + (audio.size - 1) // hop
    left = length // 2
    right = (count - 1) * hop + length - left - audio.size
    padded = np.pad(audio, (left, max(right, 0)))
    return sliding_window_view(padded, length)[::hop][:count]


def _check_audio(audio):
    audio = np.asarray(audio, dtype=float).reshape(-1)
    if audio.size == 0:
        raise InvalidInputError("empty audio")
    if not np.all(np.isfinite(audio)):
        raise InvalidInputError("audio contains non-finite samples")
    return audio


def log_energy(
    audio,
    sample_rate: float,
    frame_shift: float = DEFAULT_FRAME_SHIFT,
    window: float = 0.025,
) -> FrameSeries:
    """Natural log of the Hann-windowed frame energy.

    Each frame gives ``log(sum((w * x) ** 2) + eps * W)`` with ``W`` the
    window length in samples, so digital silence maps to ``log(eps * W)``.
    """
    audio = _check_audio(audio)
    length = max(2, int(round(window * sample_rate)))
    w = np.hanning(length + 2)[1:-1]
    frames = _frames(audio, sample_rate, frame_shift, length)
    energy = np.sum((frames * w) ** 2, axis=1) + ENERGY_EPS * length
    return FrameSeries(np.log(energy), frame_shift)


def autocorr_f0(
    audio,
    sample_rate: float,
    pitch_range: PitchRange = MALE,
    frame_shift: float = DEFAULT_FRAME_SHIFT,
    window_periods: float = 3.0,
    min_window: float = 0.025,
    ac_threshold: float = 0.3,
    zcr_threshold: float = 0.25,
    energy_percentile: float = 10.0,
    energy_margin: float = math.log(2.0),
):
    """Frame-wise f0 from the normalized autocorrelation of Hann-windowed frames.

    A frame is voiced when the autocorrelation peak reaches
    ``ac_threshold``, the zero-crossing rate is below ``zcr_threshold``
    and its log energy is no more than ``energy_margin`` nats below the
    utterance's ``energy_percentile``-th percentile (digital silence never
    passes). Unvoiced frames get f0 = 0.

    Returns
    -------
    (FrameSeries, VoicingMask)
    """
    audio = _check_audio(audio)
    pitch_range.check(sample_rate)
    length = int(round(max(min_window, window_periods / pitch_range.f_min) * sample_rate))
    lag_min = max(1, int(math.floor(sample_rate / pitch_range.f_max)))
    lag_max = min(length - 2, int(math.ceil(sample_rate / pitch_range.f_min)))
    if lag_max <= lag_min + 1:
        raise InvalidInputError("analysis window too short for the pitch range")

    frames = _frames(audio, sample_rate, frame_shift, length)
    frames = frames - frames.mean(axis=1, keepdims=True)
    w = np.hanning(length + 2)[1:-1]
    xw = frames * w
    spec = np.fft.rfft(xw, n=2 * length, axis=1)
    ac = np.fft.irfft(np.abs(spec) ** 2, axis=1)[:, :length]
    r0 = ac[:, 0]
    silent = r0 <= 1e-12 * length
    norm = np.where(silent, 1.0, r0)
    r = ac / norm[:, None]
    r[silent] = 0.0

    seg = r[:, lag_min:lag_max + 1]
    best = np.argmax(seg, axis=1)
    peak = seg[np.arange(seg.shape[0]), best]
    lag = _refine_lag(r, best + lag_min, w, lag_min, lag_max)
    f0 = np.clip(sample_rate / lag, pitch_range.f_min, pitch_range.f_max)

    signs = np.signbit(frames)
    zcr = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1) / (length - 1)
    energy = np.log(r0 + ENERGY_EPS * length)
    gate = np.percentile(energy, energy_percentile) - energy_margin
    voiced = (peak >= ac_threshold) & (zcr < zcr_threshold) & (energy >= gate) & ~silent
    values = np.where(voiced, f0, 0.0)
    return FrameSeries(values, frame_shift), VoicingMask(voiced)


def _refine_lag(r, lag, window, lag_min, lag_max):
    """Sub-sample peak position on the window-corrected autocorrelation.

    The biased autocorrelation decays with lag, which pulls its peak
    towards shorter periods; dividing by the window's own autocorrelation
    removes that taper before interpolating.
    """
    length = window.size
    rw = np.correlate(window, window, mode="full")[length - 1:]
    corrected = r / (rw / rw[0])
    rows = np.arange(r.shape[0])
    radius = np.maximum(2, (0.05 * lag).astype(int))
    lo = np.maximum(lag - radius, lag_min)
    hi = np.minimum(lag + radius, lag_max)
    best = lag.copy()
    for d in range(-int(radius.max()), int(radius.max()) + 1):
        cand = np.clip(lag + d, lo, hi)
        better = corrected[rows, cand] > corrected[rows, best]
        best = np.where(better, cand, best)
    out = best.astype(float)
    inner = (best > lag_min) & (best < lag_max)
    i = rows[inner]
    a = corrected[i, best[inner] - 1]
    b = corrected[i, best[inner]]
    c = corrected[i, best[inner] + 1]
    denom = a - 2 * b + c
    safe = np.where(np.abs(denom) > 1e-12, denom, 1.0)
    shift = np.where(np.abs(denom) > 1e-12, 0.5 * (a - c) / safe, 0.0)
    out[inner] += np.clip(shift, -0.5, 0.5)
    return out


def extract_tracks(audio, sample_rate: float, config):
    """Energy and f0 tracks for one recording using ``config`` settings."""
    lo, hi = config.pitch_limits
    energy = log_energy(audio, sample_rate, config.frame_shift, config.energy_window)
    f0, voicing = autocorr_f0(
        audio, sample_rate, PitchRange(lo, hi), config.frame_shift,
        window_periods=config.f0_window_periods,
        min_window=config.energy_window,
        ac_threshold=config.ac_threshold,
        zcr_threshold=config.zcr_threshold,
        energy_percentile=config.energy_percentile,
        energy_margin=config.energy_margin,
    )
    return f0, voicing, energy
