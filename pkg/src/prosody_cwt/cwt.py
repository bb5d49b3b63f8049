"""Mexican hat continuous wavelet transform on a geometric scale grid."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .signal import FrameSeries

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
# the wavelet is evaluated on [-3.5, 3.5] (in units of the scale)
SUPPORT_HALF_WIDTH = 3.5
SUPPORT_WARNING = (
    "coarsest wavelet support exceeds 4x the signal length; "
    "the coarse scales mostly see the periodic continuation"
)
_PSI_NORM = 2.0 / (math.sqrt(3.0) * math.pi ** 0.25)


def mexican_hat(t):
    """Mexican hat (negated, normalized second derivative of a Gaussian)."""
    t = np.asarray(t, dtype=float)
    t2 = t * t
    return _PSI_NORM * (1.0 - t2) * np.exp(-0.5 * t2)


@dataclass(frozen=True)
class ScaleGrid:
    """Scales ``a0 * ratio**j`` for ``j = 0 .. n_scales - 1`` (seconds)."""

    a0: float
    n_scales: int
    ratio: float = SQRT2

    def __post_init__(self):
        if not self.a0 > 0:
            raise InvalidInputError("finest scale must be positive")
        if self.n_scales < 1:
            raise InvalidInputError("scale grid needs at least one scale")
        if not self.ratio > 1:
            raise InvalidInputError("scale ratio must exceed 1")

    @classmethod
    def octaves(cls, a0: float, octaves: int = 3, per_octave: int = 2) -> "ScaleGrid":
        """Grid from ``a0`` to ``a0 * 2**octaves`` inclusive."""
        return cls(a0, octaves * per_octave + 1, 2.0 ** (1.0 / per_octave))

    @property
    def scales(self) -> np.ndarray:
        return self.a0 * self.ratio ** np.arange(self.n_scales)

    @property
    def weights(self) -> np.ndarray:
        """Reconstruction weights ``ratio ** (-j / 2)``."""
        return self.ratio ** (-0.5 * np.arange(self.n_scales))


@dataclass(frozen=True, eq=False)
class Scalogram:
    coeffs: np.ndarray
    grid: ScaleGrid
    frame_shift: float
    start_time: float = 0.0

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != self.grid.n_scales:
            raise InvalidInputError("scalogram rows must match the scale grid")
        if not np.all(np.isfinite(coeffs)):
            raise InvalidInputError("scalogram has non-finite coefficients")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_frames(self) -> int:
        return self.coeffs.shape[1]

    def time_of(self, frame: int) -> float:
        return self.start_time + frame * self.frame_shift

    def scaled(self, factor: float) -> "Scalogram":
        return Scalogram(self.coeffs * factor, self.grid, self.frame_shift, self.start_time)


def wavelet_kernel(scale: float, frame_shift: float) -> np.ndarray:
    """Discrete filter for one scale, centred, length ``2 * half + 1``.

    Samples ``scale**-1/2 * psi(n * dt / scale) * dt`` on the truncated
    support, then removes the residual mean so the filter sums to zero
    (truncation alone leaves about 1.5 % of the lobe mass).
    """
    half = int(math.floor(SUPPORT_HALF_WIDTH * scale / frame_shift))
    n = np.arange(-half, half + 1, dtype=float)
    h = mexican_hat(n * frame_shift / scale) * frame_shift / math.sqrt(scale)
    return h - h.mean()


def _periodic_correlate(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    half = (h.size - 1) // 2
    idx = np.arange(-half, x.size + half) % x.size
    return np.correlate(x[idx], h, mode="valid")


def transform(s: FrameSeries, grid: ScaleGrid) -> Scalogram:
    """CWT with the signal continued periodically beyond both ends.

    ``coeffs[j, k] = sum_m s[m] * h_j[m - k]`` with ``h_j`` from
    :func:`wavelet_kernel` and indices taken modulo the signal length.
    """
    x = np.asarray(s.values, dtype=float)
    if x.size < 2:
        raise InvalidInputError("transform needs at least two frames")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("transform input has non-finite values")
    coarsest = 2 * SUPPORT_HALF_WIDTH * grid.scales[-1] / s.frame_shift
    if coarsest > 4 * x.size:
        # fixed text so the default warnings filter reports it once
        warnings.warn(SUPPORT_WARNING, RuntimeWarning, stacklevel=2)
        log.debug("coarsest support %d frames, signal %d frames", coarsest, x.size)
    rows = [_periodic_correlate(x, wavelet_kernel(sc, s.frame_shift)) for sc in grid.scales]
    return Scalogram(np.vstack(rows), grid, s.frame_shift, s.start_time)


def reconstruct(sg: Scalogram, c: float) -> FrameSeries:
    """Approximate inverse: ``c * sum_j ratio**(-j/2) * coeffs[j]``."""
    if not math.isfinite(c):
        raise InvalidInputError("reconstruction constant must be finite")
    values = c * (sg.grid.weights @ sg.coeffs)
    return FrameSeries(values, sg.frame_shift, sg.start_time)


def fit_c(original: FrameSeries, sg: Scalogram) -> float:
    """Least-squares reconstruction constant for ``original``."""
    if len(original) != sg.n_frames:
        raise InvalidInputError("signal and scalogram lengths differ")
    unit = sg.grid.weights @ sg.coeffs
    energy = float(unit @ unit)
    if energy == 0.0:
        log.warning("reconstruction has zero energy; using c = 0")
        return 0.0
    return float(np.asarray(original.values) @ unit) / energy
