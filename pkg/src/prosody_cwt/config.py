"""Run configuration: a flat ``key=value`` file with dotted keys.

Every tunable parameter of the toolkit lives here. ``defaults.conf``
next to this module lists them all with their default values.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from typing import Optional

from .errors import InvalidInputError, ParseError

PITCH_PRESETS = {"male": (70.0, 300.0), "female": (120.0, 400.0)}
FEATURES = ("f0", "en", "dur")


def _key(name, **kw):
    return field(metadata={"key": name}, **kw)


@dataclass(frozen=True)
class Config:
    frame_shift: float = _key("frame_shift", default=0.005)

    # extraction
    pitch_range: str = _key("extract.pitch_range", default="male")
    energy_window: float = _key("extract.energy_window", default=0.025)
    f0_window_periods: float = _key("extract.f0_window_periods", default=3.0)
    ac_threshold: float = _key("extract.voicing.ac_threshold", default=0.3)
    zcr_threshold: float = _key("extract.voicing.zcr_threshold", default=0.25)
    energy_percentile: float = _key("extract.voicing.energy_percentile", default=10.0)
    energy_margin: float = _key("extract.voicing.energy_margin", default=math.log(2.0))

    # gap filling
    w_min: float = _key("w_min", default=1.0)
    gain_w_max: float = _key("gain.w_max", default=0.100)
    gain_n: int = _key("gain.n", default=100)
    f0_w_max: float = _key("f0.w_max", default=0.100)
    f0_n: int = _key("f0.n", default=200)
    f0_final_w_max: float = _key("f0.final.w_max", default=0.025)
    f0_final_n: int = _key("f0.final.n", default=50)
    f0_unvoiced_fallback: float = _key("f0.unvoiced_fallback", default=1.0)

    # wavelet analysis
    scale_ratio: float = _key("cwt.ratio", default=math.sqrt(2.0))
    octaves: int = _key("cwt.octaves", default=3)
    scales_per_octave: int = _key("cwt.scales_per_octave", default=2)
    loma_max_distance: float = _key("loma.max_distance", default=0.200)
    loma_both_sides: bool = _key("loma.both_sides", default=False)

    # annotation
    features: tuple = _key("annotate.features", default=FEATURES)
    gap_fill_energy: bool = _key("annotate.gap_fill_energy", default=True)
    scale_estimation: str = _key("annotate.scale_estimation", default="utterance")
    paragraph_separator: str = _key("annotate.paragraph_separator", default="_")
    wrap_final_boundary: bool = _key("annotate.wrap_final_boundary", default=True)

    # binarization / evaluation
    binarize: str = _key("binarize.mode", default="threshold")
    calib_fraction: float = _key("binarize.calib_fraction", default=0.1)
    calib_selection: str = _key("binarize.calib_selection", default="first")
    calib_seed: int = _key("binarize.seed", default=0)
    max_failure_fraction: float = _key("corpus.max_failure_fraction", default=0.1)

    def __post_init__(self):
        if self.frame_shift <= 0:
            raise InvalidInputError("frame_shift must be positive")
        feats = self.features
        if isinstance(feats, str):
            feats = tuple(f.strip() for f in feats.split(",") if f.strip())
        feats = tuple(feats)
        if not feats or any(f not in FEATURES for f in feats):
            raise InvalidInputError(f"features must be a non-empty subset of {FEATURES}")
        object.__setattr__(self, "features", tuple(f for f in FEATURES if f in feats))
        if self.binarize not in ("threshold", "kmeans"):
            raise InvalidInputError(f"unknown binarize mode {self.binarize!r}")
        if self.scale_estimation not in ("utterance", "paragraph"):
            raise InvalidInputError(f"unknown scale estimation {self.scale_estimation!r}")
        if self.calib_selection not in ("first", "random"):
            raise InvalidInputError(f"unknown calibration selection {self.calib_selection!r}")
        if not 0 < self.calib_fraction <= 1:
            raise InvalidInputError("calib_fraction must be in (0, 1]")
        self.pitch_limits  # validates

    @property
    def pitch_limits(self) -> tuple:
        return parse_pitch_range(self.pitch_range)

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.metadata['key']}={value}")
        return "\n".join(lines) + "\n"


def parse_pitch_range(text: str) -> tuple:
    """``male``, ``female`` or ``<min>:<max>`` in Hz."""
    if text in PITCH_PRESETS:
        return PITCH_PRESETS[text]
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise InvalidInputError(f"bad pitch range {text!r}") from None
    if not 0 < lo < hi:
        raise InvalidInputError(f"bad pitch range {text!r}")
    return lo, hi


_BY_KEY = {f.metadata["key"]: f for f in fields(Config)}


def _coerce(f, text):
    default = f.default
    if isinstance(default, bool):
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(x.strip() for x in text.split(",") if x.strip())
    return text.strip()


def parse_config(text: str, base: Optional[Config] = None, source: str = "<config>") -> Config:
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(source, lineno, "expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _BY_KEY:
            raise ParseError(source, lineno, f"unknown key {key!r}")
        f = _BY_KEY[key]
        try:
            changes[f.name] = _coerce(f, value)
        except ValueError as exc:
            raise ParseError(source, lineno, str(exc)) from None
    return dataclasses.replace(base or Config(), **changes)


def load_config(path=None) -> Config:
    if path is None:
        return Config()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def defaults_text() -> str:
    return resources.files(__package__).joinpath("defaults.conf").read_text(encoding="utf-8")
