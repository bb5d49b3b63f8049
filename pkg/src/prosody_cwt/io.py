"""Readers and writers for the plain-text track, alignment and label formats.

Track files
    One value per line (frame shift taken from the caller), or two
    whitespace-separated columns ``time value``.
Alignment files
    ``start<TAB>end<TAB>label<TAB>kind`` with kind in word/pause/breath.
    Whitespace-separated rows are accepted when the label has no spaces.
Reference labels
    ``word_index<TAB>prominent<TAB>boundary_after`` with 0/1 flags.
Annotation output
    ``word_index<TAB>label<TAB>prominence<TAB>boundary<TAB>prom_binary<TAB>bound_binary``

Lines starting with ``#`` and blank lines are ignored by every reader.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidInputError, ParseError, ValidationError
from .signal import (
    DEFAULT_FRAME_SHIFT,
    WORD_KINDS,
    AlignmentEntry,
    FrameSeries,
    ReferenceLabels,
    VoicingMask,
    WordAlignment,
)

PROSODY_HEADER = "# word_index\tlabel\tprominence\tboundary\tprom_binary\tbound_binary"


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def _float(path, lineno, text, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, lineno, f"cannot parse {what} {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, lineno, f"non-finite {what} {text!r}")
    return value


def _flag(path, lineno, text, what):
    if text not in ("0", "1"):
        raise ParseError(path, lineno, f"{what} must be 0 or 1, got {text!r}")
    return text == "1"


def read_track(path, format: str = "auto", frame_shift: float = DEFAULT_FRAME_SHIFT) -> FrameSeries:
    """Read a one- or two-column track file.

    ``format`` is ``"values"``, ``"timed"`` or ``"auto"`` (decided by the
    column count of the first data line). For timed tracks the frame shift
    and start time come from the time column, which must be uniform.
    """
    if format not in ("auto", "values", "timed"):
        raise InvalidInputError(f"unknown track format {format!r}")
    times, values = [], []
    for lineno, line in _data_lines(path):
        cols = line.split()
        if format == "auto":
            format = "values" if len(cols) == 1 else "timed"
        want = 1 if format == "values" else 2
        if len(cols) != want:
            raise ParseError(path, lineno, f"expected {want} column(s), got {len(cols)}")
        if want == 2:
            times.append(_float(path, lineno, cols[0], "time"))
        values.append(_float(path, lineno, cols[-1], "value"))
    if not values:
        raise ParseError(path, 0, "track file has no data")
    if format == "values":
        return FrameSeries(values, frame_shift)
    if len(times) == 1:
        return FrameSeries(values, frame_shift, times[0])
    steps = np.diff(times)
    shift = float(np.median(steps))
    if shift <= 0 or np.max(np.abs(steps - shift)) > 1e-4 + 1e-3 * shift:
        raise ParseError(path, 0, "time column is not uniformly spaced")
    return FrameSeries(values, shift, times[0])


def read_f0_track(path, format: str = "auto", frame_shift: float = DEFAULT_FRAME_SHIFT):
    """Read an f0 track; zero (or negative) values mark unvoiced frames.

    Returns ``(f0, voicing)``; unvoiced frames are set to exactly 0.
    """
    f0 = read_track(path, format, frame_shift)
    mask = VoicingMask.from_f0(f0)
    return f0.with_values(np.where(mask.flags, f0.values, 0.0)), mask


def write_track(path, series: FrameSeries, timed: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t, v in zip(series.times, series.values):
            if timed:
                fh.write(f"{float(t)!r}\t{float(v)!r}\n")
            else:
                fh.write(f"{float(v)!r}\n")


def read_alignment(path) -> WordAlignment:
    entries = []
    for lineno, line in _data_lines(path):
        if "\t" in line:
            cols = line.split("\t")
        else:
            cols = line.split()
        if len(cols) == 3:
            cols.append("word")
        if len(cols) != 4:
            raise ParseError(path, lineno, "expected start, end, label, kind")
        start = _float(path, lineno, cols[0], "start")
        end = _float(path, lineno, cols[1], "end")
        kind = cols[3].strip().lower()
        if kind not in WORD_KINDS:
            raise ParseError(path, lineno, f"unknown kind {cols[3]!r}")
        entries.append(AlignmentEntry(cols[2], start, end, kind))
    if not entries:
        raise ParseError(path, 0, "alignment file has no entries")
    try:
        return WordAlignment(tuple(entries))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_alignment(path, alignment: WordAlignment) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in alignment.entries:
            fh.write(f"{float(e.start)!r}\t{float(e.end)!r}\t{e.label}\t{e.kind}\n")


def read_refs(path) -> ReferenceLabels:
    rows = []
    for lineno, line in _data_lines(path):
        cols = line.split()
        if len(cols) != 3:
            raise ParseError(path, lineno, "expected word_index, prominent, boundary_after")
        try:
            index = int(cols[0])
        except ValueError:
            raise ParseError(path, lineno, f"bad word index {cols[0]!r}") from None
        rows.append((index, _flag(path, lineno, cols[1], "prominent"),
                     _flag(path, lineno, cols[2], "boundary_after"), lineno))
    if not rows:
        raise ParseError(path, 0, "reference file has no rows")
    rows.sort()
    base = rows[0][0]
    if base not in (0, 1):
        raise ParseError(path, rows[0][3], "word indices must start at 0 or 1")
    for expected, (index, _, _, lineno) in enumerate(rows, start=base):
        if index != expected:
            raise ParseError(path, lineno, f"word index {index} out of sequence")
    return ReferenceLabels(tuple(r[1] for r in rows), tuple(r[2] for r in rows))


def write_refs(path, refs: ReferenceLabels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, (p, b) in enumerate(zip(refs.prominent, refs.boundary_after)):
            fh.write(f"{i}\t{int(p)}\t{int(b)}\n")


@dataclass(frozen=True)
class ProsodyRecord:
    """One row of the annotation output."""

    word_index: int
    label: str
    prominence: float
    boundary: float
    prom_binary: bool
    bound_binary: bool


def format_word_prosody(records: Iterable) -> str:
    """Serialize records (``ProsodyRecord`` or anything with the same fields)."""
    lines = [PROSODY_HEADER]
    for r in records:
        if "\t" in r.label or "\n" in r.label:
            raise InvalidInputError(f"label {r.label!r} contains a tab or newline")
        lines.append(
            f"{r.word_index}\t{r.label}\t{r.prominence:.6f}\t{r.boundary:.6f}"
            f"\t{int(bool(r.prom_binary))}\t{int(bool(r.bound_binary))}"
        )
    return "\n".join(lines) + "\n"


def write_word_prosody(path, records: Iterable) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_word_prosody(records))


def read_word_prosody(path) -> list:
    records = []
    for lineno, line in _data_lines(path):
        cols = line.split("\t")
        if len(cols) != 6:
            raise ParseError(path, lineno, f"expected 6 columns, got {len(cols)}")
        try:
            index = int(cols[0])
        except ValueError:
            raise ParseError(path, lineno, f"bad word index {cols[0]!r}") from None
        records.append(ProsodyRecord(
            index,
            cols[1],
            _float(path, lineno, cols[2], "prominence"),
            _float(path, lineno, cols[3], "boundary"),
            _flag(path, lineno, cols[4], "prom_binary"),
            _flag(path, lineno, cols[5], "bound_binary"),
        ))
    return records


def read_wav(path):
    """Read 16-bit mono PCM. Returns ``(samples in [-1, 1), sample_rate)``."""
    with wave.open(str(path), "rb") as wf:
        if wf.getsampwidth() != 2:
            raise InvalidInputError(f"{path}: only 16-bit PCM is supported")
        if wf.getnchannels() != 1:
            raise InvalidInputError(f"{path}: only mono audio is supported")
        rate = wf.getframerate()
        data = wf.readframes(wf.getnframes())
    return np.frombuffer(data, dtype="<i2").astype(float) / 32768.0, rate


def write_wav(path, samples, sample_rate: int) -> None:
    pcm = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate))
        wf.writeframes(pcm.tobytes())


def write_scalogram(path, scalogram) -> None:
    """TSV dump: header line with the scales, then one row per scale."""
    scales = " ".join(f"{s:.6g}" for s in scalogram.grid.scales)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# scales: {scales}; frame_shift: {scalogram.frame_shift:g}\n")
        for row in scalogram.coeffs:
            fh.write("\t".join(f"{v:.9g}" for v in row) + "\n")


def read_scalogram_dump(path):
    """Inverse of :func:`write_scalogram`: ``(scales, frame_shift, coeffs)``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("# scales:"):
            raise ParseError(path, 1, "missing scalogram header")
        scale_part, shift_part = header[len("# scales:"):].split(";")
        scales = np.array([float(x) for x in scale_part.split()])
        frame_shift = float(shift_part.split(":")[1])
        coeffs = np.array([[float(x) for x in line.split("\t")] for line in fh if line.strip()])
    return scales, frame_shift, coeffs


def write_lines(path, lines) -> None:
    """Line dump: ``line_id polarity strength k time amplitude`` per point."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# line_id\tpolarity\tstrength\tk\ttime\tamplitude\n")
        for line_id, line in enumerate(lines):
            for p in line.points:
                fh.write(
                    f"{line_id}\t{line.polarity}\t{line.strength:.9g}\t{p.scale_index}"
                    f"\t{p.time:.6f}\t{p.amplitude:.9g}\n"
                )


def resolve(base: Optional[Path], path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p
