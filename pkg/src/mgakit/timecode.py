"""Timecode parsing, normalization, and marker-file ingestion.

Marker exports mix plain clock times (H:MM:SS or HH:MM:SS) with
frame-accurate timecodes (HH:MM:SS:FF).  Both kinds are mapped onto a
single millisecond axis relative to a reference timecode, typically the
programme start, so a segment list can be built from either notation.

Milliseconds are the canonical unit throughout the toolkit; sample
rates enter only at the rendering edge.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .errors import MgaError

DEFAULT_FRAME_RATE = 25

_TIMECODE_RE = re.compile(
    r"^(?P<h>\d{1,2}):(?P<m>\d{2}):(?P<s>\d{2})(?::(?P<f>\d{2}))?$"
)

_ZIP_MAGIC = b"PK\x03\x04"
_OLE_MAGIC = b"\xd0\xcf\x11\xe0"


class TimecodeError(MgaError):
    pass


class MalformedTimecode(TimecodeError):
    pass


class MissingFrameRate(TimecodeError):
    pass


class NegativeResult(TimecodeError):
    pass


class FrameRateMismatch(TimecodeError):
    pass


class UnsupportedFormat(TimecodeError):
    pass


class EmptyFile(TimecodeError):
    pass


@dataclass(frozen=True)
class Timecode:
    hours: int
    minutes: int
    seconds: int
    frames: int | None = None
    frame_rate: int | None = None

    def __post_init__(self) -> None:
        if min(self.hours, self.minutes, self.seconds) < 0:
            raise MalformedTimecode("timecode fields must be non-negative")
        if self.minutes > 59 or self.seconds > 59:
            raise MalformedTimecode("minutes and seconds must stay below 60")
        if self.frames is not None:
            if self.frame_rate is None:
                raise MissingFrameRate("a frames field needs a frame rate")
            if not 0 <= self.frames < self.frame_rate:
                raise MalformedTimecode(
                    f"frame field {self.frames} does not exist at {self.frame_rate} fps"
                )

    def __str__(self) -> str:
        base = f"{self.hours:02d}:{self.minutes:02d}:{self.seconds:02d}"
        if self.frames is None:
            return base
        return f"{base}:{self.frames:02d}"


@dataclass(frozen=True)
class RawMarker:
    label: str
    timecode_text: str
    line_number: int


def parse_timecode(text: str, default_frame_rate: int | None = None) -> Timecode:
    """Parse H:MM:SS, HH:MM:SS, or HH:MM:SS:FF, tolerating whitespace.

    Four-field forms need a frame rate; default_frame_rate supplies one
    only when the caller opts in, otherwise MissingFrameRate is raised.
    There is no silent fallback.
    """
    match = _TIMECODE_RE.match(text.strip())
    if match is None:
        raise MalformedTimecode(f"unrecognized timecode {text!r}")
    frames = match.group("f")
    if frames is None:
        return Timecode(int(match.group("h")), int(match.group("m")), int(match.group("s")))
    if default_frame_rate is None:
        raise MissingFrameRate(
            f"{text.strip()!r} carries a frames field but no frame rate is known"
        )
    return Timecode(
        int(match.group("h")),
        int(match.group("m")),
        int(match.group("s")),
        int(frames),
        default_frame_rate,
    )


def absolute_ms(tc: Timecode) -> int:
    """Milliseconds since 00:00:00(:00); frames rounded to nearest ms."""
    ms = ((tc.hours * 60 + tc.minutes) * 60 + tc.seconds) * 1000
    if tc.frames is not None:
        ms += round(tc.frames * 1000 / tc.frame_rate)
    return ms


def normalize(tc: Timecode, reference: Timecode) -> int:
    """Milliseconds from `reference` to `tc` on the shared absolute axis.

    Clock times and frame timecodes mix freely; when both sides carry
    frames their rates must agree.  A position before the reference is
    an error, content time is unsigned.
    """
    if (
        tc.frame_rate is not None
        and reference.frame_rate is not None
        and tc.frame_rate != reference.frame_rate
    ):
        raise FrameRateMismatch(
            f"cannot mix {tc.frame_rate} fps and {reference.frame_rate} fps timecodes"
        )
    delta = absolute_ms(tc) - absolute_ms(reference)
    if delta < 0:
        raise NegativeResult(f"{tc} lies before the reference {reference}")
    return delta


def _looks_like_timecode(text: str) -> bool:
    match = _TIMECODE_RE.match(text.strip())
    if match is None:
        return False
    return int(match.group("m")) < 60 and int(match.group("s")) < 60


def ingest_marker_file(data: bytes, format_hint: str | None = None) -> list[RawMarker]:
    """Read DAW marker exports into RawMarker records, order-preserving.

    CSV and TSV files carry label then timecode per row; a header row is
    detected (second cell is no timecode) and skipped.  Plain text files
    carry the timecode as the first whitespace token, rest is the label.
    Office formats are rejected outright rather than half-parsed.
    """
    if data.startswith(_ZIP_MAGIC):
        raise UnsupportedFormat("xlsx/docx not supported; export markers as CSV or TXT")
    if data.startswith(_OLE_MAGIC):
        raise UnsupportedFormat("xls/doc not supported; export markers as CSV or TXT")
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError:
        raise UnsupportedFormat("marker file is not UTF-8 text") from None
    numbered = [
        (i, line.strip()) for i, line in enumerate(text.splitlines(), start=1)
    ]
    numbered = [(i, line) for i, line in numbered if line]
    if not numbered:
        raise EmptyFile("marker file contains no lines")

    fmt = format_hint or _sniff_format([line for _, line in numbered])
    if fmt == "txt":
        markers = []
        for i, line in numbered:
            parts = line.split(None, 1)
            markers.append(RawMarker(parts[1] if len(parts) > 1 else "", parts[0], i))
        return markers
    if fmt not in ("csv", "tsv"):
        raise UnsupportedFormat(f"unknown marker format {fmt!r}")

    delimiter = "," if fmt == "csv" else "\t"
    markers = []
    for i, line in numbered:
        cells = next(csv.reader(io.StringIO(line), delimiter=delimiter))
        if len(cells) < 2 or not cells[1].strip():
            raise MalformedTimecode(f"line {i}: expected label{delimiter}timecode")
        markers.append(RawMarker(cells[0].strip(), cells[1].strip(), i))
    if markers and not _looks_like_timecode(markers[0].timecode_text):
        markers = markers[1:]  # header row
        if not markers:
            raise EmptyFile("marker file contains only a header row")
    return markers


def _sniff_format(lines: list[str]) -> str:
    # Delimited only counts when some second cell is a timecode; a lone
    # tab-separated "HH:MM:SS:FF<tab>label" line is timecode-first text.
    for delimiter, name in (("\t", "tsv"), (",", "csv")):
        if any(delimiter in line for line in lines):
            for line in lines:
                cells = line.split(delimiter)
                if len(cells) > 1 and _looks_like_timecode(cells[1]):
                    return name
            if any(_looks_like_timecode(line.split(None, 1)[0]) for line in lines):
                return "txt"
            return name
    return "txt"
