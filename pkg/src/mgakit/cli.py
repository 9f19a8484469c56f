"""Command-line entry point for the whole pipeline.

Exit codes: 0 success, 1 validation findings of severity error,
2 usage or I/O errors.  All file writes are atomic (temp file in the
target directory, then rename), so a killed process never leaves a
half-written output behind.

Duration arguments accept "1500ms", "90s", "17m4s", or a bare integer
meaning milliseconds.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import assembly, container, metamodel, quality, timecode
from .errors import MgaError
from .render import (
    OUTPUT_BIT_DEPTHS,
    RangeOutOfBounds,
    RateMismatch,
    RenderConfig,
    load_sources,
    render,
)

DEFAULT_PORT = 8080

_DURATION_RE = re.compile(r"^(?:(\d+)ms|(\d+)s|(\d+)m(\d+)s|(\d+))$")

# Content and request problems exit 1; broken files, unusable inputs,
# and OS errors exit 2.
_VALIDATION_ERRORS = (
    metamodel.ValidationFailed,
    metamodel.SchemaViolation,
    metamodel.NonMonotonicMarkers,
    assembly.TargetTooShort,
    assembly.EmptyProject,
    assembly.StaleSelection,
    timecode.MalformedTimecode,
    timecode.MissingFrameRate,
    timecode.NegativeResult,
    timecode.FrameRateMismatch,
    container.DescriptionTooLong,
    container.FieldTooLong,
    container.NonAsciiText,
    RateMismatch,
    RangeOutOfBounds,
    quality.EmptyCollection,
    quality.EmptySpec,
    quality.InvalidElementSpec,
)

_MARKER_HINTS = {".csv": "csv", ".tsv": "tsv", ".txt": "txt"}

DEFAULT_QUALITY_SPEC = quality.ElementSpec(
    required=frozenset({"label", "loi"}),
    recommended=frozenset({"topics", "location", "timestamp"}),
)


def parse_duration(text: str) -> int:
    """Duration grammar -> milliseconds."""
    match = _DURATION_RE.match(text.strip())
    if match is None:
        raise argparse.ArgumentTypeError(
            f"cannot read duration {text!r} (use 1500ms, 90s, 17m4s, or bare ms)"
        )
    ms, seconds, minutes, rem_seconds, bare = match.groups()
    if ms is not None:
        return int(ms)
    if seconds is not None:
        return int(seconds) * 1000
    if minutes is not None:
        return (int(minutes) * 60 + int(rem_seconds)) * 1000
    return int(bare)


def parse_latlon(text: str) -> metamodel.GeoPoint:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LAT,LON, got {text!r}")
    try:
        return metamodel.GeoPoint(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_project(path: Path) -> metamodel.Project:
    """Accepts a project XML file or an audio file carrying project axml."""
    data = Path(path).read_bytes()
    if data[:4] in (b"RIFF", b"RF64", b"BW64"):
        file = container.parse_container(data, allow_truncated_data=True)
        project = metamodel.extract(file, strict=True)
        if project is None:
            raise metamodel.ForeignAxml(f"{path} carries no project metadata")
        return project
    return metamodel.from_xml(data.decode("utf-8"))


def _emit(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "output", None):
        atomic_write(Path(args.output), text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def cmd_inspect(args: argparse.Namespace) -> int:
    file = container.parse_container(
        Path(args.file).read_bytes(), allow_truncated_data=args.allow_truncated
    )
    info = file.audio_info
    print(f"format  {file.format_tag.value}")
    print(
        f"audio   {info.sample_rate} Hz, {info.channel_count} ch, "
        f"{info.bits_per_sample} bit, {info.frame_count} frames "
        f"({info.duration_ms} ms)"
    )
    print(f"{'offset':>10}  {'size':>12}  fourcc")
    offset = 12
    for chunk in file.chunks:
        print(f"{offset:>10}  {chunk.size:>12}  {chunk.fourcc}")
        offset += chunk.serialized_size()
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    project = metamodel.from_xml(Path(args.project).read_text("utf-8"))
    file = container.parse_container(Path(args.audio).read_bytes())
    out_path = Path(args.output) if args.output else Path(args.audio)
    atomic_write(out_path, container.write_container(metamodel.embed(project, file)))
    print(f"embedded {len(project.segments)} segment(s) into {out_path}", file=sys.stderr)
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    file = container.parse_container(Path(args.audio).read_bytes())
    project = metamodel.extract(file, strict=args.strict)
    if project is None:
        print(f"no project metadata in {args.audio}", file=sys.stderr)
        return 2
    _emit(args, metamodel.to_xml(project))
    return 0


def cmd_ingest_markers(args: argparse.Namespace) -> int:
    data = Path(args.markers).read_bytes()
    hint = _MARKER_HINTS.get(Path(args.markers).suffix.lower())
    markers = timecode.ingest_marker_file(data, hint)
    reference = args.ref if args.ref else markers[0].timecode_text
    segments = metamodel.segments_from_markers(
        markers,
        args.track_id,
        reference,
        args.fps,
        total_duration_ms=args.total,
        default_loi=args.default_loi,
    )
    project = metamodel.build_project(
        metamodel.Programme(id=args.programme_id, title=args.programme_title),
        [
            metamodel.Track(
                id=args.track_id, index=0, kind=args.track_kind, audio_ref=args.audio_ref
            )
        ],
        segments,
    )
    _emit(args, metamodel.to_xml(project))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        project = load_project(Path(args.project))
    except metamodel.SchemaViolation as exc:
        print(f"[error] {exc.code} {exc.path}: {exc}", file=sys.stderr)
        return 1
    spec = (
        quality.element_spec_from_xml(Path(args.spec).read_text("utf-8"))
        if args.spec
        else DEFAULT_QUALITY_SPEC
    )
    report = quality.validate_project(project, spec)
    sys.stdout.write(report.to_json() if args.json else report.to_text())
    return 1 if report.has_errors else 0


def cmd_assemble(args: argparse.Namespace) -> int:
    project = load_project(Path(args.project))
    selection = assembly.select_by_loi(project, args.target, args.allow_overflow)
    print(json.dumps(assembly.selection_to_dict(selection), indent=2))
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    project = load_project(Path(args.project))
    filtered = assembly.filter_regional(
        project,
        args.near,
        args.max_km,
        args.max_age / 1000 if args.max_age is not None else float("inf"),
        now=datetime.now(timezone.utc),
        keep_unlocated=args.keep_unlocated,
    )
    _emit(args, metamodel.to_xml(filtered))
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    project = load_project(Path(args.project))
    selection = assembly.select_by_loi(project, args.target, args.allow_overflow)
    edl = assembly.to_edl(selection, project, args.crossfade)
    sources = load_sources(project, Path(args.audio_dir))
    config = RenderConfig(crossfade_ms=args.crossfade, output_bits=args.bits)
    out_file = render(edl, sources, config, project)
    atomic_write(Path(args.output), container.write_container(out_file))
    print(
        json.dumps(
            {
                "output": str(args.output),
                "frames": out_file.audio_info.frame_count,
                "duration_ms": out_file.audio_info.duration_ms,
                "included": selection.included,
            },
            indent=2,
        )
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    project_path = Path(args.project)
    project = load_project(project_path)
    audio_dir = Path(args.audio_dir) if args.audio_dir else None
    if audio_dir is not None and not audio_dir.is_dir():
        raise FileNotFoundError(f"audio directory {audio_dir} is not readable")
    spec = (
        quality.element_spec_from_xml(Path(args.spec).read_text("utf-8"))
        if args.spec
        else DEFAULT_QUALITY_SPEC
    )
    app = create_app(project, audio_dir, project_path=project_path, quality_spec=spec)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgakit",
        description="Metadata-guided audio toolkit: containers, segment metadata, "
        "quality reports, variable-length assembly, rendering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="list the chunks of an audio file")
    p.add_argument("file")
    p.add_argument("--allow-truncated", action="store_true",
                   help="tolerate a data chunk shorter than declared")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("embed", help="write project XML into an audio file's axml")
    p.add_argument("project")
    p.add_argument("audio")
    p.add_argument("-o", "--output", help="default: rewrite the audio file in place")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="read project XML back out of an audio file")
    p.add_argument("audio")
    p.add_argument("-o", "--output", help="default: stdout")
    p.add_argument("--strict", action="store_true",
                   help="error when axml holds a foreign vocabulary")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("ingest-markers", help="turn a DAW marker export into a project")
    p.add_argument("markers", help="CSV, TSV, or TXT marker file")
    p.add_argument("--ref", help="reference timecode (default: first marker)")
    p.add_argument("--fps", type=int, default=timecode.DEFAULT_FRAME_RATE,
                   help="frame rate for HH:MM:SS:FF timecodes (default %(default)s)")
    p.add_argument("--total", type=parse_duration, required=True,
                   help="total content duration (closes the last segment)")
    p.add_argument("--track-id", default="voice")
    p.add_argument("--track-kind", default="dialogue", choices=sorted(metamodel.TRACK_KINDS))
    p.add_argument("--audio-ref", help="audio file name recorded on the track")
    p.add_argument("--programme-id", default="programme")
    p.add_argument("--programme-title", default="")
    p.add_argument("--default-loi", type=int, default=1)
    p.add_argument("-o", "--output", help="default: stdout")
    p.set_defaults(func=cmd_ingest_markers)

    p = sub.add_parser("validate", help="score project metadata quality")
    p.add_argument("project", help="project XML or audio file with embedded project")
    p.add_argument("--spec", help="ElementSpec XML (default: built-in spec)")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("assemble", help="variable-length selection by LOI")
    p.add_argument("project")
    p.add_argument("--target", type=parse_duration, required=True)
    p.add_argument("--allow-overflow", action="store_true",
                   help="accept the full mandatory stratum over target")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("filter", help="keep segments near a place and recent enough")
    p.add_argument("project")
    p.add_argument("--near", type=parse_latlon, required=True, metavar="LAT,LON")
    p.add_argument("--max-km", type=float, default=float("inf"))
    p.add_argument("--max-age", type=parse_duration, default=None,
                   help="maximum age as a duration (default: unlimited)")
    p.add_argument("--keep-unlocated", action="store_true")
    p.add_argument("-o", "--output", help="default: stdout")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("render", help="assemble and render to a single audio file")
    p.add_argument("project")
    p.add_argument("--target", type=parse_duration, required=True)
    p.add_argument("--allow-overflow", action="store_true")
    p.add_argument("--crossfade", type=int, default=10, metavar="MS")
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--bits", type=int, default=16, choices=OUTPUT_BIT_DEPTHS)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", help="run the preview HTTP service")
    p.add_argument("project")
    p.add_argument("--audio-dir")
    p.add_argument("--spec", help="ElementSpec XML used by /api/quality")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MgaError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, _VALIDATION_ERRORS) else 2
    except OSError as exc:
        print(f"error [IO]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
