"""Three-tier programme/track/segment metadata model.

The model mirrors how broadcast material is actually described: formal
metadata about the whole programme, structural metadata per track, and
descriptive metadata per time segment (importance, topics, location,
origin time).  It serializes to a small namespaced XML vocabulary,
"mgaProject v1", which travels inside the container's axml chunk.

Segments are held in one flat list with a track_ref, not nested under
tracks, so cross-track operations (assembly, filtering) iterate a
single list.

Foreign-namespace elements and attributes found in project XML are kept
as opaque canonical strings and written back on serialization, so
embedding this vocabulary never destroys somebody else's.
"""

from __future__ import annotations

import copy
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from . import container
from .errors import MgaError
from .timecode import RawMarker, Timecode, normalize, parse_timecode

XML_NAMESPACE = "urn:mga:project:1"
XML_VERSION = "1"

TRACK_KINDS = frozenset({"dialogue", "music", "ambience", "effects", "other"})
FORMAL_CATEGORIES = frozenset({"descriptive", "administrative", "structural"})

_FORMAL_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_LOI_SUFFIX_RE = re.compile(r"\s*#L(\d+)\s*$")

ET.register_namespace("mga", XML_NAMESPACE)


class MetamodelError(MgaError):
    pass


@dataclass(frozen=True)
class Finding:
    code: str
    path: str
    message: str


class ValidationFailed(MetamodelError):
    """Carries every invariant violation found, not just the first."""

    def __init__(self, findings: list[Finding]):
        super().__init__(
            "; ".join(f"{f.code} at {f.path}: {f.message}" for f in findings)
        )
        self.findings = findings


class SchemaViolation(MetamodelError):
    def __init__(self, message: str, *, path: str = "", code: str = "SCHEMA"):
        super().__init__(message)
        self.path = path
        self._code = code

    @property
    def code(self) -> str:
        return self._code


class ForeignAxml(MetamodelError):
    pass


class NonMonotonicMarkers(MetamodelError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates ({self.lat}, {self.lon}) out of range")


@dataclass
class Programme:
    id: str
    title: str = ""
    description: str | None = None
    language: str | None = None
    formal: dict[str, str] = field(default_factory=dict)
    categories: dict[str, str] = field(default_factory=dict)
    extensions: tuple[str, ...] = ()
    foreign_attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class Track:
    id: str
    index: int
    kind: str = "other"
    language: str | None = None
    audio_ref: str | None = None
    extensions: tuple[str, ...] = ()
    foreign_attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class Segment:
    id: str
    track_ref: str
    start_ms: int
    duration_ms: int
    label: str = ""
    loi: int = 1
    topics: set[str] = field(default_factory=set)
    location: GeoPoint | None = None
    timestamp: datetime | None = None
    extensions: tuple[str, ...] = ()
    foreign_attrs: dict[str, str] = field(default_factory=dict)

    @property
    def end_ms(self) -> int:
        return self.start_ms + self.duration_ms


@dataclass
class Project:
    programme: Programme
    tracks: list[Track]
    segments: list[Segment]
    extensions: tuple[str, ...] = ()
    foreign_attrs: dict[str, str] = field(default_factory=dict)

    def track_by_id(self, track_id: str) -> Track | None:
        for t in self.tracks:
            if t.id == track_id:
                return t
        return None

    def segment_by_id(self, segment_id: str) -> Segment | None:
        for s in self.segments:
            if s.id == segment_id:
                return s
        return None


def build_project(
    programme: Programme, tracks: list[Track], segments: list[Segment]
) -> Project:
    """Assemble and validate a Project; reports every violation at once."""
    findings = collect_findings(programme, tracks, segments)
    if findings:
        raise ValidationFailed(findings)
    return Project(programme, list(tracks), list(segments))


def collect_findings(
    programme: Programme, tracks: list[Track], segments: list[Segment]
) -> list[Finding]:
    findings: list[Finding] = []

    def bad(code: str, path: str, message: str) -> None:
        findings.append(Finding(code, path, message))

    if not programme.id:
        bad("EMPTY_ID", "/mgaProject/programme/@id", "programme id must be non-empty")
    for key in programme.formal:
        if not _FORMAL_KEY_RE.match(key):
            bad(
                "BAD_FORMAL_KEY",
                f"/mgaProject/programme/formal[@key={key!r}]",
                "formal keys must be lowercase ASCII identifiers",
            )
    for key, category in programme.categories.items():
        if key not in programme.formal:
            bad(
                "BAD_CATEGORY",
                f"/mgaProject/programme/formal[@key={key!r}]",
                "category annotates a key that has no formal entry",
            )
        if category not in FORMAL_CATEGORIES:
            bad(
                "BAD_CATEGORY",
                f"/mgaProject/programme/formal[@key={key!r}]/@category",
                f"unknown category {category!r}",
            )

    seen_track_ids: set[str] = set()
    for i, track in enumerate(tracks):
        path = f"/mgaProject/track[{i}]"
        if not track.id:
            bad("EMPTY_ID", f"{path}/@id", "track id must be non-empty")
        elif track.id in seen_track_ids:
            bad("DUPLICATE_ID", f"{path}/@id", f"track id {track.id!r} repeats")
        seen_track_ids.add(track.id)
        if track.kind not in TRACK_KINDS:
            bad("BAD_KIND", f"{path}/@kind", f"unknown track kind {track.kind!r}")
    if sorted(t.index for t in tracks) != list(range(len(tracks))):
        bad(
            "BAD_INDEX",
            "/mgaProject/track/@index",
            "track indices must be unique and contiguous from 0",
        )

    seen_segment_ids: set[str] = set()
    for segment in segments:
        path = f"/mgaProject/segment[@id={segment.id!r}]"
        if not segment.id:
            bad("EMPTY_ID", f"{path}/@id", "segment id must be non-empty")
        elif segment.id in seen_segment_ids:
            bad("DUPLICATE_ID", f"{path}/@id", f"segment id {segment.id!r} repeats")
        seen_segment_ids.add(segment.id)
        if segment.track_ref not in seen_track_ids:
            bad(
                "DANGLING_TRACK_REF",
                f"{path}/@trackRef",
                f"no track with id {segment.track_ref!r}",
            )
        if segment.start_ms < 0:
            bad("BAD_START", f"{path}/@startMs", "start must be non-negative")
        if segment.duration_ms <= 0:
            bad("BAD_DURATION", f"{path}/@durationMs", "duration must be positive")
        if not isinstance(segment.loi, int) or segment.loi < 1:
            bad("BAD_LOI", f"{path}/@loi", f"loi must be an integer >= 1, got {segment.loi!r}")

    by_track: dict[str, list[Segment]] = {}
    for segment in segments:
        by_track.setdefault(segment.track_ref, []).append(segment)
    for track_ref in sorted(by_track):
        ordered = sorted(by_track[track_ref], key=lambda s: (s.start_ms, s.id))
        for left, right in zip(ordered, ordered[1:]):
            if right.start_ms < left.end_ms:
                bad(
                    "OVERLAP",
                    f"/mgaProject/segment[@id={right.id!r}]",
                    f"overlaps segment {left.id!r} on track {track_ref!r}",
                )
    return findings


def _q(tag: str) -> str:
    return f"{{{XML_NAMESPACE}}}{tag}"


def _capture_extension(elem: ET.Element) -> str:
    bare = copy.deepcopy(elem)
    bare.tail = None
    return ET.canonicalize(ET.tostring(bare, encoding="unicode"))


def _is_foreign(tag_or_attr: str) -> bool:
    return tag_or_attr.startswith("{") and not tag_or_attr.startswith(
        f"{{{XML_NAMESPACE}}}"
    )


def _split_foreign(attrib: dict[str, str]) -> dict[str, str]:
    return {k: v for k, v in attrib.items() if _is_foreign(k)}


def _format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_timestamp(text: str, path: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise SchemaViolation(f"{path}: bad timestamp {text!r}", path=path) from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def to_xml(project: Project) -> str:
    """Serialize a valid Project to mgaProject v1 XML (UTF-8 text)."""
    root = ET.Element(_q("mgaProject"), {"version": XML_VERSION})
    root.attrib.update(project.foreign_attrs)

    prog = project.programme
    p = ET.SubElement(root, _q("programme"), {"id": prog.id, "title": prog.title})
    if prog.language is not None:
        p.set("language", prog.language)
    p.attrib.update(prog.foreign_attrs)
    if prog.description is not None:
        ET.SubElement(p, _q("description")).text = prog.description
    for key in prog.formal:
        f = ET.SubElement(p, _q("formal"), {"key": key})
        if key in prog.categories:
            f.set("category", prog.categories[key])
        f.text = prog.formal[key]
    _append_extensions(p, prog.extensions)

    for track in project.tracks:
        t = ET.SubElement(
            root, _q("track"), {"id": track.id, "index": str(track.index), "kind": track.kind}
        )
        if track.language is not None:
            t.set("language", track.language)
        if track.audio_ref is not None:
            t.set("audioRef", track.audio_ref)
        t.attrib.update(track.foreign_attrs)
        _append_extensions(t, track.extensions)

    for segment in project.segments:
        s = ET.SubElement(
            root,
            _q("segment"),
            {
                "id": segment.id,
                "trackRef": segment.track_ref,
                "startMs": str(segment.start_ms),
                "durationMs": str(segment.duration_ms),
                "label": segment.label,
                "loi": str(segment.loi),
            },
        )
        if segment.location is not None:
            s.set("lat", repr(segment.location.lat))
            s.set("lon", repr(segment.location.lon))
        if segment.timestamp is not None:
            s.set("timestamp", _format_timestamp(segment.timestamp))
        s.attrib.update(segment.foreign_attrs)
        for topic in sorted(segment.topics):
            ET.SubElement(s, _q("topic")).text = topic
        _append_extensions(s, segment.extensions)

    _append_extensions(root, project.extensions)
    # Depth-1 layout only: touching nested whitespace would corrupt the
    # opaque extension subtrees.
    root.text = "\n  "
    for child in root:
        child.tail = "\n  "
    if len(root):
        root[-1].tail = "\n"
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        + ET.tostring(root, encoding="unicode")
        + "\n"
    )


def _append_extensions(parent: ET.Element, extensions: tuple[str, ...]) -> None:
    for ext in extensions:
        parent.append(ET.fromstring(ext))


def from_xml(text: str) -> Project:
    """Parse mgaProject v1 XML back into a validated Project."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SchemaViolation(f"/mgaProject: not well-formed XML ({exc})") from None
    if root.tag != _q("mgaProject"):
        raise SchemaViolation(
            f"/mgaProject: root element is {root.tag!r}, not mgaProject", path="/mgaProject"
        )
    if root.get("version") != XML_VERSION:
        raise SchemaViolation(
            f"/mgaProject/@version: unsupported version {root.get('version')!r}",
            path="/mgaProject/@version",
        )

    prog_elem = root.find(_q("programme"))
    if prog_elem is None:
        raise SchemaViolation("/mgaProject/programme missing", path="/mgaProject/programme")
    programme = _programme_from_elem(prog_elem)
    tracks = [
        _track_from_elem(e, i) for i, e in enumerate(root.findall(_q("track")))
    ]
    segments = [_segment_from_elem(e) for e in root.findall(_q("segment"))]

    project = Project(
        programme,
        tracks,
        segments,
        extensions=tuple(_capture_extension(e) for e in root if _is_foreign(e.tag)),
        foreign_attrs=_split_foreign(root.attrib),
    )
    findings = collect_findings(programme, tracks, segments)
    if findings:
        first = findings[0]
        raise SchemaViolation(
            f"{first.path}: {first.message}", path=first.path, code=first.code
        )
    return project


def _programme_from_elem(elem: ET.Element) -> Programme:
    prog_id = elem.get("id")
    if not prog_id:
        raise SchemaViolation(
            "/mgaProject/programme/@id missing", path="/mgaProject/programme/@id"
        )
    desc_elem = elem.find(_q("description"))
    formal: dict[str, str] = {}
    categories: dict[str, str] = {}
    for f in elem.findall(_q("formal")):
        key = f.get("key")
        if not key:
            raise SchemaViolation(
                "/mgaProject/programme/formal/@key missing",
                path="/mgaProject/programme/formal/@key",
            )
        formal[key] = f.text or ""
        if f.get("category") is not None:
            categories[key] = f.get("category", "")
    return Programme(
        id=prog_id,
        title=elem.get("title", ""),
        description=desc_elem.text or "" if desc_elem is not None else None,
        language=elem.get("language"),
        formal=formal,
        categories=categories,
        extensions=tuple(_capture_extension(e) for e in elem if _is_foreign(e.tag)),
        foreign_attrs=_split_foreign(elem.attrib),
    )


def _int_attr(elem: ET.Element, name: str, path: str, *, code: str = "SCHEMA") -> int:
    raw = elem.get(name)
    if raw is None:
        raise SchemaViolation(f"{path}/@{name} missing", path=f"{path}/@{name}", code=code)
    try:
        return int(raw)
    except ValueError:
        raise SchemaViolation(
            f"{path}/@{name}: {raw!r} is not an integer", path=f"{path}/@{name}", code=code
        ) from None


def _track_from_elem(elem: ET.Element, position: int) -> Track:
    path = f"/mgaProject/track[{position}]"
    track_id = elem.get("id")
    if not track_id:
        raise SchemaViolation(f"{path}/@id missing", path=f"{path}/@id")
    kind = elem.get("kind")
    if kind is None:
        raise SchemaViolation(f"{path}/@kind missing", path=f"{path}/@kind")
    return Track(
        id=track_id,
        index=_int_attr(elem, "index", path),
        kind=kind,
        language=elem.get("language"),
        audio_ref=elem.get("audioRef"),
        extensions=tuple(_capture_extension(e) for e in elem if _is_foreign(e.tag)),
        foreign_attrs=_split_foreign(elem.attrib),
    )


def _segment_from_elem(elem: ET.Element) -> Segment:
    seg_id = elem.get("id")
    path = f"/mgaProject/segment[@id={seg_id!r}]"
    if not seg_id:
        raise SchemaViolation("/mgaProject/segment/@id missing", path=f"{path}/@id")
    track_ref = elem.get("trackRef")
    if not track_ref:
        raise SchemaViolation(f"{path}/@trackRef missing", path=f"{path}/@trackRef")
    loi = _int_attr(elem, "loi", path, code="BAD_LOI")
    if loi < 1:
        raise SchemaViolation(
            f"{path}/@loi: must be >= 1, got {loi}", path=f"{path}/@loi", code="BAD_LOI"
        )
    location: GeoPoint | None = None
    if elem.get("lat") is not None or elem.get("lon") is not None:
        try:
            location = GeoPoint(float(elem.get("lat", "")), float(elem.get("lon", "")))
        except ValueError as exc:
            raise SchemaViolation(
                f"{path}: bad location ({exc})", path=path, code="BAD_LOCATION"
            ) from None
    timestamp = None
    if elem.get("timestamp") is not None:
        timestamp = _parse_timestamp(elem.get("timestamp", ""), f"{path}/@timestamp")
    return Segment(
        id=seg_id,
        track_ref=track_ref,
        start_ms=_int_attr(elem, "startMs", path),
        duration_ms=_int_attr(elem, "durationMs", path),
        label=elem.get("label", ""),
        loi=loi,
        topics={t.text or "" for t in elem.findall(_q("topic"))},
        location=location,
        timestamp=timestamp,
        extensions=tuple(
            _capture_extension(e)
            for e in elem
            if _is_foreign(e.tag)
        ),
        foreign_attrs=_split_foreign(elem.attrib),
    )


def embed(project: Project, file: container.ContainerFile) -> container.ContainerFile:
    """Write the project into the file's axml chunk, replacing any prior payload."""
    return container.write_axml(file, to_xml(project))


def extract(file: container.ContainerFile, *, strict: bool = False) -> Project | None:
    """Read a Project back out of the axml chunk.

    Returns None when there is no axml chunk, or when the chunk carries a
    different XML vocabulary and strict mode is off.
    """
    xml = container.read_axml(file)
    if xml is None:
        return None
    foreign_reason = None
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        foreign_reason = f"axml is not well-formed XML ({exc})"
    else:
        if root.tag != _q("mgaProject"):
            foreign_reason = f"axml root is {root.tag!r}, not the mgaProject vocabulary"
    if foreign_reason is not None:
        if strict:
            raise ForeignAxml(foreign_reason)
        return None
    return from_xml(xml)


def segments_from_markers(
    markers: list[RawMarker],
    track_ref: str,
    reference: Timecode | str,
    frame_rate: int | None = None,
    *,
    total_duration_ms: int,
    default_loi: int = 1,
) -> list[Segment]:
    """Turn an ordered DAW marker list into a gap-free segment tiling.

    Marker k spans from its normalized time to marker k+1 (the last one
    runs to total_duration_ms).  A label ending in "#L<n>" sets loi = n
    and the suffix is stripped; otherwise default_loi applies.
    """
    if not markers:
        raise NonMonotonicMarkers("marker list is empty")
    if isinstance(reference, str):
        reference = parse_timecode(reference, frame_rate)

    starts: list[int] = []
    for marker in markers:
        try:
            tc = parse_timecode(marker.timecode_text, frame_rate)
            starts.append(normalize(tc, reference))
        except MgaError as exc:
            raise type(exc)(f"line {marker.line_number}: {exc}") from None
    for (i, a), b in zip(enumerate(starts), starts[1:]):
        if b <= a:
            raise NonMonotonicMarkers(
                f"marker at line {markers[i + 1].line_number} does not advance "
                f"({b} ms after {a} ms)"
            )
    if total_duration_ms <= starts[-1]:
        raise NonMonotonicMarkers(
            f"total duration {total_duration_ms} ms does not extend past the "
            f"last marker at {starts[-1]} ms"
        )

    ends = starts[1:] + [total_duration_ms]
    segments = []
    used_ids: set[str] = set()
    for marker, start, end in zip(markers, starts, ends):
        label = marker.label
        loi = default_loi
        suffix = _LOI_SUFFIX_RE.search(label)
        if suffix:
            loi = int(suffix.group(1))
            label = label[: suffix.start()].rstrip()
        seg_id = _slug(label) or f"segment-{marker.line_number}"
        if seg_id in used_ids:
            n = 2
            while f"{seg_id}-{n}" in used_ids:
                n += 1
            seg_id = f"{seg_id}-{n}"
        used_ids.add(seg_id)
        segments.append(
            Segment(
                id=seg_id,
                track_ref=track_ref,
                start_ms=start,
                duration_ms=end - start,
                label=label,
                loi=loi,
            )
        )
    return segments


def _slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", label.lower()).strip("-")


def replace_segments(project: Project, segments: list[Segment]) -> Project:
    """New Project with a different segment list, revalidated."""
    findings = collect_findings(project.programme, project.tracks, segments)
    if findings:
        raise ValidationFailed(findings)
    return replace(project, segments=segments)
