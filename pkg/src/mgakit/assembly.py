"""Variable-length and location-filtered selection of segments.

Length adaptation follows the inverted journalistic pyramid: every
segment carries a level of importance (loi, 1 = most important), and a
target duration is filled by walking segments in (loi, start, id) order,
stopping at the first one that would overflow.  The loi=1 stratum is
mandatory: if it alone exceeds the target the caller must either accept
the overflow or get an error.

The regional filter keeps segments by great-circle distance from a
center and by age against a caller-supplied clock, both pure functions
of the project.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime

from .errors import MgaError
from .metamodel import GeoPoint, Project

EARTH_RADIUS_KM = 6371.0

MANDATORY_LOI = 1


class AssemblyError(MgaError):
    pass


class TargetTooShort(AssemblyError):
    pass


class EmptyProject(AssemblyError):
    pass


class StaleSelection(AssemblyError):
    pass


@dataclass
class Selection:
    included: list[str]  # segment ids in playback order
    boundary_loi: int
    total_duration_ms: int
    target_ms: int
    overflowed: bool = False


@dataclass(frozen=True)
class EDLEntry:
    segment_id: str
    track_ref: str
    source_start_ms: int
    duration_ms: int


@dataclass
class EDL:
    entries: list[EDLEntry]
    crossfade_ms: int = 0


def select_by_loi(project: Project, target_ms: int, allow_overflow: bool = False) -> Selection:
    """Greedy variable-length selection, deterministic and order-stable.

    Segments are visited by (loi asc, start asc, id asc) and accumulated
    while the running total stays within target_ms; the walk stops at
    the first segment that would overflow, without skipping past it.
    """
    if not project.segments:
        raise EmptyProject("project has no segments to select from")

    visit_order = sorted(project.segments, key=lambda s: (s.loi, s.start_ms, s.id))
    mandatory_ms = sum(s.duration_ms for s in visit_order if s.loi == MANDATORY_LOI)
    overflowed = False
    if mandatory_ms > target_ms:
        if not allow_overflow:
            raise TargetTooShort(
                f"mandatory loi={MANDATORY_LOI} content is {mandatory_ms} ms, "
                f"target is {target_ms} ms"
            )
        included = [s for s in visit_order if s.loi == MANDATORY_LOI]
        overflowed = True
    else:
        included = []
        cumulative = 0
        for segment in visit_order:
            if cumulative + segment.duration_ms > target_ms:
                break
            included.append(segment)
            cumulative += segment.duration_ms

    track_index = {t.id: t.index for t in project.tracks}
    playback = sorted(
        included, key=lambda s: (s.start_ms, track_index.get(s.track_ref, 0), s.id)
    )
    return Selection(
        included=[s.id for s in playback],
        boundary_loi=max((s.loi for s in included), default=0),
        total_duration_ms=sum(s.duration_ms for s in included),
        target_ms=target_ms,
        overflowed=overflowed,
    )


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km on a sphere of radius 6371.0 km."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlambda = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlambda / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def filter_regional(
    project: Project,
    center: GeoPoint,
    max_km: float,
    max_age_s: float,
    now: datetime,
    keep_unlocated: bool = False,
) -> Project:
    """Project restricted to segments near the center and recent enough.

    Segments without location or timestamp cannot satisfy either bound
    and are dropped unless keep_unlocated is set.  Programme and tracks
    pass through unchanged; an empty segment list is a legal result.
    """
    if max_km < 0 or max_age_s < 0:
        raise ValueError("max_km and max_age_s must be non-negative")
    kept = []
    for segment in project.segments:
        if segment.location is None or segment.timestamp is None:
            if keep_unlocated:
                kept.append(segment)
            continue
        distance = haversine(segment.location, center)
        age_s = (now - segment.timestamp).total_seconds()
        if distance <= max_km and age_s <= max_age_s:
            kept.append(segment)
    return replace(project, segments=kept)


def to_edl(selection: Selection, project: Project, crossfade_ms: int = 0) -> EDL:
    """One EDL entry per included segment, in playback order."""
    if crossfade_ms < 0:
        raise ValueError("crossfade_ms must be non-negative")
    entries = []
    for segment_id in selection.included:
        segment = project.segment_by_id(segment_id)
        if segment is None:
            raise StaleSelection(f"segment {segment_id!r} is no longer in the project")
        entries.append(
            EDLEntry(
                segment_id=segment.id,
                track_ref=segment.track_ref,
                source_start_ms=segment.start_ms,
                duration_ms=segment.duration_ms,
            )
        )
    return EDL(entries=entries, crossfade_ms=crossfade_ms)


def project_slice(project: Project, segment_ids: list[str]) -> Project:
    """Sub-project containing exactly the named segments (original times)."""
    wanted = set(segment_ids)
    return replace(project, segments=[s for s in project.segments if s.id in wanted])


def selection_to_dict(selection: Selection) -> dict:
    return {
        "included": list(selection.included),
        "boundary_loi": selection.boundary_loi,
        "total_duration_ms": selection.total_duration_ms,
        "target_ms": selection.target_ms,
        "overflowed": selection.overflowed,
    }


def edl_to_dict(edl: EDL) -> dict:
    return {
        "crossfade_ms": edl.crossfade_ms,
        "entries": [
            {
                "segment_id": e.segment_id,
                "track_ref": e.track_ref,
                "source_start_ms": e.source_start_ms,
                "duration_ms": e.duration_ms,
            }
            for e in edl.entries
        ],
    }
