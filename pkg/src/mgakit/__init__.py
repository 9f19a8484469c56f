"""Metadata-guided audio toolkit.

Parses and writes RIFF/RF64/BW64 audio containers, carries a
three-tier programme/track/segment metadata model in their axml chunk,
normalizes heterogeneous timecodes, scores metadata quality, assembles
variable-length and location-filtered programmes from per-segment
importance levels, and renders the result back to a single PCM file.
"""

from .assembly import (
    EDL,
    EDLEntry,
    GeoPoint,
    Selection,
    filter_regional,
    haversine,
    select_by_loi,
    to_edl,
)
from .container import (
    AudioInfo,
    BextInfo,
    Chunk,
    ContainerFile,
    ContainerFormat,
    build_pcm,
    parse_container,
    read_axml,
    read_bext,
    select_format,
    write_axml,
    write_bext,
    write_container,
)
from .errors import MgaError
from .metamodel import (
    Programme,
    Project,
    Segment,
    Track,
    build_project,
    embed,
    extract,
    from_xml,
    segments_from_markers,
    to_xml,
)
from .quality import ElementSpec, QualityReport, assess, completeness, validate_project
from .render import RenderConfig, render, total_duration, total_frames
from .timecode import (
    RawMarker,
    Timecode,
    absolute_ms,
    ingest_marker_file,
    normalize,
    parse_timecode,
)

__version__ = "0.1.0"
