"""Project model, XML round trip, and marker conversion tests."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgakit.container import build_pcm, write_container, parse_container
from mgakit.metamodel import (
    ForeignAxml,
    GeoPoint,
    NonMonotonicMarkers,
    Programme,
    Project,
    SchemaViolation,
    Segment,
    Track,
    ValidationFailed,
    build_project,
    embed,
    extract,
    from_xml,
    replace_segments,
    segments_from_markers,
    to_xml,
)
from mgakit.timecode import MalformedTimecode, RawMarker

NS = "urn:mga:project:1"


def seg(i, track="voice", start=0, dur=1000, **kw):
    return Segment(id=i, track_ref=track, start_ms=start, duration_ms=dur, **kw)


def valid_project(**programme_kw) -> Project:
    return build_project(
        Programme(id="show", title="Show", **programme_kw),
        [Track(id="voice", index=0, kind="dialogue")],
        [seg("a", start=0, dur=1000), seg("b", start=1000, dur=500)],
    )


class TestValidation:
    def test_valid_project_builds(self):
        project = valid_project()
        assert project.track_by_id("voice").kind == "dialogue"
        assert project.segment_by_id("b").end_ms == 1500

    def test_all_violations_reported_at_once(self):
        with pytest.raises(ValidationFailed) as exc:
            build_project(
                Programme(id=""),
                [
                    Track(id="t", index=0, kind="vocals"),
                    Track(id="t", index=2, kind="music"),
                ],
                [
                    seg("x", track="ghost", start=-5, dur=0, loi=0),
                    seg("x", track="t", start=0, dur=100),
                ],
            )
        codes = [f.code for f in exc.value.findings]
        assert codes.count("EMPTY_ID") == 1
        assert "DUPLICATE_ID" in codes
        assert "BAD_KIND" in codes
        assert "BAD_INDEX" in codes
        assert "DANGLING_TRACK_REF" in codes
        assert "BAD_START" in codes
        assert "BAD_DURATION" in codes
        assert "BAD_LOI" in codes

    def test_overlap_on_same_track_rejected(self):
        with pytest.raises(ValidationFailed) as exc:
            build_project(
                Programme(id="p"),
                [Track(id="voice", index=0, kind="dialogue")],
                [seg("a", start=0, dur=1000), seg("b", start=999, dur=100)],
            )
        finding = exc.value.findings[0]
        assert finding.code == "OVERLAP"
        assert "'b'" in finding.path

    def test_touching_segments_allowed(self):
        build_project(
            Programme(id="p"),
            [Track(id="voice", index=0, kind="dialogue")],
            [seg("a", start=0, dur=1000), seg("b", start=1000, dur=1)],
        )

    def test_overlap_on_different_tracks_allowed(self):
        build_project(
            Programme(id="p"),
            [Track(id="v", index=0, kind="dialogue"), Track(id="m", index=1, kind="music")],
            [seg("a", track="v", start=0, dur=1000), seg("b", track="m", start=0, dur=1000)],
        )

    def test_formal_key_and_category_rules(self):
        with pytest.raises(ValidationFailed) as exc:
            build_project(
                Programme(id="p", formal={"Bad Key": "x", "author": "y"},
                          categories={"author": "editorial", "missing": "descriptive"}),
                [Track(id="v", index=0, kind="dialogue")],
                [],
            )
        codes = [f.code for f in exc.value.findings]
        assert codes.count("BAD_CATEGORY") == 2
        assert "BAD_FORMAL_KEY" in codes

    def test_replace_segments_revalidates(self):
        project = valid_project()
        with pytest.raises(ValidationFailed):
            replace_segments(project, [seg("a"), seg("b", start=500)])
        swapped = replace_segments(project, [seg("only", dur=2500)])
        assert [s.id for s in swapped.segments] == ["only"]
        assert [s.id for s in project.segments] == ["a", "b"]  # original untouched


class TestXmlExamples:
    def test_serialized_shape(self):
        text = to_xml(valid_project(language="de"))
        assert text.startswith('<?xml version="1.0" encoding="UTF-8"?>\n')
        assert text.endswith("</mga:mgaProject>\n")
        root = ET.fromstring(text)
        assert root.tag == f"{{{NS}}}mgaProject"
        assert root.get("version") == "1"
        segments = root.findall(f"{{{NS}}}segment")
        assert [e.get("startMs") for e in segments] == ["0", "1000"]

    def test_parse_plain_default_namespace_document(self):
        text = f"""<?xml version="1.0"?>
        <mgaProject xmlns="{NS}" version="1">
          <programme id="show" title="Show"/>
          <track id="voice" index="0" kind="dialogue"/>
          <segment id="a" trackRef="voice" startMs="0" durationMs="1000" label="A" loi="2"/>
        </mgaProject>"""
        project = from_xml(text)
        assert project.programme.id == "show"
        assert project.segments[0].loi == 2

    def test_missing_programme_message(self):
        text = f'<mgaProject xmlns="{NS}" version="1"/>'
        with pytest.raises(SchemaViolation, match="/mgaProject/programme missing"):
            from_xml(text)

    def test_loi_zero_rejected_with_code(self):
        text = f"""<mgaProject xmlns="{NS}" version="1">
          <programme id="p"/><track id="v" index="0" kind="dialogue"/>
          <segment id="s" trackRef="v" startMs="0" durationMs="10" loi="0"/>
        </mgaProject>"""
        with pytest.raises(SchemaViolation) as exc:
            from_xml(text)
        assert exc.value.code == "BAD_LOI"
        assert "@loi" in exc.value.path

    def test_loi_non_integer_rejected_with_code(self):
        text = f"""<mgaProject xmlns="{NS}" version="1">
          <programme id="p"/><track id="v" index="0" kind="dialogue"/>
          <segment id="s" trackRef="v" startMs="0" durationMs="10" loi="high"/>
        </mgaProject>"""
        with pytest.raises(SchemaViolation) as exc:
            from_xml(text)
        assert exc.value.code == "BAD_LOI"

    def test_unsupported_version(self):
        with pytest.raises(SchemaViolation, match="version"):
            from_xml(f'<mgaProject xmlns="{NS}" version="2"><programme id="p"/></mgaProject>')

    def test_not_xml(self):
        with pytest.raises(SchemaViolation, match="well-formed"):
            from_xml("definitely not xml <")

    def test_wrong_root(self):
        with pytest.raises(SchemaViolation, match="root"):
            from_xml("<adm/>")

    def test_structural_problem_surfaces_first_finding(self):
        text = f"""<mgaProject xmlns="{NS}" version="1">
          <programme id="p"/><track id="v" index="0" kind="dialogue"/>
          <segment id="s" trackRef="ghost" startMs="0" durationMs="10" loi="1"/>
        </mgaProject>"""
        with pytest.raises(SchemaViolation) as exc:
            from_xml(text)
        assert exc.value.code == "DANGLING_TRACK_REF"

    def test_timestamp_and_location_round_trip(self):
        ts = datetime(2026, 8, 14, 6, 30, 15, 250000, tzinfo=timezone.utc)
        project = build_project(
            Programme(id="p"),
            [Track(id="v", index=0, kind="dialogue")],
            [seg("s", track="v", location=GeoPoint(48.1374, 11.5755), timestamp=ts)],
        )
        back = from_xml(to_xml(project))
        assert back.segments[0].location == GeoPoint(48.1374, 11.5755)
        assert back.segments[0].timestamp == ts
        assert 'timestamp="2026-08-14T06:30:15.250000Z"' in to_xml(project)

    def test_geopoint_range_checked(self):
        with pytest.raises(ValueError):
            GeoPoint(91.0, 0.0)
        with pytest.raises(ValueError):
            GeoPoint(0.0, -180.5)


class TestExtensionPreservation:
    EXT_DOC = f"""<mgaProject xmlns="{NS}" xmlns:adm="urn:ebu:metadata" version="1"
          adm:profile="broadcast">
      <programme id="p" title="T">
        <adm:audioProgramme start="00:00:00">
          <adm:label lang="de">Sendung</adm:label>
        </adm:audioProgramme>
      </programme>
      <track id="v" index="0" kind="dialogue" adm:uid="ATU_00000001"/>
      <segment id="s" trackRef="v" startMs="0" durationMs="10" loi="1">
        <adm:block rtime="0"/>
      </segment>
    </mgaProject>"""

    def test_foreign_content_survives_round_trip(self):
        project = from_xml(self.EXT_DOC)
        assert project.foreign_attrs == {"{urn:ebu:metadata}profile": "broadcast"}
        assert project.tracks[0].foreign_attrs == {"{urn:ebu:metadata}uid": "ATU_00000001"}
        assert len(project.programme.extensions) == 1
        assert "audioProgramme" in project.programme.extensions[0]
        again = from_xml(to_xml(project))
        assert again == project

    def test_extension_capture_is_stable_across_reserialization(self):
        project = from_xml(self.EXT_DOC)
        once = to_xml(project)
        twice = to_xml(from_xml(once))
        assert once == twice

    def test_captured_form_is_the_canonical_string(self):
        text = f"""<mgaProject xmlns="{NS}" xmlns:x="urn:example" version="1">
          <programme id="p"><x:note b="2" a="1">hi</x:note></programme>
        </mgaProject>"""
        project = from_xml(text)
        assert project.programme.extensions == (
            '<ns0:note xmlns:ns0="urn:example" a="1" b="2">hi</ns0:note>',
        )


def text_alphabet():
    return st.characters(
        min_codepoint=0x20, blacklist_categories=("Cs",),
        blacklist_characters="￾￿",
    )


def simple_text(min_size=0, max_size=12):
    return st.text(alphabet=text_alphabet(), min_size=min_size, max_size=max_size)


@st.composite
def projects(draw) -> Project:
    formal_keys = draw(st.lists(st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True),
                                max_size=3, unique=True))
    formal = {k: draw(simple_text()) for k in formal_keys}
    categories = {
        k: draw(st.sampled_from(["descriptive", "administrative", "structural"]))
        for k in formal_keys
        if draw(st.booleans())
    }
    programme = Programme(
        id=draw(st.from_regex(r"[a-z0-9-]{1,12}", fullmatch=True)),
        title=draw(simple_text()),
        description=draw(st.none() | simple_text()),
        language=draw(st.none() | st.sampled_from(["de", "en", "fr"])),
        formal=formal,
        categories=categories,
    )
    n_tracks = draw(st.integers(1, 3))
    tracks = [
        Track(
            id=f"track-{i}",
            index=i,
            kind=draw(st.sampled_from(["dialogue", "music", "ambience", "effects", "other"])),
            language=draw(st.none() | st.sampled_from(["de", "en"])),
            audio_ref=draw(st.none() | st.from_regex(r"[a-z]{1,8}\.wav", fullmatch=True)),
        )
        for i in range(n_tracks)
    ]
    segments = []
    for t in tracks:
        cursor = 0
        for j in range(draw(st.integers(0, 3))):
            cursor += draw(st.integers(0, 2000))
            duration = draw(st.integers(1, 5000))
            location = None
            if draw(st.booleans()):
                location = GeoPoint(
                    draw(st.floats(-90, 90, allow_nan=False)),
                    draw(st.floats(-180, 180, allow_nan=False)),
                )
            timestamp = None
            if draw(st.booleans()):
                timestamp = datetime.fromtimestamp(
                    draw(st.integers(0, 2**31)), tz=timezone.utc
                ).replace(microsecond=draw(st.integers(0, 999999)))
            segments.append(
                Segment(
                    id=f"seg-{t.id}-{j}",
                    track_ref=t.id,
                    start_ms=cursor,
                    duration_ms=duration,
                    label=draw(simple_text()),
                    loi=draw(st.integers(1, 5)),
                    topics=set(draw(st.lists(simple_text(min_size=1), max_size=3))),
                    location=location,
                    timestamp=timestamp,
                )
            )
            cursor += duration
    return build_project(programme, tracks, segments)


class TestXmlRoundTripProperty:
    @given(projects())
    @settings(max_examples=120, deadline=None)
    def test_round_trip_preserves_every_field(self, project):
        assert from_xml(to_xml(project)) == project

    @given(projects())
    @settings(max_examples=40, deadline=None)
    def test_serialization_is_a_fixpoint(self, project):
        once = to_xml(project)
        assert to_xml(from_xml(once)) == once


class TestEmbedExtract:
    def test_embed_then_extract(self, news_show_project):
        file = build_pcm(48000, 1, 16, b"\x00\x00" * 8)
        embedded = embed(news_show_project, file)
        assert extract(embedded) == news_show_project

    def test_embed_survives_container_round_trip(self, news_show_project):
        file = embed(news_show_project, build_pcm(48000, 1, 16, b"\x00\x00" * 8))
        assert extract(parse_container(write_container(file))) == news_show_project

    def test_embed_leaves_other_chunks_untouched(self, news_show_project):
        file = build_pcm(48000, 1, 16, b"\x01\x02" * 8)
        before = {c.fourcc: c.payload for c in file.chunks}
        embedded = embed(news_show_project, file)
        for c in embedded.chunks:
            if c.fourcc != "axml":
                assert c.payload == before[c.fourcc]

    def test_extract_without_axml_returns_none(self):
        assert extract(build_pcm(48000, 1, 16, b"")) is None

    def test_foreign_axml_lenient_and_strict(self):
        from mgakit.container import write_axml

        file = write_axml(build_pcm(48000, 1, 16, b""), "<adm>other vocabulary</adm>")
        assert extract(file) is None
        with pytest.raises(ForeignAxml):
            extract(file, strict=True)

    def test_malformed_axml_strict(self):
        from mgakit.container import write_axml

        file = write_axml(build_pcm(48000, 1, 16, b""), "<broken")
        with pytest.raises(ForeignAxml, match="well-formed"):
            extract(file, strict=True)


class TestSegmentsFromMarkers:
    def test_two_markers_tile_the_total_duration(self):
        markers = [
            RawMarker("Lead #L1", "10:00:00:00", 1),
            RawMarker("Body #L2", "10:01:00:00", 2),
        ]
        segments = segments_from_markers(
            markers, "voice", "10:00:00:00", 25, total_duration_ms=150_000
        )
        assert [(s.id, s.start_ms, s.duration_ms, s.loi, s.label) for s in segments] == [
            ("lead", 0, 60_000, 1, "Lead"),
            ("body", 60_000, 90_000, 2, "Body"),
        ]

    def test_default_loi_applies_without_suffix(self):
        segments = segments_from_markers(
            [RawMarker("Intro", "00:00:00", 1)], "v", "00:00:00",
            total_duration_ms=1000, default_loi=3,
        )
        assert segments[0].loi == 3
        assert segments[0].label == "Intro"

    def test_clock_reference_string_accepted(self):
        segments = segments_from_markers(
            [RawMarker("A", "10:00:05", 1)], "v", "10:00:00", total_duration_ms=10_000
        )
        assert segments[0].start_ms == 5000

    def test_id_collisions_get_numeric_suffixes(self):
        markers = [
            RawMarker("Take", "00:00:00", 1),
            RawMarker("Take", "00:00:10", 2),
            RawMarker("Take", "00:00:20", 3),
        ]
        segments = segments_from_markers(markers, "v", "00:00:00", total_duration_ms=30_000)
        assert [s.id for s in segments] == ["take", "take-2", "take-3"]

    def test_unlabeled_marker_gets_line_based_id(self):
        segments = segments_from_markers(
            [RawMarker("", "00:00:00", 7)], "v", "00:00:00", total_duration_ms=1000
        )
        assert segments[0].id == "segment-7"

    def test_non_monotonic_markers_rejected(self):
        markers = [RawMarker("A", "00:01:00", 1), RawMarker("B", "00:00:30", 2)]
        with pytest.raises(NonMonotonicMarkers, match="line 2"):
            segments_from_markers(markers, "v", "00:00:00", total_duration_ms=120_000)

    def test_total_not_past_last_marker_rejected(self):
        with pytest.raises(NonMonotonicMarkers, match="total duration"):
            segments_from_markers(
                [RawMarker("A", "00:01:00", 1)], "v", "00:00:00", total_duration_ms=60_000
            )

    def test_empty_marker_list_rejected(self):
        with pytest.raises(NonMonotonicMarkers):
            segments_from_markers([], "v", "00:00:00", total_duration_ms=1000)

    def test_bad_timecode_reports_line_number(self):
        markers = [RawMarker("A", "00:00:00", 1), RawMarker("B", "nonsense", 3)]
        with pytest.raises(MalformedTimecode, match="line 3"):
            segments_from_markers(markers, "v", "00:00:00", total_duration_ms=9000)

    def test_marker_before_reference_reports_line_number(self):
        from mgakit.timecode import NegativeResult

        with pytest.raises(NegativeResult, match="line 4"):
            segments_from_markers(
                [RawMarker("A", "09:00:00", 4)], "v", "10:00:00", total_duration_ms=1000
            )

    def test_result_builds_into_a_valid_project(self):
        markers = [
            RawMarker("Lead #L1", "10:00:00:00", 1),
            RawMarker("Body #L2", "10:01:00:00", 2),
            RawMarker("Tail #L3", "10:03:00:00", 3),
        ]
        segments = segments_from_markers(
            markers, "voice", "10:00:00:00", 25, total_duration_ms=270_000
        )
        project = build_project(
            Programme(id="p"), [Track(id="voice", index=0, kind="dialogue")], segments
        )
        assert [s.end_ms for s in project.segments] == [60_000, 180_000, 270_000]
