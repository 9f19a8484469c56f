"""Shared fixtures and the acceptance summary hook.

Tests marked @pytest.mark.acceptance("...") each stand for one
acceptance criterion; the terminal summary prints a PASS/FAIL line per
criterion so the gate is readable at a glance.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from mgakit import build_pcm, build_project, write_container
from mgakit.kernels import encode_pcm
from mgakit.metamodel import GeoPoint, Programme, Project, Segment, Track

_acceptance_results: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(criterion): marks a test as an acceptance criterion"
    )


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for marker_name, args in getattr(report, "user_properties", []):
        if marker_name == "acceptance":
            _acceptance_results.append((args, report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        report.user_properties.append(("acceptance", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome in _acceptance_results:
        flag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{flag}] {criterion}")


def sine_pcm(duration_ms: int, sample_rate: int = 48000, channels: int = 1,
             bits: int = 16, freq: float = 440.0, amplitude: float = 0.3) -> bytes:
    frames = (duration_ms * sample_rate + 500) // 1000
    t = np.arange(frames * channels, dtype=np.float64) // channels
    return encode_pcm(amplitude * np.sin(2 * math.pi * freq * t / sample_rate), bits)


@pytest.fixture
def news_show_project() -> Project:
    """Four located news segments on a dialogue track plus a music bed track."""
    munich = GeoPoint(48.1374, 11.5755)
    nuremberg = GeoPoint(49.4521, 11.0767)
    from datetime import datetime, timezone

    at = lambda h: datetime(2026, 8, 14, h, 0, 0, tzinfo=timezone.utc)
    segments = [
        Segment(id="intro", track_ref="dialogue", start_ms=0, duration_ms=20000,
                label="Intro", loi=1, topics={"headlines"}, location=munich,
                timestamp=at(6)),
        Segment(id="topic-a", track_ref="dialogue", start_ms=20000, duration_ms=90000,
                label="Topic A", loi=2, topics={"politics"}, location=munich,
                timestamp=at(7)),
        Segment(id="topic-b", track_ref="dialogue", start_ms=110000, duration_ms=70000,
                label="Topic B", loi=3, topics={"sport"}, location=nuremberg,
                timestamp=at(8)),
        Segment(id="outro", track_ref="dialogue", start_ms=180000, duration_ms=10000,
                label="Outro", loi=2, topics={"headlines"}, location=munich,
                timestamp=at(9)),
    ]
    return build_project(
        Programme(id="evening-news", title="Evening News", language="de",
                  formal={"author": "Newsroom", "producer": "Desk"}),
        [
            Track(id="dialogue", index=0, kind="dialogue", language="de",
                  audio_ref="dialogue.wav"),
            Track(id="music", index=1, kind="music"),
        ],
        segments,
    )


@pytest.fixture
def lead_body_tail_project() -> Project:
    segments = [
        Segment(id="lead", track_ref="voice", start_ms=0, duration_ms=60000,
                label="Lead", loi=1),
        Segment(id="body", track_ref="voice", start_ms=60000, duration_ms=120000,
                label="Body", loi=2),
        Segment(id="tail", track_ref="voice", start_ms=180000, duration_ms=90000,
                label="Tail", loi=3),
    ]
    return build_project(
        Programme(id="pyramid", title="Pyramid"),
        [Track(id="voice", index=0, kind="dialogue", audio_ref="voice.wav")],
        segments,
    )


@pytest.fixture
def news_audio_dir(tmp_path, news_show_project):
    """dialogue.wav long enough to cover every news-show segment."""
    payload = sine_pcm(191000)
    (tmp_path / "dialogue.wav").write_bytes(
        write_container(build_pcm(48000, 1, 16, payload))
    )
    return tmp_path
