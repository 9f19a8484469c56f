"""Materialize an EDL into a single PCM file.

Each entry cuts [source_start, +duration) out of its track's source
audio; consecutive clips are joined with an equal-power crossfade.  All
clip boundaries are computed in whole frames (ms rounded half up at the
configured rate), and total_frames() reproduces exactly the frame count
render() will emit, so duration checks can be sample-exact without
decoding audio.

A crossfade is clamped to half of the shorter adjacent clip, which
guarantees the two fades of a middle clip never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import kernels
from .assembly import EDL, project_slice
from .container import ContainerFile, build_pcm, parse_container
from .errors import MgaError
from .metamodel import Project, embed

OUTPUT_BIT_DEPTHS = (16, 24)


class RendererError(MgaError):
    pass


class MissingAudio(RendererError):
    pass


class RateMismatch(RendererError):
    pass


class RangeOutOfBounds(RendererError):
    pass


@dataclass
class RenderConfig:
    crossfade_ms: int = 10
    output_bits: int = 16
    fail_on_missing_audio: bool = True

    def __post_init__(self) -> None:
        if self.crossfade_ms < 0:
            raise ValueError("crossfade_ms must be non-negative")
        if self.output_bits not in OUTPUT_BIT_DEPTHS:
            raise ValueError(f"output_bits must be one of {OUTPUT_BIT_DEPTHS}")


def ms_to_frames(ms: int, sample_rate: int) -> int:
    """Round half up, exact in integer arithmetic."""
    return (ms * sample_rate + 500) // 1000


def _clip_frames(edl: EDL, sample_rate: int) -> list[int]:
    return [ms_to_frames(e.duration_ms, sample_rate) for e in edl.entries]


def _join_fades(clip_frames: list[int], fade_frames: int) -> list[int]:
    return [
        min(fade_frames, left // 2, right // 2)
        for left, right in zip(clip_frames, clip_frames[1:])
    ]


def total_frames(edl: EDL, config: RenderConfig, sample_rate: int) -> int:
    """Exact frame count render() will produce at this rate."""
    clips = _clip_frames(edl, sample_rate)
    fades = _join_fades(clips, ms_to_frames(config.crossfade_ms, sample_rate))
    return sum(clips) - sum(fades)


def total_duration(edl: EDL, config: RenderConfig) -> int:
    """Output duration in ms, without touching audio.

    Mirrors the frame computation in ms space: sum of entry durations
    minus one (possibly clamped) crossfade per join.  Sample-exact
    comparisons should use total_frames(), which shares the clamp rule
    at the actual rate.
    """
    durations = [e.duration_ms for e in edl.entries]
    fades = _join_fades(durations, config.crossfade_ms)
    return sum(durations) - sum(fades)


def render(
    edl: EDL,
    audio_sources: Mapping[str, ContainerFile],
    config: RenderConfig | None = None,
    project: Project | None = None,
) -> ContainerFile:
    """Cut, crossfade, and concatenate the EDL against per-track sources.

    All sources must share sample rate and channel count.  When a
    project is given, its slice covering the EDL's segments is embedded
    in the output's axml chunk.
    """
    config = config or RenderConfig()
    entries = list(edl.entries)
    if not config.fail_on_missing_audio:
        entries = [e for e in entries if e.track_ref in audio_sources]
    else:
        for e in entries:
            if e.track_ref not in audio_sources:
                raise MissingAudio(f"no audio source for track {e.track_ref!r}")

    rate, channels = _common_format(audio_sources)
    worklist = EDL(entries=entries, crossfade_ms=edl.crossfade_ms)
    clips = _clip_frames(worklist, rate)
    fades = _join_fades(clips, ms_to_frames(config.crossfade_ms, rate))

    decoded: dict[str, np.ndarray] = {}
    pieces: list[np.ndarray] = []
    pending: np.ndarray | None = None  # previous clip, fade tail not yet emitted
    for i, entry in enumerate(entries):
        source = audio_sources[entry.track_ref]
        if entry.track_ref not in decoded:
            decoded[entry.track_ref] = kernels.decode_pcm(
                source.data_chunk.payload, source.audio_info.bits_per_sample
            ).reshape(-1, channels)
        start = ms_to_frames(entry.source_start_ms, rate)
        n = clips[i]
        if start + n > source.audio_info.frame_count:
            raise RangeOutOfBounds(
                f"entry {entry.segment_id!r} needs frames [{start}, {start + n}) "
                f"but track {entry.track_ref!r} has {source.audio_info.frame_count}"
            )
        clip = decoded[entry.track_ref][start : start + n]
        if pending is not None:
            fade = fades[i - 1]
            if fade:
                mixed = kernels.equal_power_crossfade(pending[len(pending) - fade :], clip[:fade])
                pieces.append(pending[: len(pending) - fade])
                pieces.append(mixed)
                clip = clip[fade:]
            else:
                pieces.append(pending)
        pending = clip
    if pending is not None:
        pieces.append(pending)

    samples = (
        np.concatenate(pieces) if pieces else np.zeros((0, channels), dtype=np.float64)
    )
    payload = kernels.encode_pcm(samples, config.output_bits)
    out = build_pcm(rate, channels, config.output_bits, payload)
    if project is not None:
        out = embed(project_slice(project, [e.segment_id for e in entries]), out)
    return out


def load_sources(project: Project, audio_dir: Path) -> dict[str, ContainerFile]:
    """Parse each track's audio file from audio_dir, keyed by track id.

    Tracks default to <id>.wav when they carry no audio_ref.  Files that
    do not exist are simply absent from the result; render() decides
    whether that is fatal.
    """
    sources: dict[str, ContainerFile] = {}
    for track in project.tracks:
        path = Path(audio_dir) / (track.audio_ref or f"{track.id}.wav")
        if path.is_file():
            sources[track.id] = parse_container(path.read_bytes())
    return sources


def _common_format(audio_sources: Mapping[str, ContainerFile]) -> tuple[int, int]:
    if not audio_sources:
        raise MissingAudio("no audio sources supplied")
    infos = {ref: f.audio_info for ref, f in sorted(audio_sources.items())}
    formats = {(i.sample_rate, i.channel_count) for i in infos.values()}
    if len(formats) > 1:
        detail = ", ".join(
            f"{ref}: {i.sample_rate} Hz/{i.channel_count}ch" for ref, i in infos.items()
        )
        raise RateMismatch(f"sources disagree on rate or channels ({detail})")
    return formats.pop()
