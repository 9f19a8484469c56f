"""HTTP preview service for the editor UI.

One project per service instance, held in memory.  GET endpoints are
pure reads; PATCH mutates validate-then-commit under a lock and bumps a
monotonically increasing revision.  Every response carries the current
revision in the X-Revision header; stale PATCHes carrying an If-Match
revision that no longer matches are rejected with 409 so clients
refresh instead of clobbering each other.

Selection is computed on the server only; the assemble response body is
JSON-identical to the CLI assemble output for the same project state.
"""

from __future__ import annotations

import threading
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import assembly, quality
from .container import write_container
from .errors import MgaError
from .metamodel import (
    Project,
    Segment,
    collect_findings,
    to_xml,
    ValidationFailed,
)
from .render import RenderConfig, load_sources, render

DEFAULT_QUALITY_SPEC = quality.ElementSpec(
    required=frozenset({"label", "loi"}),
    recommended=frozenset({"topics", "location", "timestamp"}),
)


class SegmentPatch(BaseModel):
    loi: int | None = None
    label: str | None = None
    topics: list[str] | None = None


class SessionState:
    def __init__(self, project: Project):
        self.project = project
        self.revision = 1
        self.lock = threading.Lock()


def segment_to_dict(segment: Segment) -> dict:
    return {
        "id": segment.id,
        "track_ref": segment.track_ref,
        "start_ms": segment.start_ms,
        "duration_ms": segment.duration_ms,
        "label": segment.label,
        "loi": segment.loi,
        "topics": sorted(segment.topics),
        "location": (
            {"lat": segment.location.lat, "lon": segment.location.lon}
            if segment.location is not None
            else None
        ),
        "timestamp": (
            segment.timestamp.isoformat().replace("+00:00", "Z")
            if segment.timestamp is not None
            else None
        ),
    }


def project_to_dict(project: Project) -> dict:
    return {
        "programme": {
            "id": project.programme.id,
            "title": project.programme.title,
            "description": project.programme.description,
            "language": project.programme.language,
            "formal": dict(project.programme.formal),
            "categories": dict(project.programme.categories),
        },
        "tracks": [
            {
                "id": t.id,
                "index": t.index,
                "kind": t.kind,
                "language": t.language,
                "audio_ref": t.audio_ref,
            }
            for t in project.tracks
        ],
        "segments": [segment_to_dict(s) for s in project.segments],
    }


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse({"code": code, "message": message, **extra}, status_code=status)


def create_app(
    project: Project,
    audio_dir: Path | None = None,
    *,
    project_path: Path | None = None,
    quality_spec: quality.ElementSpec | None = None,
) -> FastAPI:
    state = SessionState(project)
    spec = quality_spec or DEFAULT_QUALITY_SPEC
    app = FastAPI(title="mgakit preview service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.session = state

    @app.middleware("http")
    async def stamp_revision(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Revision"] = str(state.revision)
        return response

    @app.exception_handler(MgaError)
    async def domain_error(request: Request, exc: MgaError):
        return _error(422, exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def param_error(request: Request, exc: RequestValidationError):
        return _error(422, "INVALID_PARAMS", str(exc.errors()))

    @app.get("/api/project")
    def get_project():
        with state.lock:
            return {"revision": state.revision, "project": project_to_dict(state.project)}

    @app.get("/api/assemble")
    def get_assemble(target_ms: int, allow_overflow: bool = False):
        with state.lock:
            selection = assembly.select_by_loi(state.project, target_ms, allow_overflow)
        return assembly.selection_to_dict(selection)

    @app.get("/api/filter")
    def get_filter(
        lat: float,
        lon: float,
        max_km: float | None = None,
        max_age_s: float | None = None,
        keep_unlocated: bool = False,
    ):
        from datetime import datetime, timezone

        with state.lock:
            filtered = assembly.filter_regional(
                state.project,
                assembly.GeoPoint(lat, lon),
                max_km if max_km is not None else float("inf"),
                max_age_s if max_age_s is not None else float("inf"),
                now=datetime.now(timezone.utc),
                keep_unlocated=keep_unlocated,
            )
        return {
            "kept": [s.id for s in filtered.segments],
            "project": project_to_dict(filtered),
        }

    @app.get("/api/quality")
    def get_quality():
        with state.lock:
            report = quality.validate_project(state.project, spec)
        return report.to_json_dict()

    @app.patch("/api/segments/{segment_id}")
    def patch_segment(
        segment_id: str,
        patch: SegmentPatch,
        if_match: str | None = Header(default=None),
    ):
        with state.lock:
            if if_match is not None:
                claimed = if_match.strip().strip('"')
                if claimed != str(state.revision):
                    return _error(
                        409,
                        "REVISION_CONFLICT",
                        f"If-Match {claimed} does not match revision {state.revision}",
                        revision=state.revision,
                    )
            current = state.project.segment_by_id(segment_id)
            if current is None:
                return _error(404, "NOT_FOUND", f"no segment {segment_id!r}")
            changes: dict = {}
            if patch.loi is not None:
                changes["loi"] = patch.loi
            if patch.label is not None:
                changes["label"] = patch.label
            if patch.topics is not None:
                changes["topics"] = set(patch.topics)
            updated = replace(current, **changes)
            segments = [
                updated if s.id == segment_id else s for s in state.project.segments
            ]
            findings = collect_findings(
                state.project.programme, state.project.tracks, segments
            )
            if findings:
                raise ValidationFailed(findings)
            state.project = replace(state.project, segments=segments)
            state.revision += 1
            return {"revision": state.revision, "segment": segment_to_dict(updated)}

    @app.post("/api/save")
    def post_save():
        with state.lock:
            if project_path is None:
                return _error(422, "NO_PROJECT_PATH", "service started without a project file")
            from .cli import atomic_write

            atomic_write(Path(project_path), to_xml(state.project).encode("utf-8"))
            return {"revision": state.revision, "path": str(project_path)}

    @app.get("/api/render")
    def get_render(target_ms: int, allow_overflow: bool = False, crossfade_ms: int = 10):
        with state.lock:
            project_now = state.project
        if audio_dir is None:
            return _error(422, "MissingAudio", "service started without an audio directory")
        selection = assembly.select_by_loi(project_now, target_ms, allow_overflow)
        edl = assembly.to_edl(selection, project_now, crossfade_ms)
        sources = load_sources(project_now, audio_dir)
        config = RenderConfig(crossfade_ms=crossfade_ms)
        rendered = render(edl, sources, config, project_now)
        return Response(
            content=write_container(rendered),
            media_type="audio/wav",
            headers={"Content-Disposition": 'inline; filename="render.wav"'},
        )

    @app.get("/api/audio/{track_ref}")
    def get_audio(track_ref: str):
        with state.lock:
            track = state.project.track_by_id(track_ref)
        if track is None:
            return _error(404, "NOT_FOUND", f"no track {track_ref!r}")
        if audio_dir is None:
            return _error(422, "MissingAudio", "service started without an audio directory")
        path = Path(audio_dir) / (track.audio_ref or f"{track.id}.wav")
        if not path.is_file():
            return _error(404, "NOT_FOUND", f"no audio file for track {track_ref!r}")
        return Response(content=path.read_bytes(), media_type="audio/wav")

    return app
