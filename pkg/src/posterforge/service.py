"""HTTP facade over the pipeline.

Routes map 1:1 onto pipeline operations; no state change is reachable over
HTTP that the library cannot perform, and vice versa. Mutating routes
require ``If-Match: <job version>`` and return the new version; a stale
version yields 409 with the current version in the body. Responses are
canonical JSON except ``poster.html`` (PosterHTML text) and renders (PNG).
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import PosterForgeError
from .backends import (
    BackendRejected,
    BackendTimeout,
    BackendUnreachable,
    InvalidBackendOutput,
    ParseFailure,
    ResolutionMismatch,
    TextCoverageViolation,
)
from .blueprint import (
    BlueprintError,
    DetailLevel,
    StyleId,
    UserRequirement,
    blueprint_to_dict,
    parse_blueprint,
)
from .pipeline import (
    BackgroundOverrides,
    Job,
    MalformedJob,
    Pipeline,
    StageFailed,
    StaleVersion,
    StateTerminal,
    UnknownJob,
    WrongState,
    scale_slug,
)
from .typography import (
    InvalidEdit,
    InvalidStyleValue,
    ParseError,
    ScaleOutOfRange,
    UnknownNode,
    edit_from_json,
    serialize_poster,
)

PAGE_SIZE = 50

_STYLE_BY_WIRE = {s.value: s for s in StyleId}


class ApiError(Exception):
    """Carried application error: a documented code plus HTTP status."""

    def __init__(self, status: int, code: str, message: str,
                 stage: str | None = None, job_version: int | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.stage = stage
        self.job_version = job_version

    def to_response(self) -> JSONResponse:
        body = {"code": self.code, "message": self.message}
        if self.stage is not None:
            body["stage"] = self.stage
        if self.job_version is not None:
            body["job_version"] = self.job_version
        return JSONResponse(status_code=self.status, content=body)


def _translate(exc: Exception) -> ApiError:
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, StageFailed):
        inner = _translate(exc.cause)
        inner.stage = exc.stage
        inner.job_version = exc.job.version
        return inner
    if isinstance(exc, StaleVersion):
        return ApiError(409, "stale_version", str(exc), job_version=exc.stored)
    if isinstance(exc, (WrongState, StateTerminal)):
        return ApiError(409, "wrong_state", str(exc))
    if isinstance(exc, (UnknownJob, UnknownNode)):
        return ApiError(404, "not_found", str(exc))
    if isinstance(exc, BackendTimeout):
        return ApiError(504, "backend_timeout", str(exc))
    if isinstance(exc, (BackendUnreachable, BackendRejected)):
        return ApiError(502, "backend_unreachable" if isinstance(exc, BackendUnreachable) else "backend_rejected", str(exc))
    if isinstance(exc, (InvalidBackendOutput, TextCoverageViolation, ParseFailure, ResolutionMismatch)):
        return ApiError(422, "invalid_backend_output", str(exc))
    if isinstance(exc, ScaleOutOfRange):
        return ApiError(400, "scale_out_of_range", str(exc))
    if isinstance(exc, (BlueprintError, ParseError, InvalidEdit, InvalidStyleValue, MalformedJob)):
        return ApiError(400, "validation_error", str(exc))
    if isinstance(exc, PosterForgeError):
        return ApiError(400, "validation_error", str(exc))
    raise exc


def job_summary(job: Job) -> dict:
    return {
        "id": job.id,
        "version": job.version,
        "state": {"name": job.state.name, "stage": job.state.stage, "reason": job.state.reason},
        "requirement": {
            "text": job.requirement.text,
            "detail_level": job.requirement.detail_level.value if job.requirement.detail_level else None,
            "locale": job.requirement.locale,
        },
        "seeds": {"background_seed": job.seeds.background_seed},
        "has_blueprint": job.blueprint is not None,
        "has_background": job.background is not None,
        "has_poster": job.poster is not None,
        "background": None if job.background is None else {
            "id": job.background.id,
            "width": job.background.width,
            "height": job.background.height,
            "content_hash": job.background.content_hash,
        },
        "renders": [
            {"scale": scale_slug(r.scale).replace("_", "/"), "path": r.path, "digest": r.digest}
            for r in job.renders
        ],
        "edit_count": len(job.edit_history),
        "timings": [{"stage": s, "seconds": t} for s, t in job.timings],
    }


def _require_if_match(request: Request, job: Job) -> None:
    header = request.headers.get("if-match")
    if header is None:
        raise ApiError(400, "validation_error", "mutating routes require an If-Match header",
                       job_version=job.version)
    try:
        version = int(header.strip().strip('"'))
    except ValueError:
        raise ApiError(400, "validation_error", f"If-Match must be an integer version, got {header!r}")
    if version != job.version:
        raise ApiError(409, "stale_version",
                       f"If-Match {version} does not match current version {job.version}",
                       job_version=job.version)


def _parse_requirement(payload: dict) -> UserRequirement:
    if not isinstance(payload, dict):
        raise ApiError(400, "validation_error", "request body must be a JSON object")
    req = payload.get("requirement", payload)
    if not isinstance(req, dict) or not isinstance(req.get("text"), str):
        raise ApiError(400, "validation_error", "requirement.text (string) is required")
    level = req.get("detail_level")
    if level is not None:
        try:
            level = DetailLevel(level)
        except ValueError:
            raise ApiError(400, "validation_error", f"unknown detail level {level!r}")
    try:
        return UserRequirement(text=req["text"], detail_level=level, locale=req.get("locale", "zh"))
    except ValueError as exc:
        raise ApiError(400, "validation_error", str(exc))


def create_app(pipeline: Pipeline, app_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="posterforge", docs_url=None, redoc_url=None)

    @app.exception_handler(PosterForgeError)
    async def _domain_errors(request: Request, exc: PosterForgeError):
        return _translate(exc).to_response()

    @app.exception_handler(ApiError)
    async def _api_errors(request: Request, exc: ApiError):
        return exc.to_response()

    def load_job(job_id: str) -> Job:
        try:
            return pipeline.store.load(job_id)
        except UnknownJob as exc:
            raise ApiError(404, "not_found", str(exc))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/jobs", status_code=201)
    async def create_job(request: Request):
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "validation_error", "request body must be JSON")
        job = pipeline.create_job(_parse_requirement(payload))
        return job_summary(job)

    @app.get("/jobs")
    def list_jobs(page: int = 0):
        ids = pipeline.store.list_ids()
        window = ids[page * PAGE_SIZE:(page + 1) * PAGE_SIZE]
        return {
            "page": page,
            "page_size": PAGE_SIZE,
            "total": len(ids),
            "jobs": [job_summary(pipeline.store.load(i)) for i in window],
        }

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return job_summary(load_job(job_id))

    @app.post("/jobs/{job_id}/advance")
    def advance(job_id: str, request: Request):
        job = load_job(job_id)
        _require_if_match(request, job)
        new = pipeline.advance(job)
        return job_summary(new)

    @app.get("/jobs/{job_id}/blueprint")
    def get_blueprint(job_id: str):
        job = load_job(job_id)
        if job.blueprint is None:
            raise ApiError(404, "not_found", f"job {job_id} has no blueprint yet")
        return blueprint_to_dict(job.blueprint)

    @app.put("/jobs/{job_id}/blueprint")
    async def put_blueprint(job_id: str, request: Request):
        job = load_job(job_id)
        _require_if_match(request, job)
        body = await request.body()
        bp = parse_blueprint(body, mode="strict")
        new = pipeline.set_blueprint(job, bp)
        return job_summary(new)

    @app.post("/jobs/{job_id}/background")
    async def post_background(job_id: str, request: Request):
        job = load_job(job_id)
        _require_if_match(request, job)
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("image")
            if upload is None:
                raise ApiError(400, "validation_error", "multipart upload needs an 'image' field")
            data = await upload.read()
            new = pipeline.attach_background_override(job, data)
        elif content_type.startswith("image/"):
            data = await request.body()
            new = pipeline.attach_background_override(job, data)
        else:
            try:
                payload = await request.json()
            except json.JSONDecodeError:
                raise ApiError(400, "validation_error", "expected JSON overrides or an image upload")
            if not isinstance(payload, dict):
                raise ApiError(400, "validation_error", "overrides must be a JSON object")
            style = payload.get("style")
            if style is not None:
                if style not in _STYLE_BY_WIRE:
                    raise ApiError(400, "validation_error", f"unknown style {style!r}")
                style = _STYLE_BY_WIRE[style]
            seed = payload.get("seed")
            if seed is not None and not isinstance(seed, int):
                raise ApiError(400, "validation_error", "seed must be an integer")
            caption = payload.get("caption")
            if caption is not None and (not isinstance(caption, str) or not caption):
                raise ApiError(400, "validation_error", "caption must be a non-empty string")
            overrides = BackgroundOverrides(caption=caption, style=style, seed=seed)
            new = pipeline.regenerate_background(job, overrides)
        return job_summary(new)

    @app.get("/jobs/{job_id}/poster.html")
    def get_poster(job_id: str):
        job = load_job(job_id)
        if job.poster is None:
            raise ApiError(404, "not_found", f"job {job_id} has no poster yet")
        return Response(content=serialize_poster(job.poster), media_type="text/html; charset=utf-8")

    @app.patch("/jobs/{job_id}/poster")
    async def patch_poster(job_id: str, request: Request):
        job = load_job(job_id)
        _require_if_match(request, job)
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "validation_error", "request body must be JSON")
        if not isinstance(payload, dict) or not isinstance(payload.get("edits"), list) or not payload["edits"]:
            raise ApiError(400, "validation_error", "body must be {\"edits\": [EditOp, ...]}")
        edits = [edit_from_json(e) for e in payload["edits"]]
        new = pipeline.edit_layout_batch(job, edits)
        return job_summary(new)

    @app.get("/jobs/{job_id}/render")
    def get_render(job_id: str, scale: str = "1"):
        job = load_job(job_id)
        try:
            factor = Fraction(scale) if "/" not in scale else Fraction(
                int(scale.split("/")[0]), int(scale.split("/")[1]))
        except (ValueError, ZeroDivisionError):
            raise ApiError(400, "validation_error", f"bad scale {scale!r}")
        if factor <= 0:
            raise ApiError(400, "validation_error", "scale must be positive")
        entry = next((r for r in job.renders if r.scale == factor), None)
        if entry is not None:
            data = pipeline.store.read_blob(job.id, entry.path)
            if data is not None:
                return Response(content=data, media_type="image/png")
        new = pipeline.render(job, factor)
        data = pipeline.store.read_blob(new.id, new.renders[-1].path)
        return Response(content=data, media_type="image/png")

    if app_dir is not None and Path(app_dir).is_dir():
        app.mount("/app", StaticFiles(directory=str(app_dir), html=True), name="studio")

    return app
