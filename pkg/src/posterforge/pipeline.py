"""Three-stage job orchestration with persisted artifacts.

A job walks Created -> BlueprintReady -> BackgroundReady -> LayoutReady ->
Rendered, with LayoutReady <-> Rendered re-render cycles and any -> Failed.
Every mutation bumps the version and persists through a compare-and-swap
store (temp file + rename), so concurrent writers race safely and a crash
mid-save leaves the previous version readable.

Job directory layout: manifest.json (the job minus bulk assets),
blueprint.json, background.png, poster.html, renders/scale-{s}.png.
"""

from __future__ import annotations

import json
import os
import random
import time
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Callable, Protocol

from . import PosterForgeError
from .backends import (
    BackendError,
    Backends,
    ImageRef,
    ResolutionMismatch,
    generate_background,
    generate_blueprint,
    generate_layout,
)
from .blueprint import (
    DesignBlueprint,
    DetailLevel,
    UserRequirement,
    parse_blueprint,
    serialize_blueprint,
    validate_blueprint,
)
from .typography import (
    EditOp,
    GlyphProvider,
    PosterDocument,
    apply_edit,
    edit_from_json,
    edit_to_json,
    parse_poster_html,
    rasterize,
    serialize_poster,
)
from .typography.glyphs import DEFAULT_GLYPHS
from .typography.png import png_dimensions
from .typography.units import format_fraction

import hashlib


class PipelineError(PosterForgeError):
    pass


class WrongState(PipelineError):
    def __init__(self, op: str, state: "JobState"):
        super().__init__(f"operation {op!r} not allowed in state {state.name}")
        self.op = op
        self.state = state


class StateTerminal(PipelineError):
    def __init__(self, state: "JobState"):
        super().__init__(f"job is terminal in state {state.name}")
        self.state = state


class StaleVersion(PipelineError):
    def __init__(self, job_id: str, stored: int, attempted: int):
        super().__init__(
            f"job {job_id}: stored version {stored} does not precede attempted {attempted}"
        )
        self.job_id = job_id
        self.stored = stored
        self.attempted = attempted


class UnknownJob(PipelineError):
    def __init__(self, job_id: str):
        super().__init__(f"no job with id {job_id!r}")
        self.job_id = job_id


class MalformedJob(PipelineError):
    pass


class StageFailed(PipelineError):
    """Raised by advance after the job was persisted in Failed state."""

    def __init__(self, stage: str, cause: Exception, job: "Job"):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.job = job


# --- states -------------------------------------------------------------------

@dataclass(frozen=True)
class JobState:
    name: str
    stage: str | None = None
    reason: str | None = None


CREATED = JobState("Created")
BLUEPRINT_READY = JobState("BlueprintReady")
BACKGROUND_READY = JobState("BackgroundReady")
LAYOUT_READY = JobState("LayoutReady")
RENDERED = JobState("Rendered")


def failed(stage: str, reason: str) -> JobState:
    return JobState("Failed", stage=stage, reason=reason)


_FORWARD = {
    ("Created", "BlueprintReady"),
    ("BlueprintReady", "BackgroundReady"),
    ("BackgroundReady", "LayoutReady"),
    ("LayoutReady", "Rendered"),
    ("Rendered", "LayoutReady"),
}


def transition_legal(src: JobState, dst: JobState) -> bool:
    """Identity moves are not transitions; Failed is reachable from anywhere."""
    if src.name == dst.name and dst.name != "Failed":
        return True
    if dst.name == "Failed":
        return src.name != "Failed"
    return (src.name, dst.name) in _FORWARD


# --- job ------------------------------------------------------------------------

@dataclass(frozen=True)
class Seeds:
    background_seed: int


@dataclass(frozen=True)
class RenderEntry:
    scale: Fraction
    path: str
    digest: str


@dataclass(frozen=True)
class EditEntry:
    at: str  # ISO-8601 UTC
    edit: EditOp


@dataclass(frozen=True)
class Job:
    id: str
    requirement: UserRequirement
    state: JobState
    seeds: Seeds
    version: int = 1
    blueprint: DesignBlueprint | None = None
    background: ImageRef | None = None
    background_override: ImageRef | None = None
    poster: PosterDocument | None = None
    renders: tuple[RenderEntry, ...] = ()
    edit_history: tuple[EditEntry, ...] = ()
    timings: tuple[tuple[str, float], ...] = ()


def scale_slug(scale: Fraction) -> str:
    """Filename-safe canonical scale: "1", "0.5" or "1_3"."""
    dec = format_fraction(scale)
    return dec if dec is not None else f"{scale.numerator}_{scale.denominator}"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


# --- (de)serialization ------------------------------------------------------------

def _requirement_to_json(req: UserRequirement) -> dict:
    return {
        "text": req.text,
        "detail_level": req.detail_level.value if req.detail_level else None,
        "locale": req.locale,
    }


def _requirement_from_json(d: dict) -> UserRequirement:
    level = d.get("detail_level")
    return UserRequirement(
        text=d["text"],
        detail_level=DetailLevel(level) if level else None,
        locale=d.get("locale", "zh"),
    )


def _image_meta(ref: ImageRef | None) -> dict | None:
    if ref is None:
        return None
    return {
        "id": ref.id,
        "width": ref.width,
        "height": ref.height,
        "content_hash": ref.content_hash,
        "format": ref.format,
    }


def job_files(job: Job) -> dict[str, bytes | None]:
    """Everything save() must write; manifest.json last (the commit point).

    A None value requests deletion of that path.
    """
    files: dict[str, bytes | None] = {}
    files["blueprint.json"] = serialize_blueprint(job.blueprint) if job.blueprint else None
    files["background.png"] = job.background.data if job.background else None
    files["background_override.png"] = job.background_override.data if job.background_override else None
    files["poster.html"] = serialize_poster(job.poster).encode("utf-8") if job.poster else None
    manifest = {
        "id": job.id,
        "version": job.version,
        "state": {"name": job.state.name, "stage": job.state.stage, "reason": job.state.reason},
        "requirement": _requirement_to_json(job.requirement),
        "seeds": {"background_seed": job.seeds.background_seed},
        "background": _image_meta(job.background),
        "background_override": _image_meta(job.background_override),
        "renders": [
            {"scale": scale_slug(r.scale).replace("_", "/"), "path": r.path, "digest": r.digest}
            for r in job.renders
        ],
        "edit_history": [{"at": e.at, "edit": edit_to_json(e.edit)} for e in job.edit_history],
        "timings": [[stage, seconds] for stage, seconds in job.timings],
    }
    files["manifest.json"] = (
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    ).encode("utf-8")
    return files


def _parse_scale(text: str) -> Fraction:
    if "/" in text:
        num, _, den = text.partition("/")
        return Fraction(int(num), int(den))
    return Fraction(text)


def job_from_blobs(read: Callable[[str], bytes | None]) -> Job:
    raw = read("manifest.json")
    if raw is None:
        raise MalformedJob("manifest.json missing")
    try:
        m = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJob(f"manifest.json unreadable: {exc}") from exc

    def image_from(meta: dict | None, blob_name: str) -> ImageRef | None:
        if meta is None:
            return None
        data = read(blob_name)
        if data is None:
            raise MalformedJob(f"{blob_name} missing for recorded image {meta.get('id')!r}")
        digest = hashlib.sha256(data).hexdigest()
        if digest != meta["content_hash"]:
            raise MalformedJob(f"{blob_name} does not match recorded content hash")
        return ImageRef(
            id=meta["id"], width=meta["width"], height=meta["height"],
            content_hash=meta["content_hash"], data=data, format=meta.get("format", "PNG"),
        )

    try:
        state = JobState(
            name=m["state"]["name"], stage=m["state"].get("stage"), reason=m["state"].get("reason"),
        )
        blueprint_raw = read("blueprint.json")
        poster_raw = read("poster.html")
        job = Job(
            id=m["id"],
            requirement=_requirement_from_json(m["requirement"]),
            state=state,
            seeds=Seeds(background_seed=int(m["seeds"]["background_seed"])),
            version=int(m["version"]),
            blueprint=parse_blueprint(blueprint_raw) if blueprint_raw is not None else None,
            background=image_from(m.get("background"), "background.png"),
            background_override=image_from(m.get("background_override"), "background_override.png"),
            poster=parse_poster_html(poster_raw.decode("utf-8")) if poster_raw is not None else None,
            renders=tuple(
                RenderEntry(scale=_parse_scale(r["scale"]), path=r["path"], digest=r["digest"])
                for r in m.get("renders", [])
            ),
            edit_history=tuple(
                EditEntry(at=e["at"], edit=edit_from_json(e["edit"])) for e in m.get("edit_history", [])
            ),
            timings=tuple((t[0], float(t[1])) for t in m.get("timings", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedJob(f"manifest.json malformed: {exc}") from exc
    return job


# --- stores -------------------------------------------------------------------------

class JobStore(Protocol):
    def save(self, job: Job) -> None: ...
    def load(self, job_id: str) -> Job: ...
    def list_ids(self) -> list[str]: ...
    def write_blob(self, job_id: str, relpath: str, data: bytes) -> None: ...
    def read_blob(self, job_id: str, relpath: str) -> bytes | None: ...
    def delete_blobs(self, job_id: str, prefix: str) -> None: ...


def _check_cas(stored_version: int | None, job: Job) -> None:
    expected = (stored_version or 0) + 1
    if job.version != expected:
        raise StaleVersion(job.id, stored_version or 0, job.version)


class FileJobStore:
    """Directory-per-job store: {root}/{job-id}/..., atomic via temp+rename."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _stored_version(self, job_id: str) -> int | None:
        path = self.job_dir(job_id) / "manifest.json"
        if not path.exists():
            return None
        try:
            return int(json.loads(path.read_text(encoding="utf-8"))["version"])
        except (json.JSONDecodeError, KeyError, ValueError, OSError) as exc:
            raise MalformedJob(f"{path}: {exc}") from exc

    def _write_atomic(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)

    def save(self, job: Job) -> None:
        _check_cas(self._stored_version(job.id), job)
        directory = self.job_dir(job.id)
        files = job_files(job)
        manifest = files.pop("manifest.json")
        for name, data in files.items():
            target = directory / name
            if data is None:
                target.unlink(missing_ok=True)
            else:
                self._write_atomic(target, data)
        assert manifest is not None
        self._write_atomic(directory / "manifest.json", manifest)

    def load(self, job_id: str) -> Job:
        directory = self.job_dir(job_id)
        if not (directory / "manifest.json").exists():
            raise UnknownJob(job_id)

        def read(relpath: str) -> bytes | None:
            path = directory / relpath
            return path.read_bytes() if path.exists() else None

        return job_from_blobs(read)

    def list_ids(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name for p in self.root.iterdir() if (p / "manifest.json").exists()
        )

    def write_blob(self, job_id: str, relpath: str, data: bytes) -> None:
        self._write_atomic(self.job_dir(job_id) / relpath, data)

    def read_blob(self, job_id: str, relpath: str) -> bytes | None:
        path = self.job_dir(job_id) / relpath
        return path.read_bytes() if path.exists() else None

    def delete_blobs(self, job_id: str, prefix: str) -> None:
        base = self.job_dir(job_id)
        if not base.is_dir():
            return
        for p in sorted(base.rglob("*")):
            if p.is_file() and str(p.relative_to(base)).startswith(prefix):
                p.unlink(missing_ok=True)


class SingleDirStore(FileJobStore):
    """A store pinned to exactly one directory, for one-shot CLI jobs."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def job_dir(self, job_id: str) -> Path:
        return self.directory

    def list_ids(self) -> list[str]:
        if (self.directory / "manifest.json").exists():
            job = self.load_only()
            return [job.id]
        return []

    def load_only(self) -> Job:
        def read(relpath: str) -> bytes | None:
            path = self.directory / relpath
            return path.read_bytes() if path.exists() else None

        if not (self.directory / "manifest.json").exists():
            raise UnknownJob(str(self.directory))
        return job_from_blobs(read)


class MemoryJobStore:
    """In-memory store running the exact same codec as the file store."""

    def __init__(self):
        self._blobs: dict[tuple[str, str], bytes] = {}
        self._versions: dict[str, int] = {}

    def save(self, job: Job) -> None:
        _check_cas(self._versions.get(job.id), job)
        for name, data in job_files(job).items():
            key = (job.id, name)
            if data is None:
                self._blobs.pop(key, None)
            else:
                self._blobs[key] = data
        self._versions[job.id] = job.version

    def load(self, job_id: str) -> Job:
        if job_id not in self._versions:
            raise UnknownJob(job_id)
        return job_from_blobs(lambda rel: self._blobs.get((job_id, rel)))

    def list_ids(self) -> list[str]:
        return sorted(self._versions)

    def write_blob(self, job_id: str, relpath: str, data: bytes) -> None:
        self._blobs[(job_id, relpath)] = data

    def read_blob(self, job_id: str, relpath: str) -> bytes | None:
        return self._blobs.get((job_id, relpath))

    def delete_blobs(self, job_id: str, prefix: str) -> None:
        for key in [k for k in self._blobs if k[0] == job_id and k[1].startswith(prefix)]:
            del self._blobs[key]


# --- overrides ------------------------------------------------------------------------

@dataclass(frozen=True)
class BackgroundOverrides:
    caption: str | None = None
    style: object | None = None  # StyleId
    seed: int | None = None


# --- the pipeline ------------------------------------------------------------------------

class Pipeline:
    """Stage runner bound to a store, a backend suite and a glyph provider."""

    def __init__(
        self,
        store: JobStore,
        backends: Backends,
        seed: int | None = None,
        glyphs: GlyphProvider = DEFAULT_GLYPHS,
    ):
        self.store = store
        self.backends = backends
        self.glyphs = glyphs
        self._rng = random.Random(seed)

    # -- helpers --

    def _persist(self, job: Job) -> Job:
        self.store.save(job)
        return job

    def _bump(self, job: Job, **changes) -> Job:
        return replace(job, version=job.version + 1, **changes)

    def _assets(self, job: Job) -> dict[str, bytes]:
        return {job.background.id: job.background.data} if job.background else {}

    # -- operations --

    def create_job(self, req: UserRequirement) -> Job:
        job = Job(
            id=str(uuid.uuid4()),
            requirement=req,
            state=CREATED,
            seeds=Seeds(background_seed=self._rng.getrandbits(64)),
        )
        return self._persist(job)

    def attach_background_override(self, job: Job, png_data: bytes) -> Job:
        """Adopt an uploaded image as the stage-2 result (now or at advance)."""
        try:
            width, height = png_dimensions(png_data)
        except Exception as exc:
            raise MalformedJob(f"uploaded background is not a decodable image: {exc}") from exc
        ref = ImageRef.from_png(png_data, width, height, id_prefix="upload")
        if job.blueprint is not None:
            res = job.blueprint.params.resolution
            if (width, height) != (res.width, res.height):
                raise ResolutionMismatch((width, height), (res.width, res.height))
        if job.state.name in ("BackgroundReady", "LayoutReady", "Rendered"):
            return self._adopt_background(job, ref, seed=None)
        if job.state.name in ("Created", "BlueprintReady"):
            return self._persist(self._bump(job, background_override=ref))
        raise WrongState("attach_background_override", job.state)

    def set_blueprint(self, job: Job, bp: DesignBlueprint) -> Job:
        if job.state.name not in ("Created", "BlueprintReady"):
            raise WrongState("set_blueprint", job.state)
        violations = validate_blueprint(bp)
        if violations:
            raise MalformedJob(f"blueprint invalid: {violations}")
        return self._persist(self._bump(job, blueprint=bp, state=BLUEPRINT_READY))

    def advance(self, job: Job) -> Job:
        if job.state.name in ("Rendered", "Failed"):
            raise StateTerminal(job.state)
        stage = {
            "Created": "blueprint",
            "BlueprintReady": "background",
            "BackgroundReady": "layout",
            "LayoutReady": "render",
        }[job.state.name]
        started = time.monotonic()
        try:
            if stage == "render":
                return self.render(job, Fraction(1))
            if stage == "blueprint":
                bp = generate_blueprint(job.requirement, self.backends.blueprint)
                new = self._bump(job, blueprint=bp, state=BLUEPRINT_READY)
            elif stage == "background":
                bp = job.blueprint
                assert bp is not None
                if job.background_override is not None:
                    ref = job.background_override
                    res = bp.params.resolution
                    if (ref.width, ref.height) != (res.width, res.height):
                        raise ResolutionMismatch((ref.width, ref.height), (res.width, res.height))
                    new = self._bump(job, background=ref, background_override=None,
                                     state=BACKGROUND_READY)
                else:
                    ref = generate_background(
                        bp.background,
                        bp.params.resolution,
                        job.seeds.background_seed,
                        self.backends.background_for(bp.background.style),
                    )
                    new = self._bump(job, background=ref, state=BACKGROUND_READY)
            else:
                bp = job.blueprint
                assert bp is not None and job.background is not None
                html = generate_layout(bp, job.background, self.backends.layout)
                poster = parse_poster_html(html, mode="strict")
                new = self._bump(job, poster=poster, state=LAYOUT_READY)
        except PipelineError:
            raise
        except PosterForgeError as exc:
            failed_job = self._bump(job, state=failed(stage, str(exc)))
            self._persist(failed_job)
            raise StageFailed(stage, exc, failed_job) from exc
        elapsed = time.monotonic() - started
        new = replace(new, timings=new.timings + ((stage, elapsed),))
        return self._persist(new)

    def edit_layout(self, job: Job, edit: EditOp) -> Job:
        return self.edit_layout_batch(job, [edit])

    def edit_layout_batch(self, job: Job, edits: list[EditOp]) -> Job:
        """Apply edits all-or-nothing: one version bump, renders invalidated."""
        if job.state.name not in ("LayoutReady", "Rendered"):
            raise WrongState("edit_layout", job.state)
        assert job.poster is not None
        poster = job.poster
        for edit in edits:
            poster = apply_edit(poster, edit)
        self.store.delete_blobs(job.id, "renders/")
        at = _now()
        new = self._bump(
            job,
            poster=poster,
            state=LAYOUT_READY,
            renders=(),
            edit_history=job.edit_history + tuple(EditEntry(at=at, edit=e) for e in edits),
        )
        return self._persist(new)

    def regenerate_background(self, job: Job, overrides: BackgroundOverrides) -> Job:
        if job.state.name not in ("BackgroundReady", "LayoutReady", "Rendered"):
            raise WrongState("regenerate_background", job.state)
        bp = job.blueprint
        assert bp is not None
        attrs = bp.background
        if overrides.caption is not None or overrides.style is not None:
            attrs = replace(
                attrs,
                caption=overrides.caption if overrides.caption is not None else attrs.caption,
                style=overrides.style if overrides.style is not None else attrs.style,
            )
        seed = overrides.seed if overrides.seed is not None else job.seeds.background_seed
        # Backend errors propagate with the job untouched.
        ref = generate_background(
            attrs, bp.params.resolution, seed, self.backends.background_for(attrs.style)
        )
        return self._adopt_background(job, ref, seed=seed)

    def _adopt_background(self, job: Job, ref: ImageRef, seed: int | None) -> Job:
        changes: dict = {"background": ref}
        if seed is not None:
            changes["seeds"] = Seeds(background_seed=seed)
        if job.poster is not None:
            changes["poster"] = replace(job.poster, background_color=None, background_image=ref.id)
            changes["state"] = LAYOUT_READY
            changes["renders"] = ()
            self.store.delete_blobs(job.id, "renders/")
        else:
            changes["state"] = BACKGROUND_READY
        return self._persist(self._bump(job, **changes))

    def render(self, job: Job, scale: Fraction) -> Job:
        if job.state.name not in ("LayoutReady", "Rendered"):
            raise WrongState("render", job.state)
        assert job.poster is not None
        started = time.monotonic()
        scale = Fraction(scale)
        raster = rasterize(job.poster, self.glyphs, scale, assets=self._assets(job))
        png = raster.to_png()
        path = f"renders/scale-{scale_slug(scale)}.png"
        self.store.write_blob(job.id, path, png)
        entry = RenderEntry(scale=scale, path=path, digest=hashlib.sha256(png).hexdigest())
        renders = tuple(r for r in job.renders if r.scale != scale) + (entry,)
        new = self._bump(job, renders=renders, state=RENDERED)
        new = replace(new, timings=new.timings + (("render", time.monotonic() - started),))
        return self._persist(new)

    def run_to_rendered(self, job: Job) -> Job:
        while job.state.name not in ("Rendered", "Failed"):
            job = self.advance(job)
        return job
