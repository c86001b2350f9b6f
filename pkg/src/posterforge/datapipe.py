"""Corpus curation: asset verification, resolution/aspect bucketing,
embedding dedup, aesthetic filtering, prompt sampling and manifest I/O.

Curation never mutates in place: each step maps records to kept/dropped
decisions so a pipeline run is reviewable and reproducible. Embeddings and
aesthetic scores are ingested metadata; no model runs here.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import PosterForgeError
from .blueprint import DetailLevel
from .metrics.features import FeatureSet

MANIFEST_VERSION = 1

ALLOWED_FORMATS = ("PNG", "JPEG", "WEBP")


class DatapipeError(PosterForgeError):
    pass


class MissingEmbedding(DatapipeError):
    def __init__(self, asset_id: str):
        super().__init__(f"no embedding for asset {asset_id!r}")
        self.asset_id = asset_id


class MalformedManifest(DatapipeError):
    def __init__(self, path, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class VersionUnsupported(DatapipeError):
    def __init__(self, version):
        super().__init__(f"manifest version {version!r} is not supported")
        self.version = version


@dataclass(frozen=True)
class AssetRecord:
    id: str
    path: str
    width: int
    height: int
    format: str
    aesthetic_score: float | None = None
    embedding_id: str | None = None
    extras: dict = field(default_factory=dict, compare=True)


@dataclass(frozen=True)
class BucketKey:
    resolution_tier: str
    aspect_class: str


@dataclass(frozen=True)
class PromptTriplet:
    basic: str
    medium: str
    detailed: str

    def __post_init__(self):
        if not (self.basic and self.medium and self.detailed):
            raise ValueError("all three prompt levels must be non-empty")

    def get(self, level: DetailLevel) -> str:
        return {DetailLevel.BASIC: self.basic, DetailLevel.MEDIUM: self.medium,
                DetailLevel.DETAILED: self.detailed}[level]


@dataclass(frozen=True)
class Manifest:
    version: int = MANIFEST_VERSION
    records: tuple[AssetRecord, ...] = ()
    prompts: dict[str, PromptTriplet] = field(default_factory=dict)
    notes: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "notes", tuple(self.notes))
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValueError(f"duplicate record id {dup!r}")
        unknown = set(self.prompts) - set(ids)
        if unknown:
            raise ValueError(f"prompts reference unknown record ids: {sorted(unknown)}")


# --- verification ------------------------------------------------------------

@dataclass(frozen=True)
class VerifyPolicy:
    min_width: int = 512
    min_height: int = 512
    allowed_formats: tuple[str, ...] = ALLOWED_FORMATS


@dataclass(frozen=True)
class Accept:
    pass


@dataclass(frozen=True)
class Reject:
    reasons: tuple[str, ...]


def verify_asset(rec: AssetRecord, policy: VerifyPolicy) -> Accept | Reject:
    """Check resolution and file format; a rejection lists every violated rule."""
    reasons = []
    if rec.width < policy.min_width:
        reasons.append(f"width<{policy.min_width}")
    if rec.height < policy.min_height:
        reasons.append(f"height<{policy.min_height}")
    if rec.format not in policy.allowed_formats:
        reasons.append("format not allowed")
    return Reject(tuple(reasons)) if reasons else Accept()


# --- bucketing ---------------------------------------------------------------

OTHER_CLASS = "other"


@dataclass(frozen=True)
class BucketPolicy:
    tiers: tuple[tuple[str, int], ...]          # (label, min_pixels)
    ratios: tuple[tuple[str, float], ...]       # (label, width/height)
    ratio_tolerance: float = 0.05

    @classmethod
    def default(cls) -> "BucketPolicy":
        return cls(
            tiers=(("sd", 0), ("hd", 1_000_000), ("uhd", 4_000_000)),
            ratios=(("2:3", 2 / 3), ("3:4", 3 / 4), ("1:1", 1.0), ("4:3", 4 / 3), ("3:2", 3 / 2)),
        )


def bucket_key(width: int, height: int, policy: BucketPolicy) -> BucketKey:
    area = width * height
    tier = OTHER_CLASS
    best_pixels = -1
    for label, min_pixels in policy.tiers:
        if min_pixels <= area and min_pixels > best_pixels:
            tier = label
            best_pixels = min_pixels
    ratio = width / height
    aspect = OTHER_CLASS
    best_dev = math.inf
    for label, target in policy.ratios:
        dev = abs(ratio - target)
        if dev < best_dev:
            best_dev = dev
            aspect = label
    if best_dev > policy.ratio_tolerance:
        aspect = OTHER_CLASS
    return BucketKey(resolution_tier=tier, aspect_class=aspect)


def bucket_assets(records, policy: BucketPolicy) -> dict[BucketKey, list[str]]:
    """Total assignment: every record lands in exactly one bucket."""
    if not policy.tiers or not policy.ratios:
        raise ValueError("bucket policy needs at least one tier and one ratio")
    out: dict[BucketKey, list[str]] = {}
    for rec in records:
        out.setdefault(bucket_key(rec.width, rec.height, policy), []).append(rec.id)
    return out


# --- dedup -------------------------------------------------------------------

@dataclass(frozen=True)
class DedupResult:
    kept: tuple[str, ...]
    clusters: dict[str, str]  # dropped id -> kept id that triggered the drop


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 1.0 if na == nb else 0.0
    return float(np.dot(a, b) / (na * nb))

def dedup(ids, embeddings: FeatureSet, threshold: float) -> DedupResult:
    """Greedy near-duplicate removal, scanning ids in ascending order.

    An item is kept iff its cosine similarity to every previously kept item
    stays below ``threshold``; a dropped item records the first kept item
    that crossed the line.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    vectors = embeddings.by_id()
    for i in ids:
        if i not in vectors:
            raise MissingEmbedding(i)
    kept: list[str] = []
    clusters: dict[str, str] = {}
    for i in sorted(ids):
        v = vectors[i]
        winner = next((k for k in kept if _cosine(v, vectors[k]) >= threshold), None)
        if winner is None:
            kept.append(i)
        else:
            clusters[i] = winner
    return DedupResult(kept=tuple(kept), clusters=clusters)


# --- aesthetic filter ----------------------------------------------------------

@dataclass(frozen=True)
class FilterResult:
    kept: tuple[str, ...]
    unscored: tuple[str, ...]


def aesthetic_filter(records, min_score: float) -> FilterResult:
    """Keep records scoring at least ``min_score``; unscored records are
    dropped and reported. ``-inf`` disables the threshold but still drops
    unscored records."""
    kept, unscored = [], []
    for rec in records:
        if rec.aesthetic_score is None:
            unscored.append(rec.id)
        elif rec.aesthetic_score >= min_score:
            kept.append(rec.id)
    return FilterResult(kept=tuple(kept), unscored=tuple(unscored))


# --- prompt sampling -----------------------------------------------------------

_LEVELS = (DetailLevel.BASIC, DetailLevel.MEDIUM, DetailLevel.DETAILED)


def sample_prompt(triplet: PromptTriplet, rng: random.Random) -> tuple[DetailLevel, str]:
    """Uniformly pick one of the three hierarchy levels."""
    level = _LEVELS[rng.randrange(3)]
    return level, triplet.get(level)


# --- manifest I/O ----------------------------------------------------------------

_RECORD_KEYS = {"id", "path", "width", "height", "format", "aesthetic_score", "embedding_id"}
_MANIFEST_KEYS = {"version", "records", "prompts", "notes"}


def manifest_to_dict(m: Manifest) -> dict:
    records = []
    for r in m.records:
        obj = {"id": r.id, "path": r.path, "width": r.width, "height": r.height, "format": r.format}
        if r.aesthetic_score is not None:
            obj["aesthetic_score"] = r.aesthetic_score
        if r.embedding_id is not None:
            obj["embedding_id"] = r.embedding_id
        obj.update(r.extras)
        records.append(obj)
    out = {
        "version": m.version,
        "records": records,
        "prompts": {
            i: {"basic": t.basic, "medium": t.medium, "detailed": t.detailed}
            for i, t in sorted(m.prompts.items())
        },
        "notes": list(m.notes),
    }
    out.update(m.extras)
    return out


def write_manifest(m: Manifest, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(manifest_to_dict(m), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    os.replace(tmp, path)


def read_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedManifest(path, f"cannot read: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(path, f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedManifest(path, "top-level value must be an object")
    version = doc.get("version")
    if version != MANIFEST_VERSION:
        raise VersionUnsupported(version)
    records = []
    raw_records = doc.get("records", [])
    if not isinstance(raw_records, list):
        raise MalformedManifest(path, "records must be an array")
    for i, obj in enumerate(raw_records):
        if not isinstance(obj, dict):
            raise MalformedManifest(path, f"records[{i}] must be an object")
        try:
            records.append(AssetRecord(
                id=str(obj["id"]),
                path=str(obj["path"]),
                width=int(obj["width"]),
                height=int(obj["height"]),
                format=str(obj["format"]),
                aesthetic_score=float(obj["aesthetic_score"]) if "aesthetic_score" in obj else None,
                embedding_id=str(obj["embedding_id"]) if "embedding_id" in obj else None,
                extras={k: v for k, v in obj.items() if k not in _RECORD_KEYS},
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedManifest(path, f"records[{i}]: {exc}") from exc
        if records[-1].width < 1 or records[-1].height < 1:
            raise MalformedManifest(path, f"records[{i}]: dims must be >= 1")
    prompts = {}
    raw_prompts = doc.get("prompts", {})
    if not isinstance(raw_prompts, dict):
        raise MalformedManifest(path, "prompts must be an object")
    for rec_id, t in raw_prompts.items():
        try:
            prompts[rec_id] = PromptTriplet(basic=t["basic"], medium=t["medium"], detailed=t["detailed"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedManifest(path, f"prompts[{rec_id!r}]: {exc}") from exc
    notes = doc.get("notes", [])
    if not isinstance(notes, list) or not all(isinstance(n, str) for n in notes):
        raise MalformedManifest(path, "notes must be an array of strings")
    try:
        return Manifest(
            version=version,
            records=tuple(records),
            prompts=prompts,
            notes=tuple(notes),
            extras={k: v for k, v in doc.items() if k not in _MANIFEST_KEYS},
        )
    except ValueError as exc:
        raise MalformedManifest(path, str(exc)) from exc


def restrict_manifest(m: Manifest, keep_ids) -> Manifest:
    """A manifest narrowed to ``keep_ids`` (prompts filtered accordingly)."""
    keep = set(keep_ids)
    return replace(
        m,
        records=tuple(r for r in m.records if r.id in keep),
        prompts={i: t for i, t in m.prompts.items() if i in keep},
    )
