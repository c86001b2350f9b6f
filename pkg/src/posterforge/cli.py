"""Command-line entry points.

Machine output goes to stdout as JSON when ``--json`` is set; logs and
errors go to stderr. Exit codes: 0 success, 1 domain error, 2 usage error.
``POSTERFORGE_CONFIG`` (or ``--config``) points to a JSON file whose
sections mirror the flags; explicit flags win.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import PosterForgeError
from .backends import Backends, EndpointConfig, Mock, Remote
from .blueprint import DetailLevel, StyleId, UserRequirement
from .datapipe import (
    BucketPolicy,
    VerifyPolicy,
    aesthetic_filter,
    bucket_assets,
    dedup,
    read_manifest,
    restrict_manifest,
    sample_prompt,
    verify_asset,
    write_manifest,
)
from .metrics import document_overlap, frechet_distance, load_feature_set, score_text
from .metrics.features import FeatureSet
from .pipeline import FileJobStore, Pipeline, SingleDirStore, scale_slug
from .typography import edit_from_json, parse_poster_html, rasterize
from .typography.units import parse_rational

CONFIG_ENV = "POSTERFORGE_CONFIG"


def load_config(path: str | None) -> dict:
    source = path or os.environ.get(CONFIG_ENV)
    if not source:
        return {}
    try:
        return json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {source}: {exc}")


def _endpoint_from(cfg: dict) -> Remote:
    return Remote(EndpointConfig(
        base_url=cfg["base_url"],
        timeout=float(cfg.get("timeout", 120.0)),
        max_retries=int(cfg.get("max_retries", 2)),
        auth_token_env=cfg.get("auth_token_env"),
    ))


def build_backends(config: dict, mock: bool, seed: int | None) -> Backends:
    if mock or "backends" not in config:
        return Backends.mock(seed if seed is not None else 0)
    section = config["backends"]
    try:
        background = section["background"]
        by_style = {
            StyleId(name): _endpoint_from(cfg)
            for name, cfg in background.items()
            if name != "default"
        }
        return Backends(
            blueprint=_endpoint_from(section["blueprint"]),
            layout=_endpoint_from(section["layout"]),
            background_default=_endpoint_from(background["default"]),
            background_by_style=by_style,
        )
    except (KeyError, ValueError) as exc:
        raise click.ClickException(f"bad backends config: {exc}")


def _emit(ctx_json: bool, payload: dict, human: str) -> None:
    if ctx_json:
        click.echo(json.dumps(payload, ensure_ascii=False, sort_keys=True))
    else:
        click.echo(human)


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PosterForgeError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _parse_scale(text: str) -> Fraction:
    try:
        value = parse_rational(text)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    if value <= 0:
        raise click.BadParameter("scale must be positive")
    return value


@click.group()
@click.option("--json", "as_json", is_flag=True, help="Machine-readable JSON on stdout.")
@click.pass_context
def cli(ctx, as_json):
    """PosterForge: generate, render, edit and evaluate posters."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = as_json


@cli.command()
@click.option("--requirement", required=True, help="Natural-language poster request.")
@click.option("--detail", type=click.Choice(["basic", "medium", "detailed"]), default=None)
@click.option("--locale", default="zh", show_default=True)
@click.option("--mock", is_flag=True, help="Use deterministic mock backends.")
@click.option("--config", "config_path", default=None, help="JSON config file (or POSTERFORGE_CONFIG).")
@click.option("--seed", type=int, default=None, help="Seed for mock backends and background seed.")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Job output directory.")
@click.pass_context
@domain_errors
def generate(ctx, requirement, detail, locale, mock, config_path, seed, out):
    """Run the full pipeline for one requirement into OUT."""
    config = load_config(config_path)
    section = config.get("generate", {})
    if seed is None:
        seed = section.get("seed")
    mock = mock or bool(section.get("mock", False)) or "backends" not in config
    backends = build_backends(config, mock, seed)
    store = SingleDirStore(out)
    pipe = Pipeline(store, backends, seed=seed)
    req = UserRequirement(
        text=requirement,
        detail_level=DetailLevel(detail) if detail else None,
        locale=locale,
    )
    job = pipe.run_to_rendered(pipe.create_job(req))
    payload = {
        "id": job.id,
        "state": job.state.name,
        "out": str(Path(out)),
        "poster": str(Path(out) / "poster.html"),
        "renders": [{"scale": scale_slug(r.scale), "path": str(Path(out) / r.path), "digest": r.digest}
                    for r in job.renders],
    }
    _emit(ctx.obj["json"], payload,
          f"job {job.id} -> {job.state.name}; poster at {payload['poster']}")
    if job.state.name == "Failed":
        sys.exit(1)


@cli.command()
@click.option("--poster", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scale", default="1", show_default=True)
@click.option("--background", default=None, type=click.Path(exists=True, dir_okay=False),
              help="PNG for the poster's background image reference, if any.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.pass_context
@domain_errors
def render(ctx, poster, scale, background, out):
    """Rasterize a PosterHTML file to PNG."""
    doc = parse_poster_html(Path(poster).read_text(encoding="utf-8"), mode="strict")
    assets = {}
    if background and doc.background_image:
        assets[doc.background_image] = Path(background).read_bytes()
    raster = rasterize(doc, scale=_parse_scale(scale), assets=assets)
    Path(out).write_bytes(raster.to_png())
    _emit(ctx.obj["json"],
          {"out": out, "width": raster.width, "height": raster.height, "digest": raster.digest()},
          f"wrote {raster.width}x{raster.height} raster to {out}")


@cli.command()
@click.option("--job", "job_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--op", "op_json", required=True,
              help="EditOp JSON (or @file.json); a JSON array applies a batch.")
@click.pass_context
@domain_errors
def edit(ctx, job_dir, op_json):
    """Apply an edit operation to a stored job."""
    if op_json.startswith("@"):
        op_json = Path(op_json[1:]).read_text(encoding="utf-8")
    try:
        payload = json.loads(op_json)
    except json.JSONDecodeError as exc:
        raise click.BadParameter(f"--op is not valid JSON: {exc}")
    edits = [edit_from_json(e) for e in (payload if isinstance(payload, list) else [payload])]
    store = SingleDirStore(job_dir)
    pipe = Pipeline(store, Backends.mock(0))
    job = store.load_only()
    job = pipe.edit_layout_batch(job, edits)
    _emit(ctx.obj["json"],
          {"id": job.id, "state": job.state.name, "version": job.version},
          f"applied {len(edits)} edit(s); job now {job.state.name} v{job.version}")


@cli.group(name="eval")
def eval_group():
    """Evaluation metrics."""


@eval_group.command("text")
@click.option("--gt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@domain_errors
def eval_text(ctx, gt, pred):
    """Character-level CR/F1/edit distance between two text files."""
    def read(path):
        text = Path(path).read_text(encoding="utf-8")
        return text[:-1] if text.endswith("\n") else text

    report = score_text(read(gt), read(pred))
    _emit(ctx.obj["json"], report.to_dict(),
          f"CR {report.correct_rate:.4f}  F1 {report.f1:.4f}  edit_distance {report.edit_distance} "
          f"(D {report.deletions} S {report.substitutions} I {report.insertions}, N_t {report.n_total})")


@eval_group.command("layout")
@click.option("--poster", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@domain_errors
def eval_layout(ctx, poster):
    """Pairwise overlap over a poster's leaf boxes."""
    doc = parse_poster_html(Path(poster).read_text(encoding="utf-8"), mode="strict")
    report = document_overlap(doc)
    _emit(ctx.obj["json"], report.to_dict(), f"overlap {report.value}")


@eval_group.command("fid")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@domain_errors
def eval_fid(ctx, path_a, path_b):
    """Fréchet distance between two feature-set files."""
    report = frechet_distance(load_feature_set(path_a), load_feature_set(path_b))
    _emit(ctx.obj["json"], report.to_dict(),
          f"frechet {report.value:.6f} (mean {report.mean_term:.6f}, trace {report.trace_term:.6f})")


@cli.group()
def dataset():
    """Corpus curation over a manifest."""


@dataset.command("verify")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--min-width", default=512, show_default=True, type=int)
@click.option("--min-height", default=512, show_default=True, type=int)
@click.option("--formats", default="PNG,JPEG,WEBP", show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write a manifest restricted to accepted records.")
@click.pass_context
@domain_errors
def dataset_verify(ctx, manifest, min_width, min_height, formats, out):
    m = read_manifest(manifest)
    policy = VerifyPolicy(min_width=min_width, min_height=min_height,
                          allowed_formats=tuple(f.strip() for f in formats.split(",") if f.strip()))
    accepted, rejected = [], {}
    for rec in m.records:
        result = verify_asset(rec, policy)
        if hasattr(result, "reasons"):
            rejected[rec.id] = list(result.reasons)
        else:
            accepted.append(rec.id)
    if out:
        write_manifest(restrict_manifest(m, accepted), out)
    _emit(ctx.obj["json"], {"accepted": accepted, "rejected": rejected},
          f"accepted {len(accepted)}, rejected {len(rejected)}")


def _parse_tiers(text: str) -> tuple:
    out = []
    for part in text.split(","):
        label, _, min_pixels = part.strip().partition(":")
        if not label or not min_pixels.isdigit():
            raise click.BadParameter(f"bad tier {part!r}, expected label:min_pixels")
        out.append((label, int(min_pixels)))
    return tuple(out)


def _parse_ratios(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        w, _, h = part.partition(":")
        try:
            out.append((part, int(w) / int(h)))
        except (ValueError, ZeroDivisionError):
            raise click.BadParameter(f"bad ratio {part!r}, expected w:h")
    return tuple(out)


@dataset.command("bucket")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tiers", default=None, help="label:min_pixels,... (default sd:0,hd:1000000,uhd:4000000)")
@click.option("--ratios", default=None, help="w:h,... (default 2:3,3:4,1:1,4:3,3:2)")
@click.option("--tolerance", default=0.05, show_default=True, type=float)
@click.pass_context
@domain_errors
def dataset_bucket(ctx, manifest, tiers, ratios, tolerance):
    m = read_manifest(manifest)
    default = BucketPolicy.default()
    policy = BucketPolicy(
        tiers=_parse_tiers(tiers) if tiers else default.tiers,
        ratios=_parse_ratios(ratios) if ratios else default.ratios,
        ratio_tolerance=tolerance,
    )
    buckets = bucket_assets(m.records, policy)
    payload = {f"{k.resolution_tier}/{k.aspect_class}": ids for k, ids in sorted(
        buckets.items(), key=lambda kv: (kv[0].resolution_tier, kv[0].aspect_class))}
    _emit(ctx.obj["json"], payload,
          "\n".join(f"{name}: {len(ids)}" for name, ids in payload.items()) or "no records")


@dataset.command("dedup")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", default=0.92, show_default=True, type=float)
@click.option("--scope", type=click.Choice(["bucket", "global"]), default="bucket",
              show_default=True, help="Compare within resolution/aspect buckets or globally.")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
@domain_errors
def dataset_dedup(ctx, manifest, embeddings, threshold, scope, out):
    import numpy as np

    from posterforge.datapipe import bucket_key

    m = read_manifest(manifest)
    fs = load_feature_set(embeddings)
    by_key = fs.by_id()
    # Records address embeddings by embedding_id (falling back to their own
    # id); dedup itself reports any record whose vector is absent.
    rows, found = [], []
    for rec in m.records:
        key = rec.embedding_id or rec.id
        if key in by_key:
            rows.append(by_key[key])
            found.append(rec.id)
    remapped = FeatureSet(
        dim=fs.dim,
        vectors=np.array(rows, dtype=np.float64).reshape(len(rows), fs.dim),
        ids=tuple(found),
    )
    if scope == "global":
        groups = [[rec.id for rec in m.records]]
    else:
        policy = BucketPolicy.default()
        by_bucket: dict = {}
        for rec in m.records:
            by_bucket.setdefault(bucket_key(rec.width, rec.height, policy), []).append(rec.id)
        groups = [by_bucket[k] for k in sorted(by_bucket, key=lambda b: (b.resolution_tier, b.aspect_class))]
    kept: list = []
    clusters: dict = {}
    for group in groups:
        result = dedup(group, remapped, threshold)
        kept.extend(result.kept)
        clusters.update(result.clusters)
    kept.sort()
    if out:
        write_manifest(restrict_manifest(m, kept), out)
    _emit(ctx.obj["json"], {"kept": kept, "clusters": clusters},
          f"kept {len(kept)}, dropped {len(clusters)}")


@dataset.command("filter")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--min-score", required=True, help="Minimum aesthetic score; -inf disables.")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
@domain_errors
def dataset_filter(ctx, manifest, min_score, out):
    m = read_manifest(manifest)
    try:
        threshold = float(min_score)
    except ValueError:
        raise click.BadParameter(f"bad --min-score {min_score!r}")
    result = aesthetic_filter(m.records, threshold)
    if out:
        write_manifest(restrict_manifest(m, result.kept), out)
    _emit(ctx.obj["json"], {"kept": list(result.kept), "unscored": list(result.unscored)},
          f"kept {len(result.kept)}, unscored {len(result.unscored)}")


@dataset.command("sample")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", required=True, type=int)
@click.pass_context
@domain_errors
def dataset_sample(ctx, manifest, seed):
    """Sample one prompt level per record that has a prompt triplet."""
    import random

    m = read_manifest(manifest)
    rng = random.Random(seed)
    draws = []
    for rec_id in sorted(m.prompts):
        level, text = sample_prompt(m.prompts[rec_id], rng)
        draws.append({"id": rec_id, "level": level.value, "text": text})
    if ctx.obj["json"]:
        click.echo(json.dumps(draws, ensure_ascii=False))
    else:
        for d in draws:
            click.echo(f"{d['id']}\t{d['level']}\t{d['text']}")


@cli.command()
@click.option("--listen", default="127.0.0.1:8080", show_default=True)
@click.option("--store", "store_root", default="jobs", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--mock", is_flag=True, help="Serve with deterministic mock backends.")
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", default=None)
@click.option("--app-dir", default=None, type=click.Path(file_okay=False),
              help="Built studio bundle served at /app.")
@domain_errors
def serve(listen, store_root, mock, seed, config_path, app_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    section = config.get("serve", {})
    listen = listen if listen != "127.0.0.1:8080" else section.get("listen", listen)
    store_root = store_root if store_root != "jobs" else section.get("store", store_root)
    app_dir = app_dir or section.get("app_dir")
    if seed is None:
        seed = section.get("seed")
    mock = mock or bool(section.get("mock", False)) or "backends" not in config
    backends = build_backends(config, mock, seed)
    pipeline = Pipeline(FileJobStore(store_root), backends, seed=seed)
    host, _, port = listen.partition(":")
    if not port.isdigit():
        raise click.BadParameter(f"--listen must be host:port, got {listen!r}")
    uvicorn.run(create_app(pipeline, app_dir=app_dir), host=host or "127.0.0.1", port=int(port),
                log_level="warning")


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
