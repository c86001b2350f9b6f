import json
import math
import random

import numpy as np
import pytest

from posterforge.blueprint import DetailLevel
from posterforge.datapipe import (
    Accept,
    AssetRecord,
    BucketKey,
    BucketPolicy,
    DedupResult,
    Manifest,
    MissingEmbedding,
    PromptTriplet,
    Reject,
    VerifyPolicy,
    VersionUnsupported,
    MalformedManifest,
    aesthetic_filter,
    bucket_assets,
    bucket_key,
    dedup,
    manifest_to_dict,
    read_manifest,
    restrict_manifest,
    sample_prompt,
    verify_asset,
    write_manifest,
)
from posterforge.metrics.features import FeatureSet


def rec(i, w=1024, h=1536, fmt="PNG", score=None, emb=None) -> AssetRecord:
    return AssetRecord(id=i, path=f"/assets/{i}.png", width=w, height=h, format=fmt,
                       aesthetic_score=score, embedding_id=emb)


# --- verification -----------------------------------------------------------

def test_verify_accepts_good_png():
    assert verify_asset(rec("a"), VerifyPolicy()) == Accept()


def test_verify_lists_every_violation():
    result = verify_asset(rec("a", w=300, h=400), VerifyPolicy(min_width=512, min_height=512))
    assert result == Reject(("width<512", "height<512"))


def test_verify_rejects_format():
    assert verify_asset(rec("a", fmt="BMP"), VerifyPolicy()) == Reject(("format not allowed",))


# --- bucketing ----------------------------------------------------------------

POLICY = BucketPolicy(
    tiers=(("base", 0), ("hd", 1_000_000)),
    ratios=(("2:3", 2 / 3), ("3:4", 3 / 4), ("1:1", 1.0)),
    ratio_tolerance=0.05,
)


def test_bucket_worked_examples():
    assert bucket_key(800, 1200, POLICY).aspect_class == "2:3"
    assert bucket_key(1000, 1000, POLICY).aspect_class == "1:1"
    assert bucket_key(1000, 310, POLICY).aspect_class == "other"


def test_bucket_tier_is_highest_qualifying():
    assert bucket_key(800, 1200, POLICY).resolution_tier == "base"
    assert bucket_key(1200, 1200, POLICY).resolution_tier == "hd"


def test_bucketing_is_total(rng):
    records = [rec(f"r{i}", w=rng.randint(1, 3000), h=rng.randint(1, 3000)) for i in range(200)]
    buckets = bucket_assets(records, POLICY)
    assigned = [i for ids in buckets.values() for i in ids]
    assert sorted(assigned) == sorted(r.id for r in records)


def test_bucket_below_all_tiers_goes_other():
    tiny_policy = BucketPolicy(tiers=(("hd", 1_000_000),), ratios=(("1:1", 1.0),))
    assert bucket_key(100, 100, tiny_policy).resolution_tier == "other"


# --- dedup -----------------------------------------------------------------------

def fs_of(ids, vectors) -> FeatureSet:
    arr = np.asarray(vectors, dtype=np.float64)
    return FeatureSet(dim=arr.shape[1], vectors=arr, ids=tuple(ids))


def test_identical_vectors_dedup():
    fs = fs_of(["a", "b"], [[1.0, 0.0], [1.0, 0.0]])
    result = dedup(["a", "b"], fs, threshold=0.92)
    assert result.kept == ("a",)
    assert result.clusters == {"b": "a"}


def test_orthogonal_vectors_both_kept():
    fs = fs_of(["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
    result = dedup(["a", "b"], fs, threshold=0.92)
    assert result.kept == ("a", "b") and result.clusters == {}


def test_missing_embedding():
    fs = fs_of(["a"], [[1.0, 0.0]])
    with pytest.raises(MissingEmbedding):
        dedup(["a", "b"], fs, threshold=0.9)


def test_every_id_in_kept_or_dropped(rng):
    ids = [f"v{i:03d}" for i in range(50)]
    vectors = [[rng.gauss(0, 1) for _ in range(8)] for _ in ids]
    fs = fs_of(ids, vectors)
    result = dedup(ids, fs, threshold=0.8)
    assert sorted(result.kept) + sorted(result.clusters) and \
        sorted(list(result.kept) + list(result.clusters)) == sorted(ids)


def make_planted_fixture(seed=424242, n_base=90, n_pairs=10, dim=32):
    """n_base well-separated unit vectors; the first n_pairs get a planted
    near-duplicate (cosine >= 0.95) with a later id."""
    rng = np.random.default_rng(seed)
    base = []
    while len(base) < n_base:
        v = rng.normal(size=dim)
        v /= np.linalg.norm(v)
        if all(abs(float(v @ u)) < 0.6 for u in base):
            base.append(v)
    ids = [f"a{i:03d}" for i in range(n_base)]
    vectors = list(base)
    dup_ids = []
    for k in range(n_pairs):
        v = base[k] + rng.normal(size=dim) * 0.02
        v /= np.linalg.norm(v)
        assert float(v @ base[k]) >= 0.95
        dup_id = f"z{k:03d}"  # sorts after every base id
        ids.append(dup_id)
        vectors.append(v)
        dup_ids.append(dup_id)
    return ids, np.array(vectors), dup_ids


def test_planted_duplicates_dropped_exactly():
    ids, vectors, dup_ids = make_planted_fixture()
    fs = fs_of(ids, vectors)
    result = dedup(ids, fs, threshold=0.92)
    assert sorted(result.clusters) == sorted(dup_ids)
    assert set(result.clusters.values()) == {f"a{k:03d}" for k in range(10)}
    assert len(result.kept) == 90


def test_dedup_kept_monotone_in_threshold_near_duplicate_regime():
    # In the near-duplicate regime (clear gap between duplicate and
    # non-duplicate similarity), lowering the threshold can only drop more.
    ids, vectors, _ = make_planted_fixture()
    fs = fs_of(ids, vectors)
    sizes = [len(dedup(ids, fs, t).kept) for t in (0.99, 0.95, 0.9, 0.7, 0.5)]
    assert sizes == sorted(sizes, reverse=True)


def test_dedup_order_deterministic():
    ids, vectors, _ = make_planted_fixture()
    fs = fs_of(ids, vectors)
    shuffled = list(ids)
    random.Random(5).shuffle(shuffled)
    assert dedup(shuffled, fs, 0.92) == dedup(ids, fs, 0.92)


# --- aesthetic filter ----------------------------------------------------------------

def test_filter_threshold():
    records = [rec("a", score=4.0), rec("b", score=5.5), rec("c", score=6.1)]
    assert aesthetic_filter(records, 5.0).kept == ("b", "c")


def test_filter_missing_scores_reported():
    records = [rec("a"), rec("b")]
    result = aesthetic_filter(records, 5.0)
    assert result.kept == () and result.unscored == ("a", "b")


def test_filter_disabled_sentinel_keeps_all_scored():
    records = [rec("a", score=-100.0), rec("b", score=9.0), rec("c")]
    result = aesthetic_filter(records, float("-inf"))
    assert result.kept == ("a", "b") and result.unscored == ("c",)


# --- prompt sampling -------------------------------------------------------------------

def test_sampler_uniform_frequencies():
    triplet = PromptTriplet("b", "m", "d")
    rng = random.Random(123)
    counts = {l: 0 for l in DetailLevel}
    n = 30_000
    for _ in range(n):
        level, text = sample_prompt(triplet, rng)
        counts[level] += 1
        assert text == triplet.get(level)
    for level, c in counts.items():
        assert 0.31 <= c / n <= 0.36, (level, c / n)


def test_sampler_deterministic_given_seed():
    triplet = PromptTriplet("基础", "中等", "详细")
    r1, r2 = random.Random(99), random.Random(99)
    assert [sample_prompt(triplet, r1) for _ in range(50)] == \
        [sample_prompt(triplet, r2) for _ in range(50)]


def test_sampler_constant_text_triplet():
    triplet = PromptTriplet("same", "same", "same")
    rng = random.Random(1)
    assert {sample_prompt(triplet, rng)[1] for _ in range(30)} == {"same"}


# --- manifest I/O ---------------------------------------------------------------------

def sample_manifest() -> Manifest:
    return Manifest(
        records=(rec("a", score=5.0, emb="e-a"), rec("b")),
        prompts={"a": PromptTriplet("基础海报", "中等描述的海报", "非常详细的海报描述")},
        notes=("collected 2026-08", "desk fixture"),
    )


def test_manifest_roundtrip(tmp_path):
    path = tmp_path / "manifest.json"
    m = sample_manifest()
    write_manifest(m, path)
    assert read_manifest(path) == m


def test_manifest_version_gate(tmp_path):
    path = tmp_path / "manifest.json"
    doc = manifest_to_dict(sample_manifest())
    doc["version"] = 999
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(VersionUnsupported):
        read_manifest(path)


def test_manifest_preserves_unknown_fields(tmp_path):
    path = tmp_path / "manifest.json"
    doc = manifest_to_dict(sample_manifest())
    doc["x_future"] = {"nested": [1, 2, 3]}
    doc["records"][0]["x_flag"] = True
    path.write_text(json.dumps(doc), encoding="utf-8")
    m = read_manifest(path)
    assert m.extras == {"x_future": {"nested": [1, 2, 3]}}
    assert m.records[0].extras == {"x_flag": True}
    out = tmp_path / "rewritten.json"
    write_manifest(m, out)
    rewritten = json.loads(out.read_text(encoding="utf-8"))
    assert rewritten["x_future"] == {"nested": [1, 2, 3]}
    assert next(r for r in rewritten["records"] if r["id"] == "a")["x_flag"] is True


def test_manifest_rejects_unknown_prompt_ids():
    with pytest.raises(ValueError):
        Manifest(records=(rec("a"),), prompts={"ghost": PromptTriplet("x", "y", "z")})


def test_manifest_malformed(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{broken", encoding="utf-8")
    with pytest.raises(MalformedManifest):
        read_manifest(path)


def test_restrict_manifest():
    m = sample_manifest()
    narrowed = restrict_manifest(m, ["b"])
    assert [r.id for r in narrowed.records] == ["b"]
    assert narrowed.prompts == {}


def test_pipeline_composition_order_invariant(rng):
    # verify -> filter -> dedup results are the same sets whatever the input
    # order; dedup output is fully deterministic via the ascending-id scan.
    records = [rec(f"r{i:03d}", w=rng.randint(100, 2000), h=rng.randint(100, 2000),
                   score=rng.choice([None, 4.0, 5.5, 7.0])) for i in range(60)]
    vectors = [[rng.gauss(0, 1) for _ in range(8)] for _ in records]
    fs = fs_of([r.id for r in records], vectors)
    policy = VerifyPolicy(min_width=300, min_height=300)

    def run(rs):
        accepted = [r for r in rs if verify_asset(r, policy) == Accept()]
        kept_scores = aesthetic_filter(accepted, 5.0)
        survivors = [r for r in accepted if r.id in kept_scores.kept]
        result = dedup([r.id for r in survivors], fs, threshold=0.9)
        buckets = bucket_assets([r for r in survivors if r.id in result.kept], POLICY)
        return result, {k: sorted(ids) for k, ids in buckets.items()}

    forward = run(records)
    shuffled = list(records)
    random.Random(9).shuffle(shuffled)
    backward = run(shuffled)
    assert forward[0] == backward[0]
    assert forward[1] == backward[1]
