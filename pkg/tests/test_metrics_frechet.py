import numpy as np
import pytest
import scipy.linalg

from posterforge.metrics import (
    DegenerateSet,
    DimensionMismatch,
    FeatureSet,
    frechet_distance,
    load_feature_set,
    save_feature_set,
)
from posterforge.metrics.features import MalformedFeatureFile


def oracle(a: np.ndarray, b: np.ndarray) -> float:
    """Independent route: scipy's Schur-based sqrtm on the covariance product."""
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    sa = np.atleast_2d(np.cov(a, rowvar=False, ddof=1))
    sb = np.atleast_2d(np.cov(b, rowvar=False, ddof=1))
    covmean = scipy.linalg.sqrtm(sa @ sb)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    return float(np.sum((mu_a - mu_b) ** 2) + np.trace(sa + sb - 2.0 * covmean))


def fs(arr) -> FeatureSet:
    arr = np.asarray(arr, dtype=np.float64)
    return FeatureSet(dim=arr.shape[1], vectors=arr)


def test_self_distance_zero():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(16, 4))
    report = frechet_distance(fs(a), fs(a))
    assert report.value == pytest.approx(0.0, abs=1e-6)


def test_shifted_mean_analytic():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(32, 5))
    d = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
    report = frechet_distance(fs(a), fs(a + d))
    assert report.value == pytest.approx(float(d @ d), abs=1e-6)
    assert report.trace_term == pytest.approx(0.0, abs=1e-6)
    assert report.mean_term == pytest.approx(float(d @ d), abs=1e-6)


def test_matches_scipy_oracle_randoms():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n_a, n_b = rng.integers(8, 33), rng.integers(8, 33)
        dim = int(rng.integers(2, 7))
        a = rng.normal(size=(int(n_a), dim)) @ rng.normal(size=(dim, dim))
        b = rng.normal(size=(int(n_b), dim)) @ rng.normal(size=(dim, dim)) + rng.normal(size=dim)
        got = frechet_distance(fs(a), fs(b))
        assert got.value == pytest.approx(oracle(a, b), abs=1e-6)


def test_symmetry():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(16, 4)), rng.normal(size=(20, 4)) + 1.0
    ab = frechet_distance(fs(a), fs(b)).value
    ba = frechet_distance(fs(b), fs(a)).value
    assert ab == pytest.approx(ba, abs=1e-6)
    assert ab >= 0


def test_dimension_mismatch_and_degenerate():
    rng = np.random.default_rng(5)
    with pytest.raises(DimensionMismatch):
        frechet_distance(fs(rng.normal(size=(8, 3))), fs(rng.normal(size=(8, 4))))
    with pytest.raises(DegenerateSet):
        frechet_distance(fs(rng.normal(size=(1, 3))), fs(rng.normal(size=(8, 3))))


def test_report_decomposition():
    rng = np.random.default_rng(9)
    a, b = rng.normal(size=(16, 4)), 2.0 * rng.normal(size=(24, 4))
    report = frechet_distance(fs(a), fs(b))
    assert report.value == pytest.approx(report.mean_term + report.trace_term, abs=1e-9)


def test_feature_file_roundtrip(tmp_path):
    rng = np.random.default_rng(13)
    original = FeatureSet(dim=4, vectors=rng.normal(size=(6, 4)), ids=tuple(f"v{i}" for i in range(6)))
    path = tmp_path / "features.jsonl"
    save_feature_set(original, path)
    loaded = load_feature_set(path)
    assert loaded.dim == 4 and loaded.ids == original.ids
    assert np.allclose(loaded.vectors, original.vectors)


def test_feature_file_errors(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "x", "vec": [1,2]}\n', encoding="utf-8")
    with pytest.raises(MalformedFeatureFile):
        load_feature_set(bad)
    short = tmp_path / "short.jsonl"
    short.write_text('{"dim": 3}\n{"id": "x", "vec": [1,2]}\n', encoding="utf-8")
    with pytest.raises(MalformedFeatureFile):
        load_feature_set(short)
