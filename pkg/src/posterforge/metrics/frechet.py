"""Fréchet distance between Gaussians fitted to two feature sets.

d^2 = ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2})

with unbiased (n-1) covariances. The matrix square root is taken through the
symmetric product S_a^{1/2} S_b S_a^{1/2}, whose eigendecomposition is stable
for the nearly singular covariances typical of small sets: tr((S_a S_b)^{1/2})
equals the sum of the square roots of that product's eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import PosterForgeError
from .features import FeatureSet

EIGENVALUE_TOLERANCE = 1e-10


class DimensionMismatch(PosterForgeError):
    pass


class DegenerateSet(PosterForgeError):
    """Fewer than two vectors: no covariance can be estimated."""


class NumericalFailure(PosterForgeError):
    pass


@dataclass(frozen=True)
class FrechetReport:
    value: float
    mean_term: float
    trace_term: float

    def to_dict(self) -> dict:
        return {"value": self.value, "mean_term": self.mean_term, "trace_term": self.trace_term}


def _checked_eigh(mat: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        eigvals, eigvecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition of {what} failed: {exc}") from exc
    if np.any(eigvals < -EIGENVALUE_TOLERANCE):
        raise NumericalFailure(
            f"{what} has eigenvalue {eigvals.min():.3e} below -{EIGENVALUE_TOLERANCE:g}"
        )
    return np.clip(eigvals, 0.0, None), eigvecs


def frechet_distance(a: FeatureSet, b: FeatureSet) -> FrechetReport:
    """Fréchet distance between the Gaussians fitted to ``a`` and ``b``."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"feature dims differ: {a.dim} vs {b.dim}")
    for name, fs in (("a", a), ("b", b)):
        if fs.vectors.shape[0] < 2:
            raise DegenerateSet(f"set {name} has {fs.vectors.shape[0]} vectors, need >= 2")

    va = np.asarray(a.vectors, dtype=np.float64)
    vb = np.asarray(b.vectors, dtype=np.float64)
    mu_a, mu_b = va.mean(axis=0), vb.mean(axis=0)
    sigma_a = np.cov(va, rowvar=False, ddof=1)
    sigma_b = np.cov(vb, rowvar=False, ddof=1)
    sigma_a = np.atleast_2d(sigma_a)
    sigma_b = np.atleast_2d(sigma_b)

    # S_a^{1/2} via symmetric eigendecomposition.
    ev_a, vec_a = _checked_eigh(sigma_a, "covariance of a")
    root_a = (vec_a * np.sqrt(ev_a)) @ vec_a.T

    inner = root_a @ sigma_b @ root_a
    inner = (inner + inner.T) / 2.0
    ev_inner, _ = _checked_eigh(inner, "S_a^{1/2} S_b S_a^{1/2}")
    trace_sqrt = float(np.sum(np.sqrt(ev_inner)))

    diff = mu_a - mu_b
    mean_term = float(diff @ diff)
    trace_term = float(np.trace(sigma_a) + np.trace(sigma_b)) - 2.0 * trace_sqrt
    value = mean_term + trace_term
    if not np.isfinite(value):
        raise NumericalFailure(f"non-finite distance (mean {mean_term}, trace {trace_term})")
    return FrechetReport(value=max(value, 0.0), mean_term=mean_term, trace_term=trace_term)
