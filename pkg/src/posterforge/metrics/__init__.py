"""Evaluation metrics: text accuracy (CR/F1/edit distance), layout overlap,
and Fréchet distance over externally supplied feature vectors."""

from .text import TextAccuracyReport, EmptyGroundTruth, score_text, score_texts
from .overlap import OverlapReport, Rect, overlap, document_overlap
from .frechet import (
    FrechetReport,
    DimensionMismatch,
    DegenerateSet,
    NumericalFailure,
    frechet_distance,
)
from .features import FeatureSet, load_feature_set, save_feature_set

__all__ = [
    "TextAccuracyReport",
    "EmptyGroundTruth",
    "score_text",
    "score_texts",
    "OverlapReport",
    "Rect",
    "overlap",
    "document_overlap",
    "FrechetReport",
    "DimensionMismatch",
    "DegenerateSet",
    "NumericalFailure",
    "frechet_distance",
    "FeatureSet",
    "load_feature_set",
    "save_feature_set",
]
