"""Character-level text accuracy scoring.

Given ground truth of N_t characters and a recognized/extracted prediction,
an unit-cost edit script aligns the two and yields deletion, substitution
and insertion counts, from which

    CR = (N_t - D_e - S_e) / N_t

and character precision/recall/F1 are derived. Minimal edit scripts are not
unique, so the backtrace fixes a canonical one by preferring
match > substitute > delete > insert; the total distance is unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .. import PosterForgeError


class EmptyGroundTruth(PosterForgeError):
    """Ground truth must contain at least one character."""


@dataclass(frozen=True)
class TextAccuracyReport:
    n_total: int
    deletions: int
    substitutions: int
    insertions: int
    edit_distance: int
    correct_rate: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return asdict(self)


def score_text(ground_truth: str, predicted: str) -> TextAccuracyReport:
    """Score ``predicted`` against non-empty ``ground_truth`` at character level."""
    if not ground_truth:
        raise EmptyGroundTruth("ground truth must be non-empty")

    n, m = len(ground_truth), len(predicted)
    # d[i][j]: minimal edits turning ground_truth[:i] into predicted[:j].
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        gi = ground_truth[i - 1]
        row = d[i]
        prev = d[i - 1]
        for j in range(1, m + 1):
            if gi == predicted[j - 1]:
                row[j] = prev[j - 1]
            else:
                row[j] = 1 + min(prev[j - 1], prev[j], row[j - 1])

    # Canonical backtrace: match > substitute > delete > insert.
    matches = deletions = substitutions = insertions = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ground_truth[i - 1] == predicted[j - 1] and d[i][j] == d[i - 1][j - 1]:
            matches += 1
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + 1:
            substitutions += 1
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            deletions += 1
            i -= 1
        else:
            insertions += 1
            j -= 1

    precision = matches / m if m else 0.0
    recall = matches / n
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return TextAccuracyReport(
        n_total=n,
        deletions=deletions,
        substitutions=substitutions,
        insertions=insertions,
        edit_distance=deletions + substitutions + insertions,
        correct_rate=(n - deletions - substitutions) / n,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def score_texts(ground_truth: list[str], predicted: list[str]) -> TextAccuracyReport:
    """Score multi-string posters: both sides joined with a single newline."""
    return score_text("\n".join(ground_truth), "\n".join(predicted))
