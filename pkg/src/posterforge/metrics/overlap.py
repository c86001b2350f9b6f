"""Pairwise layout overlap: sum over ordered element pairs of
intersection area divided by the first element's area.

Areas and intersections are computed in exact rational arithmetic;
zero-area elements take part in neither role.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Rect:
    left: Fraction
    top: Fraction
    width: Fraction
    height: Fraction

    @classmethod
    def of(cls, left, top, width, height) -> "Rect":
        return cls(Fraction(left), Fraction(top), Fraction(width), Fraction(height))

    @property
    def area(self) -> Fraction:
        return self.width * self.height


@dataclass(frozen=True)
class OverlapReport:
    value: float
    per_element: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"value": self.value, "per_element": list(self.per_element)}


def _intersection_area(a: Rect, b: Rect) -> Fraction:
    w = min(a.left + a.width, b.left + b.width) - max(a.left, b.left)
    h = min(a.top + a.height, b.top + b.height) - max(a.top, b.top)
    if w <= 0 or h <= 0:
        return Fraction(0)
    return w * h


def overlap(elements: Sequence[Rect | tuple]) -> OverlapReport:
    """Overlap over ordered pairs (i, j != i): area(i ∩ j) / area(i).

    ``per_element`` is aligned with the input; skipped zero-area elements
    contribute 0. The total equals the sum of the per-element entries.
    """
    rects = [r if isinstance(r, Rect) else Rect.of(*r) for r in elements]
    live = [i for i, r in enumerate(rects) if r.area > 0]
    per = [Fraction(0)] * len(rects)
    for i in live:
        ri = rects[i]
        acc = Fraction(0)
        for j in live:
            if j == i:
                continue
            acc += _intersection_area(ri, rects[j]) / ri.area
        per[i] = acc
    return OverlapReport(value=float(sum(per)), per_element=tuple(float(p) for p in per))


def document_overlap(doc) -> OverlapReport:
    """Overlap over a poster document's leaf boxes (nodes without children)."""
    rects = [
        Rect(n.rect.left, n.rect.top, n.rect.width, n.rect.height)
        for n in _leaves(doc.nodes)
    ]
    return overlap(rects)


def _leaves(nodes) -> Iterable:
    for n in nodes:
        if n.children:
            yield from _leaves(n.children)
        else:
            yield n
