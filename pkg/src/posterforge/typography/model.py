"""The poster document model.

A document is a fixed-size canvas with a background (solid color or image
asset) and an ordered tree of absolutely positioned boxes. Box coordinates
are stored relative to the DOCUMENT origin; the HTML form uses CSS
parent-relative offsets and the parser/serializer convert between the two.
All geometry is exact rational; values are immutable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator

from .. import PosterForgeError
from .units import ceil_fraction

MAX_DOCUMENT_DIMENSION = 8192

DEFAULT_FONT_FAMILY = "sans-serif"
DEFAULT_FONT_COLOR = "#000000"
DEFAULT_LINE_HEIGHT = Fraction(6, 5)
DEFAULT_BACKGROUND = "#FFFFFF"

_HEX_RE = re.compile(r"^#[0-9A-F]{6}$")


class TypographyError(PosterForgeError):
    """Base class for poster document errors."""


class ScaleOutOfRange(TypographyError):
    pass


def _frac(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True)
class Rect:
    left: Fraction
    top: Fraction
    width: Fraction
    height: Fraction

    def __post_init__(self):
        for name in ("left", "top", "width", "height"):
            object.__setattr__(self, name, _frac(getattr(self, name)))

    def translated(self, dx: Fraction, dy: Fraction) -> "Rect":
        return Rect(self.left + dx, self.top + dy, self.width, self.height)

    def scaled(self, k: Fraction) -> "Rect":
        return Rect(self.left * k, self.top * k, self.width * k, self.height * k)


@dataclass(frozen=True)
class Font:
    family: str = DEFAULT_FONT_FAMILY
    size: Fraction = Fraction(16)
    weight: int = 400
    color: str = DEFAULT_FONT_COLOR
    letter_spacing: Fraction = Fraction(0)
    line_height: Fraction = DEFAULT_LINE_HEIGHT
    align: str = "left"

    def __post_init__(self):
        object.__setattr__(self, "size", _frac(self.size))
        object.__setattr__(self, "letter_spacing", _frac(self.letter_spacing))
        object.__setattr__(self, "line_height", _frac(self.line_height))


@dataclass(frozen=True)
class TextRun:
    text: str
    font: Font = Font()


@dataclass(frozen=True)
class BoxStyle:
    background_color: str | None = None
    background_image: str | None = None
    border_radius: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "border_radius", _frac(self.border_radius))


@dataclass(frozen=True)
class Node:
    """One absolutely positioned box: children xor text runs xor empty."""

    id: str
    rect: Rect
    z_index: int = 0
    style: BoxStyle = BoxStyle()
    children: tuple["Node", ...] = ()
    runs: tuple[TextRun, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "runs", tuple(self.runs))
        if self.children and self.runs:
            raise ValueError(f"node {self.id!r} has both children and text runs")


@dataclass(frozen=True)
class PosterDocument:
    width: Fraction
    height: Fraction
    background_color: str | None = DEFAULT_BACKGROUND
    background_image: str | None = None
    nodes: tuple[Node, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "width", _frac(self.width))
        object.__setattr__(self, "height", _frac(self.height))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if self.background_image is not None and self.background_color is not None:
            raise ValueError("document background is a color or an image, not both")
        if self.background_image is None and self.background_color is None:
            object.__setattr__(self, "background_color", DEFAULT_BACKGROUND)


def iter_nodes(doc: PosterDocument) -> Iterator[Node]:
    """Pre-order traversal of every node in the document."""

    def walk(nodes) -> Iterator[Node]:
        for n in nodes:
            yield n
            yield from walk(n.children)

    return walk(doc.nodes)


def find_node(doc: PosterDocument, node_id: str) -> Node | None:
    for n in iter_nodes(doc):
        if n.id == node_id:
            return n
    return None


def node_ids(doc: PosterDocument) -> list[str]:
    return [n.id for n in iter_nodes(doc)]


def extract_text(doc: PosterDocument) -> list[str]:
    """Pre-order text extraction: one concatenated string per node with runs."""
    return ["".join(r.text for r in n.runs) for n in iter_nodes(doc) if n.runs]


def scale_document(doc: PosterDocument, k: Fraction) -> PosterDocument:
    """Multiply every length by ``k`` exactly; text and structure unchanged.

    Scaled lengths: document dims, box rects, border radii, font sizes and
    letter spacing. Line-height multipliers and z-indices are unitless and
    stay put.
    """
    k = _frac(k)
    if k <= 0:
        raise ValueError("scale factor must be positive")
    new_w, new_h = doc.width * k, doc.height * k
    if new_w > MAX_DOCUMENT_DIMENSION or new_h > MAX_DOCUMENT_DIMENSION:
        raise ScaleOutOfRange(f"scaled dims {new_w}x{new_h} exceed {MAX_DOCUMENT_DIMENSION}")
    if new_w < 1 or new_h < 1:
        raise ScaleOutOfRange(f"scaled dims {new_w}x{new_h} fall below 1")

    def scale_font(f: Font) -> Font:
        return replace(f, size=f.size * k, letter_spacing=f.letter_spacing * k)

    def scale_node(n: Node) -> Node:
        return replace(
            n,
            rect=n.rect.scaled(k),
            style=replace(n.style, border_radius=n.style.border_radius * k),
            children=tuple(scale_node(c) for c in n.children),
            runs=tuple(replace(r, font=scale_font(r.font)) for r in n.runs),
        )

    return replace(doc, width=new_w, height=new_h, nodes=tuple(scale_node(n) for n in doc.nodes))


def raster_dimensions(doc: PosterDocument, scale: Fraction) -> tuple[int, int]:
    """Pixel dims of a raster at ``scale``: ceil of the scaled document dims."""
    return ceil_fraction(doc.width * scale), ceil_fraction(doc.height * scale)
