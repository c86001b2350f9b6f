"""Greedy line-breaking layout over absolutely positioned boxes.

Break opportunities are spaces (U+0020, consumed by the break) and the
boundary between two adjacent CJK codepoints; ``\\n`` forces a break. A
fragment that cannot fit on an empty line falls back to per-glyph breaking,
so a line only ever exceeds its box width when one single glyph does, which
sets the overflow flag. All arithmetic is exact rational; line advance sums
equal per-glyph advance sums by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .glyphs import GlyphProvider, is_cjk
from .model import Font, Node, PosterDocument, Rect, iter_nodes


@dataclass(frozen=True)
class PositionedGlyph:
    char: str
    font: Font
    x: Fraction        # relative to box left, alignment applied
    advance: Fraction  # provider advance plus letter spacing


@dataclass(frozen=True)
class Line:
    y: Fraction        # top offset within the box
    height: Fraction
    width: Fraction
    glyphs: tuple[PositionedGlyph, ...]


@dataclass(frozen=True)
class LayoutBox:
    node_id: str
    rect: Rect
    lines: tuple[Line, ...]
    overflow_flag: bool


@dataclass(frozen=True)
class _G:
    char: str
    font: Font
    advance: Fraction


def _stream(node: Node, glyphs: GlyphProvider) -> list[_G]:
    out = []
    for run in node.runs:
        for ch in run.text:
            adv = Fraction(0) if ch == "\n" else glyphs.advance(ch, run.font) + run.font.letter_spacing
            out.append(_G(ch, run.font, adv))
    return out


def _tokens(stream: list[_G]):
    """Yield ('newline', g) | ('space', g) | ('unit', [g...]) in order."""
    unit: list[_G] = []
    prev: _G | None = None
    for g in stream:
        if g.char == "\n":
            if unit:
                yield ("unit", unit)
                unit = []
            yield ("newline", g)
            prev = None
        elif g.char == " ":
            if unit:
                yield ("unit", unit)
                unit = []
            yield ("space", g)
            prev = None
        else:
            if unit and prev is not None and is_cjk(prev.char) and is_cjk(g.char):
                yield ("unit", unit)
                unit = []
            unit.append(g)
            prev = g
    if unit:
        yield ("unit", unit)


def _line_height(glyph_list: list[_G], fallback: Font | None) -> Fraction:
    if glyph_list:
        return max(g.font.size * g.font.line_height for g in glyph_list)
    if fallback is not None:
        return fallback.size * fallback.line_height
    return Fraction(0)


def layout_node(node: Node, glyphs: GlyphProvider) -> LayoutBox:
    width, height = node.rect.width, node.rect.height
    has_text = any(r.text for r in node.runs)
    if width <= 0 or height <= 0:
        return LayoutBox(node.id, node.rect, (), overflow_flag=has_text)

    raw_lines: list[tuple[list[_G], Font | None]] = []
    cur: list[_G] = []
    cur_w = Fraction(0)

    def flush(strip_trailing: bool, fallback: Font | None = None) -> None:
        nonlocal cur, cur_w
        line = cur
        if strip_trailing:
            while line and line[-1].char == " ":
                line.pop()
        raw_lines.append((line, fallback))
        cur = []
        cur_w = Fraction(0)

    for kind, payload in _tokens(_stream(node, glyphs)):
        if kind == "newline":
            flush(strip_trailing=False, fallback=payload.font)
        elif kind == "space":
            g = payload
            if not cur or cur_w + g.advance <= width:
                cur.append(g)
                cur_w += g.advance
            else:
                flush(strip_trailing=True)
        else:
            unit = payload
            unit_w = sum((g.advance for g in unit), Fraction(0))
            if cur and cur_w + unit_w > width:
                flush(strip_trailing=True)
            for g in unit:
                if cur and cur_w + g.advance > width:
                    flush(strip_trailing=False)
                cur.append(g)
                cur_w += g.advance
    if cur:
        flush(strip_trailing=False)

    lines: list[Line] = []
    y = Fraction(0)
    overflow = False
    for glyph_list, fallback in raw_lines:
        h = _line_height(glyph_list, fallback)
        line_w = sum((g.advance for g in glyph_list), Fraction(0))
        if line_w > width:
            overflow = True
        first_align = glyph_list[0].font.align if glyph_list else "left"
        if first_align == "center":
            x = (width - line_w) / 2
        elif first_align == "right":
            x = width - line_w
        else:
            x = Fraction(0)
        placed = []
        for g in glyph_list:
            placed.append(PositionedGlyph(char=g.char, font=g.font, x=x, advance=g.advance))
            x += g.advance
        lines.append(Line(y=y, height=h, width=line_w, glyphs=tuple(placed)))
        y += h
    if y > height:
        overflow = True
    return LayoutBox(node.id, node.rect, tuple(lines), overflow_flag=overflow)


def compute_layout(doc: PosterDocument, glyphs: GlyphProvider) -> list[LayoutBox]:
    """One LayoutBox per node that carries text runs, in document order."""
    return [layout_node(n, glyphs) for n in iter_nodes(doc) if n.runs]
