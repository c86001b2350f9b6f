"""Glyph metrics and bitmaps.

The default provider is a synthetic fixed-metric font: full-width advance
(= font size) for CJK codepoints, half-width for everything else. Advances
are exact rationals and scale linearly by construction; bitmaps are plain
ink blocks inset within the advance box, enough for deterministic raster
output without shipping a font.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Protocol

import numpy as np

from .model import Font
from .units import round_half_up

# Codepoint ranges treated as full-width CJK for metrics and line breaking.
CJK_RANGES = (
    (0x3000, 0x303F),  # CJK symbols and punctuation
    (0x3040, 0x30FF),  # hiragana, katakana
    (0x3400, 0x4DBF),  # unified ideographs extension A
    (0x4E00, 0x9FFF),  # unified ideographs
    (0xAC00, 0xD7AF),  # hangul syllables
    (0xF900, 0xFAFF),  # compatibility ideographs
    (0xFF00, 0xFF60),  # fullwidth forms
)


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in CJK_RANGES)


class GlyphProvider(Protocol):
    def advance(self, codepoint: str, font: Font) -> Fraction:
        """Horizontal advance in px; deterministic and linear in font size."""
        ...

    def raster(self, codepoint: str, font: Font, scale: Fraction) -> np.ndarray:
        """Alpha bitmap (uint8, shape (h, w)) for the glyph at device scale."""
        ...


class SyntheticGlyphProvider:
    """Fixed-metric synthetic font: CJK advance = size, Latin advance = size/2."""

    def __init__(self):
        self._cache: dict[tuple, np.ndarray] = {}

    def advance(self, codepoint: str, font: Font) -> Fraction:
        return font.size if is_cjk(codepoint) else font.size / 2

    def raster(self, codepoint: str, font: Font, scale: Fraction) -> np.ndarray:
        w = round_half_up(self.advance(codepoint, font) * scale)
        h = round_half_up(font.size * scale)
        if w <= 0 or h <= 0:
            return np.zeros((max(h, 0), max(w, 0)), dtype=np.uint8)
        if codepoint.isspace():
            return np.zeros((h, w), dtype=np.uint8)
        key = (is_cjk(codepoint), font.weight, w, h)
        bitmap = self._cache.get(key)
        if bitmap is None:
            # Ink block inset within the advance box; bold ink is larger.
            inset_x, inset_y = (Fraction(1, 16), Fraction(1, 10)) if font.weight == 700 \
                else (Fraction(1, 8), Fraction(3, 20))
            x0 = round_half_up(w * inset_x)
            x1 = round_half_up(w * (1 - inset_x))
            y0 = round_half_up(h * inset_y)
            y1 = round_half_up(h * (1 - inset_y))
            x1 = min(max(x1, x0 + 1), w)
            y1 = min(max(y1, y0 + 1), h)
            bitmap = np.zeros((h, w), dtype=np.uint8)
            bitmap[y0:y1, x0:x1] = 255
            self._cache[key] = bitmap
        return bitmap


DEFAULT_GLYPHS = SyntheticGlyphProvider()
