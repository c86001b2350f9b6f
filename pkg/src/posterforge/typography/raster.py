"""Deterministic rasterization.

Paint order: document background (solid fill or bilinear-resampled image),
then boxes in ascending z-index (document order breaks ties), each box's
fill and image before its glyph bitmaps. Geometry stays rational until
paint time, where edges round half-up onto the pixel grid; given the same
document, glyph provider, scale and assets, output bytes are identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .glyphs import DEFAULT_GLYPHS, GlyphProvider
from .layout import LayoutBox, layout_node
from .model import MAX_DOCUMENT_DIMENSION, Node, PosterDocument, ScaleOutOfRange, TypographyError, iter_nodes, raster_dimensions
from .png import decode_png, encode_png
from .units import round_half_up


class MissingImageAsset(TypographyError):
    def __init__(self, asset_id: str):
        super().__init__(f"image asset {asset_id!r} not available")
        self.asset_id = asset_id


@dataclass(frozen=True)
class Raster:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 4) uint8

    def to_png(self) -> bytes:
        return encode_png(self.pixels)

    def digest(self) -> str:
        return hashlib.sha256(self.pixels.tobytes()).hexdigest()


def _hex_rgb(color: str) -> tuple[int, int, int]:
    return int(color[1:3], 16), int(color[3:5], 16), int(color[5:7], 16)


def _bilinear_resize(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Center-aligned bilinear resample of an (h, w, 4) uint8 image."""
    sh, sw = src.shape[:2]
    if out_w <= 0 or out_h <= 0:
        return np.zeros((max(out_h, 0), max(out_w, 0), 4), dtype=np.uint8)
    if (out_h, out_w) == (sh, sw):
        # Center-aligned sampling at 1:1 is the identity map.
        return src.copy()
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (sw / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (sh / out_h) - 0.5
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, sw - 1)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, sh - 1)
    x1 = np.clip(x0 + 1, 0, sw - 1)
    y1 = np.clip(y0 + 1, 0, sh - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :, None]
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None, None]
    img = src.astype(np.float64)
    top = img[y0[:, None], x0[None, :]] * (1 - fx) + img[y0[:, None], x1[None, :]] * fx
    bottom = img[y1[:, None], x0[None, :]] * (1 - fx) + img[y1[:, None], x1[None, :]] * fx
    value = top * (1 - fy) + bottom * fy
    return np.floor(value + 0.5).astype(np.uint8)


def _device_rect(rect, scale: Fraction) -> tuple[int, int, int, int]:
    """Rational rect -> half-up-rounded device box [x0, x1) x [y0, y1)."""
    x0 = round_half_up(rect.left * scale)
    y0 = round_half_up(rect.top * scale)
    x1 = round_half_up((rect.left + rect.width) * scale)
    y1 = round_half_up((rect.top + rect.height) * scale)
    return x0, y0, x1, y1


def _corner_mask(mask: np.ndarray, x0: int, y0: int, x1: int, y1: int, radius: Fraction) -> None:
    """Clear pixels whose centers fall outside the rounded corners (exact test)."""
    w, h = x1 - x0, y1 - y0
    r = min(radius, Fraction(w, 2), Fraction(h, 2))
    if r <= 0:
        return
    span = int(r) + 1
    H, W = mask.shape

    def xs(lo, hi):
        return range(max(lo, 0), min(hi, W))

    def ys_(lo, hi):
        return range(max(lo, 0), min(hi, H))

    corners = (
        (x0 + r, y0 + r, xs(x0, min(x0 + span, x1)), ys_(y0, min(y0 + span, y1))),
        (x1 - r, y0 + r, xs(max(x1 - span, x0), x1), ys_(y0, min(y0 + span, y1))),
        (x0 + r, y1 - r, xs(x0, min(x0 + span, x1)), ys_(max(y1 - span, y0), y1)),
        (x1 - r, y1 - r, xs(max(x1 - span, x0), x1), ys_(max(y1 - span, y0), y1)),
    )
    r2 = r * r
    for cx, cy, xs, ys in corners:
        for py in ys:
            dy = Fraction(2 * py + 1, 2) - cy
            dy2 = dy * dy
            for px in xs:
                dx = Fraction(2 * px + 1, 2) - cx
                if dx * dx + dy2 > r2:
                    mask[py, px] = False


def _fill_box(canvas: np.ndarray, node: Node, scale: Fraction, assets: Mapping[str, bytes]) -> None:
    x0, y0, x1, y1 = _device_rect(node.rect, scale)
    H, W = canvas.shape[:2]
    cx0, cy0 = max(x0, 0), max(y0, 0)
    cx1, cy1 = min(x1, W), min(y1, H)
    if cx0 >= cx1 or cy0 >= cy1:
        return
    style = node.style
    if style.background_color is None and style.background_image is None:
        return
    patch = None
    if style.background_image is not None:
        data = assets.get(style.background_image)
        if data is None:
            raise MissingImageAsset(style.background_image)
        patch = _bilinear_resize(decode_png(data), x1 - x0, y1 - y0)
        patch = patch[cy0 - y0:cy1 - y0, cx0 - x0:cx1 - x0]
    else:
        r, g, b = _hex_rgb(style.background_color)
        patch = np.empty((cy1 - cy0, cx1 - cx0, 4), dtype=np.uint8)
        patch[:, :] = (r, g, b, 255)
    if style.border_radius > 0:
        mask = np.zeros((H, W), dtype=bool)
        mask[cy0:cy1, cx0:cx1] = True
        _corner_mask(mask, x0, y0, x1, y1, style.border_radius * scale)
        sub = mask[cy0:cy1, cx0:cx1]
        region = canvas[cy0:cy1, cx0:cx1]
        region[sub] = patch[sub]
    else:
        canvas[cy0:cy1, cx0:cx1] = patch


def _blend_glyph(canvas: np.ndarray, bitmap: np.ndarray, gx: int, gy: int,
                 color: tuple[int, int, int], clip: tuple[int, int, int, int]) -> None:
    H, W = canvas.shape[:2]
    bh, bw = bitmap.shape
    x0 = max(gx, clip[0], 0)
    y0 = max(gy, clip[1], 0)
    x1 = min(gx + bw, clip[2], W)
    y1 = min(gy + bh, clip[3], H)
    if x0 >= x1 or y0 >= y1:
        return
    alpha = bitmap[y0 - gy:y1 - gy, x0 - gx:x1 - gx].astype(np.uint16)
    if not alpha.any():
        return
    region = canvas[y0:y1, x0:x1]
    src = np.empty_like(region, dtype=np.uint16)
    src[:, :, 0], src[:, :, 1], src[:, :, 2], src[:, :, 3] = (*color, 255)
    a = alpha[:, :, None]
    blended = (src * a + region.astype(np.uint16) * (255 - a) + 127) // 255
    canvas[y0:y1, x0:x1] = blended.astype(np.uint8)


def _paint_text(canvas: np.ndarray, node: Node, box: LayoutBox, scale: Fraction,
                glyphs: GlyphProvider) -> None:
    clip = _device_rect(node.rect, scale)
    for line in box.lines:
        for glyph in line.glyphs:
            if glyph.char.isspace():
                continue
            bitmap = glyphs.raster(glyph.char, glyph.font, scale)
            if bitmap.size == 0:
                continue
            # Glyph box is vertically centered within the line.
            gy_frac = (node.rect.top + line.y + (line.height - glyph.font.size) / 2) * scale
            gx = round_half_up((node.rect.left + glyph.x) * scale)
            gy = round_half_up(gy_frac)
            _blend_glyph(canvas, bitmap, gx, gy, _hex_rgb(glyph.font.color), clip)


def rasterize(
    doc: PosterDocument,
    glyphs: GlyphProvider = DEFAULT_GLYPHS,
    scale: Fraction = Fraction(1),
    assets: Mapping[str, bytes] | None = None,
) -> Raster:
    """Rasterize a document at ``scale`` into an RGBA8 buffer.

    ``assets`` maps image ids referenced by the document to PNG bytes;
    a referenced id missing from the mapping raises MissingImageAsset.
    """
    scale = Fraction(scale)
    if scale <= 0:
        raise ValueError("scale must be positive")
    if doc.width * scale > MAX_DOCUMENT_DIMENSION or doc.height * scale > MAX_DOCUMENT_DIMENSION:
        raise ScaleOutOfRange(f"raster dims at scale {scale} exceed {MAX_DOCUMENT_DIMENSION}")
    assets = assets or {}
    W, H = raster_dimensions(doc, scale)
    canvas = np.empty((H, W, 4), dtype=np.uint8)
    if doc.background_image is not None:
        data = assets.get(doc.background_image)
        if data is None:
            raise MissingImageAsset(doc.background_image)
        canvas[:, :] = _bilinear_resize(decode_png(data), W, H)
    else:
        canvas[:, :] = (*_hex_rgb(doc.background_color), 255)

    ordered = sorted(enumerate(iter_nodes(doc)), key=lambda kv: (kv[1].z_index, kv[0]))
    for _, node in ordered:
        _fill_box(canvas, node, scale, assets)
        if node.runs:
            _paint_text(canvas, node, layout_node(node, glyphs), scale, glyphs)
    return Raster(width=W, height=H, pixels=canvas)
