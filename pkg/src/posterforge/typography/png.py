"""Minimal PNG I/O.

Encoding is hand-rolled (8-bit RGBA, filter 0, no interlace, fixed zlib
level) so identical pixel buffers always produce identical bytes; decoding
of arbitrary PNGs is delegated to Pillow.
"""

from __future__ import annotations

import io
import struct
import zlib

import numpy as np

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(kind: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + kind
        + payload
        + struct.pack(">I", zlib.crc32(kind + payload) & 0xFFFFFFFF)
    )


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an (h, w, 4) uint8 RGBA array as a deterministic PNG."""
    if pixels.ndim != 3 or pixels.shape[2] != 4 or pixels.dtype != np.uint8:
        raise ValueError(f"expected (h, w, 4) uint8 array, got {pixels.shape} {pixels.dtype}")
    h, w = pixels.shape[:2]
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 6, 0, 0, 0)
    raw = np.concatenate(
        [np.zeros((h, 1), dtype=np.uint8), pixels.reshape(h, w * 4)], axis=1
    ).tobytes()
    idat = zlib.compress(raw, 6)
    return _SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG (or any Pillow-readable image) bytes to (h, w, 4) uint8 RGBA."""
    from PIL import Image

    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGBA"), dtype=np.uint8).copy()


def png_dimensions(data: bytes) -> tuple[int, int]:
    """(width, height) from the IHDR without a full decode."""
    if data[:8] != _SIGNATURE or data[12:16] != b"IHDR":
        from PIL import Image

        with Image.open(io.BytesIO(data)) as img:
            return img.width, img.height
    w, h = struct.unpack(">II", data[16:24])
    return w, h
