"""Deterministic mock generators.

Each mock is a pure function of its declared inputs plus the backend seed,
keyed through a stable 64-bit hash, so repeat calls are byte-identical and
end-to-end runs reproduce exactly.

The blueprint mock honors the detail-insensitivity contract by deriving
everything from a canonical requirement key: the part of the requirement
before an optional ``::`` marker, NFC-normalized, whitespace-collapsed and
casefolded. Basic/medium/detailed rewritings that share that key (extra
detail goes after the marker) produce value-identical blueprints.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from ..blueprint import (
    BackgroundAttributes,
    DesignBlueprint,
    KeyParameters,
    Resolution,
    StyleId,
    TextualContent,
    UserRequirement,
    normalize_text,
)
from ..typography import Font, Node, PosterDocument, Rect, TextRun, layout_node, serialize_poster
from ..typography.glyphs import DEFAULT_GLYPHS
from ..typography.png import encode_png
from .base import ImageRef, stable_hash64

RESOLUTION_POOL = [
    (480, 720), (512, 768), (600, 800), (640, 960), (540, 720), (480, 640),
]

_SUBTITLES = [
    "盛大开幕 · Grand Opening", "限时特惠 Limited Offer", "全场焕新 · New Season",
    "匠心之选 Crafted Daily", "诚邀莅临 · You Are Invited",
]
_BODY = [
    "精选原料，新鲜直达", "每日 9:00 - 21:00 营业", "会员专享 8.8 折优惠",
    "Signature blends made fresh", "前 100 名赠定制好礼", "扫码关注，领取优惠券",
    "Handcrafted with seasonal produce", "双人套餐立减 30 元",
]
_CONTACT_STREETS = ["长宁路", "南京西路", "淮海中路", "建国东路"]
_THEMES = ["开业庆典", "周年庆", "春日上新", "城市市集", "艺术展览", "音乐之夜"]
_PURPOSES = ["event promotion", "product launch", "brand campaign", "seasonal sale"]
_ELEMENTS = ["icon", "ribbon", "badge", "pattern", "starburst", "frame"]
_PALETTE = [
    "#1F3A5F", "#E84A5F", "#F6C344", "#2A9D8F", "#264653", "#8D5A97",
    "#D1495B", "#00798C", "#EDAE49", "#3D5A80", "#9A8C98", "#4A4E69",
]

_STYLE_WORDS = {
    StyleId.ILLUSTRATIVE: "hand-drawn illustrative",
    StyleId.DESIGN_ORIENTED: "bold graphic design",
    StyleId.MINIMALISTIC: "clean minimal",
    StyleId.PHOTOREALISTIC: "photorealistic",
}

# Distinct gradient anchor palettes per style; styles must never collide.
_STYLE_PALETTES = {
    StyleId.ILLUSTRATIVE: [(255, 201, 161), (250, 229, 180), (255, 171, 150), (239, 211, 233), (201, 231, 209)],
    StyleId.DESIGN_ORIENTED: [(31, 42, 92), (221, 61, 82), (249, 199, 62), (41, 161, 151), (58, 59, 71)],
    StyleId.MINIMALISTIC: [(246, 246, 246), (235, 238, 241), (226, 231, 236), (241, 237, 229), (248, 245, 241)],
    StyleId.PHOTOREALISTIC: [(92, 121, 92), (141, 161, 181), (179, 151, 121), (71, 91, 111), (121, 101, 81)],
}


def canonical_requirement_key(text: str) -> str:
    """The detail-invariant core of a requirement: text before ``::``,
    normalized and casefolded."""
    head = text.split("::", 1)[0]
    return normalize_text(head).casefold()


def mock_blueprint(req: UserRequirement, seed: int) -> DesignBlueprint:
    key = canonical_requirement_key(req.text)
    rng = random.Random(stable_hash64("blueprint", seed, key))
    style = rng.choice(list(StyleId))
    width, height = rng.choice(RESOLUTION_POOL)
    colors = rng.sample(_PALETTE, k=rng.randint(2, 3))
    theme = rng.choice(_THEMES)
    title = key if len(key) <= 48 else key[:48]
    subtitle = rng.choice(_SUBTITLES) if rng.random() < 0.7 else None
    body = rng.sample(_BODY, k=rng.randint(1, 4))
    contact = []
    if rng.random() < 0.8:
        contact.append(f"021-{rng.randrange(10_000_000, 100_000_000)}")
    if rng.random() < 0.6:
        contact.append(f"{rng.choice(_CONTACT_STREETS)}{rng.randrange(1, 999)}号")
    caption = f"{_STYLE_WORDS[style]} background for {title}, {theme} mood, colors {', '.join(colors)}"
    return DesignBlueprint(
        textual=TextualContent(title=title, subtitle=subtitle, body=tuple(body), contact=tuple(contact)),
        background=BackgroundAttributes(style=style, caption=caption),
        params=KeyParameters(
            resolution=Resolution(width=width, height=height),
            theme=theme,
            elements=tuple(rng.sample(_ELEMENTS, k=rng.randint(0, 3))),
            colors=tuple(colors),
            purpose=rng.choice(_PURPOSES),
        ),
    )


def mock_background(attrs: BackgroundAttributes, width: int, height: int,
                    seed: int, backend_seed: int) -> ImageRef:
    rng = random.Random(stable_hash64(
        "background", backend_seed, attrs.style.value, attrs.caption, seed, width, height,
    ))
    palette = _STYLE_PALETTES[attrs.style]
    corners = [rng.choice(palette) for _ in range(4)]
    c00, c01, c10, c11 = (np.array(c, dtype=np.float64) for c in corners)
    fx = ((np.arange(width, dtype=np.float64) + 0.5) / width)[None, :, None]
    fy = ((np.arange(height, dtype=np.float64) + 0.5) / height)[:, None, None]
    top = c00 * (1 - fx) + c01 * fx
    bottom = c10 * (1 - fx) + c11 * fx
    rgb = np.floor(top * (1 - fy) + bottom * fy + 0.5).astype(np.uint8)
    pixels = np.concatenate([rgb, np.full((height, width, 1), 255, dtype=np.uint8)], axis=2)
    return ImageRef.from_png(encode_png(pixels), width, height)


def mock_layout(bp: DesignBlueprint, background: ImageRef) -> str:
    """A deterministic template: all text blocks stacked without overlap."""
    width = Fraction(bp.params.resolution.width)
    height = Fraction(bp.params.resolution.height)
    margin = width / 12
    column = width - 2 * margin
    gap = height / 48
    colors = list(bp.params.colors) or ["#111111"]
    heading = colors[0]
    body_color = colors[1] if len(colors) > 1 else "#333333"

    def block(node_id: str, text: str, size: Fraction, weight: int, color: str,
              align: str, top: Fraction) -> Node:
        font = Font(size=size, weight=weight, color=color, align=align)
        probe = Node(id=node_id, rect=Rect(Fraction(0), Fraction(0), column, Fraction(10 ** 6)),
                     runs=(TextRun(text=text, font=font),))
        content_h = sum((line.height for line in layout_node(probe, DEFAULT_GLYPHS).lines), Fraction(0))
        return Node(
            id=node_id,
            rect=Rect(margin, top, column, content_h),
            runs=(TextRun(text=text, font=font),),
        )

    nodes: list[Node] = []
    cursor = height / 16
    specs: list[tuple[str, str, Fraction, int, str, str]] = [
        ("title", bp.textual.title, width / 10, 700, heading, "center"),
    ]
    if bp.textual.subtitle:
        specs.append(("subtitle", bp.textual.subtitle, width / 20, 400, body_color, "center"))
    for i, line in enumerate(bp.textual.body, 1):
        specs.append((f"body-{i}", line, width / 26, 400, "#222222", "left"))
    for i, line in enumerate(bp.textual.contact, 1):
        specs.append((f"contact-{i}", line, width / 30, 400, "#444444", "left"))

    for node_id, text, size, weight, color, align in specs:
        node = block(node_id, text, size, weight, color, align, cursor)
        nodes.append(node)
        cursor += node.rect.height + gap

    doc = PosterDocument(
        width=width,
        height=height,
        background_color=None,
        background_image=background.id,
        nodes=tuple(nodes),
    )
    return serialize_poster(doc)
