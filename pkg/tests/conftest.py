"""Shared fixtures and seeded random generators for documents and blueprints."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from posterforge.blueprint import (
    BackgroundAttributes,
    DesignBlueprint,
    KeyParameters,
    Resolution,
    StyleId,
    TextualContent,
)
from posterforge.typography import BoxStyle, Font, Node, PosterDocument, Rect, TextRun

LATIN = "abcdefghij klmnop qrstuv wxyz 0123456789"
CJK = "海报设计生成春日咖啡音乐节城市市集夏夜灯光艺术展览限时特惠"
MIXED = LATIN + CJK + "，。!?-"


def random_text(rng: random.Random, max_len: int = 24, alphabet: str = MIXED) -> str:
    n = rng.randint(1, max_len)
    s = "".join(rng.choice(alphabet) for _ in range(n))
    # Occasional forced line break; never leading/trailing-only whitespace.
    if rng.random() < 0.15 and len(s) > 4:
        k = rng.randint(1, len(s) - 2)
        s = s[:k] + "\n" + s[k:]
    return s if s.strip() else "x" + s


def random_fraction(rng: random.Random, lo: int, hi: int) -> Fraction:
    den = rng.choice((1, 1, 2, 4, 5, 10))
    return Fraction(rng.randint(lo * den, hi * den), den)


def random_font(rng: random.Random) -> Font:
    return Font(
        family=rng.choice(("sans-serif", "serif", "Noto Sans SC")),
        size=random_fraction(rng, 6, 40),
        weight=rng.choice((400, 700)),
        color="#{:06X}".format(rng.randrange(0, 0x1000000)),
        letter_spacing=rng.choice((Fraction(0), Fraction(0), Fraction(1, 2), Fraction(1))),
        line_height=rng.choice((Fraction(1), Fraction(6, 5), Fraction(3, 2))),
        align=rng.choice(("left", "center", "right")),
    )


def random_node(rng: random.Random, ident: list[int], span: int, depth: int = 0) -> Node:
    ident[0] += 1
    node_id = f"g{ident[0]}"
    rect = Rect(
        random_fraction(rng, 0, span),
        random_fraction(rng, 0, span),
        random_fraction(rng, 0, span // 2),
        random_fraction(rng, 0, span // 2),
    )
    style = BoxStyle(
        background_color="#{:06X}".format(rng.randrange(0, 0x1000000)) if rng.random() < 0.5 else None,
        border_radius=random_fraction(rng, 0, 8) if rng.random() < 0.3 else Fraction(0),
    )
    kind = rng.random()
    children: tuple[Node, ...] = ()
    runs: tuple[TextRun, ...] = ()
    if kind < 0.55:
        runs = tuple(
            TextRun(text=random_text(rng), font=random_font(rng))
            for _ in range(rng.randint(1, 3))
        )
    elif kind < 0.75 and depth < 2:
        children = tuple(random_node(rng, ident, span, depth + 1) for _ in range(rng.randint(1, 3)))
    return Node(id=node_id, rect=rect, z_index=rng.randint(-2, 3), style=style,
                children=children, runs=runs)


def random_document(rng: random.Random, max_px: int = 256) -> PosterDocument:
    width = rng.randint(64, max_px)
    height = rng.randint(64, max_px)
    ident = [0]
    nodes = tuple(random_node(rng, ident, min(width, height)) for _ in range(rng.randint(0, 5)))
    return PosterDocument(
        width=Fraction(width),
        height=Fraction(height),
        background_color="#{:06X}".format(rng.randrange(0, 0x1000000)),
        nodes=nodes,
    )


def random_blueprint(rng: random.Random) -> DesignBlueprint:
    return DesignBlueprint(
        textual=TextualContent(
            title=random_text(rng, 16),
            subtitle=random_text(rng, 20) if rng.random() < 0.6 else None,
            body=tuple(random_text(rng, 30) for _ in range(rng.randint(0, 4))),
            contact=tuple(random_text(rng, 16) for _ in range(rng.randint(0, 2))),
        ),
        background=BackgroundAttributes(
            style=rng.choice(list(StyleId)),
            caption=random_text(rng, 40),
        ),
        params=KeyParameters(
            resolution=Resolution(rng.randint(64, 2048), rng.randint(64, 2048)),
            theme=rng.choice(("", random_text(rng, 10))),
            elements=tuple(random_text(rng, 8) for _ in range(rng.randint(0, 3))),
            colors=tuple("#{:06X}".format(rng.randrange(0, 0x1000000)) for _ in range(rng.randint(0, 3))),
            purpose=rng.choice(("", random_text(rng, 12))),
        ),
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20260809)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
