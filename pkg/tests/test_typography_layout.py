from fractions import Fraction

import pytest

from posterforge.typography import (
    DEFAULT_GLYPHS,
    Font,
    Node,
    Rect,
    TextRun,
    compute_layout,
    layout_node,
)
from posterforge.typography.glyphs import SyntheticGlyphProvider, is_cjk

from conftest import random_document, random_node


def box(width, height, *runs, node_id="t") -> Node:
    return Node(id=node_id, rect=Rect(Fraction(0), Fraction(0), Fraction(width), Fraction(height)),
                runs=tuple(runs))


def run(text, size=20, **kw) -> TextRun:
    return TextRun(text=text, font=Font(size=Fraction(size), line_height=Fraction(1), **kw))


def line_texts(lb):
    return ["".join(g.char for g in line.glyphs) for line in lb.lines]


def test_single_line_fits():
    # "ab cd": five half-width glyphs at size 20 -> advance 10 each, total 50.
    lb = layout_node(box(100, 100, run("ab cd")), DEFAULT_GLYPHS)
    assert len(lb.lines) == 1
    assert lb.lines[0].width == 50
    assert [g.advance for g in lb.lines[0].glyphs] == [10] * 5


def test_greedy_break_at_space():
    lb = layout_node(box(40, 100, run("ab cd")), DEFAULT_GLYPHS)
    assert line_texts(lb) == ["ab", "cd"]
    assert lb.lines[0].width == 20 and lb.lines[1].width == 20
    assert not lb.overflow_flag


def test_empty_runs_zero_lines():
    lb = layout_node(box(100, 100), DEFAULT_GLYPHS)
    assert lb.lines == () and lb.overflow_flag is False


def test_cjk_breaks_between_any_two_codepoints():
    # Four full-width glyphs at size 20 in a 50px box: two per line.
    lb = layout_node(box(50, 100, run("春日咖啡")), DEFAULT_GLYPHS)
    assert line_texts(lb) == ["春日", "咖啡"]


def test_latin_word_emergency_breaks_per_glyph():
    # "abcdef" has no break opportunity; box fits 3 glyphs per line.
    lb = layout_node(box(30, 100, run("abcdef")), DEFAULT_GLYPHS)
    assert line_texts(lb) == ["abc", "def"]
    assert not lb.overflow_flag


def test_single_glyph_wider_than_box_sets_overflow():
    lb = layout_node(box(5, 100, run("ab")), DEFAULT_GLYPHS)
    assert lb.overflow_flag
    assert all(line.width > 5 or len(line.glyphs) <= 1 for line in lb.lines)


def test_newline_forces_break_and_preserves_authored_spacing():
    lb = layout_node(box(1000, 100, run("ab\ncd")), DEFAULT_GLYPHS)
    assert line_texts(lb) == ["ab", "cd"]


def test_vertical_advance_is_size_times_line_height():
    r = TextRun("春日咖啡", font=Font(size=Fraction(20), line_height=Fraction(3, 2)))
    lb = layout_node(box(40, 100, r), DEFAULT_GLYPHS)
    assert [line.y for line in lb.lines] == [0, 30]
    assert all(line.height == 30 for line in lb.lines)


def test_height_overflow_clips_and_flags():
    lb = layout_node(box(40, 25, run("ab cd")), DEFAULT_GLYPHS)
    assert len(lb.lines) == 2  # lines kept for the rasterizer to clip
    assert lb.overflow_flag


def test_degenerate_box_produces_no_lines():
    lb = layout_node(box(0, 100, run("abc")), DEFAULT_GLYPHS)
    assert lb.lines == () and lb.overflow_flag


def test_alignment_offsets():
    for align, x in (("left", 0), ("center", 30), ("right", 60)):
        lb = layout_node(box(100, 100, run("ab召x", align=align)), DEFAULT_GLYPHS)
        # advances: a=10, b=10, 召=20(CJK? yes), x=10 -> width 50... recompute below
        first = lb.lines[0]
        expected = {"left": Fraction(0), "center": (100 - first.width) / 2,
                    "right": 100 - first.width}[align]
        assert first.glyphs[0].x == expected


def test_letter_spacing_adds_per_glyph():
    r = TextRun("abc", font=Font(size=Fraction(20), letter_spacing=Fraction(2), line_height=Fraction(1)))
    lb = layout_node(box(1000, 100, r), DEFAULT_GLYPHS)
    assert lb.lines[0].width == 3 * 12


def test_line_advance_equals_sum_of_glyph_advances(rng):
    provider = SyntheticGlyphProvider()
    for _ in range(100):
        node = random_node(rng, [0], 128)
        if not node.runs:
            continue
        lb = layout_node(node, provider)
        for line in lb.lines:
            assert line.width == sum((g.advance for g in line.glyphs), Fraction(0))


def test_widening_never_increases_line_count(rng):
    from dataclasses import replace

    for _ in range(150):
        node = random_node(rng, [0], 96)
        if not node.runs or node.rect.width <= 0 or node.rect.height <= 0:
            continue
        base = len(layout_node(node, DEFAULT_GLYPHS).lines)
        wider = replace(node, rect=replace(node.rect, width=node.rect.width + rng.randint(1, 64)))
        assert len(layout_node(wider, DEFAULT_GLYPHS).lines) <= base


def test_compute_layout_covers_exactly_text_nodes(rng):
    for _ in range(30):
        doc = random_document(rng)
        boxes = compute_layout(doc, DEFAULT_GLYPHS)
        from posterforge.typography import iter_nodes
        text_nodes = [n.id for n in iter_nodes(doc) if n.runs]
        assert [b.node_id for b in boxes] == text_nodes


def test_is_cjk_ranges():
    assert is_cjk("海") and is_cjk("ア") and is_cjk("한")
    assert not is_cjk("a") and not is_cjk(" ") and not is_cjk("1")
