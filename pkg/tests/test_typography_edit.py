from fractions import Fraction

import pytest

from posterforge.typography import (
    AddNode,
    BoxStyle,
    DuplicateId,
    Font,
    InvalidEdit,
    InvalidStyleValue,
    Move,
    Node,
    PosterDocument,
    Rect,
    RemoveNode,
    Resize,
    SetStyle,
    SetText,
    TextRun,
    UnknownNode,
    apply_edit,
    edit_from_json,
    edit_to_json,
    extract_text,
    find_node,
    node_from_json,
    node_to_json,
    parse_poster_html,
    serialize_poster,
)


def sample_doc() -> PosterDocument:
    return PosterDocument(
        width=Fraction(200), height=Fraction(300),
        nodes=(
            Node(id="title", rect=Rect(Fraction(10), Fraction(10), Fraction(180), Fraction(40)),
                 runs=(TextRun("Hello", Font(size=Fraction(20))),)),
            Node(id="group", rect=Rect(Fraction(10), Fraction(60), Fraction(180), Fraction(200)),
                 children=(
                     Node(id="child", rect=Rect(Fraction(20), Fraction(70), Fraction(50), Fraction(20)),
                          style=BoxStyle(background_color="#ABCDEF")),
                 )),
        ),
    )


def test_move_zero_is_identity():
    doc = sample_doc()
    assert apply_edit(doc, Move("title", Fraction(0), Fraction(0))) == doc


def test_move_shifts_subtree():
    doc = apply_edit(sample_doc(), Move("group", Fraction(5), Fraction(-10)))
    assert find_node(doc, "group").rect.left == 15
    assert find_node(doc, "child").rect == Rect(Fraction(25), Fraction(60), Fraction(50), Fraction(20))


def test_set_text_reflected_in_extraction():
    doc = apply_edit(sample_doc(), SetText("title", (TextRun("新标题", Font(size=Fraction(20))),)))
    assert extract_text(doc)[0] == "新标题"


def test_set_text_on_container_rejected():
    with pytest.raises(InvalidEdit):
        apply_edit(sample_doc(), SetText("group", (TextRun("x", Font(size=Fraction(10))),)))


def test_remove_then_add_appends_last():
    doc = sample_doc()
    removed = apply_edit(doc, RemoveNode("child"))
    assert find_node(removed, "child") is None
    restored = apply_edit(removed, AddNode("group", doc.nodes[1].children[0]))
    assert find_node(restored, "child") == doc.nodes[1].children[0]
    assert restored == doc  # child was the only one, so order matches too


def test_add_duplicate_id_rejected():
    doc = sample_doc()
    clone = Node(id="title", rect=Rect(Fraction(0), Fraction(0), Fraction(1), Fraction(1)))
    with pytest.raises(DuplicateId):
        apply_edit(doc, AddNode(None, clone))


def test_add_to_run_node_rejected():
    node = Node(id="x", rect=Rect(Fraction(0), Fraction(0), Fraction(1), Fraction(1)))
    with pytest.raises(InvalidEdit):
        apply_edit(sample_doc(), AddNode("title", node))


def test_unknown_node():
    with pytest.raises(UnknownNode):
        apply_edit(sample_doc(), Move("ghost", Fraction(1), Fraction(1)))
    with pytest.raises(UnknownNode):
        apply_edit(sample_doc(), RemoveNode("ghost"))


def test_resize():
    doc = apply_edit(sample_doc(), Resize("title", Fraction(90), Fraction(45)))
    rect = find_node(doc, "title").rect
    assert rect.width == 90 and rect.height == 45
    with pytest.raises(InvalidStyleValue):
        apply_edit(sample_doc(), Resize("title", Fraction(-1), Fraction(5)))


def test_set_style_box_properties():
    doc = apply_edit(sample_doc(), SetStyle("child", "background-color", "#ff0000"))
    assert find_node(doc, "child").style.background_color == "#FF0000"
    doc = apply_edit(doc, SetStyle("child", "border-radius", "4px"))
    assert find_node(doc, "child").style.border_radius == 4
    doc = apply_edit(doc, SetStyle("child", "z-index", "7"))
    assert find_node(doc, "child").z_index == 7
    doc = apply_edit(doc, SetStyle("child", "left", "33.5px"))
    assert find_node(doc, "child").rect.left == Fraction(67, 2)


def test_set_style_font_properties_apply_to_all_runs():
    doc = apply_edit(sample_doc(), SetStyle("title", "color", "#112233"))
    assert all(r.font.color == "#112233" for r in find_node(doc, "title").runs)
    doc = apply_edit(doc, SetStyle("title", "font-size", "28px"))
    assert find_node(doc, "title").runs[0].font.size == 28
    with pytest.raises(InvalidEdit):
        apply_edit(doc, SetStyle("group", "font-size", "28px"))


def test_set_style_invalid_values():
    with pytest.raises(InvalidStyleValue):
        apply_edit(sample_doc(), SetStyle("title", "color", "red"))
    with pytest.raises(InvalidStyleValue):
        apply_edit(sample_doc(), SetStyle("title", "font-weight", "500"))
    with pytest.raises(InvalidStyleValue):
        apply_edit(sample_doc(), SetStyle("child", "width", "-3px"))
    with pytest.raises(InvalidStyleValue):
        apply_edit(sample_doc(), SetStyle("child", "position", "fixed"))


def test_originals_unchanged():
    doc = sample_doc()
    apply_edit(doc, Move("title", Fraction(5), Fraction(5)))
    apply_edit(doc, RemoveNode("child"))
    assert doc == sample_doc()


def test_edit_json_roundtrip():
    ops = [
        SetText("title", (TextRun("x", Font(size=Fraction(12))),)),
        Move("a", Fraction(1, 2), Fraction(-3)),
        Resize("b", Fraction(10), Fraction(20)),
        SetStyle("c", "background-color", "#010203"),
        AddNode("p", Node(id="q", rect=Rect(Fraction(1), Fraction(2), Fraction(3), Fraction(4)),
                          runs=(TextRun("t", Font(size=Fraction(9))),))),
        AddNode(None, Node(id="r", rect=Rect(Fraction(0), Fraction(0), Fraction(5), Fraction(5)))),
        RemoveNode("z"),
    ]
    for op in ops:
        assert edit_from_json(edit_to_json(op)) == op


def test_edit_json_rejects_garbage():
    for bad in ({}, {"op": "warp"}, {"op": "move", "id": "x"},
                {"op": "set_text", "id": "x", "runs": [{"text": ""}]},
                {"op": "add_node", "parent": None, "node": {"id": ""}}):
        with pytest.raises(InvalidEdit):
            edit_from_json(bad)


def test_node_json_roundtrip_nested():
    node = Node(
        id="a", rect=Rect(Fraction(1), Fraction(2), Fraction(30), Fraction(40)), z_index=2,
        style=BoxStyle(background_color="#0A0B0C", border_radius=Fraction(5, 2)),
        children=(Node(id="b", rect=Rect(Fraction(3), Fraction(4), Fraction(5), Fraction(6))),),
    )
    assert node_from_json(node_to_json(node)) == node


def test_edits_survive_serialization_roundtrip():
    doc = sample_doc()
    edited = apply_edit(doc, SetText("title", (TextRun("编辑后", Font(size=Fraction(18))),)))
    reparsed = parse_poster_html(serialize_poster(edited))
    assert reparsed == edited
    assert extract_text(reparsed)[0] == "编辑后"
