"""Post-editing: immutable document transforms plus their JSON wire form.

Supported operations: SetText, Move, Resize, SetStyle, AddNode, RemoveNode.
Every edit returns a new document; Move shifts a node's whole subtree since
child coordinates are document-absolute but follow the parent in the HTML
form. The JSON codec backs the HTTP PATCH route and the CLI.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Union

from .model import (
    BoxStyle,
    Font,
    Node,
    PosterDocument,
    Rect,
    TextRun,
    TypographyError,
    find_node,
    iter_nodes,
    node_ids,
)
from .parse import DuplicateId
from .units import parse_length, parse_rational, rational_to_json

_HEX_COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")


class UnknownNode(TypographyError):
    def __init__(self, node_id: str):
        super().__init__(f"no node with id {node_id!r}")
        self.node_id = node_id


class InvalidStyleValue(TypographyError):
    def __init__(self, prop: str, value: object, reason: str = ""):
        detail = f": {reason}" if reason else ""
        super().__init__(f"invalid value {value!r} for {prop!r}{detail}")
        self.prop = prop
        self.value = value


class InvalidEdit(TypographyError):
    pass


@dataclass(frozen=True)
class SetText:
    node_id: str
    runs: tuple[TextRun, ...]

    def __post_init__(self):
        object.__setattr__(self, "runs", tuple(self.runs))


@dataclass(frozen=True)
class Move:
    node_id: str
    dx: Fraction
    dy: Fraction


@dataclass(frozen=True)
class Resize:
    node_id: str
    width: Fraction
    height: Fraction


@dataclass(frozen=True)
class SetStyle:
    node_id: str
    prop: str
    value: str


@dataclass(frozen=True)
class AddNode:
    parent_id: str | None
    node: Node


@dataclass(frozen=True)
class RemoveNode:
    node_id: str


EditOp = Union[SetText, Move, Resize, SetStyle, AddNode, RemoveNode]


def _rewrite(nodes: tuple[Node, ...], node_id: str, fn) -> tuple[tuple[Node, ...], bool]:
    out = []
    hit = False
    for n in nodes:
        if n.id == node_id:
            replacement = fn(n)
            if replacement is not None:
                out.append(replacement)
            hit = True
        else:
            children, child_hit = _rewrite(n.children, node_id, fn)
            out.append(replace(n, children=children) if child_hit else n)
            hit = hit or child_hit
    return tuple(out), hit


def _shift_subtree(n: Node, dx: Fraction, dy: Fraction) -> Node:
    return replace(
        n,
        rect=n.rect.translated(dx, dy),
        children=tuple(_shift_subtree(c, dx, dy) for c in n.children),
    )


_FONT_PROPS = {"font-family", "font-size", "font-weight", "color", "letter-spacing",
               "line-height", "text-align"}
_BOX_PROPS = {"left", "top", "width", "height", "z-index", "background-color",
              "background-image", "border-radius"}


def _apply_style(n: Node, prop: str, value: str) -> Node:
    from .parse import _URL_RE  # shared grammar for url() values

    def length(min_value: Fraction | None = None, exclusive: bool = False) -> Fraction:
        try:
            try:
                v = parse_length(value)
            except ValueError:
                v = parse_rational(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidStyleValue(prop, value, str(exc)) from exc
        if min_value is not None and (v <= min_value if exclusive else v < min_value):
            raise InvalidStyleValue(prop, value, f"must be {'>' if exclusive else '>='} {min_value}")
        return v

    if prop in _FONT_PROPS:
        if not n.runs:
            raise InvalidEdit(f"node {n.id!r} has no text runs to restyle")

        def refont(f: Font) -> Font:
            if prop == "font-family":
                if any(c in value for c in "<>\";"):
                    raise InvalidStyleValue(prop, value)
                return replace(f, family=value)
            if prop == "font-size":
                return replace(f, size=length(Fraction(0), exclusive=True))
            if prop == "font-weight":
                if value not in ("400", "700"):
                    raise InvalidStyleValue(prop, value, "must be 400 or 700")
                return replace(f, weight=int(value))
            if prop == "color":
                if not _HEX_COLOR_RE.match(value):
                    raise InvalidStyleValue(prop, value, "expected #RRGGBB")
                return replace(f, color=value.upper())
            if prop == "letter-spacing":
                return replace(f, letter_spacing=length())
            if prop == "line-height":
                return replace(f, line_height=length(Fraction(1)))
            return replace(f, align=_align(value))

        def _align(v: str) -> str:
            if v not in ("left", "center", "right"):
                raise InvalidStyleValue(prop, v, "must be left|center|right")
            return v

        return replace(n, runs=tuple(replace(r, font=refont(r.font)) for r in n.runs))

    if prop not in _BOX_PROPS:
        raise InvalidStyleValue(prop, value, "unknown property")
    if prop in ("left", "top"):
        v = length()
        if prop == "left":
            return _shift_subtree(n, v - n.rect.left, Fraction(0))
        return _shift_subtree(n, Fraction(0), v - n.rect.top)
    if prop in ("width", "height"):
        v = length(Fraction(0))
        rect = replace(n.rect, **{prop: v})
        return replace(n, rect=rect)
    if prop == "z-index":
        if not re.match(r"^-?\d+$", value):
            raise InvalidStyleValue(prop, value, "must be an integer")
        return replace(n, z_index=int(value))
    if prop == "background-color":
        if value == "none":
            return replace(n, style=replace(n.style, background_color=None))
        if not _HEX_COLOR_RE.match(value):
            raise InvalidStyleValue(prop, value, "expected #RRGGBB")
        return replace(n, style=replace(n.style, background_color=value.upper()))
    if prop == "background-image":
        if value == "none":
            return replace(n, style=replace(n.style, background_image=None))
        m = _URL_RE.match(value)
        ref = next((g for g in m.groups() if g), None) if m else value
        if not ref or any(c in ref for c in "<>\" '"):
            raise InvalidStyleValue(prop, value)
        return replace(n, style=replace(n.style, background_image=ref))
    # border-radius
    return replace(n, style=replace(n.style, border_radius=length(Fraction(0))))


def apply_edit(doc: PosterDocument, edit: EditOp) -> PosterDocument:
    """Apply one edit, returning a new document; the original is untouched."""
    if isinstance(edit, AddNode):
        new_ids = [n.id for n in iter_nodes_of(edit.node)]
        existing = set(node_ids(doc))
        for nid in new_ids:
            if not nid:
                raise InvalidEdit("added nodes must carry non-empty ids")
            if nid in existing:
                raise DuplicateId(nid)
        if len(set(new_ids)) != len(new_ids):
            raise DuplicateId(next(i for i in new_ids if new_ids.count(i) > 1))
        if edit.parent_id is None:
            return replace(doc, nodes=doc.nodes + (edit.node,))
        parent = find_node(doc, edit.parent_id)
        if parent is None:
            raise UnknownNode(edit.parent_id)
        if parent.runs:
            raise InvalidEdit(f"node {edit.parent_id!r} holds text runs, not children")
        nodes, _ = _rewrite(doc.nodes, edit.parent_id, lambda n: replace(n, children=n.children + (edit.node,)))
        return replace(doc, nodes=nodes)

    if isinstance(edit, RemoveNode):
        nodes, hit = _rewrite(doc.nodes, edit.node_id, lambda n: None)
        if not hit:
            raise UnknownNode(edit.node_id)
        return replace(doc, nodes=nodes)

    def transform(n: Node) -> Node:
        if isinstance(edit, SetText):
            if n.children:
                raise InvalidEdit(f"node {n.id!r} holds children, not text")
            for r in edit.runs:
                if not r.text:
                    raise InvalidEdit("text runs must be non-empty")
                if r.font.size <= 0:
                    raise InvalidStyleValue("font-size", str(r.font.size), "must be positive")
            return replace(n, runs=tuple(edit.runs))
        if isinstance(edit, Move):
            return _shift_subtree(n, Fraction(edit.dx), Fraction(edit.dy))
        if isinstance(edit, Resize):
            w, h = Fraction(edit.width), Fraction(edit.height)
            if w < 0 or h < 0:
                raise InvalidStyleValue("width" if w < 0 else "height", str(w if w < 0 else h), "must be >= 0")
            return replace(n, rect=replace(n.rect, width=w, height=h))
        if isinstance(edit, SetStyle):
            return _apply_style(n, edit.prop, edit.value)
        raise InvalidEdit(f"unsupported edit {edit!r}")

    nodes, hit = _rewrite(doc.nodes, edit.node_id, transform)
    if not hit:
        raise UnknownNode(edit.node_id)
    return replace(doc, nodes=nodes)


def iter_nodes_of(node: Node):
    yield node
    for c in node.children:
        yield from iter_nodes_of(c)


# --- JSON wire format --------------------------------------------------------

def font_to_json(f: Font) -> dict:
    return {
        "family": f.family,
        "size": rational_to_json(f.size),
        "weight": f.weight,
        "color": f.color,
        "letter_spacing": rational_to_json(f.letter_spacing),
        "line_height": rational_to_json(f.line_height),
        "align": f.align,
    }


def font_from_json(d: dict) -> Font:
    base = Font()
    try:
        font = Font(
            family=str(d.get("family", base.family)),
            size=parse_rational(d["size"]) if "size" in d else base.size,
            weight=int(d.get("weight", base.weight)),
            color=str(d.get("color", base.color)),
            letter_spacing=parse_rational(d.get("letter_spacing", 0)),
            line_height=parse_rational(d.get("line_height")) if "line_height" in d else base.line_height,
            align=str(d.get("align", base.align)),
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise InvalidEdit(f"bad font object: {exc}") from exc
    if font.weight not in (400, 700):
        raise InvalidEdit("font weight must be 400 or 700")
    if font.size <= 0:
        raise InvalidEdit("font size must be positive")
    if font.line_height < 1:
        raise InvalidEdit("line height must be >= 1")
    if not _HEX_COLOR_RE.match(font.color):
        raise InvalidEdit(f"bad font color {font.color!r}")
    if font.align not in ("left", "center", "right"):
        raise InvalidEdit(f"bad align {font.align!r}")
    return replace(font, color=font.color.upper())


def run_to_json(r: TextRun) -> dict:
    return {"text": r.text, "font": font_to_json(r.font)}


def run_from_json(d: dict) -> TextRun:
    if not isinstance(d, dict) or not isinstance(d.get("text"), str) or not d["text"]:
        raise InvalidEdit("run needs non-empty text")
    return TextRun(text=d["text"], font=font_from_json(d.get("font", {})))


def node_to_json(n: Node) -> dict:
    out: dict = {
        "id": n.id,
        "rect": {
            "left": rational_to_json(n.rect.left),
            "top": rational_to_json(n.rect.top),
            "width": rational_to_json(n.rect.width),
            "height": rational_to_json(n.rect.height),
        },
        "z_index": n.z_index,
        "style": {
            "background_color": n.style.background_color,
            "background_image": n.style.background_image,
            "border_radius": rational_to_json(n.style.border_radius),
        },
    }
    if n.runs:
        out["runs"] = [run_to_json(r) for r in n.runs]
    if n.children:
        out["children"] = [node_to_json(c) for c in n.children]
    return out


def node_from_json(d: dict) -> Node:
    try:
        rect = d["rect"]
        r = Rect(
            parse_rational(rect["left"]),
            parse_rational(rect["top"]),
            parse_rational(rect["width"]),
            parse_rational(rect["height"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidEdit(f"bad node rect: {exc}") from exc
    if r.width < 0 or r.height < 0:
        raise InvalidEdit("node width/height must be >= 0")
    style_d = d.get("style", {})
    color = style_d.get("background_color")
    if color is not None and not _HEX_COLOR_RE.match(str(color)):
        raise InvalidEdit(f"bad background color {color!r}")
    style = BoxStyle(
        background_color=str(color).upper() if color is not None else None,
        background_image=style_d.get("background_image"),
        border_radius=parse_rational(style_d.get("border_radius", 0)),
    )
    if style.border_radius < 0:
        raise InvalidEdit("border radius must be >= 0")
    runs = tuple(run_from_json(x) for x in d.get("runs", []))
    children = tuple(node_from_json(x) for x in d.get("children", []))
    if runs and children:
        raise InvalidEdit("a node holds runs or children, not both")
    nid = d.get("id")
    if not isinstance(nid, str) or not nid:
        raise InvalidEdit("node needs a non-empty string id")
    try:
        return Node(id=nid, rect=r, z_index=int(d.get("z_index", 0)), style=style,
                    children=children, runs=runs)
    except (TypeError, ValueError) as exc:
        raise InvalidEdit(str(exc)) from exc


def edit_to_json(op: EditOp) -> dict:
    if isinstance(op, SetText):
        return {"op": "set_text", "id": op.node_id, "runs": [run_to_json(r) for r in op.runs]}
    if isinstance(op, Move):
        return {"op": "move", "id": op.node_id, "dx": rational_to_json(Fraction(op.dx)), "dy": rational_to_json(Fraction(op.dy))}
    if isinstance(op, Resize):
        return {"op": "resize", "id": op.node_id, "width": rational_to_json(Fraction(op.width)), "height": rational_to_json(Fraction(op.height))}
    if isinstance(op, SetStyle):
        return {"op": "set_style", "id": op.node_id, "property": op.prop, "value": op.value}
    if isinstance(op, AddNode):
        return {"op": "add_node", "parent": op.parent_id, "node": node_to_json(op.node)}
    if isinstance(op, RemoveNode):
        return {"op": "remove_node", "id": op.node_id}
    raise InvalidEdit(f"unsupported edit {op!r}")


def edit_from_json(d: dict) -> EditOp:
    if not isinstance(d, dict):
        raise InvalidEdit("edit must be an object")
    kind = d.get("op")
    try:
        if kind == "set_text":
            return SetText(node_id=str(d["id"]), runs=tuple(run_from_json(x) for x in d["runs"]))
        if kind == "move":
            return Move(node_id=str(d["id"]), dx=parse_rational(d["dx"]), dy=parse_rational(d["dy"]))
        if kind == "resize":
            return Resize(node_id=str(d["id"]), width=parse_rational(d["width"]), height=parse_rational(d["height"]))
        if kind == "set_style":
            return SetStyle(node_id=str(d["id"]), prop=str(d["property"]), value=str(d["value"]))
        if kind == "add_node":
            return AddNode(parent_id=d.get("parent"), node=node_from_json(d["node"]))
        if kind == "remove_node":
            return RemoveNode(node_id=str(d["id"]))
    except KeyError as exc:
        raise InvalidEdit(f"edit {kind!r} missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InvalidEdit(f"bad edit payload: {exc}") from exc
    raise InvalidEdit(f"unknown edit op {kind!r}")
