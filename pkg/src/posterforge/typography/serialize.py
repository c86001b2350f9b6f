"""Canonical PosterHTML serialization.

Output is deterministic: fixed attribute order (id, style), fixed property
order inside ``style``, defaults omitted, two-space indentation, children
written with CSS parent-relative offsets. ``parse_poster_html`` of the
output reproduces the document value exactly and emits zero warnings.
"""

from __future__ import annotations

from fractions import Fraction

from .model import Font, Node, PosterDocument
from .units import format_length, format_number

_TEXT_ESCAPES = {"&": "&amp;", "<": "&lt;", ">": "&gt;"}
_ATTR_ESCAPES = {"&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;"}


def _escape(s: str, table: dict[str, str]) -> str:
    return "".join(table.get(c, c) for c in s)


def _font_style(font: Font) -> str:
    default = Font()
    parts = []
    if font.family != default.family:
        parts.append(f"font-family:{font.family}")
    parts.append(f"font-size:{format_length(font.size)}")
    if font.weight != default.weight:
        parts.append(f"font-weight:{font.weight}")
    if font.color != default.color:
        parts.append(f"color:{font.color}")
    if font.letter_spacing != default.letter_spacing:
        parts.append(f"letter-spacing:{format_length(font.letter_spacing)}")
    if font.line_height != default.line_height:
        parts.append(f"line-height:{format_number(font.line_height)}")
    if font.align != default.align:
        parts.append(f"text-align:{font.align}")
    return ";".join(parts)


def _node_style(node: Node, origin: tuple[Fraction, Fraction]) -> str:
    rel_left = node.rect.left - origin[0]
    rel_top = node.rect.top - origin[1]
    parts = [
        "position:absolute",
        f"left:{format_length(rel_left)}",
        f"top:{format_length(rel_top)}",
        f"width:{format_length(node.rect.width)}",
        f"height:{format_length(node.rect.height)}",
    ]
    if node.z_index != 0:
        parts.append(f"z-index:{node.z_index}")
    if node.style.background_color is not None:
        parts.append(f"background-color:{node.style.background_color}")
    if node.style.background_image is not None:
        parts.append(f"background-image:url({node.style.background_image})")
    if node.style.border_radius != 0:
        parts.append(f"border-radius:{format_length(node.style.border_radius)}")
    return ";".join(parts)


def _write_node(node: Node, origin: tuple[Fraction, Fraction], indent: int, out: list[str]) -> None:
    pad = "  " * indent
    style = _node_style(node, origin)
    open_tag = f'{pad}<div id="{_escape(node.id, _ATTR_ESCAPES)}" style="{_escape(style, _ATTR_ESCAPES)}">'
    if not node.children and not node.runs:
        out.append(open_tag + "</div>")
        return
    out.append(open_tag)
    if node.runs:
        for run in node.runs:
            span_style = _escape(_font_style(run.font), _ATTR_ESCAPES)
            out.append(f'{pad}  <span style="{span_style}">{_escape(run.text, _TEXT_ESCAPES)}</span>')
    else:
        child_origin = (node.rect.left, node.rect.top)
        for child in node.children:
            _write_node(child, child_origin, indent + 1, out)
    out.append(f"{pad}</div>")


def serialize_poster(doc: PosterDocument) -> str:
    """Serialize a document to canonical PosterHTML text."""
    parts = [f"width:{format_length(doc.width)}", f"height:{format_length(doc.height)}"]
    if doc.background_image is not None:
        parts.append(f"background-image:url({doc.background_image})")
    else:
        parts.append(f"background-color:{doc.background_color}")
    style = ";".join(parts)
    out = [f'<div class="poster" style="{_escape(style, _ATTR_ESCAPES)}">']
    for node in doc.nodes:
        _write_node(node, (Fraction(0), Fraction(0)), 1, out)
    out.append("</div>")
    return "\n".join(out) + "\n"
