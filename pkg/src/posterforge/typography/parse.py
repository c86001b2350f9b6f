"""PosterHTML parser.

The dialect is closed: ``div``, ``span`` and ``img`` tags, absolute
positioning, inline ``style`` attributes drawn from a fixed property
whitelist. The root is ``<div class="poster" style="width:..;height:..">``.
A div holds either element children or spans (text runs), never raw text.
``left``/``top`` in the markup follow CSS semantics (relative to the parent
box); the parsed model stores document-absolute rects.

Strict mode rejects anything off-grammar; lenient mode downgrades unknown
tags, attributes and properties to structured warnings and ignores them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .model import (
    BoxStyle,
    Font,
    Node,
    PosterDocument,
    Rect,
    TextRun,
    TypographyError,
)
from .units import parse_length, parse_number

KNOWN_TAGS = {"div", "span", "img"}
KNOWN_PROPERTIES = {
    "position", "left", "top", "width", "height", "z-index",
    "background-color", "background-image", "border-radius",
    "font-family", "font-size", "font-weight", "color",
    "letter-spacing", "line-height", "text-align",
}
_ROOT_PROPS = {"width", "height", "background-color", "background-image"}
_BOX_PROPS = {"position", "left", "top", "width", "height", "z-index",
              "background-color", "background-image", "border-radius", "text-align"}
_SPAN_PROPS = {"font-family", "font-size", "font-weight", "color",
               "letter-spacing", "line-height", "text-align"}

_HEX_COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")
_NAME_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9-]*")
_URL_RE = re.compile(r"^url\(\s*(?:\"([^\"]*)\"|'([^']*)'|([^'\")\s]+))\s*\)$")

_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "apos": "'"}


class ParseError(TypographyError):
    def __init__(self, message: str, position: int = -1):
        super().__init__(message if position < 0 else f"{message} (at offset {position})")
        self.position = position


class UnclosedTag(ParseError):
    pass


class UnknownTag(ParseError):
    def __init__(self, name: str, position: int = -1):
        super().__init__(f"unknown tag <{name}>", position)
        self.name = name


class UnknownProperty(ParseError):
    def __init__(self, name: str, position: int = -1):
        super().__init__(f"unknown property {name!r}", position)
        self.name = name


class MissingRootDimensions(ParseError):
    pass


class DuplicateId(ParseError):
    def __init__(self, node_id: str, position: int = -1):
        super().__init__(f"duplicate node id {node_id!r}", position)
        self.node_id = node_id


class GrammarViolation(ParseError):
    pass


@dataclass(frozen=True)
class ParseWarning:
    code: str
    position: int
    message: str


@dataclass(frozen=True)
class ParseResult:
    document: PosterDocument
    warnings: tuple[ParseWarning, ...]


@dataclass
class _RawElement:
    tag: str
    attrs: dict[str, str]
    position: int
    children: list["_RawElement"] = field(default_factory=list)
    text: str = ""


class _Parser:
    def __init__(self, text: str, mode: str):
        self.text = text
        self.pos = 0
        self.mode = mode
        self.warnings: list[ParseWarning] = []

    # -- low-level -----------------------------------------------------------

    def _warn(self, code: str, position: int, message: str) -> None:
        self.warnings.append(ParseWarning(code=code, position=position, message=message))

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def _decode_entities(self, raw: str, position: int) -> str:
        out: list[str] = []
        i = 0
        while i < len(raw):
            ch = raw[i]
            if ch != "&":
                out.append(ch)
                i += 1
                continue
            end = raw.find(";", i + 1)
            if end < 0:
                raise GrammarViolation("unterminated entity", position + i)
            name = raw[i + 1:end]
            if name.startswith("#x") or name.startswith("#X"):
                out.append(chr(int(name[2:], 16)))
            elif name.startswith("#"):
                out.append(chr(int(name[1:])))
            elif name in _ENTITIES:
                out.append(_ENTITIES[name])
            else:
                raise GrammarViolation(f"unknown entity &{name};", position + i)
            i = end + 1
        return "".join(out)

    # -- tag scanning ---------------------------------------------------------

    def _read_tag(self) -> tuple[str, dict[str, str], bool, int]:
        """At '<': read an opening tag; returns (name, attrs, self_closing, pos)."""
        start = self.pos
        assert self.text[self.pos] == "<"
        self.pos += 1
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            raise GrammarViolation("malformed tag", start)
        name = m.group(0).lower()
        self.pos = m.end()
        attrs: dict[str, str] = {}
        while True:
            self._skip_ws()
            if self.pos >= len(self.text):
                raise UnclosedTag(f"<{name}> never closed", start)
            ch = self.text[self.pos]
            if ch == ">":
                self.pos += 1
                return name, attrs, False, start
            if ch == "/":
                if not self.text.startswith("/>", self.pos):
                    raise GrammarViolation("stray '/' in tag", self.pos)
                self.pos += 2
                return name, attrs, True, start
            m = _NAME_RE.match(self.text, self.pos)
            if not m:
                raise GrammarViolation("malformed attribute", self.pos)
            attr = m.group(0).lower()
            self.pos = m.end()
            self._skip_ws()
            if self.pos >= len(self.text) or self.text[self.pos] != "=":
                raise GrammarViolation(f"attribute {attr!r} needs a value", self.pos)
            self.pos += 1
            self._skip_ws()
            if self.pos >= len(self.text) or self.text[self.pos] not in "\"'":
                raise GrammarViolation(f"attribute {attr!r} value must be quoted", self.pos)
            quote = self.text[self.pos]
            self.pos += 1
            end = self.text.find(quote, self.pos)
            if end < 0:
                raise UnclosedTag(f"unterminated attribute value on <{name}>", start)
            raw = self.text[self.pos:end]
            if attr in attrs:
                raise GrammarViolation(f"duplicate attribute {attr!r}", self.pos)
            attrs[attr] = self._decode_entities(raw, self.pos)
            self.pos = end + 1

    def _read_close(self, name: str, open_pos: int) -> None:
        assert self.text.startswith("</", self.pos)
        start = self.pos
        self.pos += 2
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            raise GrammarViolation("malformed closing tag", start)
        closing = m.group(0).lower()
        if closing != name:
            raise UnclosedTag(f"<{name}> closed by </{closing}>", open_pos)
        self.pos = m.end()
        self._skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ">":
            raise GrammarViolation("malformed closing tag", start)
        self.pos += 1

    # -- tree building --------------------------------------------------------

    def _skip_unknown_element(self, name: str, self_closing: bool, open_pos: int) -> None:
        """Lenient mode: consume an off-grammar element including its subtree."""
        if self_closing:
            return
        depth = 1
        while depth:
            idx = self.text.find("<", self.pos)
            if idx < 0:
                raise UnclosedTag(f"<{name}> never closed", open_pos)
            self.pos = idx
            if self.text.startswith("</", self.pos):
                end = self.text.find(">", self.pos)
                if end < 0:
                    raise UnclosedTag(f"<{name}> never closed", open_pos)
                self.pos = end + 1
                depth -= 1
            else:
                tag, _, selfclosed, _ = self._read_tag()
                if not selfclosed:
                    depth += 1

    def _parse_element(self) -> _RawElement | None:
        """Parse one element at '<'; None if it was skipped leniently."""
        name, attrs, self_closing, open_pos = self._read_tag()
        if name not in KNOWN_TAGS:
            if self.mode == "strict":
                raise UnknownTag(name, open_pos)
            self._warn("unknown-tag", open_pos, f"ignored <{name}>")
            self._skip_unknown_element(name, self_closing, open_pos)
            return None
        elem = _RawElement(tag=name, attrs=attrs, position=open_pos)
        if name == "img":
            if not self_closing:
                # Void element: accept both <img ...> and <img .../>.
                pass
            return elem
        if self_closing:
            if name == "span":
                raise GrammarViolation("<span/> cannot be empty", open_pos)
            return elem
        if name == "span":
            elem.text = self._parse_span_text(open_pos)
            return elem
        # div content: children elements, or raw text only when whitespace
        text_start = self.pos
        while True:
            idx = self.text.find("<", self.pos)
            if idx < 0:
                raise UnclosedTag("<div> never closed", open_pos)
            between = self.text[self.pos:idx]
            if between.strip():
                raise GrammarViolation("raw text must be wrapped in <span>", self.pos)
            self.pos = idx
            if self.text.startswith("</", self.pos):
                self._read_close(name, open_pos)
                return elem
            child = self._parse_element()
            if child is not None:
                elem.children.append(child)

    def _parse_span_text(self, open_pos: int) -> str:
        start = self.pos
        idx = self.text.find("<", self.pos)
        if idx < 0:
            raise UnclosedTag("<span> never closed", open_pos)
        if not self.text.startswith("</", idx):
            raise GrammarViolation("spans cannot contain elements", idx)
        raw = self.text[start:idx]
        self.pos = idx
        self._read_close("span", open_pos)
        text = self._decode_entities(raw, start)
        # Canonical line endings; layout treats \n as a forced break.
        return text.replace("\r\n", "\n").replace("\r", "\n")


def _parse_style(raw: str, allowed: set[str], mode: str, position: int,
                 warnings: list[ParseWarning]) -> dict[str, str]:
    out: dict[str, str] = {}
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        prop, sep, value = chunk.partition(":")
        if not sep:
            raise GrammarViolation(f"malformed declaration {chunk!r}", position)
        prop = prop.strip().lower()
        value = value.strip()
        if prop not in KNOWN_PROPERTIES:
            if mode == "strict":
                raise UnknownProperty(prop, position)
            warnings.append(ParseWarning("unknown-property", position, f"ignored {prop!r}"))
            continue
        if prop not in allowed:
            if mode == "strict":
                raise GrammarViolation(f"property {prop!r} not allowed here", position)
            warnings.append(ParseWarning("misplaced-property", position, f"ignored {prop!r}"))
            continue
        if prop in out:
            if mode == "strict":
                raise GrammarViolation(f"duplicate property {prop!r}", position)
            warnings.append(ParseWarning("duplicate-property", position, f"last {prop!r} wins"))
        out[prop] = value
    return out


def _parse_color(value: str, position: int) -> str:
    if not _HEX_COLOR_RE.match(value):
        raise GrammarViolation(f"expected #RRGGBB color, got {value!r}", position)
    return value.upper()


def _parse_url(value: str, position: int) -> str:
    m = _URL_RE.match(value)
    if not m:
        raise GrammarViolation(f"expected url(...), got {value!r}", position)
    ref = next(g for g in m.groups() if g is not None)
    if not ref:
        raise GrammarViolation("empty url()", position)
    return ref


def _length(style: dict[str, str], prop: str, position: int) -> Fraction:
    if prop not in style:
        raise GrammarViolation(f"missing required property {prop!r}", position)
    try:
        return parse_length(style[prop])
    except ValueError as exc:
        raise GrammarViolation(str(exc), position) from exc


def _build_font(style: dict[str, str], default_align: str, position: int) -> Font:
    if "font-size" not in style:
        raise GrammarViolation("span requires font-size", position)
    try:
        size = parse_length(style["font-size"])
    except ValueError as exc:
        raise GrammarViolation(str(exc), position) from exc
    if size <= 0:
        raise GrammarViolation("font-size must be positive", position)
    weight = 400
    if "font-weight" in style:
        if style["font-weight"] not in ("400", "700"):
            raise GrammarViolation(f"font-weight must be 400 or 700, got {style['font-weight']!r}", position)
        weight = int(style["font-weight"])
    letter_spacing = Fraction(0)
    if "letter-spacing" in style:
        try:
            letter_spacing = parse_length(style["letter-spacing"])
        except ValueError as exc:
            raise GrammarViolation(str(exc), position) from exc
    line_height = Font().line_height
    if "line-height" in style:
        try:
            line_height = parse_number(style["line-height"])
        except ValueError as exc:
            raise GrammarViolation(str(exc), position) from exc
        if line_height < 1:
            raise GrammarViolation("line-height must be >= 1", position)
    align = style.get("text-align", default_align)
    if align not in ("left", "center", "right"):
        raise GrammarViolation(f"text-align must be left|center|right, got {align!r}", position)
    family = style.get("font-family", Font().family)
    if any(c in family for c in "<>\";"):
        raise GrammarViolation(f"bad font-family {family!r}", position)
    return Font(
        family=family,
        size=size,
        weight=weight,
        color=_parse_color(style["color"], position) if "color" in style else Font().color,
        letter_spacing=letter_spacing,
        line_height=line_height,
        align=align,
    )


def _build_node(raw: _RawElement, origin: tuple[Fraction, Fraction], mode: str,
                warnings: list[ParseWarning]) -> Node:
    allowed_attrs = {"id", "style", "src"} if raw.tag == "img" else {"id", "style"}
    for attr in raw.attrs:
        if attr not in allowed_attrs:
            if mode == "strict":
                raise UnknownProperty(attr, raw.position)
            warnings.append(ParseWarning("unknown-attribute", raw.position, f"ignored {attr!r}"))
    style = _parse_style(raw.attrs.get("style", ""), _BOX_PROPS, mode, raw.position, warnings)
    if style.get("position") != "absolute":
        raise GrammarViolation("boxes require position:absolute", raw.position)
    rect_rel = Rect(
        _length(style, "left", raw.position),
        _length(style, "top", raw.position),
        _length(style, "width", raw.position),
        _length(style, "height", raw.position),
    )
    if rect_rel.width < 0 or rect_rel.height < 0:
        raise GrammarViolation("box width/height must be >= 0", raw.position)
    rect = rect_rel.translated(origin[0], origin[1])
    z_index = 0
    if "z-index" in style:
        if not re.match(r"^-?\d+$", style["z-index"]):
            raise GrammarViolation(f"z-index must be an integer, got {style['z-index']!r}", raw.position)
        z_index = int(style["z-index"])
    background_image = None
    if raw.tag == "img":
        if "src" not in raw.attrs or not raw.attrs["src"]:
            raise GrammarViolation("<img> requires src", raw.position)
        if raw.children:
            raise GrammarViolation("<img> cannot have children", raw.position)
        background_image = raw.attrs["src"]
    elif "background-image" in style:
        background_image = _parse_url(style["background-image"], raw.position)
    box_style = BoxStyle(
        background_color=_parse_color(style["background-color"], raw.position) if "background-color" in style else None,
        background_image=background_image,
        border_radius=_length(style, "border-radius", raw.position) if "border-radius" in style else Fraction(0),
    )
    if box_style.border_radius < 0:
        raise GrammarViolation("border-radius must be >= 0", raw.position)

    default_align = style.get("text-align", "left")
    if default_align not in ("left", "center", "right"):
        raise GrammarViolation(f"text-align must be left|center|right, got {default_align!r}", raw.position)

    spans = [c for c in raw.children if c.tag == "span"]
    elements = [c for c in raw.children if c.tag != "span"]
    if spans and elements:
        raise GrammarViolation("a box holds either child boxes or spans, not both", raw.position)

    runs: tuple[TextRun, ...] = ()
    children: tuple[Node, ...] = ()
    if spans:
        built = []
        for span in spans:
            for attr in span.attrs:
                if attr != "style":
                    if mode == "strict":
                        raise UnknownProperty(attr, span.position)
                    warnings.append(ParseWarning("unknown-attribute", span.position, f"ignored {attr!r}"))
            span_style = _parse_style(span.attrs.get("style", ""), _SPAN_PROPS, mode, span.position, warnings)
            if not span.text:
                raise GrammarViolation("span text must be non-empty", span.position)
            built.append(TextRun(text=span.text, font=_build_font(span_style, default_align, span.position)))
        runs = tuple(built)
    elif elements:
        children = tuple(_build_node(c, (rect.left, rect.top), mode, warnings) for c in elements)

    return Node(
        id=raw.attrs.get("id", ""),
        rect=rect,
        z_index=z_index,
        style=box_style,
        children=children,
        runs=runs,
    )


def _assign_ids(nodes: tuple[Node, ...]) -> tuple[Node, ...]:
    taken: set[str] = set()

    def collect(ns):
        for n in ns:
            if n.id:
                if n.id in taken:
                    raise DuplicateId(n.id)
                taken.add(n.id)
            collect(n.children)

    collect(nodes)
    counter = 1

    def fill(ns) -> tuple[Node, ...]:
        nonlocal counter
        out = []
        for n in ns:
            nid = n.id
            if not nid:
                while f"n{counter}" in taken:
                    counter += 1
                nid = f"n{counter}"
                taken.add(nid)
            out.append(replace(n, id=nid, children=fill(n.children)))
        return tuple(out)

    return fill(nodes)


def parse_poster_html_ex(text: str, mode: str = "strict") -> ParseResult:
    """Parse PosterHTML; returns the document plus structured warnings."""
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    p = _Parser(text, mode)
    p._skip_ws()
    if p.pos >= len(p.text) or p.text[p.pos] != "<":
        raise GrammarViolation("expected root <div>", p.pos)
    root = p._parse_element()
    if root is None or root.tag != "div":
        raise GrammarViolation("root element must be <div class=\"poster\">", 0)
    p._skip_ws()
    if p.pos < len(p.text):
        raise GrammarViolation("trailing content after root element", p.pos)

    for attr in root.attrs:
        if attr not in ("class", "style", "id"):
            if mode == "strict":
                raise UnknownProperty(attr, root.position)
            p._warn("unknown-attribute", root.position, f"ignored {attr!r}")
    if root.attrs.get("class") != "poster":
        if mode == "strict":
            raise GrammarViolation("root div must carry class=\"poster\"", root.position)
        p._warn("missing-class", root.position, "root div should carry class=\"poster\"")

    style = _parse_style(root.attrs.get("style", ""), _ROOT_PROPS, mode, root.position, p.warnings)
    if "width" not in style or "height" not in style:
        raise MissingRootDimensions("root style must declare width and height", root.position)
    try:
        width = parse_length(style["width"])
        height = parse_length(style["height"])
    except ValueError as exc:
        raise MissingRootDimensions(str(exc), root.position) from exc
    if width < 1 or height < 1:
        raise MissingRootDimensions(f"root dims must be >= 1, got {width}x{height}", root.position)

    background_color = None
    background_image = None
    if "background-image" in style:
        if "background-color" in style:
            raise GrammarViolation("root background is a color or an image, not both", root.position)
        background_image = _parse_url(style["background-image"], root.position)
    else:
        background_color = _parse_color(style.get("background-color", "#FFFFFF"), root.position)

    for child in root.children:
        if child.tag == "span":
            raise GrammarViolation("spans must live inside a box, not at the root", child.position)
    nodes = tuple(
        _build_node(c, (Fraction(0), Fraction(0)), mode, p.warnings) for c in root.children
    )
    nodes = _assign_ids(nodes)
    doc = PosterDocument(
        width=width,
        height=height,
        background_color=background_color,
        background_image=background_image,
        nodes=nodes,
    )
    return ParseResult(document=doc, warnings=tuple(p.warnings))


def parse_poster_html(text: str, mode: str = "strict") -> PosterDocument:
    return parse_poster_html_ex(text, mode).document
