"""Design blueprint schema: the stage-1 contract every later stage consumes.

A blueprint bundles the poster's textual content, the background attributes
handed to the image generator, and the key parameters (resolution, theme,
elements, colors, purpose). The canonical document form is UTF-8 JSON with
sorted keys and uppercase hex colors; ``parse_blueprint`` and
``serialize_blueprint`` are exact inverses on valid values.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum

from . import PosterForgeError

logger = logging.getLogger(__name__)

MIN_DIMENSION = 64
MAX_DIMENSION = 8192

_HEX_COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")
# Simplified BCP-47 well-formedness: language subtag plus optional subtags.
_LOCALE_RE = re.compile(r"^[A-Za-z]{2,8}(-[A-Za-z0-9]{1,8})*$")


class BlueprintError(PosterForgeError):
    """Base class for blueprint schema errors."""


class MalformedDocument(BlueprintError):
    """Input is not a UTF-8 JSON object."""


class SchemaViolation(BlueprintError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class InvalidColor(BlueprintError):
    def __init__(self, value: object):
        super().__init__(f"invalid color {value!r}, expected #RRGGBB")
        self.value = value


class DetailLevel(Enum):
    BASIC = "basic"
    MEDIUM = "medium"
    DETAILED = "detailed"


class StyleId(Enum):
    """The four background style routes. Values are the wire names."""

    ILLUSTRATIVE = "Illustrative"
    DESIGN_ORIENTED = "Design-Oriented"
    MINIMALISTIC = "Minimalistic"
    PHOTOREALISTIC = "Photorealistic"


@dataclass(frozen=True)
class UserRequirement:
    """A natural-language poster request, optionally tagged with detail level."""

    text: str
    detail_level: DetailLevel | None = None
    locale: str = "zh"

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("requirement text must be non-empty after trimming")
        if not _LOCALE_RE.match(self.locale):
            raise ValueError(f"invalid locale tag: {self.locale!r}")


def _freeze(seq) -> tuple:
    return tuple(seq)


@dataclass(frozen=True)
class TextualContent:
    title: str
    subtitle: str | None = None
    body: tuple[str, ...] = ()
    contact: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", _freeze(self.body))
        object.__setattr__(self, "contact", _freeze(self.contact))

    def strings(self) -> list[str]:
        """All non-empty text strings in display order."""
        out = [self.title]
        if self.subtitle:
            out.append(self.subtitle)
        out.extend(self.body)
        out.extend(self.contact)
        return [s for s in out if s]


@dataclass(frozen=True)
class BackgroundAttributes:
    style: StyleId
    caption: str


@dataclass(frozen=True)
class Resolution:
    width: int
    height: int


@dataclass(frozen=True)
class KeyParameters:
    resolution: Resolution
    theme: str = ""
    elements: tuple[str, ...] = ()
    colors: tuple[str, ...] = ()
    purpose: str = ""

    def __post_init__(self):
        object.__setattr__(self, "elements", _freeze(self.elements))
        # Colors are normalized to the canonical uppercase form on construction
        # so equality and serialization agree.
        object.__setattr__(
            self,
            "colors",
            tuple(c.upper() if isinstance(c, str) and _HEX_COLOR_RE.match(c) else c for c in self.colors),
        )


@dataclass(frozen=True)
class DesignBlueprint:
    textual: TextualContent
    background: BackgroundAttributes
    params: KeyParameters


@dataclass(frozen=True)
class Violation:
    path: str
    reason: str


def normalize_text(s: str) -> str:
    """NFC-normalize and collapse runs of whitespace to single spaces."""
    return " ".join(unicodedata.normalize("NFC", s).split())


# --- parsing ---------------------------------------------------------------

_TOP_KEYS = {"textual_content", "background", "key_parameters"}
_TEXTUAL_KEYS = {"title", "subtitle", "body", "contact"}
_BACKGROUND_KEYS = {"style", "caption"}
_PARAMS_KEYS = {"resolution", "theme", "elements", "colors", "purpose"}
_RESOLUTION_KEYS = {"width", "height"}

_STYLE_BY_WIRE = {s.value: s for s in StyleId}


def _check_keys(obj: dict, allowed: set[str], path: str, mode: str) -> None:
    for key in obj:
        if key not in allowed:
            if mode == "strict":
                raise SchemaViolation(f"{path}.{key}" if path else key, "unknown key")
            logger.warning("ignoring unknown blueprint key %r at %s", key, path or "<top>")


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaViolation(f"{path}.{key}" if path else key, "missing required key")
    return obj[key]


def _as_str(value, path: str, allow_empty: bool = True) -> str:
    if not isinstance(value, str):
        raise SchemaViolation(path, f"expected string, got {type(value).__name__}")
    if not allow_empty and not value:
        raise SchemaViolation(path, "must be non-empty")
    return value


def _as_str_list(value, path: str) -> tuple[str, ...]:
    if not isinstance(value, list):
        raise SchemaViolation(path, f"expected array, got {type(value).__name__}")
    out = []
    for i, item in enumerate(value):
        out.append(_as_str(item, f"{path}[{i}]", allow_empty=False))
    return tuple(out)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(path, f"expected integer, got {type(value).__name__}")
    return value


def parse_blueprint(data: bytes | str, mode: str = "strict") -> DesignBlueprint:
    """Parse a canonical blueprint JSON document into a validated value.

    ``mode`` is ``"strict"`` (unknown keys rejected) or ``"lenient"``
    (unknown keys logged and ignored). Raises :class:`MalformedDocument`,
    :class:`SchemaViolation` or :class:`InvalidColor`.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top-level value must be an object")

    _check_keys(doc, _TOP_KEYS, "", mode)

    tc_obj = _require(doc, "textual_content", "")
    if not isinstance(tc_obj, dict):
        raise SchemaViolation("textual_content", "expected object")
    _check_keys(tc_obj, _TEXTUAL_KEYS, "textual_content", mode)
    title = _as_str(_require(tc_obj, "title", "textual_content"), "textual_content.title", allow_empty=False)
    subtitle = None
    if "subtitle" in tc_obj:
        subtitle = _as_str(tc_obj["subtitle"], "textual_content.subtitle", allow_empty=False)
    body = _as_str_list(tc_obj.get("body", []), "textual_content.body")
    contact = _as_str_list(tc_obj.get("contact", []), "textual_content.contact")

    bg_obj = _require(doc, "background", "")
    if not isinstance(bg_obj, dict):
        raise SchemaViolation("background", "expected object")
    _check_keys(bg_obj, _BACKGROUND_KEYS, "background", mode)
    style_raw = _as_str(_require(bg_obj, "style", "background"), "background.style")
    if style_raw not in _STYLE_BY_WIRE:
        raise SchemaViolation("background.style", f"unknown style {style_raw!r}")
    caption = _as_str(_require(bg_obj, "caption", "background"), "background.caption", allow_empty=False)

    kp_obj = _require(doc, "key_parameters", "")
    if not isinstance(kp_obj, dict):
        raise SchemaViolation("key_parameters", "expected object")
    _check_keys(kp_obj, _PARAMS_KEYS, "key_parameters", mode)
    res_obj = _require(kp_obj, "resolution", "key_parameters")
    if not isinstance(res_obj, dict):
        raise SchemaViolation("key_parameters.resolution", "expected object")
    _check_keys(res_obj, _RESOLUTION_KEYS, "key_parameters.resolution", mode)
    width = _as_int(_require(res_obj, "width", "key_parameters.resolution"), "key_parameters.resolution.width")
    height = _as_int(_require(res_obj, "height", "key_parameters.resolution"), "key_parameters.resolution.height")

    colors_raw = kp_obj.get("colors", [])
    if not isinstance(colors_raw, list):
        raise SchemaViolation("key_parameters.colors", "expected array")
    colors = []
    for c in colors_raw:
        if not isinstance(c, str) or not _HEX_COLOR_RE.match(c):
            raise InvalidColor(c)
        colors.append(c.upper())

    bp = DesignBlueprint(
        textual=TextualContent(title=title, subtitle=subtitle, body=body, contact=contact),
        background=BackgroundAttributes(style=_STYLE_BY_WIRE[style_raw], caption=caption),
        params=KeyParameters(
            resolution=Resolution(width=width, height=height),
            theme=_as_str(kp_obj.get("theme", ""), "key_parameters.theme"),
            elements=_as_str_list(kp_obj.get("elements", []), "key_parameters.elements"),
            colors=tuple(colors),
            purpose=_as_str(kp_obj.get("purpose", ""), "key_parameters.purpose"),
        ),
    )
    violations = validate_blueprint(bp)
    if violations:
        v = violations[0]
        raise SchemaViolation(v.path, v.reason)
    return bp


def blueprint_to_dict(bp: DesignBlueprint) -> dict:
    """The canonical JSON-ready mapping (subtitle omitted when absent)."""
    tc: dict = {"title": bp.textual.title}
    if bp.textual.subtitle is not None:
        tc["subtitle"] = bp.textual.subtitle
    tc["body"] = list(bp.textual.body)
    tc["contact"] = list(bp.textual.contact)
    return {
        "textual_content": tc,
        "background": {"style": bp.background.style.value, "caption": bp.background.caption},
        "key_parameters": {
            "resolution": {"width": bp.params.resolution.width, "height": bp.params.resolution.height},
            "theme": bp.params.theme,
            "elements": list(bp.params.elements),
            "colors": [c.upper() for c in bp.params.colors],
            "purpose": bp.params.purpose,
        },
    }


def serialize_blueprint(bp: DesignBlueprint) -> bytes:
    """Canonical UTF-8 document: sorted keys, no insignificant whitespace."""
    return json.dumps(blueprint_to_dict(bp), sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def validate_blueprint(bp: DesignBlueprint) -> list[Violation]:
    """Check every invariant; empty list means the canonical form re-parses cleanly."""
    out: list[Violation] = []
    if not bp.textual.title:
        out.append(Violation("textual.title", "must be non-empty"))
    if bp.textual.subtitle is not None and not bp.textual.subtitle:
        out.append(Violation("textual.subtitle", "must be non-empty when present"))
    for name, seq in (("textual.body", bp.textual.body), ("textual.contact", bp.textual.contact),
                      ("params.elements", bp.params.elements)):
        for i, item in enumerate(seq):
            if not item:
                out.append(Violation(f"{name}[{i}]", "empty string not allowed"))
    if not isinstance(bp.background.style, StyleId):
        out.append(Violation("background.style", "must be a StyleId"))
    if not bp.background.caption:
        out.append(Violation("background.caption", "must be non-empty"))
    res = bp.params.resolution
    for axis, value in (("width", res.width), ("height", res.height)):
        if not isinstance(value, int) or isinstance(value, bool):
            out.append(Violation(f"params.resolution.{axis}", "must be an integer"))
        elif value < MIN_DIMENSION:
            out.append(Violation(f"params.resolution.{axis}", f"below minimum {MIN_DIMENSION}"))
        elif value > MAX_DIMENSION:
            out.append(Violation(f"params.resolution.{axis}", f"above maximum {MAX_DIMENSION}"))
    for i, c in enumerate(bp.params.colors):
        if not isinstance(c, str) or not _HEX_COLOR_RE.match(c):
            out.append(Violation(f"params.colors[{i}]", f"invalid color {c!r}"))
    return out
