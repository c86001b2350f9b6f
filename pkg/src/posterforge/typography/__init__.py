"""The PosterHTML engine: grammar, parser, layout, scaling, editing
and deterministic rasterization."""

from .model import (
    BoxStyle,
    Font,
    Node,
    PosterDocument,
    Rect,
    ScaleOutOfRange,
    TextRun,
    TypographyError,
    extract_text,
    find_node,
    iter_nodes,
    node_ids,
    raster_dimensions,
    scale_document,
)
from .parse import (
    DuplicateId,
    GrammarViolation,
    MissingRootDimensions,
    ParseError,
    ParseResult,
    ParseWarning,
    UnclosedTag,
    UnknownProperty,
    UnknownTag,
    parse_poster_html,
    parse_poster_html_ex,
)
from .serialize import serialize_poster
from .glyphs import DEFAULT_GLYPHS, GlyphProvider, SyntheticGlyphProvider, is_cjk
from .layout import LayoutBox, Line, PositionedGlyph, compute_layout, layout_node
from .raster import MissingImageAsset, Raster, rasterize
from .edit import (
    AddNode,
    EditOp,
    InvalidEdit,
    InvalidStyleValue,
    Move,
    RemoveNode,
    Resize,
    SetStyle,
    SetText,
    UnknownNode,
    apply_edit,
    edit_from_json,
    edit_to_json,
    node_from_json,
    node_to_json,
)
from .png import decode_png, encode_png, png_dimensions

__all__ = [
    "BoxStyle", "Font", "Node", "PosterDocument", "Rect", "TextRun",
    "TypographyError", "ScaleOutOfRange",
    "extract_text", "find_node", "iter_nodes", "node_ids", "scale_document",
    "raster_dimensions",
    "ParseError", "ParseResult", "ParseWarning", "UnclosedTag", "UnknownTag",
    "UnknownProperty", "MissingRootDimensions", "DuplicateId", "GrammarViolation",
    "parse_poster_html", "parse_poster_html_ex",
    "serialize_poster",
    "GlyphProvider", "SyntheticGlyphProvider", "DEFAULT_GLYPHS", "is_cjk",
    "LayoutBox", "Line", "PositionedGlyph", "compute_layout", "layout_node",
    "Raster", "rasterize", "MissingImageAsset",
    "EditOp", "SetText", "Move", "Resize", "SetStyle", "AddNode", "RemoveNode",
    "UnknownNode", "InvalidStyleValue", "InvalidEdit", "apply_edit",
    "edit_to_json", "edit_from_json", "node_to_json", "node_from_json",
    "decode_png", "encode_png", "png_dimensions",
]
