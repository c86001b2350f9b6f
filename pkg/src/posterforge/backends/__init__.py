"""Pluggable stage generators: remote HTTP endpoints or deterministic mocks.

The three operations validate outputs at this boundary regardless of the
implementation behind them:

* ``generate_blueprint`` returns only schema-valid blueprints,
* ``generate_background`` returns only exact-resolution images,
* ``generate_layout`` returns only strictly parseable PosterHTML covering
  every blueprint string verbatim (the text-fidelity mechanism).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..blueprint import (
    BackgroundAttributes,
    DesignBlueprint,
    Resolution,
    StyleId,
    UserRequirement,
    parse_blueprint,
    serialize_blueprint,
    blueprint_to_dict,
    validate_blueprint,
    BlueprintError,
)
from ..typography import ParseError, extract_text, parse_poster_html
from ..typography.png import png_dimensions
from .base import (
    BackendError,
    BackendKind,
    BackendRejected,
    BackendTimeout,
    BackendUnreachable,
    EndpointConfig,
    ImageRef,
    InvalidBackendOutput,
    Mock,
    ParseFailure,
    Remote,
    ResolutionMismatch,
    TextCoverageViolation,
    missing_text,
    stable_hash64,
)
from .mock import canonical_requirement_key, mock_background, mock_blueprint, mock_layout
from .remote import RemoteClient, decode_image_output

__all__ = [
    "BackendError", "BackendKind", "BackendRejected", "BackendTimeout",
    "BackendUnreachable", "EndpointConfig", "ImageRef", "InvalidBackendOutput",
    "Mock", "ParseFailure", "Remote", "ResolutionMismatch",
    "TextCoverageViolation", "missing_text", "stable_hash64",
    "canonical_requirement_key", "RemoteClient",
    "generate_blueprint", "generate_background", "generate_layout", "Backends",
]


def generate_blueprint(req: UserRequirement, backend: BackendKind) -> DesignBlueprint:
    """Run stage 1; the result is always a fully valid blueprint."""
    if isinstance(backend, Mock):
        bp = mock_blueprint(req, backend.seed)
    else:
        output = RemoteClient(backend.config, backend.transport).call(
            "blueprint",
            {"requirement": req.text, "detail_level": req.detail_level.value if req.detail_level else None,
             "locale": req.locale},
        )
        if isinstance(output, dict):
            output = json.dumps(output, ensure_ascii=False)
        if not isinstance(output, str):
            raise InvalidBackendOutput(["blueprint output must be a JSON object or string"])
        try:
            bp = parse_blueprint(output, mode="lenient")
        except BlueprintError as exc:
            raise InvalidBackendOutput([str(exc)]) from exc
    violations = validate_blueprint(bp)
    if violations:
        raise InvalidBackendOutput(violations)
    return bp


def generate_background(
    attrs: BackgroundAttributes,
    resolution: Resolution | tuple[int, int],
    seed: int,
    backend: BackendKind,
) -> ImageRef:
    """Run stage 2 for one style route; the image matches the resolution exactly."""
    if isinstance(resolution, tuple):
        resolution = Resolution(*resolution)
    if isinstance(backend, Mock):
        ref = mock_background(attrs, resolution.width, resolution.height, seed, backend.seed)
    else:
        output = RemoteClient(backend.config, backend.transport).call(
            f"background:{attrs.style.value}",
            {"caption": attrs.caption, "width": resolution.width, "height": resolution.height},
            seed=seed,
        )
        data = decode_image_output(output)
        try:
            width, height = png_dimensions(data)
        except Exception as exc:
            raise InvalidBackendOutput([f"image output is not decodable: {exc}"]) from exc
        ref = ImageRef.from_png(data, width, height)
    if (ref.width, ref.height) != (resolution.width, resolution.height):
        raise ResolutionMismatch((ref.width, ref.height), (resolution.width, resolution.height))
    return ref


def generate_layout(bp: DesignBlueprint, background: ImageRef, backend: BackendKind) -> str:
    """Run stage 3; output is strict PosterHTML containing all blueprint text."""
    if isinstance(backend, Mock):
        text = mock_layout(bp, background)
    else:
        output = RemoteClient(backend.config, backend.transport).call(
            "layout",
            {"blueprint": blueprint_to_dict(bp), "background_id": background.id},
        )
        if not isinstance(output, str):
            raise InvalidBackendOutput(["layout output must be PosterHTML text"])
        text = output
    try:
        doc = parse_poster_html(text, mode="strict")
    except ParseError as exc:
        raise ParseFailure(str(exc)) from exc
    missing = missing_text(bp, extract_text(doc))
    if missing:
        raise TextCoverageViolation(missing)
    return text


@dataclass(frozen=True)
class Backends:
    """Per-stage backend selection, with per-style background routing."""

    blueprint: BackendKind
    layout: BackendKind
    background_default: BackendKind
    background_by_style: dict[StyleId, BackendKind] = field(default_factory=dict)

    @classmethod
    def mock(cls, seed: int) -> "Backends":
        m = Mock(seed)
        return cls(blueprint=m, layout=m, background_default=m)

    def background_for(self, style: StyleId) -> BackendKind:
        return self.background_by_style.get(style, self.background_default)
