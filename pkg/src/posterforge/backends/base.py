"""Backend contracts shared by the remote and mock implementations.

Every generator is addressed through a :class:`BackendKind` (remote HTTP
endpoint or seeded mock). Outputs are validated here at the boundary:
blueprints must pass schema validation, backgrounds must match the
requested resolution, and layouts must parse strictly and carry every
blueprint string verbatim. Downstream stages never re-check these.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .. import PosterForgeError
from ..blueprint import DesignBlueprint, normalize_text


class BackendError(PosterForgeError):
    pass


class BackendTimeout(BackendError):
    pass


class BackendUnreachable(BackendError):
    pass


class BackendRejected(BackendError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"backend rejected request: status {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class InvalidBackendOutput(BackendError):
    def __init__(self, violations):
        super().__init__(f"backend output failed validation: {violations}")
        self.violations = violations


class ResolutionMismatch(BackendError):
    def __init__(self, got: tuple[int, int], want: tuple[int, int]):
        super().__init__(f"background is {got[0]}x{got[1]}, requested {want[0]}x{want[1]}")
        self.got = got
        self.want = want


class ParseFailure(BackendError):
    def __init__(self, details: str):
        super().__init__(f"layout output does not parse: {details}")
        self.details = details


class TextCoverageViolation(BackendError):
    def __init__(self, missing: list[str]):
        super().__init__(f"layout output is missing text: {missing!r}")
        self.missing = missing


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    timeout: float = 120.0
    max_retries: int = 2
    auth_token_env: str | None = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class Remote:
    config: EndpointConfig
    # Test seam: an httpx transport; None means a real network client.
    transport: object | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Mock:
    seed: int


BackendKind = Remote | Mock


@dataclass(frozen=True)
class ImageRef:
    """A generated image: identity, pixel metadata and the PNG bytes.

    The bytes travel with the reference so stores and rasterizers never
    need a side channel; ``content_hash`` is the sha256 of ``data``.
    """

    id: str
    width: int
    height: int
    content_hash: str
    data: bytes = field(repr=False)
    format: str = "PNG"

    @classmethod
    def from_png(cls, data: bytes, width: int, height: int, id_prefix: str = "bg") -> "ImageRef":
        digest = hashlib.sha256(data).hexdigest()
        return cls(
            id=f"{id_prefix}-{digest[:16]}",
            width=width,
            height=height,
            content_hash=digest,
            data=data,
        )


def stable_hash64(*parts) -> int:
    """Stable 64-bit hash of a mixed sequence of str/bytes/int parts."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, int):
            raw = str(p).encode("ascii")
            tag = b"i"
        elif isinstance(p, bytes):
            raw = p
            tag = b"b"
        else:
            raw = str(p).encode("utf-8")
            tag = b"s"
        h.update(tag + len(raw).to_bytes(8, "big") + raw)
    return int.from_bytes(h.digest(), "big")


def missing_text(bp: DesignBlueprint, extracted: list[str]) -> list[str]:
    """Blueprint strings absent from the extracted poster text.

    Containment is exact substring after NFC normalization and whitespace
    collapsing, so markup-level whitespace differences are tolerated but
    nothing else.
    """
    haystack = normalize_text("\n".join(extracted))
    return [s for s in bp.textual.strings() if normalize_text(s) not in haystack]
