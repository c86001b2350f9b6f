"""Feature-set container and its JSON-lines file format.

First line is a header ``{"dim": n}``; each following line is one row
``{"id": "...", "vec": [...]}``. Feature extraction itself is external;
this module only carries vectors in and out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import PosterForgeError


class MalformedFeatureFile(PosterForgeError):
    pass


@dataclass(frozen=True)
class FeatureSet:
    dim: int
    vectors: np.ndarray
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise ValueError(f"vectors must be (n, {self.dim}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("all feature values must be finite")
        if self.ids is not None and len(self.ids) != arr.shape[0]:
            raise ValueError("ids length must match vector count")
        object.__setattr__(self, "vectors", arr)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def by_id(self) -> dict[str, np.ndarray]:
        if self.ids is None:
            raise ValueError("feature set carries no ids")
        return {i: self.vectors[k] for k, i in enumerate(self.ids)}


def load_feature_set(path: str | Path) -> FeatureSet:
    path = Path(path)
    ids: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedFeatureFile(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            if dim is None:
                if not isinstance(obj, dict) or "dim" not in obj:
                    raise MalformedFeatureFile(f"{path}:1: first line must be a {{\"dim\": n}} header")
                dim = int(obj["dim"])
                if dim < 1:
                    raise MalformedFeatureFile(f"{path}: dim must be positive")
                continue
            if not isinstance(obj, dict) or "id" not in obj or "vec" not in obj:
                raise MalformedFeatureFile(f"{path}:{lineno}: expected {{\"id\", \"vec\"}} object")
            vec = obj["vec"]
            if not isinstance(vec, list) or len(vec) != dim:
                raise MalformedFeatureFile(f"{path}:{lineno}: vec must have {dim} entries")
            ids.append(str(obj["id"]))
            rows.append([float(x) for x in vec])
    if dim is None:
        raise MalformedFeatureFile(f"{path}: empty file")
    return FeatureSet(dim=dim, vectors=np.array(rows, dtype=np.float64).reshape(len(rows), dim), ids=tuple(ids))


def save_feature_set(fs: FeatureSet, path: str | Path) -> None:
    path = Path(path)
    ids = fs.ids if fs.ids is not None else tuple(str(i) for i in range(len(fs)))
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": fs.dim}) + "\n")
        for i, vec in zip(ids, fs.vectors):
            fh.write(json.dumps({"id": i, "vec": [float(x) for x in vec]}) + "\n")
