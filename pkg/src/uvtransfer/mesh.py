"""Meshes with UV layouts, correspondence maps and OBJ/JSON ingestion.

OBJ ``vt`` coordinates are kept exactly as written (v = 0 at the bottom of
the texture). Converting to image rows happens only in :mod:`uvtransfer.transfer`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import CorrespondenceError, ObjParseError

DEGENERATE_AREA = 1e-12

_IGNORED_KEYWORDS = {"vn", "vp", "g", "o", "s", "usemtl", "mtllib", "l", "p"}


class Triangle2D(NamedTuple):
    a: tuple[float, float]
    b: tuple[float, float]
    c: tuple[float, float]

    @property
    def is_degenerate(self) -> bool:
        return abs(signed_area(self)) < DEGENERATE_AREA


def signed_area(tri) -> float:
    """Half the cross product (b - a) x (c - a); positive for counter-clockwise."""
    (ax, ay), (bx, by), (cx, cy) = tri
    return 0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class UvMesh:
    """Triangle mesh whose corners index into separate position and UV tables.

    ``faces`` has shape (F, 3, 2): ``faces[f, k] = (position_index, uv_index)``.
    """

    positions: np.ndarray
    uv_coords: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        positions = _frozen(self.positions, np.float64).reshape(-1, 3)
        uvs = _frozen(self.uv_coords, np.float64).reshape(-1, 2)
        faces = _frozen(self.faces, np.int64).reshape(-1, 3, 2)
        if faces.size:
            if faces.min() < 0:
                raise ValueError("negative face index")
            if faces[..., 0].max() >= len(positions):
                raise ValueError("face position index out of range")
            if faces[..., 1].max() >= len(uvs):
                raise ValueError("face uv index out of range")
        if uvs.size and (not np.isfinite(uvs).all() or uvs.min() < 0.0 or uvs.max() > 1.0):
            raise ValueError("uv coordinates must lie in [0, 1]^2")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "uv_coords", uvs)
        object.__setattr__(self, "faces", faces)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def face_positions(self) -> np.ndarray:
        return self.faces[..., 0]

    @property
    def face_uvs(self) -> np.ndarray:
        return self.faces[..., 1]

    def face_uv_triangles(self) -> np.ndarray:
        """UV corners of every face, shape (F, 3, 2)."""
        return self.uv_coords[self.face_uvs]

    def triangle(self, face: int) -> Triangle2D:
        a, b, c = (tuple(map(float, p)) for p in self.uv_coords[self.face_uvs[face]])
        return Triangle2D(a, b, c)

    def digest(self) -> bytes:
        h = hashlib.blake2b(digest_size=16, person=b"uvmesh")
        for arr in (self.positions.astype("<f8"), self.uv_coords.astype("<f8"), self.faces.astype("<i8")):
            h.update(np.asarray(arr.shape, dtype="<i8").tobytes())
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.digest()

    def equals(self, other: UvMesh) -> bool:
        return all(
            x.shape == y.shape and np.array_equal(x, y)
            for x, y in (
                (self.positions, other.positions),
                (self.uv_coords, other.uv_coords),
                (self.faces, other.faces),
            )
        )


def _resolve_index(token: str, count: int, what: str, lineno: int, path) -> int:
    try:
        idx = int(token)
    except ValueError:
        raise ObjParseError(f"bad {what} index {token!r}", lineno, path) from None
    if idx == 0:
        raise ObjParseError(f"{what} index 0 is invalid (OBJ indices are 1-based)", lineno, path)
    idx = idx - 1 if idx > 0 else count + idx
    if not 0 <= idx < count:
        raise ObjParseError(f"{what} index {token} out of range", lineno, path)
    return idx


def parse_obj(lines, path=None) -> UvMesh:
    """Parse the ``v``/``vt``/``f`` subset of Wavefront OBJ.

    Polygons with n > 3 corners are fan-triangulated as (0, i, i + 1) for
    i = 1 .. n - 2, appended in file order, so face indices are stable.
    """
    positions, uvs, faces = [], [], []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "v":
            if len(rest) < 3:
                raise ObjParseError("vertex needs 3 coordinates", lineno, path)
            try:
                positions.append([float(t) for t in rest[:3]])
            except ValueError:
                raise ObjParseError(f"bad vertex {line!r}", lineno, path) from None
        elif key == "vt":
            if len(rest) < 2:
                raise ObjParseError("texture coordinate needs u and v", lineno, path)
            try:
                u, v = float(rest[0]), float(rest[1])
            except ValueError:
                raise ObjParseError(f"bad texture coordinate {line!r}", lineno, path) from None
            if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
                raise ObjParseError(f"uv ({u}, {v}) outside [0, 1]^2", lineno, path)
            uvs.append([u, v])
        elif key == "f":
            if len(rest) < 3:
                raise ObjParseError("face needs at least 3 corners", lineno, path)
            corners = []
            for tok in rest:
                parts = tok.split("/")
                if len(parts) < 2 or parts[1] == "":
                    raise ObjParseError(f"missing texture coordinate index in corner {tok!r}", lineno, path)
                corners.append(
                    (
                        _resolve_index(parts[0], len(positions), "vertex", lineno, path),
                        _resolve_index(parts[1], len(uvs), "texture coordinate", lineno, path),
                    )
                )
            for i in range(1, len(corners) - 1):
                faces.append([corners[0], corners[i], corners[i + 1]])
        elif key in _IGNORED_KEYWORDS:
            continue
        else:
            raise ObjParseError(f"unsupported statement {key!r}", lineno, path)
    return UvMesh(
        np.asarray(positions, dtype=np.float64).reshape(-1, 3),
        np.asarray(uvs, dtype=np.float64).reshape(-1, 2),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3, 2),
    )


def load_mesh(path, format: str = "obj") -> UvMesh:
    if format != "obj":
        raise ValueError(f"unsupported mesh format {format!r}")
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return parse_obj(fh, path=path)


def save_mesh(mesh: UvMesh, path) -> None:
    """Write an OBJ that :func:`load_mesh` reads back into an identical mesh."""
    out = []
    for p in mesh.positions:
        out.append("v {!r} {!r} {!r}".format(*map(float, p)))
    for t in mesh.uv_coords:
        out.append("vt {!r} {!r}".format(*map(float, t)))
    for face in mesh.faces:
        out.append("f " + " ".join(f"{p + 1}/{t + 1}" for p, t in face))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class CorrespondenceMap:
    """Partial map from target indices to source indices.

    In ``vertex`` mode keys and values are position indices; in ``face`` mode
    they are (triangulated) face indices, with corner k of the target face
    paired with corner k of the source face.
    """

    mode: str
    pairs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("vertex", "face"):
            raise CorrespondenceError(f"unknown correspondence mode {self.mode!r}")
        clean = {}
        for k, v in self.pairs.items():
            if isinstance(k, bool) or isinstance(v, bool):
                raise CorrespondenceError("indices must be integers")
            k, v = int(k), int(v)
            if k < 0 or v < 0:
                raise CorrespondenceError(f"negative index in pair {k} -> {v}")
            clean[k] = v
        object.__setattr__(self, "pairs", dict(sorted(clean.items())))

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, CorrespondenceMap):
            return NotImplemented
        return self.mode == other.mode and self.pairs == other.pairs

    @property
    def vertex_pairs(self) -> dict:
        return self.pairs if self.mode == "vertex" else {}

    @property
    def face_pairs(self) -> dict:
        return self.pairs if self.mode == "face" else {}

    def validate(self, target: UvMesh, source: UvMesh) -> None:
        if not self.pairs:
            return
        if self.mode == "vertex":
            n_tgt, n_src, what = len(target.positions), len(source.positions), "vertex"
        else:
            n_tgt, n_src, what = target.n_faces, source.n_faces, "face"
        for k, v in self.pairs.items():
            if k >= n_tgt:
                raise CorrespondenceError(f"target {what} index {k} out of range (< {n_tgt})")
            if v >= n_src:
                raise CorrespondenceError(f"source {what} index {v} out of range (< {n_src})")

    def to_json(self) -> dict:
        return {"mode": self.mode, "pairs": {str(k): v for k, v in self.pairs.items()}}

    def digest(self) -> bytes:
        h = hashlib.blake2b(digest_size=16, person=b"corrmap")
        h.update(self.mode.encode())
        keys = np.fromiter(self.pairs.keys(), dtype="<i8", count=len(self.pairs))
        vals = np.fromiter(self.pairs.values(), dtype="<i8", count=len(self.pairs))
        h.update(keys.tobytes())
        h.update(vals.tobytes())
        return h.digest()


def _reject_duplicates(items):
    out = {}
    for key, value in items:
        if key in out:
            raise CorrespondenceError(f"duplicate target index {key!r}")
        out[key] = value
    return out


def parse_correspondence(text: str, target: UvMesh | None = None, source: UvMesh | None = None) -> CorrespondenceMap:
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise CorrespondenceError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"mode", "pairs"}:
        raise CorrespondenceError('expected an object with exactly the keys "mode" and "pairs"')
    if not isinstance(doc["pairs"], dict):
        raise CorrespondenceError('"pairs" must be an object')
    pairs = {}
    for key, value in doc["pairs"].items():
        if not key.isdigit():
            raise CorrespondenceError(f"target index {key!r} is not a non-negative integer")
        if not isinstance(value, int) or isinstance(value, bool):
            raise CorrespondenceError(f"source index for {key!r} must be an integer")
        pairs[int(key)] = value
    if len(pairs) != len(doc["pairs"]):
        # "01" and "1" name the same target
        raise CorrespondenceError("duplicate target index")
    corr = CorrespondenceMap(doc["mode"], pairs)
    if target is not None and source is not None:
        corr.validate(target, source)
    return corr


def load_correspondence(path, target: UvMesh | None = None, source: UvMesh | None = None) -> CorrespondenceMap:
    """Load a correspondence JSON file.

    Index ranges are checked here only when both meshes are given; otherwise
    they are checked when the pairs are resolved.
    """
    return parse_correspondence(Path(path).read_text(encoding="utf-8"), target, source)


def save_correspondence(corr: CorrespondenceMap, path) -> None:
    Path(path).write_text(json.dumps(corr.to_json()) + "\n", encoding="utf-8")
