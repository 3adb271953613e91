"""Precomputation of the per-pixel sampling map.

Every mapped target triangle is rasterized in target UV space. A pixel at
column ``i`` and row ``j`` has its center at ``((i + 0.5) / W, (j + 0.5) / H)``;
rows of a :class:`SamplingMap` therefore run upward in v. A pixel is inside a
triangle when all three barycentric weights are ``>= -eps``; where triangles
overlap, the lowest target face index owns the pixel.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CorrespondenceError, DegenerateTriangleError
from .mesh import DEGENERATE_AREA, CorrespondenceMap, Triangle2D, UvMesh

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-7
UNMAPPED = -1.0


class BaryCoords(NamedTuple):
    alpha: float
    beta: float
    gamma: float


def _bary(px, py, ax, ay, bx, by, cx, cy):
    # Shared by the scalar API, the rasterizer and the test oracles; any change
    # here changes every map bit-for-bit.
    d = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    beta = ((px - ax) * (cy - ay) - (py - ay) * (cx - ax)) / d
    gamma = ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) / d
    alpha = 1.0 - beta - gamma
    return alpha, beta, gamma


def _displaced(px, py, alpha, beta, gamma, tgt, src):
    # p + sum_k w_k (src_k - tgt_k) == sum_k w_k src_k, but exact when src == tgt.
    (tax, tay), (tbx, tby), (tcx, tcy) = tgt
    (sax, say), (sbx, sby), (scx, scy) = src
    su = px + (alpha * (sax - tax) + beta * (sbx - tbx) + gamma * (scx - tcx))
    sv = py + (alpha * (say - tay) + beta * (sby - tby) + gamma * (scy - tcy))
    return su, sv


def barycentric(p, tri) -> BaryCoords:
    """Barycentric weights of ``p`` with respect to ``tri``.

    Raises DegenerateTriangleError when |signed area| < 1e-12.
    """
    (ax, ay), (bx, by), (cx, cy) = tri
    if abs(0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))) < DEGENERATE_AREA:
        raise DegenerateTriangleError(f"degenerate triangle {tri!r}")
    px, py = p
    return BaryCoords(*(float(w) for w in _bary(float(px), float(py), ax, ay, bx, by, cx, cy)))


def map_source_point(bc, src_tri) -> tuple[float, float]:
    """Affine combination alpha*a + beta*b + gamma*c of the source triangle."""
    alpha, beta, gamma = bc
    (ax, ay), (bx, by), (cx, cy) = src_tri
    return (alpha * ax + beta * bx + gamma * cx, alpha * ay + beta * by + gamma * cy)


@dataclass(frozen=True, eq=False)
class PairSet:
    """Resolved (target triangle, source triangle) pairs in ascending face order."""

    tgt: np.ndarray  # (n, 3, 2) float64
    src: np.ndarray  # (n, 3, 2) float64
    face_index: np.ndarray  # (n,) int64, strictly increasing
    skipped_unmapped: int = 0
    skipped_degenerate: int = 0
    inputs_digest: bytes = b"\0" * 16

    def __post_init__(self):
        tgt = np.asarray(self.tgt, dtype=np.float64).reshape(-1, 3, 2)
        src = np.asarray(self.src, dtype=np.float64).reshape(-1, 3, 2)
        idx = np.asarray(self.face_index, dtype=np.int64).reshape(-1)
        if not (len(tgt) == len(src) == len(idx)):
            raise ValueError("pair arrays differ in length")
        if len(idx) > 1 and not (np.diff(idx) > 0).all():
            raise ValueError("face indices must be strictly increasing")
        for name, arr in (("tgt", tgt), ("src", src), ("face_index", idx)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.face_index)

    def __iter__(self):
        for t, s, f in zip(self.tgt, self.src, self.face_index):
            yield _as_triangle(t), _as_triangle(s), int(f)

    @property
    def skipped(self) -> int:
        return self.skipped_unmapped + self.skipped_degenerate

    def subset(self, keep) -> PairSet:
        keep = np.asarray(keep)
        return PairSet(self.tgt[keep], self.src[keep], self.face_index[keep], inputs_digest=self.inputs_digest)


def _as_triangle(arr) -> Triangle2D:
    return Triangle2D(*(tuple(map(float, p)) for p in arr))


def pairs_from_triangles(triangles) -> PairSet:
    """Build a PairSet from ``(tgt_tri, src_tri, face_index)`` tuples (sorted here)."""
    triangles = sorted(triangles, key=lambda t: t[2])
    return PairSet(
        np.array([t[0] for t in triangles], dtype=np.float64).reshape(-1, 3, 2),
        np.array([t[1] for t in triangles], dtype=np.float64).reshape(-1, 3, 2),
        np.array([t[2] for t in triangles], dtype=np.int64),
    )


def inputs_fingerprint(target: UvMesh, source: UvMesh, corr: CorrespondenceMap) -> bytes:
    h = hashlib.blake2b(digest_size=16, person=b"smap-inputs")
    h.update(target.digest())
    h.update(source.digest())
    h.update(corr.digest())
    return h.digest()


def params_fingerprint(inputs_digest: bytes, width: int, height: int, eps: float) -> bytes:
    h = hashlib.blake2b(digest_size=16, person=b"smap")
    h.update(inputs_digest)
    h.update(struct.pack("<IId", width, height, eps))
    return h.digest()


def fingerprint(target: UvMesh, source: UvMesh, corr: CorrespondenceMap, width: int, height: int, eps: float = DEFAULT_EPS) -> bytes:
    """16-byte digest identifying a sampling map's inputs and build parameters."""
    return params_fingerprint(inputs_fingerprint(target, source, corr), width, height, eps)


def _first_face_uv(source: UvMesh) -> dict:
    """Source position index -> uv index from the lowest-index face using it."""
    first = {}
    for f, face in enumerate(source.faces):
        for pos, uv in face:
            first.setdefault(int(pos), int(uv))
    return first


def resolve_pairs(target: UvMesh, source: UvMesh, corr: CorrespondenceMap) -> PairSet:
    """Pair each fully mapped, non-degenerate target face with its source triangle.

    Vertex mode takes each mapped source vertex's UV from the first source
    face (lowest index) that references it. Faces with an unmapped corner and
    degenerate target triangles are skipped and counted.
    """
    corr.validate(target, source)
    tgt_uv = target.face_uv_triangles()
    n_faces = target.n_faces
    if corr.mode == "face":
        faces = np.fromiter(corr.pairs.keys(), dtype=np.int64, count=len(corr))
        src_faces = np.fromiter(corr.pairs.values(), dtype=np.int64, count=len(corr))
        tgt = tgt_uv[faces]
        src = source.face_uv_triangles()[src_faces]
    else:
        first_uv = _first_face_uv(source)
        vp = corr.pairs
        faces, src_rows = [], []
        for f, face in enumerate(target.face_positions):
            try:
                mapped = [vp[int(p)] for p in face]
            except KeyError:
                continue
            try:
                src_rows.append([first_uv[m] for m in mapped])
            except KeyError as exc:
                raise CorrespondenceError(f"source vertex {exc.args[0]} is not used by any source face") from None
            faces.append(f)
        faces = np.asarray(faces, dtype=np.int64)
        tgt = tgt_uv[faces]
        src = source.uv_coords[np.asarray(src_rows, dtype=np.int64).reshape(-1, 3)]
    skipped_unmapped = n_faces - len(faces)

    t = tgt.reshape(-1, 3, 2)
    area = 0.5 * ((t[:, 1, 0] - t[:, 0, 0]) * (t[:, 2, 1] - t[:, 0, 1]) - (t[:, 1, 1] - t[:, 0, 1]) * (t[:, 2, 0] - t[:, 0, 0]))
    ok = np.abs(area) >= DEGENERATE_AREA
    skipped_degenerate = int((~ok).sum())
    if skipped_degenerate:
        log.warning("skipping %d degenerate target triangle(s)", skipped_degenerate)
    return PairSet(
        tgt[ok],
        src.reshape(-1, 3, 2)[ok],
        faces[ok],
        skipped_unmapped=skipped_unmapped,
        skipped_degenerate=skipped_degenerate,
        inputs_digest=inputs_fingerprint(target, source, corr),
    )


@dataclass(frozen=True, eq=False)
class SamplingMap:
    """Per-pixel source UV for a target layout at a fixed resolution.

    ``src_uv`` is float32 (H, W, 2) and ``mask`` bool (H, W), both indexed
    ``[j, i]`` with row ``j`` at v = (j + 0.5) / H. Uncovered pixels hold
    (-1, -1).
    """

    width: int
    height: int
    src_uv: np.ndarray
    mask: np.ndarray
    digest: bytes = b"\0" * 16
    _plans: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        src_uv = np.asarray(self.src_uv, dtype=np.float32)
        mask = np.asarray(self.mask, dtype=bool)
        if src_uv.shape != (self.height, self.width, 2) or mask.shape != (self.height, self.width):
            raise ValueError("sampling map arrays do not match width/height")
        if len(self.digest) != 16:
            raise ValueError("digest must be 16 bytes")
        for name, arr in (("src_uv", src_uv), ("mask", mask)):
            if arr.flags.writeable:
                arr = arr.copy()
                arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def coverage(self) -> float:
        return float(self.mask.mean())

    def equals(self, other: SamplingMap) -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.digest == other.digest
            and np.array_equal(self.mask, other.mask)
            and self.src_uv.tobytes() == other.src_uv.tobytes()
        )


class Raster(NamedTuple):
    rows: np.ndarray
    cols: np.ndarray
    u: np.ndarray
    v: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


def rasterize_triangle(tri, width: int, height: int, eps: float = DEFAULT_EPS, row_lo: int = 0, row_hi: int | None = None):
    """Pixels whose centers lie inside ``tri``, restricted to rows [row_lo, row_hi).

    Scans the triangle's bounding box, widened by the eps-inflation of the
    triangle plus one pixel, and returns ``None`` when nothing is covered.
    """
    if row_hi is None:
        row_hi = height
    (ax, ay), (bx, by), (cx, cy) = (tuple(map(float, p)) for p in tri)
    pad_u = 3.0 * eps * (max(ax, bx, cx) - min(ax, bx, cx))
    pad_v = 3.0 * eps * (max(ay, by, cy) - min(ay, by, cy))
    i0 = max(0, math.floor((min(ax, bx, cx) - pad_u) * width - 0.5) - 1)
    i1 = min(width - 1, math.ceil((max(ax, bx, cx) + pad_u) * width - 0.5) + 1)
    j0 = max(row_lo, math.floor((min(ay, by, cy) - pad_v) * height - 0.5) - 1)
    j1 = min(row_hi - 1, math.ceil((max(ay, by, cy) + pad_v) * height - 0.5) + 1)
    if i0 > i1 or j0 > j1:
        return None
    u = (np.arange(i0, i1 + 1) + 0.5) / width
    v = (np.arange(j0, j1 + 1) + 0.5) / height
    uu, vv = np.meshgrid(u, v)
    alpha, beta, gamma = _bary(uu, vv, ax, ay, bx, by, cx, cy)
    inside = (alpha >= -eps) & (beta >= -eps) & (gamma >= -eps)
    jj, ii = np.nonzero(inside)
    if len(jj) == 0:
        return None
    return Raster(jj + j0, ii + i0, uu[jj, ii], vv[jj, ii], alpha[jj, ii], beta[jj, ii], gamma[jj, ii])


def row_bands(height: int, threads: int) -> list[tuple[int, int]]:
    n = max(1, min(threads, height))
    edges = [height * k // n for k in range(n + 1)]
    return [(edges[k], edges[k + 1]) for k in range(n) if edges[k] < edges[k + 1]]


def default_threads() -> int:
    return os.cpu_count() or 1


def _fill_band(pairs: PairSet, width, height, eps, src_uv, mask, row_lo, row_hi):
    for tgt, src in zip(pairs.tgt, pairs.src):
        r = rasterize_triangle(tgt, width, height, eps, row_lo, row_hi)
        if r is None:
            continue
        free = ~mask[r.rows, r.cols]
        if not free.any():
            continue
        rows, cols = r.rows[free], r.cols[free]
        su, sv = _displaced(r.u[free], r.v[free], r.alpha[free], r.beta[free], r.gamma[free], tgt, src)
        src_uv[rows, cols, 0] = np.clip(su, 0.0, 1.0)
        src_uv[rows, cols, 1] = np.clip(sv, 0.0, 1.0)
        mask[rows, cols] = True


def build_sampling_map(pairs: PairSet, width: int, height: int, eps: float = DEFAULT_EPS, threads: int | None = None) -> SamplingMap:
    """Rasterize every pair and store the barycentrically mapped source UV per pixel.

    Work is split into horizontal bands, one per worker; each band walks the
    pairs in ascending face order, so the first writer of a pixel is always
    the lowest face index and the result does not depend on ``threads``.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be >= 1")
    threads = default_threads() if threads is None else max(1, int(threads))
    src_uv = np.full((height, width, 2), UNMAPPED, dtype=np.float32)
    mask = np.zeros((height, width), dtype=bool)
    bands = row_bands(height, threads)
    if len(bands) == 1:
        _fill_band(pairs, width, height, eps, src_uv, mask, 0, height)
    else:
        with ThreadPoolExecutor(max_workers=len(bands)) as pool:
            futures = [pool.submit(_fill_band, pairs, width, height, eps, src_uv, mask, lo, hi) for lo, hi in bands]
            for fut in futures:
                fut.result()
    src_uv.flags.writeable = False
    mask.flags.writeable = False
    digest = params_fingerprint(pairs.inputs_digest, width, height, eps)
    return SamplingMap(width, height, src_uv, mask, digest)
