"""Deterministic synthetic meshes, correspondences and textures.

Grid meshes are the reference layout for hand-checkable tests. For an
``nu x nv`` grid, vertex ``(r, c)`` (row r along v, column c along u) has
index ``r * (nu + 1) + c`` for both its position and its UV, and cell
``k = r * nu + c`` with corners ``a = (r, c)``, ``b = (r, c + 1)``,
``d = (r + 1, c)``, ``e = (r + 1, c + 1)`` produces faces
``2k = (a, b, e)`` and ``2k + 1 = (a, e, d)``.

The head/body pair imitates a full-body layout whose face chart corresponds
one-to-one with the main chart of a separate head layout.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .mesh import CorrespondenceMap, UvMesh, save_correspondence, save_mesh
from .transfer import Texture, write_png

TEXTURE_KINDS = ("gradient", "checkerboard", "noise")


def grid_faces(nu: int, nv: int) -> np.ndarray:
    """Vertex indices (F, 3) of an nu x nv grid, in the documented order."""
    faces = []
    for r in range(nv):
        for c in range(nu):
            a = r * (nu + 1) + c
            b, d = a + 1, a + nu + 1
            e = d + 1
            faces.append((a, b, e))
            faces.append((a, e, d))
    return np.asarray(faces, dtype=np.int64).reshape(-1, 3)


def smooth_warp(strength: float):
    """A fold-free warp of the unit square that fixes its boundary."""

    def warp(s, t):
        bump = np.sin(np.pi * s) * np.sin(np.pi * t) * strength / 4.0
        return s + bump * np.cos(np.pi * t), t + bump * np.cos(np.pi * s)

    return warp


def grid_mesh(nu: int, nv: int | None = None, box=(0.0, 0.0, 1.0, 1.0), warp=None, z: float = 0.0) -> UvMesh:
    """Grid chart covering ``box = (u0, v0, u1, v1)``, optionally warped inside it."""
    nv = nu if nv is None else nv
    u0, v0, u1, v1 = box
    t, s = np.meshgrid(np.arange(nv + 1) / nv, np.arange(nu + 1) / nu, indexing="ij")
    s, t = s.reshape(-1), t.reshape(-1)
    if warp is not None:
        s, t = warp(s, t)
    uv = np.column_stack([u0 + (u1 - u0) * s, v0 + (v1 - v0) * t])
    uv = np.clip(uv, 0.0, 1.0)
    positions = np.column_stack([s, t, np.full_like(s, z)])
    idx = grid_faces(nu, nv)
    return UvMesh(positions, uv, np.stack([idx, idx], axis=-1))


def merge(*meshes: UvMesh) -> UvMesh:
    """Concatenate charts; faces keep their order, chart by chart."""
    positions, uvs, faces = [], [], []
    p_off = t_off = 0
    for m in meshes:
        positions.append(m.positions)
        uvs.append(m.uv_coords)
        faces.append(m.faces + np.array([p_off, t_off]))
        p_off += len(m.positions)
        t_off += len(m.uv_coords)
    return UvMesh(np.concatenate(positions), np.concatenate(uvs), np.concatenate(faces))


def identity_vertex_map(mesh: UvMesh) -> CorrespondenceMap:
    return CorrespondenceMap("vertex", {i: i for i in range(len(mesh.positions))})


def grid_pair(n: int):
    """Identical n x n grids (2 n^2 triangles) with an identity vertex map."""
    mesh = grid_mesh(n)
    return mesh, mesh, identity_vertex_map(mesh)


def warped_grid_pair(n: int, strength: float = 0.6):
    """Target n x n grid, source the same grid warped; face map k -> k."""
    tgt = grid_mesh(n)
    src = grid_mesh(n, warp=smooth_warp(strength))
    return tgt, src, CorrespondenceMap("face", {k: k for k in range(tgt.n_faces)})


class HeadBody(NamedTuple):
    body: UvMesh
    head: UvMesh
    head_from_body: CorrespondenceMap  # target head, source body
    body_from_head: CorrespondenceMap  # target body, source head
    body_face_faces: range  # face indices of the face chart inside body
    head_face_faces: range


def head_body_pair(face_cells: int = 24) -> HeadBody:
    """A large layout whose face chart maps onto most of a small layout.

    body: torso chart, face chart (upper right), limb chart.
    head: scalp chart (unmapped), then the face chart.
    """
    torso = grid_mesh(8, 16, box=(0.02, 0.02, 0.48, 0.98), z=0.0)
    body_face = grid_mesh(face_cells, box=(0.55, 0.55, 0.95, 0.95), warp=smooth_warp(0.3), z=1.0)
    limb = grid_mesh(12, 6, box=(0.52, 0.02, 0.98, 0.45), z=2.0)
    body = merge(torso, body_face, limb)

    scalp = grid_mesh(8, 2, box=(0.05, 0.03, 0.95, 0.25), z=3.0)
    head_face = grid_mesh(face_cells, box=(0.05, 0.30, 0.95, 0.95), warp=smooth_warp(-0.5), z=1.0)
    head = merge(scalp, head_face)

    n = head_face.n_faces
    body_start = torso.n_faces
    head_start = scalp.n_faces
    head_from_body = CorrespondenceMap("face", {head_start + k: body_start + k for k in range(n)})
    body_from_head = CorrespondenceMap("face", {body_start + k: head_start + k for k in range(n)})
    return HeadBody(
        body,
        head,
        head_from_body,
        body_from_head,
        range(body_start, body_start + n),
        range(head_start, head_start + n),
    )


def gradient_texture(size: int, channels: int = 3) -> Texture:
    """Smooth RGB ramp: red along x, green along y, a slow wave in blue."""
    y, x = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    rgb = np.stack(
        [x, y, 0.5 + 0.3 * np.sin(2.0 * math.pi * x) * np.cos(2.0 * math.pi * y)],
        axis=-1,
    )
    if channels == 4:
        rgb = np.concatenate([rgb, np.ones_like(x)[..., None]], axis=-1)
    return Texture.from_float(rgb)


def checkerboard_texture(size: int, squares: int = 16) -> Texture:
    cell = max(1, size // squares)
    y, x = np.mgrid[0:size, 0:size] // cell
    on = (x + y) % 2 == 1
    data = np.where(on[..., None], np.array([255, 255, 255], np.uint8), np.array([0, 0, 0], np.uint8))
    return Texture(data.astype(np.uint8))


def noise_texture(size: int, seed: int = 0) -> Texture:
    rng = np.random.default_rng(seed)
    return Texture(rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8))


def make_texture(kind: str, size: int, seed: int = 0) -> Texture:
    if kind == "gradient":
        return gradient_texture(size)
    if kind == "checkerboard":
        return checkerboard_texture(size)
    if kind == "noise":
        return noise_texture(size, seed)
    raise ValueError(f"unknown texture kind {kind!r}")


def write_fixtures(out_dir, grid: int, seed: int = 0, sizes=(256, 1024, 2048)) -> list[Path]:
    """Write the grid, warped-grid and head/body sets plus test textures.

    Returns the written paths in a fixed order.
    """
    out = Path(out_dir)
    written = []

    def put(path, writer, obj):
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(obj, path)
        written.append(path)

    tgt, src, corr = grid_pair(grid)
    put(out / "grid" / "tgt.obj", save_mesh, tgt)
    put(out / "grid" / "src.obj", save_mesh, src)
    put(out / "grid" / "identity.json", save_correspondence, corr)

    tgt, src, corr = warped_grid_pair(grid)
    put(out / "warped" / "tgt.obj", save_mesh, tgt)
    put(out / "warped" / "src.obj", save_mesh, src)
    put(out / "warped" / "corr.json", save_correspondence, corr)

    hb = head_body_pair()
    put(out / "headbody" / "body.obj", save_mesh, hb.body)
    put(out / "headbody" / "head.obj", save_mesh, hb.head)
    put(out / "headbody" / "head_from_body.json", save_correspondence, hb.head_from_body)
    put(out / "headbody" / "body_from_head.json", save_correspondence, hb.body_from_head)

    for size in sizes:
        for kind in TEXTURE_KINDS:
            put(out / "textures" / f"{kind}_{size}.png", write_png, make_texture(kind, size, seed))
    return written
