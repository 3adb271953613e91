import hashlib

import numpy as np
import pytest

from uvtransfer import fixtures as fx
from uvtransfer.mesh import load_correspondence, load_mesh, signed_area


@pytest.mark.parametrize("n, faces", [(1, 2), (8, 128), (45, 4050)])
def test_grid_pair_triangle_count(n, faces):
    tgt, src, corr = fx.grid_pair(n)
    assert tgt.n_faces == faces and src.n_faces == faces
    assert len(corr) == (n + 1) ** 2


def test_warped_grid_is_face_mapped_and_positive():
    tgt, src, corr = fx.warped_grid_pair(6)
    assert corr.mode == "face" and len(corr) == tgt.n_faces
    for mesh in (tgt, src):
        areas = [signed_area(mesh.triangle(f)) for f in range(mesh.n_faces)]
        assert min(areas) > 0
    assert not np.array_equal(tgt.uv_coords, src.uv_coords)


def test_head_body_layout():
    hb = fx.head_body_pair(face_cells=6)
    assert len(hb.body_face_faces) == len(hb.head_face_faces) == 72
    for mesh in (hb.body, hb.head):
        areas = [signed_area(mesh.triangle(f)) for f in range(mesh.n_faces)]
        assert min(areas) > 0
        assert mesh.uv_coords.min() >= 0 and mesh.uv_coords.max() <= 1
    assert hb.head_from_body.face_pairs == dict(zip(hb.head_face_faces, hb.body_face_faces))


def test_textures_deterministic():
    assert fx.noise_texture(32, seed=1).equals(fx.noise_texture(32, seed=1))
    assert not fx.noise_texture(32, seed=1).equals(fx.noise_texture(32, seed=2))
    with pytest.raises(ValueError):
        fx.make_texture("plaid", 8)


def test_write_fixtures(tmp_path):
    paths = fx.write_fixtures(tmp_path / "a", 3, seed=1, sizes=[16])
    again = fx.write_fixtures(tmp_path / "b", 3, seed=1, sizes=[16])
    assert [p.relative_to(tmp_path / "a") for p in paths] == [p.relative_to(tmp_path / "b") for p in again]
    for p, q in zip(paths, again):
        assert hashlib.sha256(p.read_bytes()).digest() == hashlib.sha256(q.read_bytes()).digest()
    tgt = load_mesh(tmp_path / "a" / "grid" / "tgt.obj")
    assert tgt.n_faces == 18
    corr = load_correspondence(tmp_path / "a" / "warped" / "corr.json")
    assert len(corr) == 18
