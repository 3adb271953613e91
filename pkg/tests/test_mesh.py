import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uvtransfer import fixtures as fx
from uvtransfer.errors import CorrespondenceError, ObjParseError
from uvtransfer.mesh import (
    CorrespondenceMap,
    Triangle2D,
    load_correspondence,
    load_mesh,
    parse_obj,
    save_correspondence,
    save_mesh,
    signed_area,
)

UNIT_QUAD = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vt 0 0
vt 1 0
vt 1 1
vt 0 1
f 1/1 2/2 3/3 4/4
"""


def test_unit_quad_fan_triangulated():
    mesh = parse_obj(UNIT_QUAD.splitlines())
    assert mesh.n_faces == 2
    assert mesh.faces.tolist() == [
        [[0, 0], [1, 1], [2, 2]],
        [[0, 0], [2, 2], [3, 3]],
    ]


def test_vn_corner_syntax_accepted():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n"
    mesh = parse_obj(text.splitlines())
    assert mesh.faces[0, :, 1].tolist() == [0, 1, 2]


def test_missing_vt_index():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1 2 3\n"
    with pytest.raises(ObjParseError, match="missing texture coordinate index") as info:
        parse_obj(text.splitlines())
    assert info.value.lineno == 5


def test_missing_vt_with_normal_syntax():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1//1 2//1 3//1\n"
    with pytest.raises(ObjParseError, match="missing texture coordinate index"):
        parse_obj(text.splitlines())


def test_uv_out_of_range_reports_line():
    text = "v 0 0 0\nvt 0.5 1.25\n"
    with pytest.raises(ObjParseError, match="outside") as info:
        parse_obj(text.splitlines())
    assert info.value.lineno == 2


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("v 0 0\n", 1),
        ("v 0 0 0\nvt a b\n", 2),
        ("v 0 0 0\nvt 0 0\nf 1/1 2/1 3/1\n", 3),
        ("v 0 0 0\nvt 0 0\nf 1/1 1/1\n", 3),
        ("v 0 0 0\nbogus 1\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ObjParseError) as info:
        parse_obj(text.splitlines())
    assert info.value.lineno == lineno


def test_negative_indices_are_relative():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf -3/-3 -2/-2 -1/-1\n"
    mesh = parse_obj(text.splitlines())
    assert mesh.faces[0].tolist() == [[0, 0], [1, 1], [2, 2]]


def _grid_corner_table(nu, nv):
    # Written out independently of fixtures.grid_faces, following its docstring.
    table = []
    for r in range(nv):
        for c in range(nu):
            a = r * (nu + 1) + c
            table.append([a, a + 1, a + nu + 2])
            table.append([a, a + nu + 2, a + nu + 1])
    return table


def test_64_triangle_grid_fixture(tmp_path):
    path = tmp_path / "grid.obj"
    save_mesh(fx.grid_mesh(8, 4), path)
    mesh = load_mesh(path)
    assert mesh.n_faces == 64
    table = _grid_corner_table(8, 4)
    assert mesh.face_positions.tolist() == table
    assert mesh.face_uvs.tolist() == table


def test_reload_is_identical(tmp_path):
    hb = fx.head_body_pair(face_cells=6)
    path = tmp_path / "body.obj"
    save_mesh(hb.body, path)
    first = load_mesh(path)
    second = load_mesh(path)
    assert first.equals(second)
    assert first.equals(hb.body)
    assert first.digest() == second.digest()


def test_signed_area_examples():
    assert signed_area(((0, 0), (1, 0), (0, 1))) == 0.5
    assert signed_area(((0, 0), (0, 1), (1, 0))) == -0.5
    assert signed_area(((0, 0), (1, 1), (2, 2))) == 0.0
    assert Triangle2D((0, 0), (1, 1), (2, 2)).is_degenerate


def _shoelace(points):
    x, y = np.asarray(points).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 12), st.floats(0.05, 0.45), st.floats(0.0, 6.28))
def test_fan_triangulation_preserves_area(n, radius, phase):
    # Convex n-gon around (0.5, 0.5), written as a single OBJ face.
    ang = phase + 2 * np.pi * np.arange(n) / n
    pts = np.column_stack([0.5 + radius * np.cos(ang), 0.5 + radius * np.sin(ang)]).tolist()
    lines = [f"v {x!r} {y!r} 0" for x, y in pts]
    lines += [f"vt {x!r} {y!r}" for x, y in pts]
    lines.append("f " + " ".join(f"{k + 1}/{k + 1}" for k in range(n)))
    mesh = parse_obj(lines)
    assert mesh.n_faces == n - 2
    total = sum(signed_area(mesh.triangle(f)) for f in range(mesh.n_faces))
    assert total == pytest.approx(_shoelace(pts), abs=1e-12)


def test_correspondence_examples(tmp_path):
    p = tmp_path / "v.json"
    p.write_text('{"mode":"vertex","pairs":{"0":0,"1":1,"2":2}}')
    corr = load_correspondence(p)
    assert corr.mode == "vertex" and len(corr) == 3
    p.write_text('{"mode":"face","pairs":{"5":12}}')
    corr = load_correspondence(p)
    assert corr.mode == "face" and corr.face_pairs == {5: 12}


def test_duplicate_target_rejected(tmp_path):
    p = tmp_path / "dup.json"
    p.write_text('{"mode":"vertex","pairs":{"0":0,"0":1}}')
    with pytest.raises(CorrespondenceError, match="duplicate target index"):
        load_correspondence(p)


@pytest.mark.parametrize(
    "doc",
    [
        '{"mode":"edge","pairs":{}}',
        '{"mode":"vertex"}',
        '{"mode":"vertex","pairs":{"a":1}}',
        '{"mode":"vertex","pairs":{"1":-2}}',
        '{"mode":"vertex","pairs":{"1":1.5}}',
        '{"mode":"vertex","pairs":[1,2]}',
        "not json",
    ],
)
def test_schema_violations(tmp_path, doc):
    p = tmp_path / "bad.json"
    p.write_text(doc)
    with pytest.raises(CorrespondenceError):
        load_correspondence(p)


def test_eager_range_check(tmp_path, grid8):
    tgt, src, _ = grid8
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"mode": "face", "pairs": {"0": tgt.n_faces}}))
    load_correspondence(p)  # lazy: no meshes, no range check
    with pytest.raises(CorrespondenceError, match="out of range"):
        load_correspondence(p, tgt, src)


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(["vertex", "face"]),
    st.dictionaries(st.integers(0, 10_000), st.integers(0, 10_000), max_size=40),
)
def test_correspondence_roundtrip(tmp_path_factory, mode, pairs):
    corr = CorrespondenceMap(mode, pairs)
    path = tmp_path_factory.mktemp("corr") / "c.json"
    save_correspondence(corr, path)
    assert load_correspondence(path) == corr
