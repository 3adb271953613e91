import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import affine_by_barycentric
from uvtransfer import fixtures as fx
from uvtransfer.baseline import affine_from_triangles, transfer_affine
from uvtransfer.bench import agreement, median_time
from uvtransfer.errors import DegenerateTriangleError
from uvtransfer.mapping import build_sampling_map, pairs_from_triangles, resolve_pairs
from uvtransfer.transfer import BlendSettings, apply, coverage_mask


def test_affine_identity_and_translation():
    tri = ((0.1, 0.2), (0.7, 0.1), (0.3, 0.9))
    xf = affine_from_triangles(tri, tri)
    assert np.array_equal(xf.linear, np.eye(2))
    assert np.array_equal(xf.translation, [0.0, 0.0])
    moved = tuple((x + 0.25, y - 0.125) for x, y in tri)
    xf = affine_from_triangles(tri, moved)
    assert xf(0.5, 0.5) == pytest.approx((0.75, 0.375), abs=1e-12)


def test_affine_maps_vertices():
    tgt = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
    src = ((0.2, 0.3), (0.8, 0.2), (0.4, 0.9))
    xf = affine_from_triangles(tgt, src)
    for p, q in zip(tgt, src):
        assert xf(*p) == pytest.approx(q, abs=1e-12)


def test_affine_degenerate():
    with pytest.raises(DegenerateTriangleError):
        affine_from_triangles(((0, 0), (1, 1), (2, 2)), ((0, 0), (1, 0), (0, 1)))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=14, max_size=14))
def test_affine_agrees_with_barycentric(vals):
    tgt = (tuple(vals[0:2]), tuple(vals[2:4]), tuple(vals[4:6]))
    src = (tuple(vals[6:8]), tuple(vals[8:10]), tuple(vals[10:12]))
    p = tuple(vals[12:14])
    try:
        xf = affine_from_triangles(tgt, src)
    except DegenerateTriangleError:
        return
    # Keep to reasonably conditioned triangles; both sides lose digits otherwise.
    if np.linalg.cond(np.column_stack([np.asarray(tgt), np.ones(3)])) > 1e4:
        return
    assert xf(*p) == pytest.approx(affine_by_barycentric(p, tgt, src), abs=1e-9)


def _both(pairs, src, w, h, blend):
    fast = apply(build_sampling_map(pairs, w, h), src, blend)
    slow = transfer_affine(pairs, src, w, h, blend)
    return fast, slow


@pytest.mark.parametrize("fill", [None, (0.25, 0.5, 0.75)])
def test_agrees_with_fast_path(warped8, fill):
    pairs = resolve_pairs(*warped8)
    src = fx.noise_texture(64, seed=4)
    blend = BlendSettings(fill=fill)
    fast, slow = _both(pairs, src, 96, 80, blend)
    diff = np.abs(fast.data.astype(int) - slow.data.astype(int))
    assert diff.max() <= 1


def test_identity_is_bit_exact(grid8):
    pairs = resolve_pairs(*grid8)
    src = fx.noise_texture(64, seed=6)
    fast, slow = _both(pairs, src, 64, 64, BlendSettings(fill=None))
    assert slow.equals(src)
    assert fast.equals(slow)


def test_empty_pairs_give_pure_fill():
    out = transfer_affine(pairs_from_triangles([]), fx.gradient_texture(8), 32, 24, BlendSettings(fill=(1.0, 0.0, 0.0)))
    assert (out.data == [255, 0, 0]).all()


def test_parallel_matches_serial(head_body):
    hb = head_body
    pairs = resolve_pairs(hb.body, hb.head, hb.body_from_head)
    src = fx.gradient_texture(96)
    serial = transfer_affine(pairs, src, 128, 128)
    assert serial.equals(transfer_affine(pairs, src, 128, 128, parallel=True, threads=3))


def test_agreement_summary():
    a = fx.noise_texture(8, seed=1)
    mask = np.ones((8, 8), bool)
    assert agreement(a, a, mask) == {"l1": 0.0, "max_level_diff": 0, "exact_fraction": 1.0}
    assert agreement(a, a, ~mask)["exact_fraction"] == 1.0


def test_cost_grows_with_resolution(warped8):
    pairs = resolve_pairs(*warped8)
    src = fx.gradient_texture(64)
    times = [median_time(lambda: transfer_affine(pairs, src, s, s), 3)[0] for s in (64, 256, 1024)]
    assert times[0] < times[2] and times[1] < times[2]


def test_fast_path_covers_same_pixels(head_body):
    hb = head_body
    pairs = resolve_pairs(hb.head, hb.body, hb.head_from_body)
    smap = build_sampling_map(pairs, 100, 70)
    src = fx.gradient_texture(50)
    slow = transfer_affine(pairs, src, 100, 70, BlendSettings(fill=None))
    fast = apply(smap, src, BlendSettings(fill=None))
    m = coverage_mask(smap)
    diff = np.abs(fast.data[m].astype(int) - slow.data[m].astype(int))
    assert diff.max() <= 1
    assert (slow.data[~m] == 0).all()
