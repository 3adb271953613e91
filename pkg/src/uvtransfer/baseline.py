"""Conventional per-triangle affine warp, kept as the comparison baseline.

Every call re-solves each triangle's affine transform and re-rasterizes it;
nothing is cached between transfers. Rasterization, ownership and fill rules
are the same as the fast path, so differences come only from the algorithm.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from .errors import DegenerateTriangleError
from .mapping import DEFAULT_EPS, PairSet, rasterize_triangle, row_bands
from .mesh import DEGENERATE_AREA, signed_area
from .transfer import BlendSettings, Texture, compose, gather, gather_indices, image_rows, flat_texels


class AffineTransform2D(NamedTuple):
    linear: np.ndarray  # (2, 2)
    translation: np.ndarray  # (2,)

    def __call__(self, u, v):
        a = self.linear
        t = self.translation
        return a[0, 0] * u + a[0, 1] * v + t[0], a[1, 0] * u + a[1, 1] * v + t[1]


def affine_from_triangles(tgt, src) -> AffineTransform2D:
    """Affine map taking the target triangle's vertices onto the source's.

    The 3x3 system is solved for the displacement ``src - tgt`` and the
    identity added back, so identical triangles give exactly the identity.
    """
    if abs(signed_area(tgt)) < DEGENERATE_AREA:
        raise DegenerateTriangleError(f"degenerate target triangle {tgt!r}")
    tgt = np.asarray(tgt, dtype=np.float64)
    src = np.asarray(src, dtype=np.float64)
    system = np.column_stack([tgt, np.ones(3)])
    coef = np.linalg.solve(system, src - tgt)  # rows: d/du, d/dv, offset
    linear = np.eye(2) + coef[:2].T
    return AffineTransform2D(linear, coef[2].copy())


def _warp_band(pairs, texels, src_w, src_h, width, height, eps, nearest, row_lo, row_hi, owned, values):
    for tgt, src in zip(pairs.tgt, pairs.src):
        r = rasterize_triangle(tgt, width, height, eps, row_lo, row_hi)
        if r is None:
            continue
        free = ~owned[r.rows, r.cols]
        if not free.any():
            continue
        rows, cols = r.rows[free], r.cols[free]
        xf = affine_from_triangles(tgt, src)
        su, sv = xf(r.u[free], r.v[free])
        su, sv = np.clip(su, 0.0, 1.0), np.clip(sv, 0.0, 1.0)
        values[rows, cols] = gather(texels, *gather_indices(su, sv, src_w, src_h, nearest)).T
        owned[rows, cols] = True


def transfer_affine(
    pairs: PairSet,
    src: Texture,
    width: int,
    height: int,
    blend: BlendSettings | None = None,
    eps: float = DEFAULT_EPS,
    nearest: bool = False,
    parallel: bool = False,
    threads: int | None = None,
) -> Texture:
    """Warp ``src`` into a width x height target one triangle at a time.

    Single-threaded unless ``parallel`` is set, in which case rows are split
    into bands exactly like the map builder.
    """
    blend = BlendSettings() if blend is None else blend
    texels = flat_texels(src)
    owned = np.zeros((height, width), dtype=bool)
    values = np.zeros((height, width, src.channels))
    n = (threads or 4) if parallel else 1
    bands = row_bands(height, n)
    args = (pairs, texels, src.width, src.height, width, height, eps, nearest)
    if len(bands) == 1:
        _warp_band(*args, 0, height, owned, values)
    else:
        with ThreadPoolExecutor(max_workers=len(bands)) as pool:
            for fut in [pool.submit(_warp_band, *args, lo, hi, owned, values) for lo, hi in bands]:
                fut.result()
    owned_image = np.ascontiguousarray(image_rows(owned))
    dest = np.flatnonzero(owned_image)
    sampled = image_rows(values).reshape(-1, src.channels)[dest].T
    return compose(dest, sampled, width, height, src.channels, blend, owned_image)
