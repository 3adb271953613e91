"""Applying a sampling map to a texture in one gather pass.

This module is the only place where UV space meets image space: a UV point
(u, v) lands at texel coordinates ``x = u * W - 0.5``, ``y = (1 - v) * H - 0.5``
(row 0 is the top of the image), and sampling-map row ``j`` is written to
image row ``H - 1 - j``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
from numba import njit
from PIL import Image
from scipy import ndimage

from .errors import ResolutionMismatchError
from .mapping import SamplingMap, default_threads

DEFAULT_FEATHER = 4


@dataclass(frozen=True, eq=False)
class Texture:
    """8-bit RGB or RGBA image, shape (H, W, C), row 0 at the top."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.uint8:
            raise TypeError(f"texture data must be uint8, got {data.dtype}")
        if data.ndim != 3 or data.shape[2] not in (3, 4) or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"texture must have shape (H, W, 3|4), got {data.shape}")
        if data.flags.writeable:
            data = data.copy()
            data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    def to_float(self) -> np.ndarray:
        return self.data / 255.0

    @classmethod
    def from_float(cls, values) -> Texture:
        return cls(quantize(values))

    def equals(self, other: Texture) -> bool:
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)


def quantize(values) -> np.ndarray:
    """[0, 1] floats to uint8, rounding half away from zero."""
    values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def read_png(path) -> Texture:
    with Image.open(path) as im:
        if im.mode not in ("RGB", "RGBA"):
            im = im.convert("RGBA" if "A" in im.getbands() else "RGB")
        return Texture(np.asarray(im, dtype=np.uint8))


def write_png(tex: Texture, path) -> None:
    mode = "RGB" if tex.channels == 3 else "RGBA"
    target = path if hasattr(path, "write") else Path(path)
    Image.fromarray(np.ascontiguousarray(tex.data), mode=mode).save(target, format="PNG")


Fill = Union[None, tuple, Texture]


@dataclass(frozen=True, eq=False)
class BlendSettings:
    """What goes where the map has no coverage.

    ``fill`` is ``None`` (black, or transparent black for RGBA), an RGB color
    with components in [0, 1], or a texture of the output size. Within
    ``feather_radius`` pixels of the coverage boundary the sampled value is
    ramped linearly into the fill.
    """

    fill: Fill = None
    feather_radius: float = DEFAULT_FEATHER

    def __post_init__(self):
        if self.feather_radius < 0:
            raise ValueError("feather_radius must be >= 0")
        if isinstance(self.fill, (tuple, list)):
            color = tuple(float(c) for c in self.fill)
            if len(color) not in (3, 4) or not all(0.0 <= c <= 1.0 for c in color):
                raise ValueError("fill color needs 3 or 4 components in [0, 1]")
            object.__setattr__(self, "fill", color)
        elif self.fill is not None and not isinstance(self.fill, Texture):
            raise TypeError("fill must be None, a color tuple or a Texture")


def _texel_coords(u, v, width, height):
    x = u * width - 0.5
    y = (1.0 - v) * height - 0.5
    if isinstance(x, np.ndarray):
        x = np.clip(x, 0.0, width - 1)
        y = np.clip(y, 0.0, height - 1)
    else:
        x = min(max(x, 0.0), width - 1)
        y = min(max(y, 0.0), height - 1)
    return x, y


def _weights(fx, fy):
    gx, gy = 1.0 - fx, 1.0 - fy
    return gy * gx, gy * fx, fy * gx, fy * fx


def sample_bilinear(tex: Texture, uv, nearest: bool = False) -> np.ndarray:
    """Value of ``tex`` at one UV point as floats in [0, 1], edges clamped.

    The four texels are weighted in 8-bit units and the sum divided by 255
    once, exactly as the vectorized gather does.
    """
    x, y = _texel_coords(float(uv[0]), float(uv[1]), tex.width, tex.height)
    texels = tex.data.astype(np.float64)
    if nearest:
        xi = min(math.floor(x + 0.5), tex.width - 1)
        yi = min(math.floor(y + 0.5), tex.height - 1)
        return texels[yi, xi] / 255.0
    x0, y0 = math.floor(x), math.floor(y)
    x1, y1 = min(x0 + 1, tex.width - 1), min(y0 + 1, tex.height - 1)
    w00, w01, w10, w11 = _weights(x - x0, y - y0)
    acc = w00 * texels[y0, x0] + w01 * texels[y0, x1] + w10 * texels[y1, x0] + w11 * texels[y1, x1]
    return acc / 255.0


def gather_indices(u, v, width, height, nearest=False):
    """Flat texel indices (k, N) and weights (k, N) for arrays of UV points.

    k is 4 for bilinear sampling and 1 for nearest, which has no weights.
    """
    x, y = _texel_coords(u, v, width, height)
    if nearest:
        xi = np.minimum(np.floor(x + 0.5), width - 1).astype(np.intp)
        yi = np.minimum(np.floor(y + 0.5), height - 1).astype(np.intp)
        return (yi * width + xi)[None], None
    x0, y0 = np.floor(x), np.floor(y)
    fx, fy = x - x0, y - y0
    x0, y0 = x0.astype(np.intp), y0.astype(np.intp)
    x1, y1 = np.minimum(x0 + 1, width - 1), np.minimum(y0 + 1, height - 1)
    idx = np.stack([y0 * width + x0, y0 * width + x1, y1 * width + x0, y1 * width + x1])
    return idx, np.stack(_weights(fx, fy))


def flat_texels(tex: Texture) -> np.ndarray:
    """Texels as a flat (H * W, C) uint8 view, indexed by ``gather_indices``."""
    return tex.data.reshape(-1, tex.channels)


@njit(cache=True, nogil=True)
def _gather_kernel(texels, idx, weights, out):
    # Pixel-major so each pixel's indices and weights are read once; uint8 to
    # float64 is exact, so this matches sample_bilinear bit for bit.
    for i in range(idx.shape[1]):
        i0, i1, i2, i3 = idx[0, i], idx[1, i], idx[2, i], idx[3, i]
        w0, w1, w2, w3 = weights[0, i], weights[1, i], weights[2, i], weights[3, i]
        for c in range(texels.shape[1]):
            acc = (
                w0 * np.float64(texels[i0, c])
                + w1 * np.float64(texels[i1, c])
                + w2 * np.float64(texels[i2, c])
                + w3 * np.float64(texels[i3, c])
            )
            out[c, i] = acc / 255.0


@njit(cache=True, nogil=True)
def _store_kernel(values, dest, out):
    # Same arithmetic as quantize(), scattered into interleaved (H * W, C) pixels.
    for i in range(values.shape[1]):
        d = dest[i]
        for c in range(values.shape[0]):
            x = min(max(values[c, i], 0.0), 1.0)
            out[d, c] = np.uint8(np.floor(x * 255.0 + 0.5))


def gather(texels, idx, weights) -> np.ndarray:
    """Sample flat texels at ``idx``; returns (C, N) floats in [0, 1]."""
    if weights is None:
        return texels[idx[0]].T / 255.0
    out = np.empty((texels.shape[1], idx.shape[1]))
    _gather_kernel(texels, idx, weights, out)
    return out


class GatherPlan(NamedTuple):
    """Where each covered pixel goes and which texels it reads."""

    dest: np.ndarray  # (N,) flat image-order output index, ascending
    idx: np.ndarray  # (k, N) flat source texel indices
    weights: np.ndarray | None  # (4, N) bilinear weights


def image_rows(arr):
    """Reorder a UV-order grid (row 0 at v = 0) into image order (row 0 at top)."""
    return arr[::-1]


def coverage_mask(smap: SamplingMap) -> np.ndarray:
    """The map's coverage in image order, aligned with the textures it produces."""
    return np.ascontiguousarray(image_rows(smap.mask))


def prepare_plan(smap: SamplingMap, src_width: int, src_height: int, nearest: bool = False) -> GatherPlan:
    """Gather plan for sources of the given size, cached on the map."""
    key = (src_width, src_height, nearest)
    plan = smap._plans.get(key)
    if plan is None:
        dest = np.flatnonzero(coverage_mask(smap))
        uv = image_rows(smap.src_uv).reshape(-1, 2)[dest].astype(np.float64)
        plan = GatherPlan(dest, *gather_indices(uv[:, 0], uv[:, 1], src_width, src_height, nearest))
        smap._plans[key] = plan
    return plan


CHUNK = 65536


def _chunks(n):
    return [slice(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]


def _fill_pixels(blend: BlendSettings, width: int, height: int, channels: int):
    """Fill as (H * W, C) uint8 plus a function giving (C, n) float fill values at flat indices."""
    fill = blend.fill
    n = width * height
    if isinstance(fill, Texture):
        if fill.size != (width, height):
            raise ResolutionMismatchError(
                f"fill texture is {fill.width}x{fill.height}, output is {width}x{height}"
            )
        data = fill.data.reshape(n, fill.channels)
        if fill.channels < channels:
            data = np.concatenate([data, np.full((n, 1), 255, np.uint8)], axis=1)
        data = np.array(data[:, :channels])
        return data, lambda at: data[at].T / 255.0
    if fill is None:
        color = np.zeros(channels)
    else:
        color = np.ones(channels)
        k = min(len(fill), channels)
        color[:k] = fill[:k]
    data = np.empty((n, channels), dtype=np.uint8)
    for c, level in enumerate(quantize(color)):
        data[:, c] = level  # per column; a broadcast row copy is several times slower
    return data, lambda at: np.repeat(color[:, None], len(at), axis=1)


def feather_alpha(mask: np.ndarray, radius: float) -> np.ndarray:
    """Weight of the sampled value per pixel: distance to the nearest uncovered pixel over radius, capped at 1."""
    if radius <= 0 or mask.all():
        return np.where(mask, 1.0, 0.0)
    dist = ndimage.distance_transform_edt(mask)
    return np.minimum(dist / radius, 1.0)


class _Composer:
    """Writes sampled values over the fill; chunks may arrive in any order."""

    def __init__(self, width, height, channels, blend: BlendSettings, mask_image):
        if blend.feather_radius > min(width, height) / 4:
            raise ValueError(f"feather_radius {blend.feather_radius} exceeds a quarter of {width}x{height}")
        self.shape = (height, width, channels)
        self.out, self.fill_at = _fill_pixels(blend, width, height, channels)
        self.alpha = None
        if blend.fill is not None and blend.feather_radius > 0 and mask_image.any():
            self.alpha = feather_alpha(mask_image, blend.feather_radius).reshape(-1)

    def put(self, dest, sampled):
        """``sampled`` is (C, n) floats for the flat output pixels ``dest``."""
        if self.alpha is not None:
            a = self.alpha[dest]
            ramp = np.flatnonzero(a < 1.0)
            if len(ramp):
                ar = a[ramp]
                sampled[:, ramp] = ar * sampled[:, ramp] + (1.0 - ar) * self.fill_at(dest[ramp])
        _store_kernel(sampled, dest, self.out)

    def texture(self) -> Texture:
        out = self.out.reshape(self.shape)
        out.flags.writeable = False
        return Texture(out)


def compose(dest, sampled, width, height, channels, blend: BlendSettings, mask_image) -> Texture:
    """Scatter (C, N) sampled values over the fill, feathering near the coverage boundary."""
    comp = _Composer(width, height, channels, blend, mask_image)
    comp.put(np.asarray(dest), np.array(sampled, dtype=np.float64))
    return comp.texture()


def apply(smap: SamplingMap, src: Texture, blend: BlendSettings | None = None, nearest: bool = False, threads: int | None = None) -> Texture:
    """Resample ``src`` into the map's layout: one gather over the covered pixels."""
    blend = BlendSettings() if blend is None else blend
    threads = default_threads() if threads is None else max(1, int(threads))
    plan = prepare_plan(smap, src.width, src.height, nearest)
    comp = _Composer(smap.width, smap.height, src.channels, blend, coverage_mask(smap))
    texels = flat_texels(src)

    def work(s):
        w = None if plan.weights is None else plan.weights[:, s]
        comp.put(plan.dest[s], gather(texels, plan.idx[:, s], w))

    chunks = _chunks(len(plan.dest))
    if threads == 1 or len(chunks) < 2:
        for s in chunks:
            work(s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, chunks))
    return comp.texture()


def roundtrip(fwd: SamplingMap, rev: SamplingMap, original: Texture, blend: BlendSettings | None = None, nearest: bool = False, threads: int | None = None) -> Texture:
    """Transfer ``original`` through ``fwd`` and back through ``rev``.

    Pixels ``rev`` does not cover keep the original texels, and the feather
    band blends the reconstruction into them.
    """
    blend = BlendSettings() if blend is None else blend
    if rev.width != original.width or rev.height != original.height:
        raise ResolutionMismatchError(
            f"reverse map is {rev.width}x{rev.height} but the original texture is {original.width}x{original.height}"
        )
    mid = apply(fwd, original, blend, nearest=nearest, threads=threads)
    back = BlendSettings(fill=original, feather_radius=blend.feather_radius)
    return apply(rev, mid, back, nearest=nearest, threads=threads)


def warmup() -> None:
    """Compile the sampling kernels now rather than inside the first timed call."""
    texels = np.zeros((4, 1), dtype=np.uint8)
    texels.flags.writeable = False  # texture data is always read-only
    idx = np.zeros((4, 2), dtype=np.intp)
    weights = np.zeros((4, 2))
    # Chunk slices are non-contiguous, a single whole-plan chunk is contiguous.
    for cols in (slice(0, 2), slice(0, 1)):
        out = np.zeros((1, cols.stop))
        _gather_kernel(texels, idx[:, cols], weights[:, cols], out)
        _store_kernel(out, np.zeros(cols.stop, dtype=np.intp), np.zeros((2, 1), dtype=np.uint8))
