"""Timing harness: precompute once, apply N times, compare with the per-triangle baseline."""

from __future__ import annotations

import statistics
import time

import numpy as np

from .baseline import transfer_affine
from .mapping import DEFAULT_EPS, build_sampling_map, resolve_pairs
from .metrics import l1_distance
from .transfer import BlendSettings, apply, coverage_mask, prepare_plan, warmup


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    return time.perf_counter() - t0, result


def median_time(fn, repeat: int):
    """Median wall time of ``repeat`` calls and the last call's result."""
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    times, result = [], None
    for _ in range(repeat):
        dt, result = timed(fn)
        times.append(dt)
    return statistics.median(times), result


def agreement(a, b, mask) -> dict:
    """How closely two 8-bit outputs match on ``mask``."""
    if not mask.any():
        return {"l1": 0.0, "max_level_diff": 0, "exact_fraction": 1.0}
    diff = np.abs(a.data[mask].astype(np.int16) - b.data[mask].astype(np.int16))
    return {
        "l1": l1_distance(a, b, mask),
        "max_level_diff": int(diff.max()),
        "exact_fraction": float((diff == 0).mean()),
    }


def run_bench(
    target,
    source,
    corr,
    src_tex,
    width: int,
    height: int,
    repeat: int = 10,
    baseline_repeat: int = 1,
    eps: float = DEFAULT_EPS,
    blend: BlendSettings | None = None,
    threads: int | None = None,
    parallel_baseline: bool = False,
) -> dict:
    """Fast path (precompute once + ``repeat`` applies) against the uncached baseline.

    ``precompute_s`` covers pair resolution, rasterization and the gather
    plan for this source size. ``speedup`` is baseline_s / apply_s.
    """
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    blend = BlendSettings(fill=None) if blend is None else blend
    warmup()

    def precompute():
        pairs = resolve_pairs(target, source, corr)
        smap = build_sampling_map(pairs, width, height, eps, threads=threads)
        prepare_plan(smap, src_tex.width, src_tex.height)
        return pairs, smap

    precompute_s, (pairs, smap) = timed(precompute)
    apply_s, fast = median_time(lambda: apply(smap, src_tex, blend, threads=threads), repeat)
    baseline_s, slow = median_time(
        lambda: transfer_affine(pairs, src_tex, width, height, blend, eps, parallel=parallel_baseline, threads=threads),
        baseline_repeat,
    )
    mask = coverage_mask(smap)
    amortized = (precompute_s + repeat * apply_s) / repeat
    return {
        "command": "bench",
        "width": width,
        "height": height,
        "triangles": len(pairs),
        "repeat": repeat,
        "baseline_repeat": baseline_repeat,
        "baseline_mode": "parallel" if parallel_baseline else "serial",
        "precompute_s": precompute_s,
        "apply_s": apply_s,
        "baseline_s": baseline_s,
        "speedup": baseline_s / apply_s if apply_s > 0 else float("inf"),
        "speedup_incl_precompute": baseline_s / amortized if amortized > 0 else float("inf"),
        "mask_coverage": smap.coverage,
        "skipped_faces": pairs.skipped,
        "agreement": agreement(fast, slow, mask),
    }
