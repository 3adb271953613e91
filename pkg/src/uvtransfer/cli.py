"""Command-line entry point: ``uvtransfer <command> ...``.

Exit status: 0 success, 1 other failures, 2 usage errors, 3 stale cache,
4 resolution or shape mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import cache, fixtures
from .bench import run_bench, timed
from .errors import ResolutionMismatchError, StaleCacheError, UvTransferError
from .mapping import DEFAULT_EPS, build_sampling_map, fingerprint, resolve_pairs
from .mesh import load_correspondence, load_mesh
from .metrics import evaluate, json_number
from .transfer import DEFAULT_FEATHER, BlendSettings, apply, coverage_mask, read_png, roundtrip, write_png

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_STALE = 3
EXIT_SHAPE = 4

log = logging.getLogger("uvtransfer")


def _emit(doc: dict, path=None) -> None:
    text = json.dumps(_jsonable(doc), indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return json_number(obj) if obj > 0 else "-inf"
    return obj


def parse_fill(text: str | None):
    """``none``, ``#rrggbb``, ``r,g,b`` (0-255) or a PNG path."""
    if text is None or text.lower() == "none":
        return None
    if text.startswith("#") and len(text) == 7:
        return tuple(int(text[i : i + 2], 16) / 255.0 for i in (1, 3, 5))
    parts = text.split(",")
    if len(parts) in (3, 4) and all(p.strip().isdigit() for p in parts):
        values = [int(p) for p in parts]
        if any(v > 255 for v in values):
            raise ValueError(f"fill color components must be 0-255: {text!r}")
        return tuple(v / 255.0 for v in values)
    return read_png(text)


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _load_inputs(args):
    target = load_mesh(args.tgt_mesh)
    source = load_mesh(args.src_mesh)
    corr = load_correspondence(args.corr, target, source)
    return target, source, corr


def cmd_build_map(args) -> int:
    def precompute():
        target, source, corr = _load_inputs(args)
        pairs = resolve_pairs(target, source, corr)
        return pairs, build_sampling_map(pairs, args.width, args.height, args.eps, threads=args.threads)

    precompute_s, (pairs, smap) = timed(precompute)
    cache.save_map(smap, args.out)
    _emit(
        {
            "command": "build-map",
            "out": str(args.out),
            "width": smap.width,
            "height": smap.height,
            "precompute_s": precompute_s,
            "pairs": len(pairs),
            "mask_coverage": smap.coverage,
            "skipped_faces": pairs.skipped,
            "skipped_unmapped": pairs.skipped_unmapped,
            "skipped_degenerate": pairs.skipped_degenerate,
            "degenerate_warnings": pairs.skipped_degenerate,
            "digest": smap.digest.hex(),
        }
    )
    return 0


def _expected_digest(args, width, height):
    given = [args.src_mesh, args.tgt_mesh, args.corr]
    if not any(given):
        return None
    if not all(given):
        raise UvTransferError("--src-mesh, --tgt-mesh and --corr must be given together")
    target, source, corr = _load_inputs(args)
    return fingerprint(target, source, corr, width, height, args.eps)


def _peek_size(path):
    smap = cache.load_map(path)
    return smap, smap.width, smap.height


def cmd_transfer(args) -> int:
    smap, width, height = _peek_size(args.map)
    expected = _expected_digest(args, width, height)
    if expected is not None and expected != smap.digest:
        raise StaleCacheError(f"{args.map} was built from different inputs; rebuild it")
    src = read_png(args.src_tex)
    blend = BlendSettings(fill=parse_fill(args.fill), feather_radius=args.feather)
    apply_s, out = timed(apply, smap, src, blend, nearest=args.nearest, threads=args.threads)
    write_png(out, args.out)
    _emit(
        {
            "command": "transfer",
            "out": str(args.out),
            "apply_s": apply_s,
            "mask_coverage": smap.coverage,
        }
    )
    return 0


def cmd_roundtrip(args) -> int:
    fwd = cache.load_map(args.fwd_map)
    rev = cache.load_map(args.rev_map)
    original = read_png(args.tex)
    blend = BlendSettings(fill=parse_fill(args.fill), feather_radius=args.feather)
    total_s, out = timed(roundtrip, fwd, rev, original, blend, nearest=args.nearest, threads=args.threads)
    write_png(out, args.out)

    timings = {"roundtrip_s": total_s}
    full = evaluate(out, original)
    mask = coverage_mask(rev)
    masked = evaluate(out, original, mask) if mask.any() else None
    headline = masked or full
    report = {
        "command": "roundtrip",
        "out": str(args.out),
        "apply_s": total_s,
        "region": "masked" if masked else "full",
        "l1": headline.l1,
        "ssim": headline.ssim,
        "psnr": headline.psnr,
        "lpips": headline.lpips,
        "mask_coverage": rev.coverage,
        "full": full.to_json(),
        "masked": masked.to_json() if masked else None,
        "timings": timings,
    }
    _emit(report, args.report)
    return 0


def cmd_bench(args) -> int:
    target, source, corr = _load_inputs(args)
    src = read_png(args.tex)
    report = run_bench(
        target,
        source,
        corr,
        src,
        args.width,
        args.height,
        repeat=args.repeat,
        baseline_repeat=args.baseline_repeat,
        eps=args.eps,
        threads=args.threads,
        parallel_baseline=args.parallel_baseline,
    )
    _emit(report, args.report)
    return 0


def cmd_gen_fixtures(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    written = fixtures.write_fixtures(args.out_dir, args.grid, seed=args.seed, sizes=sizes)
    _emit({"command": "gen-fixtures", "files": [str(p) for p in written]})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uvtransfer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive, default=None, help="worker threads (default: CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-map", parents=[common], help="precompute a sampling map and write an SMAP file")
    p.add_argument("--src-mesh", required=True)
    p.add_argument("--tgt-mesh", required=True)
    p.add_argument("--corr", required=True)
    p.add_argument("--width", type=_positive, required=True)
    p.add_argument("--height", type=_positive, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.set_defaults(func=cmd_build_map)

    p = sub.add_parser("transfer", parents=[common], help="apply an SMAP file to a texture")
    p.add_argument("--map", required=True)
    p.add_argument("--src-tex", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fill", default=None, help="none, #rrggbb, r,g,b or a PNG of the output size")
    p.add_argument("--feather", type=float, default=DEFAULT_FEATHER)
    p.add_argument("--nearest", action="store_true")
    p.add_argument("--src-mesh", help="with --tgt-mesh and --corr: refuse a stale map")
    p.add_argument("--tgt-mesh")
    p.add_argument("--corr")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("roundtrip", parents=[common], help="forward then reverse transfer, with metrics")
    p.add_argument("--fwd-map", required=True)
    p.add_argument("--rev-map", required=True)
    p.add_argument("--tex", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="JSON report path (default: standard output)")
    p.add_argument("--fill", default=None)
    p.add_argument("--feather", type=float, default=DEFAULT_FEATHER)
    p.add_argument("--nearest", action="store_true")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("bench", parents=[common], help="time the fast path against the per-triangle baseline")
    p.add_argument("--src-mesh", required=True)
    p.add_argument("--tgt-mesh", required=True)
    p.add_argument("--corr", required=True)
    p.add_argument("--width", type=_positive, required=True)
    p.add_argument("--height", type=_positive, required=True)
    p.add_argument("--tex", required=True)
    p.add_argument("--repeat", type=_positive, required=True)
    p.add_argument("--baseline-repeat", type=_positive, default=1)
    p.add_argument("--parallel-baseline", action="store_true")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-fixtures", help="write synthetic meshes, correspondences and textures")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--grid", type=_positive, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", default="256,1024,2048")
    p.set_defaults(func=cmd_gen_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except StaleCacheError as exc:
        print(f"uvtransfer: stale cache: {exc}", file=sys.stderr)
        return EXIT_STALE
    except ResolutionMismatchError as exc:
        print(f"uvtransfer: shape mismatch: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except (UvTransferError, OSError, ValueError) as exc:
        print(f"uvtransfer: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
