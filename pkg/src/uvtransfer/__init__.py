"""Texture transfer between UV layouts through a precomputed barycentric sampling map."""

from importlib import resources

from .baseline import AffineTransform2D, affine_from_triangles, transfer_affine
from .cache import load_map, save_map
from .errors import (
    CacheCorruptError,
    CacheError,
    CorrespondenceError,
    DegenerateTriangleError,
    ObjParseError,
    ResolutionMismatchError,
    StaleCacheError,
    UvTransferError,
)
from .mapping import (
    BaryCoords,
    PairSet,
    SamplingMap,
    barycentric,
    build_sampling_map,
    fingerprint,
    map_source_point,
    resolve_pairs,
)
from .mesh import CorrespondenceMap, Triangle2D, UvMesh, load_correspondence, load_mesh, signed_area
from .metrics import MetricsReport, evaluate, l1_distance, psnr, ssim
from .transfer import BlendSettings, Texture, apply, read_png, roundtrip, sample_bilinear, write_png


def report_schema() -> dict:
    """The JSON schema every CLI report validates against."""
    import json

    return json.loads(resources.files(__name__).joinpath("schemas/report.schema.json").read_text())


__all__ = [
    "AffineTransform2D",
    "BaryCoords",
    "BlendSettings",
    "CacheCorruptError",
    "CacheError",
    "CorrespondenceError",
    "CorrespondenceMap",
    "DegenerateTriangleError",
    "MetricsReport",
    "ObjParseError",
    "PairSet",
    "ResolutionMismatchError",
    "SamplingMap",
    "StaleCacheError",
    "Texture",
    "Triangle2D",
    "UvMesh",
    "UvTransferError",
    "affine_from_triangles",
    "apply",
    "barycentric",
    "build_sampling_map",
    "evaluate",
    "fingerprint",
    "l1_distance",
    "load_correspondence",
    "load_map",
    "load_mesh",
    "map_source_point",
    "psnr",
    "read_png",
    "report_schema",
    "resolve_pairs",
    "roundtrip",
    "sample_bilinear",
    "save_map",
    "signed_area",
    "ssim",
    "transfer_affine",
    "write_png",
]
