import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uvtransfer import fixtures as fx  # noqa: E402
from uvtransfer.mapping import build_sampling_map, resolve_pairs  # noqa: E402


@pytest.fixture(scope="session")
def grid8():
    return fx.grid_pair(8)


@pytest.fixture(scope="session")
def warped8():
    return fx.warped_grid_pair(8)


@pytest.fixture(scope="session")
def head_body():
    return fx.head_body_pair(face_cells=12)


@pytest.fixture(scope="session")
def identity_map_64(grid8):
    tgt, src, corr = grid8
    return build_sampling_map(resolve_pairs(tgt, src, corr), 64, 64)


@pytest.fixture(scope="session")
def gradient64():
    return fx.gradient_texture(64)
