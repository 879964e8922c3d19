from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from marsloc.models.camera import PerspectiveIntrinsics
from marsloc.models.terrain import TerrainModel
from marsloc.terrain import build_accel, generate_synthetic_terrain


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run end-to-end sweeps over generated terrain")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def _axis(posts: int, spacing: float = 1.0) -> np.ndarray:
    half = (posts - 1) * spacing / 2
    return np.linspace(-half, half, posts)


@pytest.fixture
def flat_terrain() -> TerrainModel:
    """64 x 64 m of level ground at z = 0 with uniform albedo 128 / 255."""

    return TerrainModel(np.zeros((65, 65)), 1.0, np.full((65, 65), 128, dtype=np.uint8), texture_scale=255.0)


@pytest.fixture
def ramp_terrain() -> TerrainModel:
    """64 x 64 m plane rising eastward, ``z = 0.25 * x``."""

    xs, _ = np.meshgrid(_axis(65), _axis(65)[::-1])
    return TerrainModel(0.25 * xs, 1.0, np.full((65, 65), 128, dtype=np.uint8), texture_scale=255.0)


@pytest.fixture
def wall_terrain() -> TerrainModel:
    """Level ground with a 10 m high North-South wall between x = 8 and x = 12."""

    heights = np.zeros((65, 65))
    heights[:, 40:45] = 10.0
    return TerrainModel(heights, 1.0, np.full((65, 65), 128, dtype=np.uint8), texture_scale=255.0)


@pytest.fixture(scope="session")
def textured_flat_terrain() -> TerrainModel:
    """128 x 128 m of level ground with a smooth random albedo at four texels per post."""

    rng = np.random.default_rng(7)
    noise = ndimage.gaussian_filter(rng.standard_normal((513, 513)), sigma=3.0)
    noise = (noise - noise.min()) / (noise.max() - noise.min())
    texture = np.round(30 + 200 * noise).astype(np.uint8)
    return TerrainModel(np.zeros((129, 129)), 1.0, texture, texture_scale=255.0)


@pytest.fixture(scope="session")
def rough_terrain() -> TerrainModel:
    return generate_synthetic_terrain(42, 128.0, 1.0, crater_count=3, crater_radius_m=(5.0, 15.0))


@pytest.fixture(scope="session")
def rough_accel(rough_terrain: TerrainModel):
    return build_accel(rough_terrain)


@pytest.fixture
def small_optics() -> PerspectiveIntrinsics:
    """Query optics with the reference field of view at 64 x 48 pixels."""

    return PerspectiveIntrinsics(32.0, 80.0, 64, 48)
