from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from marsloc.errors import (
    EmptyTerrainError,
    ExtentMismatchError,
    InvalidParameterError,
    MalformedHeaderError,
    NodataError,
    OutOfBoundsError,
    SizeMismatchError,
)
from marsloc.models.terrain import TerrainModel
from marsloc.terrain import (
    brute_force_accel,
    build_accel,
    generate_synthetic_terrain,
    height_at,
    load_terrain,
    normal_at,
    ray_intersect,
    save_terrain,
)


class TestTerrainModel:
    def test_extent_is_centered(self, flat_terrain):
        assert flat_terrain.extent == (-32.0, 32.0, -32.0, 32.0)
        assert flat_terrain.to_grid(-32.0, 32.0) == (0.0, 0.0)
        assert flat_terrain.to_grid(0.0, 0.0) == (32.0, 32.0)

    def test_texture_extent_must_match(self):
        with pytest.raises(ExtentMismatchError):
            TerrainModel(np.zeros((65, 65)), 1.0, np.zeros((33, 65), dtype=np.uint8))

    def test_texture_needs_two_by_two(self):
        with pytest.raises(InvalidParameterError):
            TerrainModel(np.zeros((65, 65)), 1.0, np.zeros((1, 1), dtype=np.uint8))

    def test_nodata_marker_becomes_nan(self):
        heights = np.zeros((5, 5))
        heights[2, 2] = -9999.0
        terrain = TerrainModel(heights, 1.0, np.zeros((5, 5), dtype=np.uint8), nodata=-9999.0)
        assert np.isnan(terrain.heights[2, 2])
        assert terrain.valid_cells.sum() == 16 - 4


class TestHeightQueries:
    def test_exact_at_posts(self, rough_terrain):
        rng = np.random.default_rng(1)
        rows = rng.integers(0, rough_terrain.rows, 50)
        cols = rng.integers(0, rough_terrain.cols, 50)
        x = rough_terrain.x0 + cols * rough_terrain.spacing
        y = rough_terrain.y0 - rows * rough_terrain.spacing
        np.testing.assert_allclose(height_at(rough_terrain, x, y), rough_terrain.heights[rows, cols], atol=1e-9)

    def test_bilinear_on_a_plane(self, ramp_terrain):
        assert height_at(ramp_terrain, 3.3, -2.1) == pytest.approx(0.25 * 3.3)
        assert height_at(ramp_terrain, -17.75, 9.5) == pytest.approx(0.25 * -17.75)

    def test_agrees_with_reference_interpolation(self, rough_terrain):
        rng = np.random.default_rng(2)
        xmin, xmax, ymin, ymax = rough_terrain.extent
        x = rng.uniform(xmin, xmax, 500)
        y = rng.uniform(ymin, ymax, 500)
        rows = (rough_terrain.y0 - y) / rough_terrain.spacing
        cols = (x - rough_terrain.x0) / rough_terrain.spacing
        expected = ndimage.map_coordinates(rough_terrain.heights, [rows, cols], order=1)
        np.testing.assert_allclose(height_at(rough_terrain, x, y), expected, atol=1e-9)

    def test_continuous_across_cell_edges(self, rough_terrain):
        rng = np.random.default_rng(3)
        s = rough_terrain.spacing
        edges_x = rough_terrain.x0 + s * rng.integers(1, rough_terrain.cols - 1, 50)
        edges_y = rough_terrain.y0 - s * rng.integers(1, rough_terrain.rows - 1, 50)
        along_x = rough_terrain.x0 + s * rng.uniform(1, rough_terrain.cols - 2, 50)
        along_y = rough_terrain.y0 - s * rng.uniform(1, rough_terrain.rows - 2, 50)
        left = height_at(rough_terrain, edges_x - 1e-9, along_y)
        right = height_at(rough_terrain, edges_x + 1e-9, along_y)
        np.testing.assert_allclose(left, right, atol=1e-6)
        above = height_at(rough_terrain, along_x, edges_y + 1e-9)
        below = height_at(rough_terrain, along_x, edges_y - 1e-9)
        np.testing.assert_allclose(above, below, atol=1e-6)

    def test_outside_extent(self, flat_terrain):
        with pytest.raises(OutOfBoundsError):
            height_at(flat_terrain, 32.5, 0.0)

    def test_nodata_neighbourhood(self):
        heights = np.zeros((5, 5))
        heights[2, 2] = -9999.0
        terrain = TerrainModel(heights, 1.0, np.zeros((5, 5), dtype=np.uint8), nodata=-9999.0)
        with pytest.raises(NodataError):
            height_at(terrain, 0.3, 0.3)
        assert height_at(terrain, -1.7, -1.7) == 0.0

    def test_flat_normal_points_up(self, flat_terrain):
        np.testing.assert_allclose(normal_at(flat_terrain, 1.2, -3.4), [0.0, 0.0, 1.0], atol=1e-12)

    def test_ramp_normal(self, ramp_terrain):
        expected = np.array([-0.25, 0.0, 1.0]) / np.hypot(0.25, 1.0)
        np.testing.assert_allclose(normal_at(ramp_terrain, 5.5, 7.25), expected, atol=1e-12)


class TestRayIntersection:
    def test_vertical_ray_on_flat_ground(self, flat_terrain):
        hit = ray_intersect(build_accel(flat_terrain), (1.3, -2.7, 50.0), (0.0, 0.0, -1.0))
        assert hit is not None
        np.testing.assert_allclose(hit.point, [1.3, -2.7, 0.0], atol=1e-9)
        assert hit.t == pytest.approx(50.0)
        assert hit.albedo == pytest.approx(128 / 255)

    def test_ray_away_from_terrain_misses(self, flat_terrain):
        assert ray_intersect(build_accel(flat_terrain), (0.0, 0.0, 10.0), (0.0, 0.0, 1.0)) is None

    def test_ray_leaving_the_extent_misses(self, flat_terrain):
        assert ray_intersect(build_accel(flat_terrain), (0.0, 0.0, 10.0), (1.0, 0.0, 0.0)) is None

    def test_zero_direction(self, flat_terrain):
        with pytest.raises(InvalidParameterError):
            ray_intersect(build_accel(flat_terrain), (0.0, 0.0, 10.0), (0.0, 0.0, 0.0))

    def test_pyramid_agrees_with_exhaustive_search(self, rough_terrain, rough_accel):
        oracle = brute_force_accel(rough_terrain)
        rng = np.random.default_rng(2)
        lo, hi = rough_terrain.height_range
        for _ in range(300):
            origin = np.array([rng.uniform(-60, 60), rng.uniform(-60, 60), rng.uniform(hi + 1, hi + 80)])
            direction = np.array([rng.normal(), rng.normal(), -abs(rng.normal()) - 0.05])
            fast = ray_intersect(rough_accel, origin, direction)
            slow = ray_intersect(oracle, origin, direction)
            assert (fast is None) == (slow is None)
            if fast is not None and slow is not None:
                assert fast.t == pytest.approx(slow.t, abs=1e-9)
                assert fast.cell == slow.cell
                assert lo - 1e-6 <= fast.point[2] <= hi + 1e-6

    def test_all_nodata_terrain(self):
        terrain = TerrainModel(np.full((4, 4), -1.0), 1.0, np.zeros((4, 4), dtype=np.uint8), nodata=-1.0)
        with pytest.raises(EmptyTerrainError):
            build_accel(terrain)
        with pytest.raises(EmptyTerrainError):
            brute_force_accel(terrain)


class TestSyntheticTerrain:
    def test_same_seed_same_terrain(self):
        a = generate_synthetic_terrain(5, 64.0, 1.0, crater_count=2, crater_radius_m=(4.0, 8.0))
        b = generate_synthetic_terrain(5, 64.0, 1.0, crater_count=2, crater_radius_m=(4.0, 8.0))
        np.testing.assert_array_equal(a.heights, b.heights)
        np.testing.assert_array_equal(a.texture, b.texture)

    def test_different_seed_differs(self):
        a = generate_synthetic_terrain(5, 64.0, 1.0, crater_count=0)
        b = generate_synthetic_terrain(6, 64.0, 1.0, crater_count=0)
        assert not np.array_equal(a.heights, b.heights)

    def test_shape_and_texture(self):
        terrain = generate_synthetic_terrain(0, 32.0, 0.5, crater_count=0, texture_factor=2)
        assert terrain.heights.shape == (65, 65)
        assert terrain.texture.shape == (129, 129)
        assert terrain.texture.dtype == np.uint8
        assert 0.1 <= terrain.albedo.min() and terrain.albedo.max() <= 0.9

    def test_rejects_bad_parameters(self):
        with pytest.raises(InvalidParameterError):
            generate_synthetic_terrain(0, 0.0, 1.0)
        with pytest.raises(InvalidParameterError):
            generate_synthetic_terrain(0, 64.0, 1.0, hurst=1.5)


class TestTerrainFiles:
    def test_round_trip_is_bit_identical(self, rough_terrain, tmp_path):
        save_terrain(rough_terrain, tmp_path / "dtm.raw", tmp_path / "texture.pgm")
        loaded = load_terrain(tmp_path / "dtm.raw", tmp_path / "texture.pgm")
        np.testing.assert_array_equal(loaded.heights, rough_terrain.heights)
        np.testing.assert_array_equal(loaded.texture, rough_terrain.texture)
        assert loaded.spacing == rough_terrain.spacing

    def test_raw16_texture(self, tmp_path):
        texture = np.arange(25, dtype=np.uint16).reshape(5, 5) * 1000
        terrain = TerrainModel(np.ones((5, 5)), 2.0, texture, texture_scale=65535.0)
        save_terrain(terrain, tmp_path / "dtm.raw", tmp_path / "texture.raw")
        loaded = load_terrain(tmp_path / "dtm.raw", tmp_path / "texture.raw")
        np.testing.assert_array_equal(loaded.texture, texture)
        assert loaded.texture_scale == 65535.0

    def test_nodata_survives(self, tmp_path):
        heights = np.zeros((5, 5))
        heights[0, 0] = -9999.0
        terrain = TerrainModel(heights, 1.0, np.zeros((5, 5), dtype=np.uint8), texture_scale=255.0, nodata=-9999.0)
        save_terrain(terrain, tmp_path / "dtm.raw", tmp_path / "texture.pgm")
        loaded = load_terrain(tmp_path / "dtm.raw", tmp_path / "texture.pgm")
        assert np.isnan(loaded.heights[0, 0])
        assert np.isfinite(loaded.heights[1:, 1:]).all()

    def test_truncated_payload(self, flat_terrain, tmp_path):
        save_terrain(flat_terrain, tmp_path / "dtm.raw", tmp_path / "texture.pgm")
        data = (tmp_path / "dtm.raw").read_bytes()
        (tmp_path / "dtm.raw").write_bytes(data[:-4])
        with pytest.raises(SizeMismatchError):
            load_terrain(tmp_path / "dtm.raw", tmp_path / "texture.pgm")

    def test_missing_sidecar(self, flat_terrain, tmp_path):
        save_terrain(flat_terrain, tmp_path / "dtm.raw", tmp_path / "texture.pgm")
        (tmp_path / "dtm.raw.json").unlink()
        with pytest.raises(MalformedHeaderError):
            load_terrain(tmp_path / "dtm.raw", tmp_path / "texture.pgm")
