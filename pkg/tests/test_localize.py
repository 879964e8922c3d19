from __future__ import annotations

from typing import ClassVar

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from marsloc.dataset import QUERY_OPTICS
from marsloc.enums import CameraKind, PoseStatus
from marsloc.errors import InvalidParameterError, OutOfBoundsError, UnsupportedError
from marsloc.geometry import NADIR_ROTATION, intrinsics_matrix, nadir_pose, project_ortho, rotation_angle
from marsloc.localize import (
    backproject_matches,
    dlt_pose,
    localize,
    ransac_pnp,
    refine_pose,
    reprojection_errors,
    scale_hint,
    search_area,
    solve_p3p,
    tile_windows,
)
from marsloc.matchers import NCCMatcher
from marsloc.matchers.base import Matcher
from marsloc.metrics import localization_error
from marsloc.models.camera import OrthoIntrinsics, Pose
from marsloc.models.image import RenderedImage, RenderSettings
from marsloc.models.localization import Correspondence2D3D, RansacParams
from marsloc.models.matching import Match, MatchSet
from marsloc.models.sun import SunConfig
from marsloc.render import default_map_camera, place_camera, render_ortho, render_perspective
from marsloc.terrain import build_accel

K = np.array([[1000.0, 0.0, 320.0], [0.0, 1000.0, 240.0], [0.0, 0.0, 1.0]])
MAP_ALTITUDE = 4000.0


def _random_pose(rng: np.random.Generator) -> Pose:
    tilt = Rotation.from_rotvec(rng.normal(0.0, 0.1, 3)).as_matrix()
    return Pose(tilt @ NADIR_ROTATION, (rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(80, 120)))


def _scene(pose: Pose, n: int, rng: np.random.Generator, depth: tuple[float, float] = (20.0, 60.0)) -> Correspondence2D3D:
    """World points seen by `pose` at random pixels and depths."""

    uv = np.column_stack([rng.uniform(0, 640, n), rng.uniform(0, 480, n)])
    rays = np.linalg.solve(K, np.column_stack([uv, np.ones(n)]).T).T
    world = pose.camera_to_world(rays * rng.uniform(*depth, n)[:, None])
    return Correspondence2D3D(uv, world)


def _flat_map(width: int = 254, pixel_size: float = 0.25) -> RenderedImage:
    """Nadir map of level ground at z = 0 with a random gray texture."""

    oi = OrthoIntrinsics.from_pixel_size(pixel_size, width, width)
    rng = np.random.default_rng(0)
    return RenderedImage(
        rng.integers(0, 256, (width, width), dtype=np.uint8),
        np.full((width, width), MAP_ALTITUDE, dtype=np.float32),
        CameraKind.ORTHO,
        oi,
        nadir_pose(0.0, 0.0, MAP_ALTITUDE),
        SunConfig(180.0, 40.0),
    )


class _OracleMatcher(Matcher):
    """Emits exact matches for a known query pose over level ground."""

    __slots__ = ("k", "map_image", "pose", "step")

    name: ClassVar[str] = "oracle"
    default_threshold: ClassVar[float] = 0.5

    def __init__(self, pose: Pose, k: np.ndarray, map_image: RenderedImage, step: int = 4) -> None:
        self.pose = pose
        self.k = k
        self.map_image = map_image
        self.step = step

    def match(self, query, window, depth=None, *, window_id=0, offset=(0, 0), scale_hint=None):
        h, w = query.shape
        vv, uu = np.mgrid[0:h:self.step, 0:w:self.step]
        uv = np.column_stack([uu.ravel(), vv.ravel()]).astype(np.float64)
        rays = np.linalg.solve(self.k, np.column_stack([uv, np.ones(len(uv))]).T).T @ self.pose.rotation
        s = -self.pose.translation[2] / rays[:, 2]
        ground = self.pose.translation + s[:, None] * rays
        mu, mv, _ = project_ortho(self.map_image.intrinsics, self.map_image.pose, ground)
        wu, wv = mu - offset[0], mv - offset[1]
        inside = (wu >= 0) & (wu <= window.shape[1] - 1) & (wv >= 0) & (wv <= window.shape[0] - 1)
        return MatchSet(
            window_id,
            uv[inside],
            np.column_stack([wu, wv])[inside],
            np.ones(int(inside.sum())),
            matcher=self.name,
            offset=offset,
        )


def _assert_same_pose(a: Pose, b: Pose, tol: float = 1e-6) -> None:
    np.testing.assert_allclose(a.translation, b.translation, atol=tol)
    assert rotation_angle(a.rotation, b.rotation) < tol


class TestMinimalSolvers:
    def test_p3p_contains_the_true_pose(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pose = _random_pose(rng)
            corrs = _scene(pose, 3, rng)
            cam = pose.world_to_camera(corrs.world)
            bearings = cam / np.linalg.norm(cam, axis=1, keepdims=True)
            candidates = solve_p3p(bearings, corrs.world)
            assert 1 <= len(candidates) <= 4
            errors = [np.linalg.norm(c.translation - pose.translation) for c in candidates]
            best = candidates[int(np.argmin(errors))]
            _assert_same_pose(best, pose, 1e-4)

    def test_p3p_collinear_points(self):
        world = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [2.0, 2.0, 0.0]])
        bearings = np.tile([0.0, 0.0, 1.0], (3, 1))
        assert solve_p3p(bearings, world) == []

    def test_dlt_is_exact_without_noise(self):
        rng = np.random.default_rng(1)
        pose = _random_pose(rng)
        _assert_same_pose(dlt_pose(_scene(pose, 10, rng), K), pose)

    def test_dlt_rejects_coplanar_and_small_sets(self):
        rng = np.random.default_rng(2)
        pose = _random_pose(rng)
        corrs = _scene(pose, 5, rng)
        assert dlt_pose(corrs, K) is None
        flat = Correspondence2D3D(rng.uniform(0, 100, (10, 2)), np.column_stack([rng.uniform(0, 10, (10, 2)), np.zeros(10)]))
        assert dlt_pose(flat, K) is None


class TestRefinement:
    def test_converges_from_a_perturbed_start(self):
        rng = np.random.default_rng(3)
        pose = _random_pose(rng)
        corrs = _scene(pose, 50, rng)
        start = Pose(
            Rotation.from_rotvec([0.01, -0.01, 0.005]).as_matrix() @ pose.rotation,
            pose.translation + [0.5, -0.3, 0.4],
        )
        _assert_same_pose(refine_pose(corrs, K, start), pose)

    def test_behind_camera_is_infinite(self):
        pose = nadir_pose(0.0, 0.0, 10.0)
        corrs = Correspondence2D3D([[320.0, 240.0], [320.0, 240.0]], [[0.0, 0.0, 0.0], [0.0, 0.0, 20.0]])
        errors = reprojection_errors(K, pose, corrs)
        assert errors[0] == pytest.approx(0.0)
        assert errors[1] == np.inf


class TestRansac:
    def test_exact_pose_without_noise(self):
        rng = np.random.default_rng(4)
        pose = _random_pose(rng)
        estimate = ransac_pnp(_scene(pose, 30, rng), K)
        assert estimate.ok
        assert len(estimate.inliers) == 30
        assert estimate.mean_reproj_px < 1e-6
        _assert_same_pose(estimate.pose, pose)

    def test_outliers_and_noise(self):
        rng = np.random.default_rng(5)
        errors = []
        for trial in range(100):
            pose = _random_pose(rng)
            corrs = _scene(pose, 200, rng)
            uv = corrs.query_uv + rng.normal(0.0, 0.5, corrs.query_uv.shape)
            outliers = rng.choice(200, 60, replace=False)
            uv[outliers] = np.column_stack([rng.uniform(0, 640, 60), rng.uniform(0, 480, 60)])
            estimate = ransac_pnp(Correspondence2D3D(uv, corrs.world), K, seed=trial)
            errors.append(localization_error(pose, estimate))
        assert np.median(errors) < 0.05
        assert max(errors) < 0.5

    def test_too_few_points(self):
        rng = np.random.default_rng(6)
        estimate = ransac_pnp(_scene(_random_pose(rng), 3, rng), K)
        assert estimate.status is PoseStatus.INSUFFICIENT_MATCHES
        assert estimate.pose is None
        assert not estimate.ok

    def test_collinear_points_are_degenerate(self):
        pose = nadir_pose(0.0, 0.0, 50.0)
        world = np.column_stack([np.linspace(-5, 5, 10), np.zeros(10), np.zeros(10)])
        uv = np.column_stack([320.0 + 20.0 * world[:, 0], np.full(10, 240.0)])
        estimate = ransac_pnp(Correspondence2D3D(uv, world), K, max_iters=50)
        assert estimate.status is PoseStatus.DEGENERATE
        assert reprojection_errors(K, pose, Correspondence2D3D(uv, world)).max() < 1e-9

    def test_same_seed_same_result(self):
        rng = np.random.default_rng(7)
        pose = _random_pose(rng)
        corrs = _scene(pose, 60, rng)
        noisy = Correspondence2D3D(corrs.query_uv + rng.normal(0, 1.0, (60, 2)), corrs.world)
        a = ransac_pnp(noisy, K, seed=11)
        b = ransac_pnp(noisy, K, seed=11)
        assert a.pose == b.pose
        np.testing.assert_array_equal(a.inliers, b.inliers)

    def test_order_of_correspondences_does_not_matter(self):
        rng = np.random.default_rng(8)
        pose = _random_pose(rng)
        corrs = _scene(pose, 120, rng)
        uv = corrs.query_uv + rng.normal(0.0, 0.3, corrs.query_uv.shape)
        uv[:30] += rng.choice([-1.0, 1.0], (30, 2)) * rng.uniform(40.0, 120.0, (30, 2))
        base = ransac_pnp(Correspondence2D3D(uv, corrs.world), K, seed=3)
        assert base.ok
        np.testing.assert_array_equal(np.sort(base.inliers), np.arange(30, 120))
        for _ in range(3):
            order = rng.permutation(120)
            shuffled = ransac_pnp(Correspondence2D3D(uv[order], corrs.world[order]), K, seed=3)
            assert shuffled.ok
            np.testing.assert_array_equal(np.sort(order[shuffled.inliers]), np.sort(base.inliers))
            _assert_same_pose(shuffled.pose, base.pose, 1e-5)

    def test_coplanar_points_use_the_minimal_solver(self):
        rng = np.random.default_rng(9)
        pose = nadir_pose(2.0, -1.0, 40.0)
        world = np.column_stack([rng.uniform(-15, 15, (40, 2)), np.zeros(40)])
        uv = K @ pose.world_to_camera(world).T
        corrs = Correspondence2D3D((uv[:2] / uv[2]).T, world)
        assert dlt_pose(corrs, K) is None
        estimate = ransac_pnp(corrs, K)
        assert estimate.ok
        _assert_same_pose(estimate.pose, pose, 1e-6)


class TestSearchArea:
    def test_centered_area(self):
        area = search_area(_flat_map(), (0.0, 0.0), 20.0)
        assert (area.u0, area.v0, area.width, area.height) == (87, 87, 80, 80)
        assert not area.clipped
        assert area.area_m2 == pytest.approx(400.0)

    def test_clipped_at_the_border(self):
        area = search_area(_flat_map(), (30.0, 0.0), 20.0)
        assert area.clipped
        assert (area.u0, area.width) == (207, 47)
        assert (area.v0, area.height) == (87, 80)

    def test_outside_the_map(self):
        with pytest.raises(OutOfBoundsError):
            search_area(_flat_map(), (100.0, 0.0), 20.0)

    def test_needs_an_orthographic_map(self):
        image = _flat_map()
        image.kind = CameraKind.PERSPECTIVE
        with pytest.raises(UnsupportedError):
            search_area(image, (0.0, 0.0), 20.0)

    def test_windows_cover_the_area(self):
        rects = tile_windows(search_area(_flat_map(), (0.0, 0.0), 40.0), (64, 64), 0.1)
        assert len(rects) == 9
        assert min(r.u0 for r in rects) == 47
        assert max(r.u1 for r in rects) == 47 + 160


class TestBackprojection:
    def test_matches_become_ground_points(self):
        image = _flat_map()
        image.depth[0, 0] = image.depth_nodata
        matches = [
            Match((10.0, 20.0), (35.0, 23.0), 0.9, window_id=0, offset=(100, 100)),
            Match((1.0, 1.0), (0.2, -0.3), 0.8, window_id=0, offset=(0, 0)),
            Match((2.0, 2.0), (300.0, 5.0), 0.7, window_id=0, offset=(0, 0)),
        ]
        corrs, dropped = backproject_matches(matches, image)
        assert dropped == 2
        assert len(corrs) == 1
        # map pixel (135, 123) lies 8 px East and 4 px North of the center
        np.testing.assert_allclose(corrs.world[0], [2.0, 1.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(corrs.query_uv[0], [10.0, 20.0])
        assert corrs.confidence[0] == pytest.approx(0.9)

    def test_no_matches(self):
        corrs, dropped = backproject_matches([], _flat_map())
        assert len(corrs) == 0
        assert dropped == 0

    def test_scale_hint(self):
        assert scale_hint(100.0, QUERY_OPTICS, 0.25) == pytest.approx(1.5625)


class TestLocalize:
    def test_recovers_pose_from_exact_matches(self, small_optics):
        map_image = _flat_map()
        k = intrinsics_matrix(small_optics)
        tilt = Rotation.from_rotvec([0.04, -0.02, 0.3]).as_matrix()
        truth = Pose(tilt @ NADIR_ROTATION, (3.0, -2.0, 15.0))
        matcher = _OracleMatcher(truth, k, map_image)
        estimate = localize(
            np.zeros((48, 64)),
            map_image,
            matcher,
            (3.0, -2.0),
            k,
            side_m=40.0,
            window=(64, 64),
            overlap=0.1,
            threads=2,
            query_id="q00000",
        )
        assert estimate.ok
        _assert_same_pose(estimate.pose, truth, 1e-5)
        diag = estimate.diagnostics
        assert diag.query_id == "q00000"
        assert diag.window_count == 9
        assert diag.raw_matches == diag.filtered_matches == diag.correspondences
        assert diag.inliers == diag.correspondences
        assert diag.status is PoseStatus.OK
        assert set(diag.timings_ms) == {"tile", "match", "filter", "backproject", "pnp", "total"}

    @pytest.mark.parametrize("prior", [(5.0, -4.0), (-2.0, 1.0), (8.0, 3.0)])
    def test_prior_offset_inside_the_area(self, small_optics, prior):
        map_image = _flat_map()
        k = intrinsics_matrix(small_optics)
        tilt = Rotation.from_rotvec([0.04, -0.02, 0.3]).as_matrix()
        truth = Pose(tilt @ NADIR_ROTATION, (3.0, -2.0, 15.0))
        kwargs = {"side_m": 40.0, "window": (64, 64), "overlap": 0.1}
        centered = localize(np.zeros((48, 64)), map_image, _OracleMatcher(truth, k, map_image), (3.0, -2.0), k, **kwargs)
        shifted = localize(np.zeros((48, 64)), map_image, _OracleMatcher(truth, k, map_image), prior, k, **kwargs)
        assert centered.ok
        assert shifted.ok
        _assert_same_pose(shifted.pose, centered.pose, 1e-5)
        _assert_same_pose(shifted.pose, truth, 1e-5)

    def test_windows_without_depth_are_skipped(self, small_optics):
        map_image = _flat_map()
        map_image.depth[:] = map_image.depth_nodata
        k = intrinsics_matrix(small_optics)
        estimate = localize(
            np.zeros((48, 64)),
            map_image,
            _OracleMatcher(nadir_pose(0.0, 0.0, 15.0), k, map_image),
            (0.0, 0.0),
            k,
            side_m=20.0,
            window=(64, 64),
        )
        assert estimate.status is PoseStatus.INSUFFICIENT_MATCHES
        assert estimate.diagnostics.raw_matches == 0

    def test_ransac_settings_are_validated(self):
        with pytest.raises(InvalidParameterError):
            RansacParams(threshold_px=0.0)

    @pytest.mark.slow
    def test_ncc_on_rendered_terrain(self, textured_flat_terrain, small_optics):
        accel = build_accel(textured_flat_terrain)
        settings = RenderSettings(shadow_samples=1)
        sun = SunConfig(180.0, 40.0)
        oi, map_pose = default_map_camera(textured_flat_terrain, pixel_size=0.5, altitude=1000.0)
        map_image = render_ortho(accel, oi, map_pose, sun, settings)
        pose = place_camera(accel, 4.0, -6.0, 12.0)
        query = render_perspective(accel, small_optics, pose, sun, settings)

        estimate = localize(
            query.gray,
            map_image,
            NCCMatcher(grid_step=8),
            (4.0, -6.0),
            intrinsics_matrix(small_optics),
            side_m=40.0,
            window=(96, 96),
            conf_threshold=0.8,
            window_scale=scale_hint(12.0, small_optics, 0.5),
        )
        assert estimate.ok
        assert localization_error(pose, estimate) < 1.0
