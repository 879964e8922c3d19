from __future__ import annotations

import itertools

import numpy as np
import pytest

from marsloc.dataset import (
    QUERY_OPTICS,
    build_triplets,
    crop_window,
    footprint,
    make_dataset,
    map_windows,
    normalize_depth,
    overlap_fraction,
    render_queries,
    sample_queries,
    tile_rects,
    window_ground_rect,
)
from marsloc.enums import OverlapReference
from marsloc.errors import (
    AllNodataError,
    FootprintMarginError,
    InvalidParameterError,
    MissingMapError,
    OutOfBoundsError,
    PlacementError,
)
from marsloc.models.camera import PerspectiveIntrinsics
from marsloc.models.dataset import GroundRect, QuerySpec, WindowRect
from marsloc.models.image import RenderSettings
from marsloc.models.sun import SunConfig
from marsloc.render import default_map_camera, render_ortho
from marsloc.terrain import build_accel
from marsloc.utils.json_exporter import read_json_lines

SMALL_OPTICS = PerspectiveIntrinsics(32.0, 80.0, 64, 48)


@pytest.fixture(scope="module")
def flat_maps(textured_flat_terrain):
    accel = build_accel(textured_flat_terrain)
    oi, pose = default_map_camera(textured_flat_terrain, pixel_size=0.5, altitude=1000.0)
    settings = RenderSettings(shadow_samples=1)
    return {
        lighting: render_ortho(accel, oi, pose, SunConfig(*lighting), settings)
        for lighting in [(180.0, 40.0), (90.0, 30.0)]
    }


@pytest.fixture(scope="module")
def placed_queries(textured_flat_terrain):
    accel = build_accel(textured_flat_terrain)
    queries = sample_queries(textured_flat_terrain, 3, (15.0, 25.0), seed=4, intrinsics=SMALL_OPTICS)
    return render_queries(accel, queries, RenderSettings(shadow_samples=1))


class TestQuerySampling:
    def test_deterministic(self, rough_terrain):
        a = sample_queries(rough_terrain, 5, (10.0, 20.0), seed=9, intrinsics=QUERY_OPTICS)
        b = sample_queries(rough_terrain, 5, (10.0, 20.0), seed=9, intrinsics=QUERY_OPTICS)
        assert [q.to_payload() for q in a] == [q.to_payload() for q in b]
        assert [q.id for q in a] == ["q00000", "q00001", "q00002", "q00003", "q00004"]

    def test_footprints_stay_on_the_terrain(self, rough_terrain):
        xmin, xmax, ymin, ymax = rough_terrain.extent
        for query in sample_queries(rough_terrain, 50, (10.0, 40.0), seed=1):
            assert 10.0 <= query.altitude_agl <= 40.0
            fp = footprint(query)
            assert xmin <= fp.xmin and fp.xmax <= xmax
            assert ymin <= fp.ymin and fp.ymax <= ymax

    def test_default_lighting(self, rough_terrain):
        (query,) = sample_queries(rough_terrain, 1, (10.0, 20.0))
        assert query.sun.angles == (180.0, 40.0)

    def test_terrain_too_small(self, flat_terrain):
        with pytest.raises(FootprintMarginError):
            sample_queries(flat_terrain, 1, (64.0, 200.0))

    def test_rejects_bad_arguments(self, flat_terrain):
        with pytest.raises(InvalidParameterError):
            sample_queries(flat_terrain, 0, (1.0, 2.0))
        with pytest.raises(InvalidParameterError):
            sample_queries(flat_terrain, 1, (3.0, 2.0))


class TestFootprint:
    def test_size_from_optics(self):
        query = QuerySpec("q", 10.0, -5.0, 100.0, SunConfig(180.0, 40.0), QUERY_OPTICS)
        fp = footprint(query)
        assert fp.width == pytest.approx(250.0)
        assert fp.height == pytest.approx(187.5)
        assert fp.center == pytest.approx((10.0, -5.0))

    @pytest.mark.parametrize(
        ("rect", "reference", "expected"),
        [
            (GroundRect(5.0, 15.0, 0.0, 10.0), OverlapReference.QUERY, 0.5),
            (GroundRect(0.0, 20.0, 0.0, 10.0), OverlapReference.QUERY, 1.0),
            (GroundRect(0.0, 20.0, 0.0, 10.0), OverlapReference.WINDOW, 0.5),
            (GroundRect(20.0, 30.0, 0.0, 10.0), OverlapReference.QUERY, 0.0),
        ],
    )
    def test_overlap_fraction(self, rect, reference, expected):
        fp = GroundRect(0.0, 10.0, 0.0, 10.0)
        assert overlap_fraction(fp, rect, reference) == pytest.approx(expected)


class TestTiling:
    def test_reference_map_is_covered_with_overlap(self):
        rects = tile_rects(0, 0, 4000, 4000, (1024, 768), 0.1)
        covered = np.zeros((4000, 4000), dtype=bool)
        for rect in rects:
            assert 0 <= rect.u0 and rect.u1 <= 4000 and 0 <= rect.v0 and rect.v1 <= 4000
            assert (rect.width, rect.height) == (1024, 768)
            covered[rect.slices] = True
        assert covered.all()

        for starts, size in (
            (sorted({r.u0 for r in rects}), 1024),
            (sorted({r.v0 for r in rects}), 768),
        ):
            assert starts[0] == 0
            assert starts[-1] + size == 4000
            for a, b in itertools.pairwise(starts):
                assert (size - (b - a)) / size >= 0.1

    def test_identifiers_are_row_major(self):
        rects = tile_rects(10, 20, 3000, 2000, (1024, 768), 0.1, first_id=5)
        assert [r.id for r in rects] == list(range(5, 5 + len(rects)))
        assert rects[0].u0 == 10 and rects[0].v0 == 20
        assert rects[1].v0 == 20 and rects[1].u0 > 10

    def test_small_area_gets_one_clipped_window(self):
        assert tile_rects(0, 0, 100, 50, (1024, 768), 0.1) == [WindowRect(0, 0, 0, 100, 50)]

    @pytest.mark.parametrize("overlap", [-0.1, 1.0])
    def test_rejects_bad_overlap(self, overlap):
        with pytest.raises(InvalidParameterError):
            tile_rects(0, 0, 100, 100, (10, 10), overlap)


class TestWindows:
    def test_normalize_depth(self):
        depth = np.array([[10.0, 20.0], [-1.0, 40.0]], dtype=np.float32)
        out = normalize_depth(depth, -1.0)
        np.testing.assert_array_equal(out, np.array([[0.25, 0.5], [-1.0, 1.0]], dtype=np.float32))

    def test_normalize_is_idempotent(self):
        rng = np.random.default_rng(3)
        depth = rng.uniform(100.0, 5000.0, (40, 50)).astype(np.float32)
        depth[rng.random((40, 50)) < 0.2] = -1.0
        once = normalize_depth(depth, -1.0)
        np.testing.assert_array_equal(normalize_depth(once, -1.0), once)
        np.testing.assert_array_equal(once == -1.0, depth == -1.0)

    def test_crop_depth_is_normalized_once(self, flat_maps):
        window = crop_window(flat_maps[(180.0, 40.0)], WindowRect(0, 5, 7, 48, 40))
        np.testing.assert_array_equal(window.depth_norm, normalize_depth(window.depth, window.depth_nodata))
        np.testing.assert_array_equal(normalize_depth(window.depth_norm, window.depth_nodata), window.depth_norm)

    def test_normalize_all_nodata(self):
        with pytest.raises(AllNodataError):
            normalize_depth(np.full((3, 3), -1.0, dtype=np.float32), -1.0)

    def test_crop_window(self, flat_maps):
        image = flat_maps[(180.0, 40.0)]
        rect = WindowRect(3, 10, 20, 64, 32)
        window = crop_window(image, rect)
        assert window.gray.shape == (32, 64)
        np.testing.assert_array_equal(window.gray, image.gray[20:52, 10:74])
        assert window.depth_norm.max() == 1.0
        assert window.offset == (10, 20)
        assert window.id == 3

    def test_crop_outside_map(self, flat_maps):
        image = flat_maps[(180.0, 40.0)]
        with pytest.raises(OutOfBoundsError):
            crop_window(image, WindowRect(0, image.width - 10, 0, 64, 32))

    def test_ground_rect_of_whole_map(self, flat_maps):
        image = flat_maps[(180.0, 40.0)]
        ground = window_ground_rect(image, WindowRect(0, 0, 0, image.width, image.height))
        half_w = image.width * 0.5 / 2
        half_h = image.height * 0.5 / 2
        assert (ground.xmin, ground.xmax) == pytest.approx((-half_w - 0.25, half_w - 0.25))
        assert (ground.ymin, ground.ymax) == pytest.approx((-half_h + 0.25, half_h + 0.25))


class TestTriplets:
    def test_overlap_threshold_and_order(self, flat_maps, placed_queries):
        windows = map_windows(flat_maps[(180.0, 40.0)], (64, 64), 0.1)
        queries = [q for q, _ in placed_queries]
        triplets = build_triplets(queries, flat_maps, windows, min_overlap=0.05)
        assert triplets
        assert len(triplets) % len(flat_maps) == 0
        assert all(t.overlap >= 0.05 for t in triplets)
        assert [t.triplet_id for t in triplets] == [f"t{i:07d}" for i in range(len(triplets))]
        # lighting cycles fastest
        assert [t.map_sun.angles for t in triplets[:2]] == [(180.0, 40.0), (90.0, 30.0)]
        order = [(queries.index(t.query), t.window.id) for t in triplets]
        assert order == sorted(order)

    def test_every_qualifying_pair_appears(self, flat_maps, placed_queries):
        windows = map_windows(flat_maps[(180.0, 40.0)], (64, 64), 0.1)
        queries = [q for q, _ in placed_queries]
        triplets = build_triplets(queries, flat_maps, windows, min_overlap=0.05)
        reference = flat_maps[(180.0, 40.0)]
        expected = {
            (q.id, w.id)
            for q in queries
            for w in windows
            if overlap_fraction(footprint(q), window_ground_rect(reference, w)) >= 0.05
        }
        assert {(t.query.id, t.window.id) for t in triplets} == expected

    def test_delta_angles(self, flat_maps, placed_queries):
        windows = map_windows(flat_maps[(180.0, 40.0)], (64, 64), 0.1)
        triplets = build_triplets([placed_queries[0][0]], flat_maps, windows, min_overlap=0.05)
        deltas = {(t.delta_az, t.delta_el) for t in triplets}
        assert deltas == {(0.0, 0.0), (-90.0, -10.0)}

    def test_missing_lighting(self, flat_maps, placed_queries):
        windows = map_windows(flat_maps[(180.0, 40.0)], (64, 64), 0.1)
        with pytest.raises(MissingMapError):
            build_triplets([placed_queries[0][0]], flat_maps, windows, [(0.0, 90.0)])

    def test_unplaced_query(self, flat_maps):
        windows = map_windows(flat_maps[(180.0, 40.0)], (64, 64), 0.1)
        query = QuerySpec("q", 0.0, 0.0, 20.0, SunConfig(180.0, 40.0), QUERY_OPTICS)
        with pytest.raises(PlacementError):
            build_triplets([query], flat_maps, windows)


class TestMakeDataset:
    def test_writes_manifest_and_files(self, flat_maps, placed_queries, tmp_path):
        manifest = make_dataset(
            tmp_path,
            placed_queries,
            flat_maps,
            window=(64, 64),
            window_overlap=0.1,
            min_overlap=0.05,
            threads=2,
        )
        rows = read_json_lines(manifest)
        assert rows
        for row in rows:
            assert (tmp_path / row["query_image"]).exists()
            assert (tmp_path / row["window_gray"]).exists()
            assert (tmp_path / row["window_depth_norm"]).exists()

    def test_manifest_is_reproducible(self, flat_maps, placed_queries, tmp_path):
        first = make_dataset(tmp_path / "a", placed_queries, flat_maps, window=(64, 64), min_overlap=0.05)
        second = make_dataset(tmp_path / "b", placed_queries, flat_maps, window=(64, 64), min_overlap=0.05, threads=3)
        assert first.read_bytes() == second.read_bytes()
