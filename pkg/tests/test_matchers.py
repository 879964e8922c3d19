from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from marsloc.errors import QueryTooLargeError, ShapeMismatchError, UnknownMatcherError, ZeroVarianceError
from marsloc.matchers import (
    NCCMatcher,
    PhaseMatcher,
    available_matchers,
    filter_matches,
    get_matcher,
    ncc_match,
    normxcorr2_valid,
    phase_correlate,
)
from marsloc.models.matching import MatchSet


def _texture(seed: int, shape: tuple[int, int] = (200, 200), sigma: float = 2.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    image = ndimage.gaussian_filter(rng.standard_normal(shape), sigma)
    return 255 * (image - image.min()) / (image.max() - image.min())


@pytest.fixture(scope="module")
def scene() -> tuple[np.ndarray, np.ndarray]:
    """A textured window and a query cut from it at ``u = 30, v = 40``."""

    window = _texture(0)
    return window[40:88, 30:94].copy(), window


class TestNormalizedCrossCorrelation:
    def test_peak_at_template_origin(self):
        image = _texture(1, (60, 80))
        template = image[17:29, 31:47]
        surface = normxcorr2_valid(template, image)
        assert surface.shape == (49, 65)
        assert np.unravel_index(np.argmax(surface), surface.shape) == (17, 31)
        assert surface[17, 31] == pytest.approx(1.0)

    def test_matches_direct_correlation(self):
        rng = np.random.default_rng(2)
        image = rng.uniform(0, 255, (20, 24))
        template = rng.uniform(0, 255, (5, 6))
        surface = normxcorr2_valid(template, image)
        expected = np.empty((16, 19))
        for r in range(16):
            for c in range(19):
                expected[r, c] = np.corrcoef(template.ravel(), image[r : r + 5, c : c + 6].ravel())[0, 1]
        np.testing.assert_allclose(surface, expected, atol=1e-9)

    def test_constant_template_scores_zero(self):
        surface = normxcorr2_valid(np.full((4, 4), 7.0), _texture(3, (20, 20)))
        assert not surface.any()

    def test_template_larger_than_image(self):
        with pytest.raises(ShapeMismatchError):
            normxcorr2_valid(np.zeros((10, 10)), np.zeros((5, 20)))


class TestPhaseCorrelation:
    def test_integer_shift(self):
        a = _texture(4, (64, 64))
        b = np.roll(a, (3, -5), axis=(0, 1))
        dx, dy, response = phase_correlate(a, b)
        assert dx == pytest.approx(-5.0, abs=1e-6)
        assert dy == pytest.approx(3.0, abs=1e-6)
        assert response == pytest.approx(1.0, abs=1e-2)

    def test_constant_image(self):
        with pytest.raises(ZeroVarianceError):
            phase_correlate(np.ones((8, 8)), _texture(5, (8, 8)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            phase_correlate(np.ones((8, 8)), np.ones((8, 9)))


class TestNCCMatcher:
    def test_recovers_translation(self, scene):
        query, window = scene
        result = ncc_match(query, window, scales=(1.0,), grid_step=8)
        assert result.scale == 1.0
        assert result.translation == pytest.approx((30.0, 40.0), abs=0.2)
        assert len(result) == 24
        np.testing.assert_allclose(result.window_uv - result.query_uv, np.tile([30.0, 40.0], (24, 1)), atol=0.2)
        assert result.confidence.min() > 0.99

    def test_scale_search_prefers_true_scale(self, scene):
        query, window = scene
        result = NCCMatcher(grid_step=8).match(query, window, window_id=7, offset=(100, 200))
        assert result.scale == pytest.approx(1.0)
        assert result.window_id == 7
        for m in result.matches:
            assert m.map_uv == pytest.approx((m.query_uv[0] + 130.0, m.query_uv[1] + 240.0), abs=0.2)

    def test_sorted_by_confidence(self, scene):
        query, window = scene
        result = NCCMatcher(grid_step=8).match(query, window, scale_hint=1.0)
        assert np.all(np.diff(result.confidence) <= 0)

    @pytest.mark.parametrize(("gain", "bias"), [(0.5, 40.0), (2.0, -100.0)])
    def test_invariant_to_window_gain_and_bias(self, scene, gain, bias):
        query, window = scene
        base = ncc_match(query, window, scales=(1.0,), grid_step=8, min_peak=0.0)
        shifted = ncc_match(query, gain * window + bias, scales=(1.0,), grid_step=8, min_peak=0.0)
        assert len(base) == len(shifted) > 0
        a = np.lexsort(base.query_uv.T[::-1])
        b = np.lexsort(shifted.query_uv.T[::-1])
        np.testing.assert_allclose(shifted.query_uv[b], base.query_uv[a])
        np.testing.assert_allclose(shifted.window_uv[b], base.window_uv[a], atol=1e-6)
        np.testing.assert_allclose(shifted.confidence[b], base.confidence[a], atol=1e-9)

    def test_unrelated_noise_yields_nothing(self):
        rng = np.random.default_rng(6)
        result = ncc_match(rng.uniform(0, 255, (48, 64)), rng.uniform(0, 255, (200, 200)), scales=(1.0,))
        assert len(result) == 0

    def test_query_too_large(self):
        with pytest.raises(QueryTooLargeError):
            ncc_match(_texture(7, (300, 300)), _texture(8, (100, 100)), scales=(1.0,), allow_crop=False)


class TestPhaseMatcher:
    def test_recovers_translation(self, scene):
        query, window = scene
        result = PhaseMatcher(grid_step=8).match(query, window, scale_hint=1.0)
        assert result.translation == pytest.approx((30.0, 40.0), abs=0.5)
        np.testing.assert_allclose(result.window_uv - result.query_uv, np.tile([30.0, 40.0], (len(result), 1)), atol=0.5)
        assert len(np.unique(result.confidence)) == 1

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("offset", [(30, 40), (70, 70), (0, 0), (136, 152)])
    def test_recovers_cutouts_anywhere(self, seed, offset):
        window = _texture(seed + 20)
        u0, v0 = offset
        query = window[v0 : v0 + 48, u0 : u0 + 64].copy()
        result = PhaseMatcher(grid_step=8).match(query, window, scale_hint=1.0)
        assert result.translation == pytest.approx(offset, abs=0.25)
        assert result.confidence.min() > 0.9

    def test_scale_search_prefers_true_scale(self, scene):
        query, window = scene
        result = PhaseMatcher(grid_step=8).match(query, window)
        assert result.scale == pytest.approx(1.0)
        assert result.translation == pytest.approx((30.0, 40.0), abs=0.25)

    def test_flat_window_yields_nothing(self, scene):
        query, _ = scene
        assert len(PhaseMatcher().match(query, np.full((100, 100), 9.0))) == 0


class TestFiltering:
    def test_agrees_with_direct_selection(self):
        rng = np.random.default_rng(9)
        sets = []
        for window_id in range(20):
            n = int(rng.integers(0, 1000))
            sets.append(
                MatchSet(
                    window_id,
                    rng.uniform(0, 640, (n, 2)),
                    rng.uniform(0, 1024, (n, 2)),
                    rng.uniform(0, 1, n),
                    matcher="ncc",
                )
            )
        kept = filter_matches(sets, top_k=500, conf_threshold=0.7)

        expected = []
        for match_set in sets:
            order = np.argsort(-match_set.confidence, kind="stable")[:500]
            expected.extend(
                (match_set.window_id, float(match_set.confidence[i]))
                for i in order
                if match_set.confidence[i] >= 0.7
            )
        assert [(m.window_id, m.confidence) for m in kept] == expected

    def test_ties_break_on_query_position(self):
        match_set = MatchSet(0, [[5.0, 1.0], [2.0, 9.0], [2.0, 3.0]], np.zeros((3, 2)), [0.9, 0.9, 0.9], matcher="ncc")
        assert [m.query_uv for m in match_set.matches] == [(2.0, 3.0), (2.0, 9.0), (5.0, 1.0)]

    def test_empty_input(self):
        assert filter_matches([], 500, 0.95) == []


class TestRegistry:
    def test_builtin_matchers(self):
        assert {"ncc", "phase"} <= set(available_matchers())
        assert isinstance(get_matcher("ncc"), NCCMatcher)
        assert isinstance(get_matcher("phase", grid_step=4), PhaseMatcher)
        assert get_matcher("ncc").default_threshold == 0.95

    def test_unknown_matcher(self):
        with pytest.raises(UnknownMatcherError):
            get_matcher("superglue")
