from __future__ import annotations

import math

import numpy as np
import pytest

from marsloc.enums import PoseStatus
from marsloc.errors import EmptyInputError, InvalidParameterError
from marsloc.geometry import nadir_pose
from marsloc.metrics import accuracy_at, cdf, localization_error, median_error
from marsloc.models.localization import PoseEstimate


class TestLocalizationError:
    def test_distance_between_positions(self):
        gt = nadir_pose(1.0, 2.0, 100.0)
        est = PoseEstimate(nadir_pose(4.0, 6.0, 100.0), PoseStatus.OK)
        assert localization_error(gt, est) == pytest.approx(5.0)

    @pytest.mark.parametrize("status", [PoseStatus.DEGENERATE, PoseStatus.INSUFFICIENT_MATCHES, PoseStatus.ERROR])
    def test_failures_are_infinite(self, status):
        assert localization_error(nadir_pose(0, 0, 1), PoseEstimate.failure(status)) == math.inf


class TestAccuracy:
    def test_strictly_below_radius(self):
        assert accuracy_at([0.5, 1.0, 0.99, math.inf]) == pytest.approx(0.5)
        assert accuracy_at([0.5, 1.0, 2.0], radius=2.5) == 1.0

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            accuracy_at([])


class TestDistribution:
    def test_grid_and_values(self):
        grid, values = cdf([0.05, 0.5, 3.0, math.inf])
        assert len(grid) == 101
        assert grid[-1] == pytest.approx(10.0)
        assert values[0] == 0.0
        assert values[5] == pytest.approx(0.5)
        assert values[-1] == pytest.approx(0.75)
        assert np.all(np.diff(values) >= 0)

    def test_empty_is_zero(self):
        grid, values = cdf([], max_m=2.0, step=0.5)
        np.testing.assert_allclose(grid, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert not values.any()

    def test_invalid_grid(self):
        with pytest.raises(InvalidParameterError):
            cdf([1.0], step=0.0)


class TestMedian:
    def test_failures_are_counted(self):
        assert median_error([0.2, 0.4, math.inf]) == pytest.approx(0.4)
        assert median_error([0.2, math.inf, math.inf]) == math.inf

    def test_empty_is_nan(self):
        assert math.isnan(median_error([]))
