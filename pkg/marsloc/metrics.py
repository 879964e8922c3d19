"""Localization error statistics."""

from __future__ import annotations

from typing import TYPE_CHECKING
from collections.abc import Sequence
import math

import numpy as np
import numpy.typing as npt

from .errors import EmptyInputError, InvalidParameterError

if TYPE_CHECKING:
    from .models.camera import Pose
    from .models.localization import PoseEstimate

__all__ = ("accuracy_at", "cdf", "localization_error", "median_error")


def localization_error(gt: Pose, est: PoseEstimate) -> float:
    """
    Euclidean distance between true and estimated camera positions, in meters.

    Failed estimates have an infinite error.
    """
    if not est.ok or est.pose is None:
        return math.inf
    return float(np.linalg.norm(gt.translation - est.pose.translation))


def accuracy_at(errors: Sequence[float] | npt.ArrayLike, radius: float = 1.0) -> float:
    """
    Fraction of errors strictly below `radius`; infinite errors count as misses.

    Raises
    ------
    EmptyInputError
        `errors` is empty.
    """
    e = np.asarray(errors, dtype=np.float64).reshape(-1)
    if e.size == 0:
        raise EmptyInputError("accuracy of an empty error list")
    return float(np.count_nonzero(e < radius)) / e.size


def cdf(
    errors: Sequence[float] | npt.ArrayLike,
    max_m: float = 10.0,
    step: float = 0.1,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Empirical distribution of errors on ``0, step, ..., max_m``.

    Parameters
    ----------
    errors: Sequence[float] | numpy.typing.ArrayLike
        Errors in meters; ``inf`` marks a failure.
    max_m: float
        Last grid point.
    step: float
        Grid spacing.

    Returns
    -------
    tuple[numpy.ndarray, numpy.ndarray]
        Grid points and ``F(x) = |{e <= x}| / N``; all zeros for no errors.
    """
    if step <= 0 or max_m < 0:
        raise InvalidParameterError(f"invalid CDF grid (max {max_m}, step {step})")
    grid = np.linspace(0.0, max_m, round(max_m / step) + 1)
    e = np.sort(np.asarray(errors, dtype=np.float64).reshape(-1))
    if e.size == 0:
        return grid, np.zeros_like(grid)
    return grid, np.searchsorted(e, grid, side="right") / e.size


def median_error(errors: Sequence[float] | npt.ArrayLike) -> float:
    """Median with failures included as ``inf``; ``nan`` for no errors."""

    e = np.asarray(errors, dtype=np.float64).reshape(-1)
    if e.size == 0:
        return math.nan
    return float(np.median(e))
