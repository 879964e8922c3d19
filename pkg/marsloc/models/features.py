"""Feature grids and parameters of the gray/depth feature-merge block."""

from __future__ import annotations

from collections.abc import Iterator
import math

import numpy as np
import numpy.typing as npt

from ..enums import AttentionMode
from ..errors import InvalidParameterError, ShapeMismatchError

__all__ = ("AttentionWeights", "FeatureGrid", "MergeGradients", "MergeParams")


class FeatureGrid:
    """A ``(height, width, channels)`` grid of feature vectors.

    Attributes
    ----------
    values: numpy.ndarray
        Finite float32 or float64 array of shape ``(height, width, channels)``.
    """

    __slots__ = ("values",)

    def __init__(self, values: npt.ArrayLike) -> None:
        arr = np.asarray(values)
        if arr.ndim != 3:
            raise ShapeMismatchError(f"feature grid must be (height, width, channels), got shape {arr.shape}")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("feature grid contains non-finite values")
        self.values: np.ndarray = arr

    def __repr__(self) -> str:
        h, w, d = self.values.shape
        return f"<{self.__class__.__name__} height={h} width={w} channels={d}>"

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    def tokens(self) -> np.ndarray:
        """Row-major ``(height * width, channels)`` token matrix."""

        return self.values.reshape(-1, self.channels)

    @classmethod
    def from_tokens(cls, tokens: np.ndarray, height: int, width: int) -> FeatureGrid:
        return cls(np.asarray(tokens).reshape(height, width, -1))


class AttentionWeights:
    """Query, key and value projections of one cross-attention direction.

    Token rows are projected as ``tokens @ w``.
    """

    __slots__ = ("wk", "wq", "wv")

    def __init__(self, wq: np.ndarray, wk: np.ndarray, wv: np.ndarray) -> None:
        self.wq: np.ndarray = np.asarray(wq, dtype=np.float64)
        self.wk: np.ndarray = np.asarray(wk, dtype=np.float64)
        self.wv: np.ndarray = np.asarray(wv, dtype=np.float64)

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} d={self.wq.shape[0]}>"


class MergeParams:
    """Parameters of the merge block.

    The block attends gray features to depth features and depth to gray with
    separate projections, concatenates both outputs per token and feeds them
    through ``x @ w1 + b1``, a ReLU, ``@ w2 + b2`` and a per-token layer
    normalization with ``gamma`` and ``beta``.

    Attributes
    ----------
    gray_to_depth: :class:`AttentionWeights`
        Projections with gray features as queries.
    depth_to_gray: :class:`AttentionWeights`
        Projections with depth features as queries.
    w1: numpy.ndarray
        ``(2d, d)`` first linear layer.
    b1: numpy.ndarray
        ``(d,)`` first bias.
    w2: numpy.ndarray
        ``(d, d)`` second linear layer.
    b2: numpy.ndarray
        ``(d,)`` second bias.
    gamma: numpy.ndarray
        ``(d,)`` normalization scale.
    beta: numpy.ndarray
        ``(d,)`` normalization shift.
    mode: :class:`AttentionMode`
        Softmax or linear attention.
    eps: float
        Normalization epsilon.
    """

    __slots__ = ("b1", "b2", "beta", "depth_to_gray", "eps", "gamma", "gray_to_depth", "mode", "w1", "w2")

    ARRAY_NAMES: tuple[str, ...] = (
        "gray_to_depth.wq",
        "gray_to_depth.wk",
        "gray_to_depth.wv",
        "depth_to_gray.wq",
        "depth_to_gray.wk",
        "depth_to_gray.wv",
        "w1",
        "b1",
        "w2",
        "b2",
        "gamma",
        "beta",
    )

    def __init__(
        self,
        gray_to_depth: AttentionWeights,
        depth_to_gray: AttentionWeights,
        w1: np.ndarray,
        b1: np.ndarray,
        w2: np.ndarray,
        b2: np.ndarray,
        gamma: np.ndarray,
        beta: np.ndarray,
        *,
        mode: AttentionMode = AttentionMode.SOFTMAX,
        eps: float = 1e-6,
    ) -> None:
        self.gray_to_depth: AttentionWeights = gray_to_depth
        self.depth_to_gray: AttentionWeights = depth_to_gray
        self.w1: np.ndarray = np.asarray(w1, dtype=np.float64)
        self.b1: np.ndarray = np.asarray(b1, dtype=np.float64)
        self.w2: np.ndarray = np.asarray(w2, dtype=np.float64)
        self.b2: np.ndarray = np.asarray(b2, dtype=np.float64)
        self.gamma: np.ndarray = np.asarray(gamma, dtype=np.float64)
        self.beta: np.ndarray = np.asarray(beta, dtype=np.float64)
        self.mode: AttentionMode = mode
        self.eps: float = eps
        self._validate()

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} d={self.d} mode={self.mode.value}>"

    def _validate(self) -> None:
        d = self.d
        if d < 1:
            raise InvalidParameterError("feature width must be at least 1")
        if not self.eps > 0 or not math.isfinite(self.eps):
            raise InvalidParameterError(f"normalization epsilon must be positive, got {self.eps}")
        expected = {"w1": (2 * d, d), "b1": (d,), "w2": (d, d), "b2": (d,), "gamma": (d,), "beta": (d,)}
        for weights in (self.gray_to_depth, self.depth_to_gray):
            for name in ("wq", "wk", "wv"):
                if getattr(weights, name).shape != (d, d):
                    raise ShapeMismatchError(f"{name} must be ({d}, {d}), got {getattr(weights, name).shape}")
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeMismatchError(f"{name} must be {shape}, got {getattr(self, name).shape}")

    @property
    def d(self) -> int:
        """int: feature width."""

        return self.gray_to_depth.wq.shape[0]

    def arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        """``(name, array)`` pairs in :attr:`ARRAY_NAMES` order."""

        for name in self.ARRAY_NAMES:
            owner: object = self
            for part in name.split("."):
                owner = getattr(owner, part)
            yield name, owner  # type: ignore[misc]

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], *, mode: AttentionMode, eps: float) -> MergeParams:
        return cls(
            AttentionWeights(arrays["gray_to_depth.wq"], arrays["gray_to_depth.wk"], arrays["gray_to_depth.wv"]),
            AttentionWeights(arrays["depth_to_gray.wq"], arrays["depth_to_gray.wk"], arrays["depth_to_gray.wv"]),
            arrays["w1"],
            arrays["b1"],
            arrays["w2"],
            arrays["b2"],
            arrays["gamma"],
            arrays["beta"],
            mode=mode,
            eps=eps,
        )


class MergeGradients:
    """Reverse-mode gradients of a scalar loss through the merge block.

    Attributes
    ----------
    gray: numpy.ndarray
        Gradient with respect to the gray feature grid.
    depth: numpy.ndarray
        Gradient with respect to the depth feature grid.
    params: dict[str, numpy.ndarray]
        Gradients keyed by :attr:`MergeParams.ARRAY_NAMES`.
    """

    __slots__ = ("depth", "gray", "params")

    def __init__(self, gray: np.ndarray, depth: np.ndarray, params: dict[str, np.ndarray]) -> None:
        self.gray: np.ndarray = gray
        self.depth: np.ndarray = depth
        self.params: dict[str, np.ndarray] = params

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} shape={self.gray.shape} params={len(self.params)}>"
