"""
Reference kernel of the block that merges map gray features with map depth features.

The gray and depth feature grids of one map crop attend to each other in both
directions, the two attention outputs are concatenated per token and a small
feedforward network with layer normalization maps them back to the feature
width::

    merged = G(cross_attention(gray, depth) ++ cross_attention(depth, gray))

Attention is single-headed and uses no positional encoding, so the block is
equivariant to any permutation applied to the tokens of both grids. Every
function here is pure; parameters are plain float64 arrays.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, NamedTuple, cast
import logging
import math
from pathlib import Path

import numpy as np

from .enums import AttentionMode
from .errors import MalformedHeaderError, ShapeMismatchError, SizeMismatchError, UnsupportedError
from .models.features import AttentionWeights, FeatureGrid, MergeGradients, MergeParams
from .utils.formats import sidecar_path
from .utils.json_exporter import JSONExporter, read_json

if TYPE_CHECKING:
    from .internals._types.params import ArrayEntryPayload, ParamDescriptorPayload

__all__ = (
    "cross_attention",
    "elu_feature_map",
    "init_merge_params",
    "load_merge_params",
    "merge_features",
    "merge_grad",
    "save_merge_params",
    "softmax_weights",
)

_log = logging.getLogger(__name__)


def elu_feature_map(x: np.ndarray) -> np.ndarray:
    """``elu(x) + 1``, the positive feature map of linear attention."""

    return np.where(x > 0, x + 1.0, np.exp(np.minimum(x, 0.0)))


def softmax_weights(queries: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Row-stochastic scaled dot-product weights of `queries` over `keys`."""

    logits = queries @ keys.T / math.sqrt(queries.shape[1])
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights


def _linear_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    phi_q = elu_feature_map(q)
    phi_k = elu_feature_map(k)
    kv = phi_k.T @ v
    normalizer = phi_q @ phi_k.sum(axis=0)
    return (phi_q @ kv) / normalizer[:, None]


class _AttentionCache(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    weights: np.ndarray


def _attend(
    x: np.ndarray,
    y: np.ndarray,
    weights: AttentionWeights,
    mode: AttentionMode,
) -> tuple[np.ndarray, _AttentionCache | None]:
    q = x @ weights.wq
    k = y @ weights.wk
    v = y @ weights.wv
    if mode is AttentionMode.LINEAR:
        return _linear_attention(q, k, v), None
    a = softmax_weights(q, k)
    return a @ v, _AttentionCache(x, y, q, k, v, a)


def _attend_backward(
    cache: _AttentionCache,
    weights: AttentionWeights,
    upstream: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    """Gradients with respect to the query tokens, the key/value tokens and the projections."""

    x, y, q, k, v, a = cache
    scale = 1.0 / math.sqrt(q.shape[1])
    d_a = upstream @ v.T
    d_v = a.T @ upstream
    d_logits = a * (d_a - np.sum(d_a * a, axis=1, keepdims=True))
    d_q = d_logits @ k * scale
    d_k = d_logits.T @ q * scale
    d_x = d_q @ weights.wq.T
    d_y = d_k @ weights.wk.T + d_v @ weights.wv.T
    return d_x, d_y, {"wq": x.T @ d_q, "wk": y.T @ d_k, "wv": y.T @ d_v}


def cross_attention(
    fq: FeatureGrid,
    fkv: FeatureGrid,
    weights: AttentionWeights,
    mode: AttentionMode = AttentionMode.SOFTMAX,
) -> FeatureGrid:
    """
    Attend every token of `fq` over all tokens of `fkv`.

    Parameters
    ----------
    fq: :class:`FeatureGrid`
        Grid providing the queries; the output has its spatial shape.
    fkv: :class:`FeatureGrid`
        Grid providing keys and values.
    weights: :class:`AttentionWeights`
        ``d x d`` projections.
    mode: :class:`AttentionMode`
        ``SOFTMAX`` for scaled dot-product attention, ``LINEAR`` for
        kernelized attention with the ``elu + 1`` feature map.

    Returns
    -------
    :class:`FeatureGrid`
        Attention output, float64.

    Raises
    ------
    ShapeMismatchError
        The grids or projections disagree in channel count.
    """
    d = fq.channels
    if fkv.channels != d:
        raise ShapeMismatchError(f"channel mismatch: {d} query channels, {fkv.channels} key/value channels")
    if weights.wq.shape != (d, d) or weights.wk.shape != (d, d) or weights.wv.shape != (d, d):
        raise ShapeMismatchError(f"projections must be ({d}, {d})")
    x = fq.tokens().astype(np.float64, copy=False)
    y = fkv.tokens().astype(np.float64, copy=False)
    out, _ = _attend(x, y, weights, mode)
    return FeatureGrid.from_tokens(out, fq.height, fq.width)


class _MergeCache(NamedTuple):
    gray: _AttentionCache | None
    depth: _AttentionCache | None
    concat: np.ndarray
    hidden_pre: np.ndarray
    hidden: np.ndarray
    normalized: np.ndarray
    inv_std: np.ndarray


def _merge_forward(gray: FeatureGrid, depth: FeatureGrid, params: MergeParams) -> tuple[np.ndarray, _MergeCache]:
    if gray.shape != depth.shape:
        raise ShapeMismatchError(f"gray grid {gray.shape} and depth grid {depth.shape} must share a shape")
    if gray.channels != params.d:
        raise ShapeMismatchError(f"grids have {gray.channels} channels, parameters expect {params.d}")
    xb = gray.tokens().astype(np.float64, copy=False)
    xc = depth.tokens().astype(np.float64, copy=False)
    out_b, cache_b = _attend(xb, xc, params.gray_to_depth, params.mode)
    out_c, cache_c = _attend(xc, xb, params.depth_to_gray, params.mode)
    concat = np.concatenate([out_b, out_c], axis=1)
    hidden_pre = concat @ params.w1 + params.b1
    hidden = np.maximum(hidden_pre, 0.0)
    pre_norm = hidden @ params.w2 + params.b2
    centered = pre_norm - pre_norm.mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(np.mean(centered * centered, axis=1, keepdims=True) + params.eps)
    normalized = centered * inv_std
    out = normalized * params.gamma + params.beta
    return out, _MergeCache(cache_b, cache_c, concat, hidden_pre, hidden, normalized, inv_std)


def merge_features(gray: FeatureGrid, depth: FeatureGrid, params: MergeParams) -> FeatureGrid:
    """
    Merge gray features with depth features of the same map crop.

    Parameters
    ----------
    gray: :class:`FeatureGrid`
        Gray-image features.
    depth: :class:`FeatureGrid`
        Depth-image features, same shape as `gray`.
    params: :class:`MergeParams`
        Block parameters.

    Returns
    -------
    :class:`FeatureGrid`
        Merged features with the shape of `gray`.
    """
    out, _ = _merge_forward(gray, depth, params)
    return FeatureGrid.from_tokens(out, gray.height, gray.width)


def merge_grad(
    gray: FeatureGrid,
    depth: FeatureGrid,
    params: MergeParams,
    upstream: np.ndarray,
) -> MergeGradients:
    """
    Gradients of ``sum(upstream * merge_features(gray, depth, params))``.

    Parameters
    ----------
    gray: :class:`FeatureGrid`
        Gray-image features.
    depth: :class:`FeatureGrid`
        Depth-image features.
    params: :class:`MergeParams`
        Block parameters, softmax mode.
    upstream: numpy.ndarray
        Gradient of the loss with respect to the merged grid.

    Returns
    -------
    :class:`MergeGradients`
        Gradients for both grids and every parameter array.

    Raises
    ------
    UnsupportedError
        The parameters use linear attention.
    """
    if params.mode is not AttentionMode.SOFTMAX:
        raise UnsupportedError("analytic gradients are implemented for softmax attention only")
    _, cache = _merge_forward(gray, depth, params)
    g = np.asarray(upstream, dtype=np.float64).reshape(-1, params.d)
    if g.shape[0] != gray.height * gray.width:
        raise ShapeMismatchError(f"upstream gradient has shape {np.shape(upstream)}, expected {gray.shape}")
    d = params.d

    d_gamma = np.sum(g * cache.normalized, axis=0)
    d_beta = g.sum(axis=0)
    d_norm = g * params.gamma
    d_pre_norm = cache.inv_std * (
        d_norm
        - d_norm.mean(axis=1, keepdims=True)
        - cache.normalized * np.mean(d_norm * cache.normalized, axis=1, keepdims=True)
    )
    d_w2 = cache.hidden.T @ d_pre_norm
    d_b2 = d_pre_norm.sum(axis=0)
    d_hidden_pre = (d_pre_norm @ params.w2.T) * (cache.hidden_pre > 0)
    d_w1 = cache.concat.T @ d_hidden_pre
    d_b1 = d_hidden_pre.sum(axis=0)
    d_concat = d_hidden_pre @ params.w1.T

    assert cache.gray is not None and cache.depth is not None
    dxb_q, dxc_kv, grads_b = _attend_backward(cache.gray, params.gray_to_depth, d_concat[:, :d])
    dxc_q, dxb_kv, grads_c = _attend_backward(cache.depth, params.depth_to_gray, d_concat[:, d:])

    grads: dict[str, np.ndarray] = {f"gray_to_depth.{k}": v for k, v in grads_b.items()}
    grads |= {f"depth_to_gray.{k}": v for k, v in grads_c.items()}
    grads |= {"w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2, "gamma": d_gamma, "beta": d_beta}
    return MergeGradients(
        (dxb_q + dxb_kv).reshape(gray.shape),
        (dxc_q + dxc_kv).reshape(depth.shape),
        {name: grads[name] for name in MergeParams.ARRAY_NAMES},
    )


def init_merge_params(
    d: int,
    seed: int = 0,
    *,
    mode: AttentionMode = AttentionMode.SOFTMAX,
    eps: float = 1e-6,
) -> MergeParams:
    """
    Seeded parameters: matrices and biases uniform in ``[-1/sqrt(d), 1/sqrt(d)]``, ``gamma = 1``, ``beta = 0``.
    """
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(d)

    def uniform(*shape: int) -> np.ndarray:
        return rng.uniform(-bound, bound, size=shape)

    return MergeParams(
        AttentionWeights(uniform(d, d), uniform(d, d), uniform(d, d)),
        AttentionWeights(uniform(d, d), uniform(d, d), uniform(d, d)),
        uniform(2 * d, d),
        uniform(d),
        uniform(d, d),
        uniform(d),
        np.ones(d),
        np.zeros(d),
        mode=mode,
        eps=eps,
    )


def save_merge_params(params: MergeParams, path: Path) -> None:
    """
    Write every parameter array as one little-endian float64 blob at `path`
    with a JSON shape descriptor at ``<path>.json``.
    """
    entries: list[ArrayEntryPayload] = []
    chunks: list[bytes] = []
    offset = 0
    for name, arr in params.arrays():
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        offset += arr.size
    descriptor: ParamDescriptorPayload = {
        "dtype": "float64",
        "byteorder": "little",
        "d": params.d,
        "mode": params.mode.value,
        "eps": params.eps,
        "arrays": entries,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))
    JSONExporter().write_document(sidecar_path(path), descriptor)
    _log.debug("saved %d parameter arrays to %s", len(entries), path)


def load_merge_params(path: Path) -> MergeParams:
    """
    Read parameters written by :func:`save_merge_params`.

    Raises
    ------
    MalformedHeaderError
        The descriptor is missing or inconsistent.
    SizeMismatchError
        The blob length disagrees with the descriptor.
    """
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise MalformedHeaderError(f"{path.name}: missing descriptor {meta_path.name}")
    descriptor = cast("ParamDescriptorPayload", read_json(meta_path))
    if descriptor.get("dtype") != "float64" or descriptor.get("byteorder") != "little":
        raise MalformedHeaderError(f"{meta_path.name}: only little-endian float64 blobs are supported")
    try:
        mode = AttentionMode(descriptor["mode"])
        entries = descriptor["arrays"]
        eps = float(descriptor["eps"])
    except (KeyError, ValueError) as exc:
        raise MalformedHeaderError(f"{meta_path.name}: {exc}") from exc

    blob = np.frombuffer(path.read_bytes(), dtype="<f8")
    total = sum(math.prod(e["shape"]) for e in entries)
    if blob.size != total:
        raise SizeMismatchError(f"{path.name}: descriptor declares {total} values, blob holds {blob.size}")
    arrays = {
        e["name"]: blob[e["offset"] : e["offset"] + math.prod(e["shape"])].reshape(e["shape"]).astype(np.float64)
        for e in entries
    }
    missing = set(MergeParams.ARRAY_NAMES) - arrays.keys()
    if missing:
        raise MalformedHeaderError(f"{meta_path.name}: missing arrays {', '.join(sorted(missing))}")
    return MergeParams.from_arrays(arrays, mode=mode, eps=eps)
