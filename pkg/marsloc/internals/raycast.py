"""Numba kernels for heightfield ray casting, shadow sampling and shading.

Every kernel takes the terrain arguments produced by
:meth:`marsloc.models.TerrainAccel.kernel_args` first, in this order::

    heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
    texture, tex_x0, tex_y0, tex_spacing, tex_scale

Each cell ``(i, j)`` is split along its south-west to north-east diagonal into
triangle 0 ``(SW, SE, NE)`` and triangle 1 ``(SW, NE, NW)``. Ties between equal
ray parameters go to the smaller ``(row, col, triangle)`` key, so the pyramid
traversal and the exhaustive loop report the same hit.
"""

from __future__ import annotations

import math

from numba import njit, prange
import numpy as np

__all__ = (
    "KIND_ORTHO",
    "KIND_PERSPECTIVE",
    "render_kernel",
    "shade_value",
    "surface_albedo",
    "surface_normal",
    "trace_ray",
    "trace_rays",
    "visibility_at",
)

KIND_ORTHO = 0
KIND_PERSPECTIVE = 1

_PARALLEL_EPS = 1e-14
_BOX_PAD = 1e-7

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _SHIFT30)) * _MIX1
    z = (z ^ (z >> _SHIFT27)) * _MIX2
    return z ^ (z >> _SHIFT31)


@njit(cache=True)
def _uniform(seed, stream, counter):
    # counter-based: the value depends only on (seed, stream, counter)
    h = _mix64(np.uint64(seed) + _GOLDEN)
    h = _mix64(h ^ (np.uint64(stream) + _GOLDEN))
    h = _mix64(h ^ (np.uint64(counter) + _GOLDEN))
    return np.float64(h >> _SHIFT11) * _INV_2_53


@njit(cache=True)
def _triangle(ox, oy, oz, dx, dy, dz, ax, ay, az, bx, by, bz, cx, cy, cz):
    e1x = bx - ax
    e1y = by - ay
    e1z = bz - az
    e2x = cx - ax
    e2y = cy - ay
    e2z = cz - az
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < _PARALLEL_EPS:
        return math.inf
    inv = 1.0 / det
    sx = ox - ax
    sy = oy - ay
    sz = oz - az
    u = (sx * px + sy * py + sz * pz) * inv
    if u < 0.0 or u > 1.0:
        return math.inf
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return math.inf
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t < 0.0:
        return math.inf
    return t


@njit(cache=True)
def _cell_hit(heights, i, j, x0, y0, spacing, ox, oy, oz, dx, dy, dz):
    h00 = heights[i, j]
    h01 = heights[i, j + 1]
    h10 = heights[i + 1, j]
    h11 = heights[i + 1, j + 1]
    if math.isnan(h00) or math.isnan(h01) or math.isnan(h10) or math.isnan(h11):
        return math.inf, -1
    xw = x0 + j * spacing
    xe = x0 + (j + 1) * spacing
    yn = y0 - i * spacing
    ys = y0 - (i + 1) * spacing
    t0 = _triangle(ox, oy, oz, dx, dy, dz, xw, ys, h10, xe, ys, h11, xe, yn, h01)
    t1 = _triangle(ox, oy, oz, dx, dy, dz, xw, ys, h10, xe, yn, h01, xw, yn, h00)
    if t1 < t0:
        return t1, 1
    if t0 < math.inf:
        return t0, 0
    return math.inf, -1


@njit(cache=True)
def _better(t, i, j, tri, bt, bi, bj, btri):
    if t < bt:
        return True
    if t > bt or t == math.inf:
        return False
    if i != bi:
        return i < bi
    if j != bj:
        return j < bj
    return tri < btri


@njit(cache=True)
def _slab(ox, oy, oz, dx, dy, dz, xlo, xhi, ylo, yhi, zlo, zhi):
    """Entry parameter of the ray into a box, or -1.0 when it misses."""
    tnear = 0.0
    tfar = math.inf
    for axis in range(3):
        if axis == 0:
            o, d, lo, hi = ox, dx, xlo, xhi
        elif axis == 1:
            o, d, lo, hi = oy, dy, ylo, yhi
        else:
            o, d, lo, hi = oz, dz, zlo, zhi
        if d == 0.0:
            if o < lo or o > hi:
                return -1.0
            continue
        t1 = (lo - o) / d
        t2 = (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        tnear = max(tnear, t1)
        tfar = min(tfar, t2)
        if tnear > tfar:
            return -1.0
    return tnear


@njit(cache=True)
def _trace(
    heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
    ox, oy, oz, dx, dy, dz, any_hit, stack,
):  # fmt: skip
    best_t = math.inf
    best_i = -1
    best_j = -1
    best_tri = -1
    n_rows = heights.shape[0] - 1
    n_cols = heights.shape[1] - 1

    if exhaustive:
        for i in range(n_rows):
            for j in range(n_cols):
                t, tri = _cell_hit(heights, i, j, x0, y0, spacing, ox, oy, oz, dx, dy, dz)
                if _better(t, i, j, tri, best_t, best_i, best_j, best_tri):
                    best_t, best_i, best_j, best_tri = t, i, j, tri
                    if any_hit:
                        return best_t, best_i, best_j, best_tri
        return best_t, best_i, best_j, best_tri

    pad_xy = _BOX_PAD * spacing
    top = level_shapes.shape[0] - 1
    size = 1
    stack[0, 0] = top
    stack[0, 1] = 0
    stack[0, 2] = 0
    while size > 0:
        size -= 1
        level = stack[size, 0]
        r = stack[size, 1]
        c = stack[size, 2]
        idx = level_offsets[level] + r * level_shapes[level, 1] + c
        lo = zmin[idx]
        hi = zmax[idx]
        if lo > hi:
            continue
        block = 1 << level
        r0 = r * block
        c0 = c * block
        r1 = min(r0 + block, n_rows)
        c1 = min(c0 + block, n_cols)
        pad_z = _BOX_PAD * (1.0 + max(abs(lo), abs(hi)))
        tn = _slab(
            ox, oy, oz, dx, dy, dz,
            x0 + c0 * spacing - pad_xy, x0 + c1 * spacing + pad_xy,
            y0 - r1 * spacing - pad_xy, y0 - r0 * spacing + pad_xy,
            lo - pad_z, hi + pad_z,
        )  # fmt: skip
        if tn < 0.0 or tn > best_t:
            continue
        if level == 0:
            t, tri = _cell_hit(heights, r, c, x0, y0, spacing, ox, oy, oz, dx, dy, dz)
            if _better(t, r, c, tri, best_t, best_i, best_j, best_tri):
                best_t, best_i, best_j, best_tri = t, r, c, tri
                if any_hit:
                    return best_t, best_i, best_j, best_tri
            continue
        child_rows = level_shapes[level - 1, 0]
        child_cols = level_shapes[level - 1, 1]
        for dr in range(2):
            cr = 2 * r + dr
            if cr >= child_rows:
                continue
            for dc in range(2):
                cc = 2 * c + dc
                if cc >= child_cols:
                    continue
                stack[size, 0] = level - 1
                stack[size, 1] = cr
                stack[size, 2] = cc
                size += 1
    return best_t, best_i, best_j, best_tri


@njit(cache=True)
def _new_stack(level_shapes):
    return np.empty((4 * level_shapes.shape[0] + 4, 3), dtype=np.int64)


@njit(cache=True)
def surface_normal(heights, x0, y0, spacing, i, j, px, py):
    """Unit normal of the bilinear patch of cell ``(i, j)`` at ``(px, py)``."""
    fx = min(max((px - (x0 + j * spacing)) / spacing, 0.0), 1.0)
    fy = min(max(((y0 - i * spacing) - py) / spacing, 0.0), 1.0)
    h00 = heights[i, j]
    h01 = heights[i, j + 1]
    h10 = heights[i + 1, j]
    h11 = heights[i + 1, j + 1]
    dzdx = ((h01 - h00) * (1.0 - fy) + (h11 - h10) * fy) / spacing
    dzdrow = (h10 - h00) * (1.0 - fx) + (h11 - h01) * fx
    dzdy = -dzdrow / spacing
    norm = math.sqrt(dzdx * dzdx + dzdy * dzdy + 1.0)
    return -dzdx / norm, -dzdy / norm, 1.0 / norm


@njit(cache=True)
def surface_albedo(texture, tex_x0, tex_y0, tex_spacing, tex_scale, px, py):
    rows = texture.shape[0]
    cols = texture.shape[1]
    cf = min(max((px - tex_x0) / tex_spacing, 0.0), cols - 1.0)
    rf = min(max((tex_y0 - py) / tex_spacing, 0.0), rows - 1.0)
    j = min(int(math.floor(cf)), cols - 2)
    i = min(int(math.floor(rf)), rows - 2)
    fx = cf - j
    fy = rf - i
    a = (
        (1.0 - fx) * (1.0 - fy) * np.float64(texture[i, j])
        + fx * (1.0 - fy) * np.float64(texture[i, j + 1])
        + (1.0 - fx) * fy * np.float64(texture[i + 1, j])
        + fx * fy * np.float64(texture[i + 1, j + 1])
    )
    return a / tex_scale


@njit(cache=True)
def _visibility(
    heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
    px, py, pz, sx, sy, sz, half_angle, samples, seed, stream, stack,
):  # fmt: skip
    if half_angle <= 0.0:
        _, i, _, _ = _trace(
            heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
            px, py, pz, sx, sy, sz, True, stack,
        )  # fmt: skip
        return 0.0 if i >= 0 else 1.0

    # orthonormal basis around the sun direction
    if abs(sx) < 0.9:
        ax, ay, az = 1.0, 0.0, 0.0
    else:
        ax, ay, az = 0.0, 1.0, 0.0
    e1x = ay * sz - az * sy
    e1y = az * sx - ax * sz
    e1z = ax * sy - ay * sx
    n1 = math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
    e1x /= n1
    e1y /= n1
    e1z /= n1
    e2x = sy * e1z - sz * e1y
    e2y = sz * e1x - sx * e1z
    e2z = sx * e1y - sy * e1x

    visible = 0
    for k in range(samples):
        # stratified in radius, uniform over the disk area
        u1 = (k + _uniform(seed, stream, 2 * k)) / samples
        phi = 2.0 * math.pi * _uniform(seed, stream, 2 * k + 1)
        theta = half_angle * math.sqrt(u1)
        st = math.sin(theta)
        ct = math.cos(theta)
        cp = math.cos(phi)
        sp = math.sin(phi)
        rx = ct * sx + st * (cp * e1x + sp * e2x)
        ry = ct * sy + st * (cp * e1y + sp * e2y)
        rz = ct * sz + st * (cp * e1z + sp * e2z)
        _, i, _, _ = _trace(
            heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
            px, py, pz, rx, ry, rz, True, stack,
        )  # fmt: skip
        if i < 0:
            visible += 1
    return visible / samples


@njit(cache=True)
def shade_value(albedo, nx, ny, nz, sx, sy, sz, irradiance, visibility, exposure):
    """Lambertian gray level in ``[0, 255]``."""
    cosine = max(0.0, nx * sx + ny * sy + nz * sz)
    radiance = irradiance * albedo * cosine * visibility / math.pi
    level = math.floor(255.0 * min(1.0, exposure * radiance) + 0.5)
    return int(min(max(level, 0.0), 255.0))


@njit(cache=True)
def trace_ray(heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive, ox, oy, oz, dx, dy, dz):
    """Nearest hit as ``(t, row, col, triangle)``; ``row`` is -1 on a miss."""
    stack = _new_stack(level_shapes)
    return _trace(
        heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
        ox, oy, oz, dx, dy, dz, False, stack,
    )  # fmt: skip


@njit(parallel=True, cache=True)
def trace_rays(heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive, origins, directions):
    n = origins.shape[0]
    ts = np.full(n, np.inf)
    cells = np.full((n, 3), -1, dtype=np.int64)
    for k in prange(n):
        stack = _new_stack(level_shapes)
        t, i, j, tri = _trace(
            heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
            origins[k, 0], origins[k, 1], origins[k, 2],
            directions[k, 0], directions[k, 1], directions[k, 2],
            False, stack,
        )  # fmt: skip
        ts[k] = t
        cells[k, 0] = i
        cells[k, 1] = j
        cells[k, 2] = tri
    return ts, cells


@njit(cache=True)
def visibility_at(
    heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
    px, py, pz, sx, sy, sz, half_angle, samples, seed, stream,
):  # fmt: skip
    stack = _new_stack(level_shapes)
    return _visibility(
        heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
        px, py, pz, sx, sy, sz, half_angle, samples, seed, stream, stack,
    )  # fmt: skip


@njit(parallel=True, cache=True)
def render_kernel(
    heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
    texture, tex_x0, tex_y0, tex_spacing, tex_scale,
    kind, rotation, translation, fx, fy, cx, cy, pixel_size, width, height,
    sun, half_angle, samples, seed, irradiance, exposure, eps, depth_nodata,
):  # fmt: skip
    """Ray-trace a gray and a depth raster.

    Depth is the ray parameter ``t``. Orthographic rays use the unit viewing
    axis and perspective rays use ``R^T K^-1 [u, v, 1]``, so in both cases ``t``
    is the hit's component along the viewing direction.
    """
    gray = np.zeros((height, width), dtype=np.uint8)
    depth = np.full((height, width), depth_nodata, dtype=np.float32)
    sx = sun[0]
    sy = sun[1]
    sz = sun[2]
    for v in prange(height):
        stack = _new_stack(level_shapes)
        for u in range(width):
            if kind == KIND_ORTHO:
                lx = pixel_size * (u - cx)
                ly = pixel_size * (v - cy)
                ox = translation[0] + rotation[0, 0] * lx + rotation[1, 0] * ly
                oy = translation[1] + rotation[0, 1] * lx + rotation[1, 1] * ly
                oz = translation[2] + rotation[0, 2] * lx + rotation[1, 2] * ly
                dx = rotation[2, 0]
                dy = rotation[2, 1]
                dz = rotation[2, 2]
            else:
                ru = (u - cx) / fx
                rv = (v - cy) / fy
                ox = translation[0]
                oy = translation[1]
                oz = translation[2]
                dx = rotation[0, 0] * ru + rotation[1, 0] * rv + rotation[2, 0]
                dy = rotation[0, 1] * ru + rotation[1, 1] * rv + rotation[2, 1]
                dz = rotation[0, 2] * ru + rotation[1, 2] * rv + rotation[2, 2]

            t, i, j, _ = _trace(
                heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
                ox, oy, oz, dx, dy, dz, False, stack,
            )  # fmt: skip
            if i < 0:
                continue
            px = ox + t * dx
            py = oy + t * dy
            pz = oz + t * dz
            depth[v, u] = t
            nx, ny, nz = surface_normal(heights, x0, y0, spacing, i, j, px, py)
            albedo = surface_albedo(texture, tex_x0, tex_y0, tex_spacing, tex_scale, px, py)
            vis = _visibility(
                heights, x0, y0, spacing, zmin, zmax, level_shapes, level_offsets, exhaustive,
                px + eps * nx, py + eps * ny, pz + eps * nz,
                sx, sy, sz, half_angle, samples, seed, v * width + u, stack,
            )  # fmt: skip
            gray[v, u] = shade_value(albedo, nx, ny, nz, sx, sy, sz, irradiance, vis, exposure)
    return gray, depth
