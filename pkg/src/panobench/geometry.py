"""Equirectangular (ERP) sphere math, NFoV rendering and view selection.

Conventions
-----------
* Unit direction for (lon, lat): ``(cos lat * sin lon, sin lat, cos lat * cos lon)``;
  forward is +z, up is +y.
* ``lon = (u / W) * 2pi - pi`` and ``lat = pi/2 - (v / H) * pi`` for continuous
  pixel coordinates (u, v). Pixel (row i, col j) is sampled at (j + 0.5, i + 0.5).
* Sampling wraps horizontally and clamps vertically.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import ndimage

logger = logging.getLogger(__name__)

REFERENCE_DIMS = (2048, 1024)
REFERENCE_MIN_COMPONENT_PX = 64


@dataclass(frozen=True)
class Panorama:
    """ERP raster of shape (H, W, C) with values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3:
            raise ValueError(f"panorama must be HxWxC, got shape {data.shape}")
        h, w, _ = data.shape
        if w != 2 * h:
            raise ValueError(f"panorama width must be 2x height, got {w}x{h}")
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("panorama values must be finite and within [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def dims(self):
        return (self.width, self.height)


class SphereDirection(NamedTuple):
    lon: np.ndarray
    lat: np.ndarray


@dataclass(frozen=True)
class CameraSpec:
    yaw: float = 0.0
    pitch: float = 0.0
    hfov: float = math.pi / 2
    out_width: int = 512
    out_height: int = 512
    label: str = ""

    def __post_init__(self):
        if not 0.0 < self.hfov < math.pi:
            raise ValueError(f"hfov must lie in (0, pi), got {self.hfov}")
        if self.out_width < 8 or self.out_height < 8:
            raise ValueError("output dimensions must be >= 8")


def erp_to_sphere(u, v, dims):
    width, height = dims
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any((u < 0) | (u > width)) or np.any((v < 0) | (v > height)):
        raise ValueError("pixel coordinates outside the panorama")
    lon = (u / width) * 2.0 * np.pi - np.pi
    lat = np.pi / 2.0 - (v / height) * np.pi
    return SphereDirection(lon, lat)


def wrap_lon(lon):
    """Wrap longitudes into [-pi, pi)."""
    out = np.mod(np.asarray(lon, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    # fmod rounding can land exactly on +pi
    return np.where(out >= np.pi, out - 2.0 * np.pi, out)


def sphere_to_erp(direction, dims):
    width, height = dims
    lon = wrap_lon(direction.lon)
    lat = np.asarray(direction.lat, dtype=np.float64)
    u = (lon + np.pi) / (2.0 * np.pi) * width
    v = (np.pi / 2.0 - lat) / np.pi * height
    return u, v


def sphere_to_vector(lon, lat):
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    cl = np.cos(lat)
    return np.stack([cl * np.sin(lon), np.sin(lat), cl * np.cos(lon)], axis=-1)


def vector_to_sphere(vec):
    vec = np.asarray(vec, dtype=np.float64)
    norm = np.linalg.norm(vec, axis=-1)
    x, y, z = vec[..., 0] / norm, vec[..., 1] / norm, vec[..., 2] / norm
    lat = np.arcsin(np.clip(y, -1.0, 1.0))
    lon = np.arctan2(x, z)
    return SphereDirection(wrap_lon(lon), lat)


def sample_bilinear(data, u, v):
    """Bilinear lookup of an (H, W, C) array at continuous (u, v).

    Horizontal wrap, vertical clamp; pixel centres at integer + 0.5.
    """
    h, w = data.shape[:2]
    x = np.asarray(u, dtype=np.float64) - 0.5
    y = np.asarray(v, dtype=np.float64) - 0.5
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    xa = np.mod(x0, w)
    xb = np.mod(x0 + 1, w)
    ya = np.clip(y0, 0, h - 1)
    yb = np.clip(y0 + 1, 0, h - 1)
    top = data[ya, xa] * (1.0 - fx) + data[ya, xb] * fx
    bottom = data[yb, xa] * (1.0 - fx) + data[yb, xb] * fx
    return top * (1.0 - fy) + bottom * fy


def focal_length(cam):
    return (cam.out_width / 2.0) / math.tan(cam.hfov / 2.0)


def _pitch_yaw(pitch, yaw):
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    # pitch about +x (positive looks up), then yaw about +y
    r_pitch = np.array([[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, -sp, cp]])
    r_yaw = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    return r_yaw @ r_pitch


def camera_rotation(cam):
    """Camera-to-world rotation matrix (columns are right, up, forward)."""
    return _pitch_yaw(cam.pitch, cam.yaw)


def camera_rays(cam):
    """World-space unit rays, shape (out_height, out_width, 3)."""
    f = focal_length(cam)
    cols = (np.arange(cam.out_width) + 0.5 - cam.out_width / 2.0) / f
    rows = -(np.arange(cam.out_height) + 0.5 - cam.out_height / 2.0) / f
    x, y = np.meshgrid(cols, rows)
    rays = np.stack([x, y, np.ones_like(x)], axis=-1)
    rays /= np.linalg.norm(rays, axis=-1, keepdims=True)
    return rays @ camera_rotation(cam).T


def render_nfov(pano, cam):
    """Pinhole perspective view of ``pano`` seen through ``cam``.

    Returns an (out_height, out_width, C) array in [0, 1].
    """
    rays = camera_rays(cam)
    direction = vector_to_sphere(rays)
    u, v = sphere_to_erp(direction, pano.dims)
    out = sample_bilinear(pano.data, u, v)
    return np.clip(out, 0.0, 1.0)


def project_to_camera(vec, cam):
    """Map world unit vectors into continuous perspective pixel coords.

    Returns (x, y, in_front) where x, y follow the same pixel-centre convention
    as the ERP side.
    """
    local = np.asarray(vec, dtype=np.float64) @ camera_rotation(cam)
    z = local[..., 2]
    in_front = z > 1e-9
    safe_z = np.where(in_front, z, 1.0)
    f = focal_length(cam)
    x = local[..., 0] / safe_z * f + cam.out_width / 2.0
    y = -local[..., 1] / safe_z * f + cam.out_height / 2.0
    return x, y, in_front


def default_min_component_px(dims):
    w, h = dims
    ref_w, ref_h = REFERENCE_DIMS
    return max(1, round(REFERENCE_MIN_COMPONENT_PX * (w * h) / (ref_w * ref_h)))


def wrap_components(mask):
    """4-connected component labels with horizontal wrap across the seam.

    Returns (labels, count) with labels in 1..count and 0 for background.
    """
    labels, count = ndimage.label(mask)
    if count == 0:
        return labels, 0
    parent = list(range(count + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    left, right = labels[:, 0], labels[:, -1]
    for a, b in zip(left, right):
        if a and b:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    roots = sorted({find(i) for i in range(1, count + 1)})
    relabel = np.zeros(count + 1, dtype=np.int64)
    new_id = {r: n + 1 for n, r in enumerate(roots)}
    for i in range(1, count + 1):
        relabel[i] = new_id[find(i)]
    return relabel[labels], len(roots)


def pixel_directions(height, width):
    """Unit vectors of every ERP pixel centre, shape (H, W, 3)."""
    u = np.arange(width) + 0.5
    v = np.arange(height) + 0.5
    uu, vv = np.meshgrid(u, v)
    lon, lat = erp_to_sphere(uu, vv, (width, height))
    return sphere_to_vector(lon, lat)


def furniture_view_cameras(raster, target_classes, template=None,
                           min_component_px=None, skipped=None):
    """One camera per admissible connected component of each target class.

    ``raster`` is an (H, W) class-id array or anything with a ``data``
    attribute holding one. Camera yaw/pitch point at the spherical centroid of
    the component. Components whose mean direction vanishes are skipped and,
    when ``skipped`` is a list, recorded there.
    """
    data = np.asarray(getattr(raster, "data", raster))
    if data.ndim != 2 or data.shape[1] != 2 * data.shape[0]:
        raise ValueError(f"class raster must be equirectangular, got {data.shape}")
    targets = list(target_classes)
    if not targets:
        raise ValueError("target_classes must be non-empty")
    template = template or CameraSpec()
    h, w = data.shape
    if min_component_px is None:
        min_component_px = default_min_component_px((w, h))
    dirs = pixel_directions(h, w)

    cameras = []
    for cls in sorted(set(int(c) for c in targets)):
        labels, count = wrap_components(data == cls)
        if count == 0:
            continue
        sizes = np.bincount(labels.ravel(), minlength=count + 1)
        sums = np.zeros((count + 1, 3))
        for axis in range(3):
            sums[:, axis] = np.bincount(labels.ravel(), weights=dirs[..., axis].ravel(),
                                        minlength=count + 1)
        for comp in range(1, count + 1):
            if sizes[comp] < min_component_px:
                continue
            mean = sums[comp] / sizes[comp]
            norm = np.linalg.norm(mean)
            if norm < 1e-6:
                record = {"class_id": cls, "component": comp, "pixels": int(sizes[comp]),
                          "reason": "degenerate centroid"}
                logger.warning("skipping component %s", record)
                if skipped is not None:
                    skipped.append(record)
                continue
            lon, lat = vector_to_sphere(mean / norm)
            cameras.append(replace(template, yaw=float(lon), pitch=float(lat),
                                   label=f"class{cls}_comp{comp}"))
    return cameras


def seam_continuity(pano):
    """Mean absolute difference between the first and last columns."""
    data = pano.data
    return float(np.mean(np.abs(data[:, 0, :] - data[:, -1, :])))
