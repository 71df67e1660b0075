"""Structural/reference control artifacts.

Fuses an empty-room normal map with a coarse instance raster, masks style
reference latents block-wise, and validates standardized references against
their depth template.
"""

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .metrics import ClassRaster

NORM_EPS = 0.05
NORM_COVERAGE = 0.99


@dataclass(frozen=True)
class NormalMap:
    """Normals stored as (n + 1) / 2 in an (H, W, 3) array."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"normal map must be HxWx3, got {data.shape}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_vectors(cls, normals):
        return cls((np.asarray(normals, dtype=np.float64) + 1.0) / 2.0)

    def decode(self):
        return self.data * 2.0 - 1.0

    def unit_fraction(self, eps=NORM_EPS):
        norms = np.linalg.norm(self.decode(), axis=-1)
        return float(np.mean(np.abs(norms - 1.0) <= eps))

    def check(self, eps=NORM_EPS, coverage=NORM_COVERAGE):
        frac = self.unit_fraction(eps)
        if frac < coverage:
            raise ValueError(f"only {frac:.2%} of normals are unit length (need {coverage:.0%})")


@dataclass(frozen=True)
class ControlSignal:
    normals: np.ndarray    # (H, W, 3) stored encoding
    instances: np.ndarray  # (H, W) class ids
    registry: object
    provenance: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.instances.shape

    def as_tensor(self):
        """(H, W, 4) float array: three normal channels then the class index."""
        return np.concatenate([self.normals, self.instances[..., None].astype(np.float64)], axis=-1)

    def one_hot(self):
        """(H, W, n_classes) indicator array in registry order."""
        ids = np.asarray(self.registry.ids)
        return (self.instances[..., None] == ids).astype(np.float32)


def fuse_control(normals, instances, normal_source_id="", segmentation_source_id=""):
    if not isinstance(instances, ClassRaster):
        raise TypeError("instances must be a ClassRaster")
    if normals.data.shape[:2] != instances.data.shape:
        raise ValueError(f"normal map {normals.data.shape[:2]} and instance raster "
                         f"{instances.data.shape} differ in size")
    normals.check()
    return ControlSignal(
        normals=normals.data.copy(),
        instances=instances.data.copy(),
        registry=instances.registry,
        provenance={"normal_source_id": normal_source_id,
                    "segmentation_source_id": segmentation_source_id},
    )


@dataclass(frozen=True)
class LatentGrid:
    """Latent tokens laid out (grid_h, grid_w, channels)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise ValueError(f"latent grid must be 3-D, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("latent values must be finite")
        object.__setattr__(self, "data", data)

    @property
    def grid_h(self):
        return self.data.shape[0]

    @property
    def grid_w(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]


@dataclass(frozen=True)
class MaskRecord:
    seed: int
    keep_prob: float
    patch: int
    blocks: np.ndarray  # (ceil(h/patch), ceil(w/patch)) bool

    def to_dict(self):
        return {"seed": self.seed, "keep_prob": self.keep_prob, "patch": self.patch,
                "blocks_shape": list(self.blocks.shape),
                "kept": int(self.blocks.sum())}


def block_mask(grid_h, grid_w, keep_prob, patch, seed):
    """Bernoulli(keep_prob) per block; block (i, j) uses stream index i * nbw + j."""
    nbh = math.ceil(grid_h / patch)
    nbw = math.ceil(grid_w / patch)
    index = np.arange(nbh * nbw, dtype=np.uint64)
    return rng.bernoulli(seed, index, keep_prob).reshape(nbh, nbw)


def expand_blocks(blocks, grid_h, grid_w, patch):
    return np.repeat(np.repeat(blocks, patch, axis=0), patch, axis=1)[:grid_h, :grid_w]


def latent_mask(z, keep_prob, patch=1, seed=0):
    """Zero out style-latent blocks: output = M * z with M shared across channels."""
    if not 0.0 <= keep_prob <= 1.0:
        raise ValueError(f"keep_prob must lie in [0, 1], got {keep_prob}")
    if patch < 1:
        raise ValueError("patch must be >= 1")
    blocks = block_mask(z.grid_h, z.grid_w, keep_prob, patch, seed)
    m = expand_blocks(blocks, z.grid_h, z.grid_w, patch)
    masked = np.where(m[..., None], z.data, np.float32(0.0))
    return LatentGrid(masked), MaskRecord(int(seed), float(keep_prob), int(patch), blocks)


def regenerate_mask(record, grid_h, grid_w):
    return block_mask(grid_h, grid_w, record.keep_prob, record.patch, record.seed)


def depth_hash(depth):
    """sha256 over dtype, shape and raw bytes of a template depth raster."""
    depth = np.ascontiguousarray(depth)
    h = hashlib.sha256()
    h.update(f"{depth.dtype.str}|{depth.shape}|".encode())
    h.update(depth.tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class TemplateRecord:
    room_type: str
    template_id: str
    depth_hash: str


class TemplateRegistry:
    """One depth template per room type per registry version."""

    def __init__(self, version="1"):
        self.version = version
        self._by_room = {}

    def register(self, record):
        if record.room_type in self._by_room:
            raise ValueError(f"room type {record.room_type!r} already has a template")
        self._by_room[record.room_type] = record

    def __getitem__(self, room_type):
        return self._by_room[room_type]

    def __contains__(self, room_type):
        return room_type in self._by_room

    def records(self):
        return [self._by_room[k] for k in sorted(self._by_room)]


@dataclass(frozen=True)
class ReferenceRecord:
    """A style reference after warping onto a depth template."""

    ref_id: str
    room_type: str
    template_id: str
    resolution: tuple
    depth_hash: str


@dataclass
class ConformanceReport:
    passed: bool
    offenders: dict  # ref_id -> list of reasons

    def __str__(self):
        if self.passed:
            return "PASS"
        parts = [f"{k}: {', '.join(v)}" for k, v in self.offenders.items()]
        return "FAIL " + "; ".join(parts)


def check_template_conformance(refs, template):
    refs = list(refs)
    if not refs:
        raise ValueError("no reference records to check")
    offenders = {}

    def flag(ref, reason):
        offenders.setdefault(ref.ref_id, []).append(reason)

    counts = Counter(tuple(r.resolution) for r in refs)
    top = counts.most_common()
    # a tie for the most common resolution leaves no majority to trust
    modal = top[0][0] if len(top) == 1 or top[0][1] > top[1][1] else None

    for r in refs:
        if r.template_id != template.template_id:
            flag(r, "template_id")
        if r.room_type != template.room_type:
            flag(r, "room_type")
        if r.depth_hash != template.depth_hash:
            flag(r, "depth_hash")
        if tuple(r.resolution) != modal and len(counts) > 1:
            flag(r, "resolution")
    return ConformanceReport(not offenders, offenders)
