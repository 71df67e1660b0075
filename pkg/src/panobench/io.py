"""PNG rasters, latent blobs and control-signal bundles on disk."""

import json
import struct
from pathlib import Path

import cv2
import numpy as np

from .control import ControlSignal, LatentGrid, NormalMap
from .geometry import Panorama
from .metrics import ClassRaster, ClassRegistry

LATENT_MAGIC = b"PBLT"
_LATENT_HEADER = struct.Struct("<4sIII")


def read_image(path):
    """Float RGB (or single-channel) array in [0, 1] from an 8/16-bit PNG."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FileNotFoundError(path)
    scale = 65535.0 if img.dtype == np.uint16 else 255.0
    if img.ndim == 3:
        img = img[..., :3][..., ::-1]
    return img.astype(np.float64) / scale


def write_image(path, data, bits=8):
    data = np.clip(np.asarray(data, dtype=np.float64), 0.0, 1.0)
    if bits == 8:
        out = np.round(data * 255.0).astype(np.uint8)
    elif bits == 16:
        out = np.round(data * 65535.0).astype(np.uint16)
    else:
        raise ValueError("bits must be 8 or 16")
    if out.ndim == 3 and out.shape[2] == 1:
        out = out[..., 0]
    if out.ndim == 3:
        out = np.ascontiguousarray(out[..., ::-1])
    if not cv2.imwrite(str(path), out):
        raise OSError(f"could not write {path}")


def read_panorama(path):
    return Panorama(read_image(path))


def read_class_raster(path, registry):
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FileNotFoundError(path)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"{path}: class raster must be single-channel 8-bit")
    return ClassRaster(img.astype(np.int64), registry)


def write_class_raster(path, raster):
    if not cv2.imwrite(str(path), raster.data.astype(np.uint8)):
        raise OSError(f"could not write {path}")


def read_normals(path):
    return NormalMap(read_image(path))


def write_normals(path, normals):
    write_image(path, normals.data, bits=16)


def save_control(out_dir, signal, stem="control"):
    """Write normals (16-bit), instances (8-bit) and a provenance manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_image(out_dir / f"{stem}_normals.png", signal.normals, bits=16)
    cv2.imwrite(str(out_dir / f"{stem}_instances.png"), signal.instances.astype(np.uint8))
    entry = {
        "normals": f"{stem}_normals.png",
        "instances": f"{stem}_instances.png",
        "height": int(signal.shape[0]),
        "width": int(signal.shape[1]),
        "provenance": signal.provenance,
        "registry": signal.registry.to_dict(),
    }
    (out_dir / f"{stem}.json").write_text(json.dumps(entry, indent=2, sort_keys=True) + "\n")
    return entry


def load_control(manifest_path):
    manifest_path = Path(manifest_path)
    entry = json.loads(manifest_path.read_text())
    registry = ClassRegistry.from_dict(entry["registry"])
    normals = read_image(manifest_path.parent / entry["normals"])
    instances = read_class_raster(manifest_path.parent / entry["instances"], registry)
    return ControlSignal(normals, instances.data, registry, entry["provenance"])


def write_latent(path, grid):
    h, w, c = grid.data.shape
    with open(path, "wb") as f:
        f.write(_LATENT_HEADER.pack(LATENT_MAGIC, h, w, c))
        f.write(grid.data.astype("<f4").tobytes())


def read_latent(path):
    raw = Path(path).read_bytes()
    if len(raw) < _LATENT_HEADER.size:
        raise ValueError(f"{path}: truncated latent header")
    magic, h, w, c = _LATENT_HEADER.unpack_from(raw)
    if magic != LATENT_MAGIC:
        raise ValueError(f"{path}: bad latent magic {magic!r}")
    body = np.frombuffer(raw, dtype="<f4", offset=_LATENT_HEADER.size)
    if body.size != h * w * c:
        raise ValueError(f"{path}: expected {h * w * c} floats, found {body.size}")
    return LatentGrid(body.reshape(h, w, c).copy())
