"""Write the bundled 5-item evaluation fixture (tests/fixtures/eval5).

    python scripts/make_eval_fixture.py [out_dir]
"""

import json
import sys
from pathlib import Path

import numpy as np

from panobench import io
from panobench.metrics import ClassRaster, default_registry

W, H = 128, 64


def panorama(seed):
    u = (np.arange(W) + 0.5) / W * 2 * np.pi
    v = (np.arange(H) + 0.5) / H * np.pi
    uu, vv = np.meshgrid(u, v)
    chans = [0.5 + 0.3 * np.sin(uu * (k + 1) + seed) * np.sin(vv) for k in range(3)]
    return np.clip(np.stack(chans, axis=-1), 0, 1)


def reference(with_bed=True):
    r = np.zeros((H, W), dtype=np.int64)
    r[8:40, :] = 1              # wall band, wraps the full circle
    r[14:38, 10:20] = 2         # door
    r[12:24, 40:56] = 3         # window
    r[30:44, 70:84] = 4         # cabinet
    r[34:46, 90:110] = 5        # sofa
    if with_bed:
        r[36:50, 118:128] = 6   # bed, straddles the seam
        r[36:50, 0:6] = 6
    return r


def predicted(ref, shift):
    # shift furniture/openings horizontally, keep the wall band
    pred = np.where(ref == 1, 1, 0)
    moved = np.roll(np.where(ref > 1, ref, 0), shift, axis=1)
    return np.where(moved > 0, moved, pred)


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    reg = default_registry()
    reg.save(out / "registry.json")
    items = []
    for n in range(5):
        iid = f"item{n}"
        ref = reference(with_bed=n != 4)
        pred = predicted(ref, n)
        io.write_image(out / f"{iid}_pano.png", panorama(n))
        io.write_class_raster(out / f"{iid}_pred.png", ClassRaster(pred, reg))
        io.write_class_raster(out / f"{iid}_ref.png", ClassRaster(ref, reg))
        items.append({
            "id": iid,
            "panorama": f"{iid}_pano.png",
            "pred": f"{iid}_pred.png",
            "ref": f"{iid}_ref.png",
            "scores": {"hpsv3": 6.0 + 0.25 * n, "clip": 0.80 + 0.01 * n, "omniaid": 0.15 + 0.01 * n},
        })
    manifest = {
        "version": "1.0",
        "registry": "registry.json",
        "config": {"eval": {"view_width": 64, "view_height": 64}},
        "items": items,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(out / "manifest.json")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "eval5")
