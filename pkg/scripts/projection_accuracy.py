"""Reprojection error of NFoV rendering over a grid of yaw/pitch/FOV.

Renders a view from a smooth synthetic panorama, maps every covered ERP pixel
back into the view, and reports the mean absolute difference.

    python scripts/projection_accuracy.py --width 2048 --view 512
"""

import argparse
import math

import numpy as np

from panobench.geometry import CameraSpec, Panorama, camera_rotation, render_nfov, sample_bilinear


def smooth_panorama(width, height, seed=0):
    rng = np.random.default_rng(seed)
    u = (np.arange(width) + 0.5) / width * 2 * np.pi
    v = (np.arange(height) + 0.5) / height * np.pi
    uu, vv = np.meshgrid(u, v)
    chans = []
    for _ in range(3):
        a, b = rng.integers(1, 4, size=2)
        ph = rng.uniform(0, 2 * np.pi)
        chans.append(0.5 + 0.2 * np.sin(a * uu + ph) * np.sin(vv) + 0.2 * np.cos(b * vv))
    return Panorama(np.stack(chans, axis=-1))


def reprojection_mae(pano, cam):
    view = render_nfov(pano, cam)
    H, W = pano.height, pano.width
    v, u = np.mgrid[0:H, 0:W] + 0.5
    lon = u / W * 2 * np.pi - np.pi
    lat = np.pi / 2 - v / H * np.pi
    d = np.stack([np.cos(lat) * np.sin(lon), np.sin(lat), np.cos(lat) * np.cos(lon)], -1)
    local = d @ camera_rotation(cam)  # world -> camera, R is orthonormal
    f = (cam.out_width / 2) / math.tan(cam.hfov / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        px = local[..., 0] / local[..., 2] * f + cam.out_width / 2
        py = -local[..., 1] / local[..., 2] * f + cam.out_height / 2
    ok = (local[..., 2] > 0) & (px >= 0.5) & (px <= cam.out_width - 0.5) \
        & (py >= 0.5) & (py <= cam.out_height - 0.5)
    # interior points only, so the horizontal wrap of sample_bilinear never triggers
    back = sample_bilinear(view, px[ok], py[ok])
    return float(np.abs(back - pano.data[ok]).mean()), int(ok.sum())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--width", type=int, default=2048)
    ap.add_argument("--view", type=int, default=512)
    args = ap.parse_args()

    pano = smooth_panorama(args.width, args.width // 2, seed=3)
    print(f"{'yaw':>6}{'pitch':>7}{'hfov':>6}{'MAE':>10}{'pixels':>10}")
    for hfov in (60, 90, 120):
        for yaw in (-150, 0, 90):
            for pitch in (-45, 0, 30):
                cam = CameraSpec(math.radians(yaw), math.radians(pitch), math.radians(hfov),
                                 args.view, args.view)
                mae, n = reprojection_mae(pano, cam)
                print(f"{yaw:>6}{pitch:>7}{hfov:>6}{mae:>10.2e}{n:>10}")


if __name__ == "__main__":
    main()
