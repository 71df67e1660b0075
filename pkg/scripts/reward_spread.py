"""Compare within-group reward spread of preference pairs and sampled groups.

Draws synthetic rewards for DPO-style pairs (a chosen and a rejected sample,
picked far apart) and NFT-style groups (many samples from one prompt), then
prints the mean std per population and their ratio.

    python scripts/reward_spread.py --groups 200 --group-size 16 --seed 0
"""

import argparse

import numpy as np

from panobench.scoring import group_std_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--groups", type=int, default=200)
    ap.add_argument("--group-size", type=int, default=16)
    ap.add_argument("--noise", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    groups, labels = [], {}
    for i in range(args.groups):
        quality = rng.uniform(0.3, 0.7)
        sampled = np.clip(quality + rng.normal(0, args.noise, args.group_size), 0, 1)
        groups.append((f"nft{i}", sampled.tolist()))
        labels[f"nft{i}"] = "nft"
        # a pair keeps the best and worst of a wider candidate pool
        pool = np.clip(quality + rng.normal(0, 2 * args.noise, args.group_size), 0, 1)
        groups.append((f"dpo{i}", [float(pool.min()), float(pool.max())]))
        labels[f"dpo{i}"] = "dpo"

    rep = group_std_report(groups, labels)
    for label, s in rep.mean_std.items():
        print(f"mean std [{label}]: {s:.4f}")
    print(f"ratio dpo/nft: {rep.ratio:.3f}{'  (pairs wider)' if rep.flagged else ''}")


if __name__ == "__main__":
    main()
