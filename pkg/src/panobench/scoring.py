"""Expert scores and grades, composite rewards, group spread, task-mix schedule."""

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

EXPERT_WEIGHTS = {"aesthetic": 0.4, "spatial_consistency": 0.3, "plausibility": 0.3}
GRADES = ("S", "A", "B", "C", "D")
REWARD_CHANNELS = ("structural_iou", "omniaid", "longclip", "hpsv3")


@dataclass(frozen=True)
class ScoreCard:
    """Expert sub-scores on the 1-5 scale; 0 marks an abstention."""

    aesthetic: float
    spatial_consistency: float
    plausibility: float

    def __post_init__(self):
        for name in EXPERT_WEIGHTS:
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 5.0):
                raise ValueError(f"{name}={v} outside the 0-5 expert scale")


def expert_total(card):
    return (card.aesthetic * EXPERT_WEIGHTS["aesthetic"]
            + card.spatial_consistency * EXPERT_WEIGHTS["spatial_consistency"]
            + card.plausibility * EXPERT_WEIGHTS["plausibility"])


def display_round(x, places=2):
    """Half-up rounding of the shortest decimal form (3.675 -> 3.68)."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(f"{x:.12f}").quantize(q, rounding=ROUND_HALF_UP))


def grade(total):
    if not math.isfinite(total):
        raise ValueError("total must be finite")
    if total >= 4.0:
        return "S"
    if total >= 3.5:
        return "A"
    if total >= 2.5:
        return "B"
    if total > 1.0:
        return "C"
    return "D"


def grade_distribution(totals):
    """Percentage of samples per tier (exact, not rounded)."""
    totals = list(totals)
    counts = dict.fromkeys(GRADES, 0)
    for t in totals:
        counts[grade(t)] += 1
    n = len(totals)
    return {g: (100.0 * c / n if n else 0.0) for g, c in counts.items()}


@dataclass(frozen=True)
class RewardVector:
    structural_iou: float
    omniaid: float
    longclip: float
    hpsv3: float

    def __post_init__(self):
        for name in REWARD_CHANNELS:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.structural_iou <= 1.0:
            raise ValueError("structural_iou must lie in [0, 1]")

    def as_tuple(self):
        return tuple(getattr(self, c) for c in REWARD_CHANNELS)


@dataclass(frozen=True)
class MinMax:
    lo: float
    hi: float

    def __call__(self, x):
        if self.hi <= self.lo:
            raise ValueError("normalizer needs hi > lo")
        return min(1.0, max(0.0, (x - self.lo) / (self.hi - self.lo)))


DEFAULT_NORMALIZERS = {
    "structural_iou": MinMax(0.0, 1.0),
    "omniaid": MinMax(0.0, 1.0),
    "longclip": MinMax(0.0, 1.0),
    "hpsv3": MinMax(0.0, 10.0),
}


def composite_reward(v, weights=None, normalizers=None):
    """Weighted mean of normalized reward channels."""
    weights = dict(zip(REWARD_CHANNELS, (1.0,) * 4)) if weights is None else dict(weights)
    normalizers = {**DEFAULT_NORMALIZERS, **(normalizers or {})}
    if any(w < 0 for w in weights.values()):
        raise ValueError("weights must be non-negative")
    total_w = math.fsum(weights.get(c, 0.0) for c in REWARD_CHANNELS)
    if total_w <= 0.0:
        raise ValueError("weights must not all be zero")
    acc = math.fsum(weights.get(c, 0.0) * normalizers[c](getattr(v, c)) for c in REWARD_CHANNELS)
    return acc / total_w


@dataclass(frozen=True)
class GroupStats:
    group_id: str
    n: int
    mean: float
    std: float
    label: str = ""


@dataclass
class StdReport:
    groups: list
    mean_std: dict = field(default_factory=dict)  # population label -> mean group std
    ratio: float | None = None
    numerator: str = "dpo"
    denominator: str = "nft"

    @property
    def flagged(self):
        return self.ratio is not None and self.ratio > 1.0


def group_stats(group_id, samples, ddof=1, label=""):
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"group {group_id!r} needs at least 2 samples, has {x.size}")
    return GroupStats(group_id, int(x.size), float(x.mean()), float(x.std(ddof=ddof)), label)


def group_std_report(groups, labels=None, numerator="dpo", denominator="nft", ddof=1):
    """Per-group spread plus mean std per population and their ratio.

    ``groups`` holds ``(group_id, samples)`` pairs; ``labels`` maps group ids to
    a population name (for instance preference pairs vs sampled groups).
    """
    labels = labels or {}
    stats = [group_stats(gid, s, ddof, labels.get(gid, "")) for gid, s in groups]
    by_label = defaultdict(list)
    for g in stats:
        if g.label:
            by_label[g.label].append(g.std)
    mean_std = {k: math.fsum(v) / len(v) for k, v in sorted(by_label.items())}
    ratio = None
    if numerator in mean_std and denominator in mean_std and mean_std[denominator] > 0:
        ratio = mean_std[numerator] / mean_std[denominator]
    return StdReport(stats, mean_std, ratio, numerator, denominator)


def reward_channel_std(groups, ddof=1):
    """Mean within-group std of each reward channel over groups of RewardVectors."""
    out = {}
    for c in REWARD_CHANNELS:
        stds = [float(np.std([getattr(v, c) for v in g], ddof=ddof)) for g in groups]
        out[c] = math.fsum(stds) / len(stds)
    return out


@dataclass(frozen=True)
class MixRatio:
    p_single: float
    p_multi: float

    def __post_init__(self):
        if self.p_single < 0 or self.p_multi < 0 or abs(self.p_single + self.p_multi - 1.0) > 1e-12:
            raise ValueError(f"invalid mix ratio {self.p_single}:{self.p_multi}")


MIX_START = 1.0
MIX_END = 0.2


def mix_schedule(step, warmup_steps):
    """Linear decay of the single-condition share from 10:0 to 2:8 over warmup."""
    if step < 0 or warmup_steps < 1:
        raise ValueError("step must be >= 0 and warmup_steps >= 1")
    if step >= warmup_steps:
        return MixRatio(MIX_END, 1.0 - MIX_END)
    p_single = MIX_START + (MIX_END - MIX_START) * (step / warmup_steps)
    return MixRatio(p_single, 1.0 - p_single)


def read_long_scores(path):
    """``sample_id, metric, value[, model]`` rows -> {(model, sample_id): {metric: value}}."""
    out = defaultdict(dict)
    with Path(path).open(newline="") as f:
        for row in csv.DictReader(f):
            key = (row.get("model") or "all", row["sample_id"])
            out[key][row["metric"]] = float(row["value"])
    return dict(out)


EXPERT_COLUMNS = ("model", "Spatial Consistency", "Aesthetic", "Plausibility", "Total",
                  "S", "A", "B", "C", "D")


def expert_table(cards_by_model):
    """Rows in the expert-evaluation layout: mean sub-scores, total of the
    means, and the exact grade percentages over per-sample totals."""
    rows = []
    for model, cards in cards_by_model.items():
        cards = list(cards)
        if not cards:
            continue
        mean = ScoreCard(
            math.fsum(c.aesthetic for c in cards) / len(cards),
            math.fsum(c.spatial_consistency for c in cards) / len(cards),
            math.fsum(c.plausibility for c in cards) / len(cards),
        )
        dist = grade_distribution(expert_total(c) for c in cards)
        rows.append({"model": model,
                     "Spatial Consistency": mean.spatial_consistency,
                     "Aesthetic": mean.aesthetic,
                     "Plausibility": mean.plausibility,
                     "Total": expert_total(mean),
                     **dist})
    return rows


def write_table(path, columns, rows, places=4):
    with Path(path).open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([r[c] if isinstance(r.get(c), str) else
                        ("" if r.get(c) is None or (isinstance(r[c], float) and math.isnan(r[c]))
                         else f"{r[c]:.{places}f}") for c in columns])
