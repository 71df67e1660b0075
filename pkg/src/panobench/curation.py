"""Three-stage data curation: quality filters, k-means, diversity sampling, manifests."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

MANIFEST_VERSION = "panobench-manifest/1"
STAGE_RESOLUTION = {1: (1024, 512), 2: (2048, 1024), 3: (2048, 1024)}
LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class CurationItem:
    id: str
    width: int
    height: int
    mean_luma: float
    luma_std: float
    aesthetic_score: float
    embedding: np.ndarray = field(default_factory=lambda: np.zeros(0), compare=False)
    expert_approved: bool | None = None

    def __post_init__(self):
        for name in ("mean_luma", "luma_std", "aesthetic_score"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{self.id}: {name} must be finite")
        object.__setattr__(self, "embedding", np.asarray(self.embedding, dtype=np.float64))


def luma_stats(rgb):
    """(mean, std) of Rec.709 luma for an (H, W, 3) array in [0, 1]."""
    luma = np.asarray(rgb, dtype=np.float64)[..., :3] @ np.array(LUMA_WEIGHTS)
    return float(luma.mean()), float(luma.std())


@dataclass(frozen=True)
class QualityConfig:
    min_w: int = 1024
    min_h: int = 512
    aspect_tol: float = 0.01
    b_lo: float = 0.15
    b_hi: float = 0.9
    c_min: float = 0.05
    a_min: float = 0.0


@dataclass(frozen=True)
class FilterResult:
    passed: bool
    reasons: tuple = ()

    def __bool__(self):
        return self.passed


def quality_filter(item, cfg=None):
    cfg = cfg or QualityConfig()
    reasons = []
    if item.width < cfg.min_w or item.height < cfg.min_h:
        reasons.append("resolution")
    if item.height <= 0 or abs(item.width / item.height - 2.0) > cfg.aspect_tol:
        reasons.append("aspect")
    if not cfg.b_lo <= item.mean_luma <= cfg.b_hi:
        reasons.append("brightness")
    if item.luma_std < cfg.c_min:
        reasons.append("contrast")
    if item.aesthetic_score < cfg.a_min:
        reasons.append("aesthetic")
    return FilterResult(not reasons, tuple(reasons))


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    ids: list
    embeddings: np.ndarray
    seed: int
    objective_history: list = field(default_factory=list)
    converged: bool = False

    @property
    def assignments(self):
        return dict(zip(self.ids, self.labels.tolist()))

    def distances(self):
        """Distance of every item to its own centroid."""
        return np.linalg.norm(self.embeddings - self.centroids[self.labels], axis=1)


def _sq_dists(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with chosen centres
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def kmeans_objective(X, centroids, labels):
    return float(((X - centroids[labels]) ** 2).sum())


def cluster_embeddings(items, k, seed=0, max_iters=100):
    """Lloyd's k-means from a seeded k-means++ start.

    ``items`` is a sequence of CurationItem or an (n, d) array (ids become
    ``"0".."n-1"``). The objective is recorded after every iteration.
    """
    if isinstance(items, np.ndarray):
        X = np.asarray(items, dtype=np.float64)
        ids = [str(i) for i in range(len(X))]
    else:
        items = list(items)
        if not items:
            raise ValueError("no items to cluster")
        X = np.stack([it.embedding for it in items]).astype(np.float64)
        ids = [it.id for it in items]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("no items to cluster")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    rng = np.random.default_rng(seed)
    C = kmeans_pp_init(X, k, rng)
    labels = np.argmin(_sq_dists(X, C), axis=1)
    history = [kmeans_objective(X, C, labels)]
    converged = False
    for _ in range(max_iters):
        for j in range(k):
            members = labels == j
            if members.any():
                C[j] = X[members].mean(axis=0)
        new_labels = np.argmin(_sq_dists(X, C), axis=1)
        history.append(kmeans_objective(X, C, new_labels))
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
    return ClusterModel(k, C, labels, ids, X, int(seed), history, converged)


def default_k(n):
    return max(1, min(1024, round(math.sqrt(n / 2))))


def largest_remainder(sizes, budget):
    sizes = np.asarray(sizes, dtype=np.int64)
    total = int(sizes.sum())
    exact = [budget * int(s) / total for s in sizes]
    quotas = [math.floor(e) for e in exact]
    short = budget - sum(quotas)
    # stable sort keeps the lower cluster index first on equal remainders
    order = sorted(range(len(sizes)), key=lambda j: -(exact[j] - quotas[j]))
    for j in order[:short]:
        quotas[j] += 1
    return quotas


def diversity_sample(model, budget, rep_ratio=0.5):
    """Pick ``budget`` ids: per cluster, the ``ceil(r * quota)`` nearest to the
    centroid plus the farthest for the rest. Ties break by ascending id."""
    if not 0.0 <= rep_ratio <= 1.0:
        raise ValueError("rep_ratio must lie in [0, 1]")
    n = len(model.ids)
    if budget > n or budget < 0:
        raise ValueError(f"budget {budget} exceeds {n} items")
    dist = model.distances()
    sizes = np.bincount(model.labels, minlength=model.k)
    quotas = largest_remainder(sizes, budget)
    selected = []
    for j in range(model.k):
        q = quotas[j]
        if q == 0:
            continue
        members = [i for i in range(n) if model.labels[i] == j]
        near = sorted(members, key=lambda i: (dist[i], model.ids[i]))
        n_near = math.ceil(rep_ratio * q)
        chosen = near[:n_near]
        taken = set(chosen)
        far = sorted((i for i in members if i not in taken), key=lambda i: (-dist[i], model.ids[i]))
        chosen += far[:q - n_near]
        selected += [model.ids[i] for i in chosen]
    return selected


@dataclass
class StageManifest:
    stage: int
    resolution: tuple
    items: list
    filters_applied: list

    def to_dict(self):
        return {
            "version": MANIFEST_VERSION,
            "stage": self.stage,
            "resolution": list(self.resolution),
            "filters_applied": list(self.filters_applied),
            "items": [{"id": it.id, "width": it.width, "height": it.height,
                       "expert_approved": it.expert_approved} for it in self.items],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def ids(self):
        return [it.id for it in self.items]


def build_stage_manifest(stage, items, filters_applied, parent=None):
    if stage not in STAGE_RESOLUTION:
        raise ManifestError(f"unknown stage {stage}")
    res = STAGE_RESOLUTION[stage]
    items = list(items)
    for it in items:
        if (it.width, it.height) != res:
            raise ManifestError(f"item {it.id}: {it.width}x{it.height} does not match "
                                f"stage {stage} resolution {res[0]}x{res[1]}")
        if stage == 3 and it.expert_approved is not True:
            what = "missing expert approval" if it.expert_approved is None else "not expert approved"
            raise ManifestError(f"item {it.id}: {what}")
    if parent is not None:
        extra = set(it.id for it in items) - set(parent.ids)
        if extra:
            raise ManifestError(f"items {sorted(extra)} not in stage {parent.stage} manifest")
    return StageManifest(stage, res, items, list(filters_applied))


@dataclass(frozen=True)
class CurationConfig:
    quality: QualityConfig = field(default_factory=QualityConfig)
    budget: int = 0  # 0 keeps every filtered item
    k: int = 0       # 0 picks sqrt(n/2) capped at 1024
    rep_ratio: float = 0.5
    max_iters: int = 100
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        q = QualityConfig(**d.pop("quality", {}))
        return cls(quality=q, **d)


def _at(items, stage):
    w, h = STAGE_RESOLUTION[stage]
    return [replace(it, width=w, height=h) for it in items]


def run_curation(items, cfg=None):
    """All three stages; returns ``{stage: StageManifest}``.

    Stage 1 keeps everything at 1024x512 storage. Stage 2 filters on source
    properties, clusters and samples. Stage 3 keeps the expert-approved subset.
    """
    cfg = cfg or CurationConfig()
    items = list(items)
    ids = [it.id for it in items]
    if len(set(ids)) != len(ids):
        raise ManifestError("duplicate item ids")
    s1 = build_stage_manifest(1, _at(items, 1), ["store@1024x512"])

    passed = [it for it in items if quality_filter(it, cfg.quality)]
    filters = ["resolution", "aspect", "brightness", "contrast", "aesthetic"]
    if passed:
        k = cfg.k or default_k(len(passed))
        k = min(k, len(passed))
        model = cluster_embeddings(passed, k, cfg.seed, cfg.max_iters)
        budget = cfg.budget or len(passed)
        budget = min(budget, len(passed))
        chosen = set(diversity_sample(model, budget, cfg.rep_ratio))
        sampled = [it for it in passed if it.id in chosen]
        filters.append(f"kmeans(k={k},seed={cfg.seed})")
        filters.append(f"diversity(budget={budget},rep_ratio={cfg.rep_ratio})")
    else:
        sampled = []
    s2 = build_stage_manifest(2, _at(sampled, 2), filters)
    s3 = build_stage_manifest(3, [it for it in s2.items if it.expert_approved is True],
                              ["expert_approved"], parent=s2)
    return {1: s1, 2: s2, 3: s3}


ITEM_COLUMNS = ("id", "width", "height", "mean_luma", "luma_std", "aesthetic_score",
                "embedding", "expert_approved")


def _parse_bool(s):
    s = (s or "").strip().lower()
    if s == "":
        return None
    if s in ("1", "true", "yes", "y"):
        return True
    if s in ("0", "false", "no", "n"):
        return False
    raise ValueError(f"bad boolean {s!r}")


def load_items(csv_path):
    """Item table; the ``embedding`` column names a .npy file relative to the CSV."""
    csv_path = Path(csv_path)
    items = []
    with csv_path.open(newline="") as f:
        for row in csv.DictReader(f):
            emb_ref = (row.get("embedding") or "").strip()
            emb = np.load(csv_path.parent / emb_ref) if emb_ref else np.zeros(0)
            items.append(CurationItem(
                id=row["id"], width=int(row["width"]), height=int(row["height"]),
                mean_luma=float(row["mean_luma"]), luma_std=float(row["luma_std"]),
                aesthetic_score=float(row["aesthetic_score"]), embedding=emb,
                expert_approved=_parse_bool(row.get("expert_approved")),
            ))
    dims = {it.embedding.shape for it in items}
    if len(dims) > 1:
        raise ValueError(f"embedding dimensions differ across items: {sorted(dims)}")
    return items


def config_dict(cfg):
    return asdict(cfg)
