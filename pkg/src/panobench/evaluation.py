"""Manifest-driven batch evaluation over panoramas and class rasters."""

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .geometry import CameraSpec, furniture_view_cameras, render_nfov, seam_continuity
from .io import read_class_raster, read_panorama, write_image
from .metrics import DEFAULT_CLASSES, FURNITURE_CLASSES, ClassRegistry, default_registry, spatial_consistency

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2

PATH_KEYS = ("panorama", "pred", "ref", "normals", "embedding")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    classes: tuple = DEFAULT_CLASSES
    furniture_classes: tuple = FURNITURE_CLASSES
    hfov_deg: float = 90.0
    view_width: int = 512
    view_height: int = 512
    min_component_px: int | None = None
    emit_views: bool = True

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("classes", "furniture_classes"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class RunItem:
    id: str
    paths: dict
    scores: dict = field(default_factory=dict)


@dataclass
class RunManifest:
    version: str
    items: list
    registry: ClassRegistry
    config: EvalConfig
    base_dir: Path
    raw_config: dict = field(default_factory=dict)


def load_manifest(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    version = str(raw.get("version", ""))
    if version.split(".")[0] != __version__.split(".")[0]:
        raise ManifestError(f"manifest version {version!r} does not match toolkit {__version__}")
    base = path.parent

    reg = raw.get("registry")
    try:
        if reg is None:
            registry = default_registry()
        elif isinstance(reg, str):
            registry = ClassRegistry.load(base / reg)
        else:
            registry = ClassRegistry.from_dict(reg)
    except (OSError, KeyError, ValueError) as e:
        raise ManifestError(f"bad class registry: {e}") from e

    config_blocks = raw.get("config", {}) or {}
    try:
        config = EvalConfig.from_dict(config_blocks.get("eval", {}))
    except TypeError as e:
        raise ManifestError(f"bad eval config: {e}") from e

    entries = raw.get("items")
    if not isinstance(entries, list) or not entries:
        raise ManifestError("manifest lists no items")
    items = []
    seen = set()
    for n, e in enumerate(entries):
        if not isinstance(e, dict) or "id" not in e or "pred" not in e or "ref" not in e:
            raise ManifestError(f"item #{n} needs at least id, pred and ref")
        iid = str(e["id"])
        if iid in seen:
            raise ManifestError(f"duplicate item id {iid!r}")
        seen.add(iid)
        paths = {k: base / e[k] for k in PATH_KEYS if e.get(k)}
        scores = {str(k): float(v) for k, v in (e.get("scores") or {}).items()}
        items.append(RunItem(iid, paths, scores))
    return RunManifest(version, items, registry, config, base, config_blocks)


@dataclass
class ItemResult:
    id: str
    status: str
    error: str = ""
    per_class: dict = field(default_factory=dict)
    average: float = math.nan
    seam: float = math.nan
    scores: dict = field(default_factory=dict)
    views: list = field(default_factory=list)


def _evaluate_item(item, manifest, out_dir):
    cfg = manifest.config
    missing = [str(p) for p in item.paths.values() if not p.exists()]
    if missing:
        return ItemResult(item.id, "FAILED", "missing file: " + ", ".join(missing), scores=item.scores)
    try:
        pred = read_class_raster(item.paths["pred"], manifest.registry)
        ref = read_class_raster(item.paths["ref"], manifest.registry)
        report = spatial_consistency(pred, ref, cfg.classes)
        result = ItemResult(item.id, "OK", per_class=report.per_class, average=report.average,
                            scores=dict(item.scores))
        if "panorama" in item.paths:
            pano = read_panorama(item.paths["panorama"])
            result.seam = seam_continuity(pano)
            if cfg.emit_views:
                result.views = _emit_views(item, pano, ref, manifest, out_dir)
        return result
    except Exception as e:  # one bad item must not sink the batch
        logger.warning("item %s failed: %s", item.id, e)
        return ItemResult(item.id, "FAILED", f"{type(e).__name__}: {e}", scores=item.scores)


def _emit_views(item, pano, ref, manifest, out_dir):
    cfg = manifest.config
    template = CameraSpec(hfov=math.radians(cfg.hfov_deg), out_width=cfg.view_width,
                          out_height=cfg.view_height)
    targets = [manifest.registry.id_of(c) for c in cfg.furniture_classes]
    if ref.data.shape != (pano.height, pano.width):
        raise ValueError("reference raster and panorama differ in size")
    cams = furniture_view_cameras(ref, targets, template, cfg.min_component_px)
    view_dir = out_dir / "views" / item.id
    views = []
    for n, cam in enumerate(cams):
        if n == 0:
            view_dir.mkdir(parents=True, exist_ok=True)
        name = f"view_{n:02d}.png"
        write_image(view_dir / name, render_nfov(pano, cam))
        views.append({"file": f"views/{item.id}/{name}", "label": cam.label,
                      "yaw": cam.yaw, "pitch": cam.pitch, "hfov": cam.hfov})
    return views


@dataclass
class EvalReport:
    items: list
    columns: list
    aggregate: dict
    exit_code: int

    def item_rows(self):
        rows = []
        for r in self.items:
            row = {"id": r.id, "status": r.status}
            row.update(_row_values(r, self.columns))
            rows.append(row)
        return rows


def _row_values(r, columns):
    vals = {}
    for c in columns:
        if c == "Average":
            v = r.average
        elif c == "seam":
            v = r.seam
        elif c in r.per_class:
            v = r.per_class[c]
        else:
            v = r.scores.get(c)
        vals[c] = math.nan if v is None else float(v)
    return vals


def aggregate_rows(rows, columns):
    """Column-wise mean over rows, skipping NaN cells; NaN if a column is empty."""
    agg = {}
    for c in columns:
        vals = [row[c] for row in rows if not math.isnan(row[c])]
        agg[c] = math.fsum(vals) / len(vals) if vals else math.nan
    return agg


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def run_eval(manifest_path, out_dir, jobs=1):
    """Evaluate every manifest item; write CSV and JSON reports under ``out_dir``.

    Raises ManifestError for a malformed manifest. Item-level problems are
    recorded in the report and reflected in ``exit_code``.
    """
    manifest = load_manifest(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda it: _evaluate_item(it, manifest, out_dir), manifest.items))

    class_names = [c if isinstance(c, str) else manifest.registry.name_of(c)
                   for c in manifest.config.classes]
    score_keys = sorted({k for it in manifest.items for k in it.scores})
    columns = class_names + ["Average", "seam"] + score_keys
    ok_rows = [_row_values(r, columns) for r in results if r.status == "OK"]
    aggregate = aggregate_rows(ok_rows, columns)
    exit_code = EXIT_OK if all(r.status == "OK" for r in results) else EXIT_PARTIAL
    report = EvalReport(results, columns, aggregate, exit_code)
    _write_reports(report, out_dir)
    return report


def _write_reports(report, out_dir):
    with (out_dir / "items.csv").open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "status", *report.columns])
        for row in report.item_rows():
            w.writerow([row["id"], row["status"], *(_fmt(row[c]) for c in report.columns)])
    with (out_dir / "summary.csv").open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", *report.columns])
        w.writerow(["mean", *(_fmt(report.aggregate[c]) for c in report.columns)])

    def clean(v):
        if isinstance(v, float) and math.isnan(v):
            return None
        return v

    doc = {
        "columns": report.columns,
        "aggregate": {k: clean(v) for k, v in report.aggregate.items()},
        "exit_code": report.exit_code,
        "items": [{k: (clean(v) if not isinstance(v, dict) else v) for k, v in asdict(r).items()}
                  for r in report.items],
    }
    (out_dir / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_summary(path):
    with Path(path).open(newline="") as f:
        row = next(csv.DictReader(f))
    return {k: (float(v) if v else math.nan) for k, v in row.items() if k != "id"}


def read_items(path):
    rows = []
    with Path(path).open(newline="") as f:
        for row in csv.DictReader(f):
            rows.append({k: (v if k in ("id", "status") else (float(v) if v else math.nan))
                         for k, v in row.items()})
    return rows

