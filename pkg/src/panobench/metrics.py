"""Class rasters, per-class pixel IoU and spatial-consistency reports."""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_CLASSES = ("Wall", "Door", "Window", "Cabinet", "Sofa", "Bed")
REPORT_COLUMNS = DEFAULT_CLASSES + ("Average",)
FURNITURE_CLASSES = ("Cabinet", "Sofa", "Bed")


class StructuralError(ValueError):
    """Raster pair cannot be compared (shape or registry mismatch)."""


class EmptyReportError(ValueError):
    """Every requested class was absent from both rasters."""


@dataclass(frozen=True)
class ClassEntry:
    class_id: int
    name: str
    group: str  # "layout" or "semantic"


@dataclass(frozen=True)
class ClassRegistry:
    entries: tuple
    background_id: int = 0

    def __post_init__(self):
        entries = tuple(e if isinstance(e, ClassEntry) else ClassEntry(*e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        ids = [e.class_id for e in entries]
        names = [e.name for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("class ids must be unique")
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        if self.background_id not in ids:
            raise ValueError(f"background id {self.background_id} not in registry")
        for e in entries:
            if e.group not in ("layout", "semantic", "background"):
                raise ValueError(f"unknown class group {e.group!r}")
            if not 0 <= e.class_id <= 255:
                raise ValueError("class ids must fit in an 8-bit raster")

    @property
    def ids(self):
        return [e.class_id for e in self.entries]

    def id_of(self, name_or_id):
        if isinstance(name_or_id, (int, np.integer)):
            if int(name_or_id) not in self.ids:
                raise KeyError(f"class id {name_or_id} not registered")
            return int(name_or_id)
        for e in self.entries:
            if e.name == name_or_id:
                return e.class_id
        raise KeyError(f"class {name_or_id!r} not registered")

    def name_of(self, class_id):
        for e in self.entries:
            if e.class_id == class_id:
                return e.name
        raise KeyError(f"class id {class_id} not registered")

    def to_dict(self):
        return {
            "background_id": self.background_id,
            "classes": [{"id": e.class_id, "name": e.name, "group": e.group} for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d):
        entries = tuple(ClassEntry(int(c["id"]), c["name"], c.get("group", "semantic"))
                        for c in d["classes"])
        return cls(entries, int(d.get("background_id", 0)))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_registry():
    """Background plus the six benchmark classes, with ceiling/floor as extras."""
    return ClassRegistry((
        ClassEntry(0, "Background", "background"),
        ClassEntry(1, "Wall", "layout"),
        ClassEntry(2, "Door", "semantic"),
        ClassEntry(3, "Window", "semantic"),
        ClassEntry(4, "Cabinet", "semantic"),
        ClassEntry(5, "Sofa", "semantic"),
        ClassEntry(6, "Bed", "semantic"),
        ClassEntry(7, "Ceiling", "layout"),
        ClassEntry(8, "Floor", "layout"),
    ), background_id=0)


@dataclass(frozen=True)
class ClassRaster:
    data: np.ndarray
    registry: ClassRegistry = field(default_factory=default_registry)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"class raster must be 2-D, got shape {data.shape}")
        if not np.issubdtype(data.dtype, np.integer):
            raise ValueError("class raster must hold integer ids")
        present = np.unique(data)
        unknown = np.setdiff1d(present, self.registry.ids)
        if unknown.size:
            raise ValueError(f"class ids {unknown.tolist()} not in registry")
        object.__setattr__(self, "data", data)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


def _check_pair(a, b):
    if a.data.shape != b.data.shape:
        raise StructuralError(f"raster shapes differ: {a.data.shape} vs {b.data.shape}")
    if a.registry != b.registry:
        raise StructuralError("rasters use different class registries")


def class_iou(a, b, c):
    """Pixel IoU of class ``c``; None when neither raster contains it."""
    _check_pair(a, b)
    cid = a.registry.id_of(c)
    ma = a.data == cid
    mb = b.data == cid
    union = int(np.count_nonzero(ma | mb))
    if union == 0:
        return None
    return int(np.count_nonzero(ma & mb)) / union


@dataclass
class ConsistencyReport:
    per_class: dict  # class name -> IoU or None (absent)
    average: float

    @classmethod
    def from_values(cls, per_class):
        present = [v for v in per_class.values() if v is not None]
        if not present:
            raise EmptyReportError("all classes absent; nothing to average")
        return cls(dict(per_class), math.fsum(present) / len(present))

    def row(self, columns=DEFAULT_CLASSES):
        """Values in ``columns`` order followed by the average; absent -> NaN."""
        vals = [self.per_class.get(c) for c in columns]
        return [math.nan if v is None else v for v in vals] + [self.average]


def spatial_consistency(pred, ref, classes=DEFAULT_CLASSES):
    classes = list(classes)
    if not classes:
        raise ValueError("classes must be non-empty")
    _check_pair(pred, ref)
    per_class = {}
    for c in classes:
        name = c if isinstance(c, str) else pred.registry.name_of(int(c))
        per_class[name] = class_iou(pred, ref, c)
    return ConsistencyReport.from_values(per_class)


def structural_fidelity_reward(pred, ref, classes=DEFAULT_CLASSES):
    """Reward channel: the mean per-class IoU between generated and input masks."""
    return spatial_consistency(pred, ref, classes).average


def format_value(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6f}"


def append_report_csv(path, label, report, columns=DEFAULT_CLASSES):
    """Append one row (label, per-class..., Average), writing a header if new."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        if new:
            w.writerow(["id", *columns, "Average"])
        w.writerow([label, *(format_value(v) for v in report.row(columns))])
