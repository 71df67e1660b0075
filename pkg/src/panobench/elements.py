"""Element sets, category-aware masking and inference-time attribute transfer.

Core furnishings always keep their category token; only their attributes are
masked. Decorative elements (``Decorative Items``, ``Plants``) may lose both.
"""

import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from . import rng

MASK = "<MASK>"
DECORATIVE_CATEGORIES = frozenset({"Decorative Items", "Plants"})
CORE = "core_furnishing"
DECORATIVE = "decorative"


def kind_of(category):
    return DECORATIVE if category in DECORATIVE_CATEGORIES else CORE


@dataclass(frozen=True)
class Element:
    category: str
    attributes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))

    @property
    def kind(self):
        return kind_of(self.category)


@dataclass(frozen=True)
class ElementSet:
    elements: tuple
    style: str = ""
    room_type: str = ""

    def __post_init__(self):
        elements = tuple(e if isinstance(e, Element) else Element(*e) for e in self.elements)
        object.__setattr__(self, "elements", elements)
        core = [e.category for e in elements if e.kind == CORE]
        if len(set(core)) != len(core):
            raise ValueError(f"duplicate core furnishing categories in {core}")

    @property
    def categories(self):
        return [e.category for e in self.elements]

    def to_dict(self):
        return {"style": self.style, "room_type": self.room_type,
                "elements": [{"category": e.category, "attributes": list(e.attributes)}
                             for e in self.elements]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Element(e["category"], tuple(e.get("attributes", ())))
                         for e in d.get("elements", [])),
                   d.get("style", ""), d.get("room_type", ""))


@dataclass(frozen=True)
class MaskingConfig:
    p_attr_fur: float = 0.3
    p_cat_dec: float = 0.5
    p_attr_dec: float = 0.5

    def __post_init__(self):
        for name, p in asdict(self).items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class MaskedElement:
    category: str
    attributes: tuple
    kind: str
    category_masked: bool = False
    attribute_masked: tuple = ()


@dataclass(frozen=True)
class MaskedElementSet:
    elements: tuple
    style: str
    room_type: str
    config: MaskingConfig = field(default_factory=MaskingConfig)
    seed: int = 0

    def to_dict(self):
        return {
            "style": self.style,
            "room_type": self.room_type,
            "seed": self.seed,
            "config": asdict(self.config),
            "elements": [{"category": e.category, "attributes": list(e.attributes),
                          "kind": e.kind, "category_masked": e.category_masked,
                          "attribute_masked": list(e.attribute_masked)}
                         for e in self.elements],
        }

    @classmethod
    def from_dict(cls, d):
        elements = tuple(MaskedElement(e["category"], tuple(e["attributes"]), e["kind"],
                                       bool(e["category_masked"]),
                                       tuple(bool(x) for x in e["attribute_masked"]))
                         for e in d["elements"])
        return cls(elements, d["style"], d["room_type"], MaskingConfig(**d["config"]),
                   int(d["seed"]))


def partition_elements(E):
    """Split into (core furnishings, decorative elements), order preserved."""
    elements = E.elements if isinstance(E, ElementSet) else tuple(E)
    fur = [e for e in elements if e.kind == CORE]
    dec = [e for e in elements if e.kind == DECORATIVE]
    return fur, dec


def merge_elements(fur, dec, style="", room_type=""):
    return ElementSet(tuple(fur) + tuple(dec), style, room_type)


def mask_elements(E, cfg=None, seed=0):
    """Apply the masking operator. Each token (category first, then attributes)
    of each element consumes one draw from the seeded stream, in order."""
    cfg = cfg or MaskingConfig()
    n_tokens = sum(1 + len(e.attributes) for e in E.elements)
    draws = rng.uniform(seed, np.arange(n_tokens, dtype=np.uint64))
    out = []
    t = 0
    for e in E.elements:
        cat_draw = draws[t]
        attr_draws = draws[t + 1:t + 1 + len(e.attributes)]
        t += 1 + len(e.attributes)
        if e.kind == CORE:
            cat_masked = False
            attr_masked = tuple(bool(d < cfg.p_attr_fur) for d in attr_draws)
        else:
            cat_masked = bool(cat_draw < cfg.p_cat_dec)
            if cat_masked:
                # attributes cannot hang off a hidden category
                attr_masked = (True,) * len(e.attributes)
            else:
                attr_masked = tuple(bool(d < cfg.p_attr_dec) for d in attr_draws)
        out.append(MaskedElement(
            MASK if cat_masked else e.category,
            tuple(MASK if m else a for a, m in zip(e.attributes, attr_masked)),
            e.kind, cat_masked, attr_masked,
        ))
    return MaskedElementSet(tuple(out), E.style, E.room_type, cfg, int(seed))


def _load_json(name):
    return json.loads(resources.files("panobench").joinpath("data", name).read_text())


def default_attribute_classes():
    """attribute -> attribute class (e.g. ``walnut`` -> ``wood-material``)."""
    return dict(_load_json("attributes.json")["attributes"])


def default_categories():
    return list(_load_json("attributes.json")["categories"])


def default_compatibility():
    """attribute class -> categories that can take it, in preference order."""
    return {k: list(v) for k, v in _load_json("compatibility.json")["compatibility"].items()}


def transfer_attributes(ref_elements, place_categories, compatibility=None,
                        attribute_classes=None):
    """Drop core furnishings the place image does not allow and move their
    attributes onto the first compatible category that the place does have.

    A target category missing from the reference set is added as a new element.
    Attributes without a known class or compatible target are dropped.
    """
    compatibility = default_compatibility() if compatibility is None else compatibility
    attribute_classes = default_attribute_classes() if attribute_classes is None else attribute_classes
    allowed = set(place_categories)

    kept = []
    removed = []
    for e in ref_elements.elements:
        if e.kind == CORE and e.category not in allowed:
            removed.append(e)
        else:
            kept.append([e.category, list(e.attributes)])
    if not removed:
        return ref_elements

    def target_for(attr):
        for cat in compatibility.get(attribute_classes.get(attr), ()):
            if cat in allowed and kind_of(cat) == CORE:
                return cat
        return None

    for e in removed:
        for attr in e.attributes:
            cat = target_for(attr)
            if cat is None:
                continue
            slot = next((k for k in kept if k[0] == cat), None)
            if slot is None:
                slot = [cat, []]
                kept.append(slot)
            if attr not in slot[1]:
                slot[1].append(attr)
    return ElementSet(tuple(Element(c, tuple(a)) for c, a in kept),
                      ref_elements.style, ref_elements.room_type)


def build_training_record(E, cfg, seed, target_description):
    """Supervised (inputs, target) pair for the prompt model, as a dict."""
    if not target_description or not target_description.strip():
        raise ValueError("target description must be non-empty")
    masked = mask_elements(E, cfg, seed)
    return {
        "inputs": {"style": E.style, "room_type": E.room_type, "elements": masked.to_dict()},
        "target": target_description,
    }


def record_to_line(record):
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def masked_from_record(record):
    return MaskedElementSet.from_dict(record["inputs"]["elements"])
