"""JSON persistence for transforms and trained model bundles."""

from __future__ import annotations

import json

import numpy as np

from .baselines import NystromTransform, RfTransform
from .binning import RbTransform
from .data import ScalingParams, Task
from .pipeline import ModelBundle
from .solvers import Model, MulticlassModel

_TRANSFORMS = {"rb": RbTransform, "rf": RfTransform, "nystrom": NystromTransform}

BUNDLE_FORMAT = "binfeat-model"


def transform_from_dict(obj: dict):
    kind = obj.get("type")
    cls = _TRANSFORMS.get(kind)
    if cls is None:
        raise ValueError(f"unknown transform type {kind!r}")
    return cls.from_dict(obj)


def save_transform(path, transform):
    with open(path, "w") as fh:
        json.dump(transform.to_dict(), fh)


def load_transform(path):
    with open(path) as fh:
        return transform_from_dict(json.load(fh))


def bundle_to_dict(bundle: ModelBundle) -> dict:
    return {
        "format": BUNDLE_FORMAT,
        "method": bundle.method,
        "task": bundle.task.value,
        "classes": None if bundle.classes is None else list(bundle.classes),
        "scaling": None if bundle.scaling is None else bundle.scaling.to_dict(),
        "transform": bundle.transform.to_dict(),
        "model_kind": "multiclass" if isinstance(bundle.model, MulticlassModel) else "single",
        "model": bundle.model.to_dict(),
    }


def bundle_from_dict(obj: dict) -> ModelBundle:
    if obj.get("format") != BUNDLE_FORMAT:
        raise ValueError("not a model bundle file")
    transform = transform_from_dict(obj["transform"])
    model_cls = MulticlassModel if obj.get("model_kind") == "multiclass" else Model
    model = model_cls.from_dict(obj["model"])
    scaling = obj.get("scaling")
    classes = obj.get("classes")
    return ModelBundle(
        method=obj["method"],
        spec=transform.spec,
        transform=transform,
        model=model,
        task=Task(obj["task"]),
        scaling=None if scaling is None else ScalingParams.from_dict(scaling),
        classes=None if classes is None else np.asarray(classes, dtype=np.float64),
    )


def save_bundle(path, bundle: ModelBundle):
    with open(path, "w") as fh:
        json.dump(bundle_to_dict(bundle), fh)


def load_bundle(path) -> ModelBundle:
    with open(path) as fh:
        return bundle_from_dict(json.load(fh))
