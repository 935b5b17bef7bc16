"""JSON dataset schema (version 1).

::

    {"schema": 1, "dim": d,
     "povm": [ [[ [re, im], ... ], ...], ... ],   # k matrices, d rows of d pairs
     "counts": [n_1, ..., n_k],
     "epsilon": 0.001,
     "epsilon_split": {"strategy": "uniform" | "weighted", "weights": [...]},
     "groups": [[0, 1], [2, 3]],                  # optional, 0-based indices
     "meta": {...}}                               # optional
"""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import json
from numbers import Integral, Real

import numpy as np

from .errors import SchemaError
from .polytope import EpsilonSplit
from .quantum import embed_povm

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    dim: int
    povm: object  # quantum.Povm
    counts: np.ndarray
    epsilon: float
    epsilon_split: EpsilonSplit = field(default_factory=EpsilonSplit)
    groups: tuple = ()
    meta: dict = field(default_factory=dict)
    sha256: str = ""

    def to_dict(self):
        return dataset_dict(self.povm.elements, self.counts, self.epsilon,
                            self.epsilon_split, self.groups, self.meta)


def matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data, d, pointer):
    if not isinstance(data, list) or len(data) != d:
        raise SchemaError(f"expected {d} rows", pointer)
    out = np.empty((d, d), dtype=complex)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != d:
            raise SchemaError(f"expected {d} entries", f"{pointer}/{i}")
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(v, Real) and not isinstance(v, bool) for v in z)):
                raise SchemaError("expected a [re, im] pair of numbers", f"{pointer}/{i}/{j}")
            out[i, j] = complex(z[0], z[1])
    return out


def dataset_dict(povm_elements, counts, epsilon, split=None, groups=(), meta=None):
    split = split or EpsilonSplit()
    out = {
        "schema": SCHEMA_VERSION,
        "dim": int(np.asarray(povm_elements).shape[1]),
        "povm": [matrix_to_json(e) for e in povm_elements],
        "counts": [int(v) for v in counts],
        "epsilon": float(epsilon),
        "epsilon_split": split.to_dict(),
    }
    if groups:
        out["groups"] = [[int(i) for i in g] for g in groups]
    if meta:
        out["meta"] = meta
    return out


def _require(obj, key, types, pointer=""):
    if key not in obj:
        raise SchemaError(f"missing required field {key!r}", pointer or "/")
    value = obj[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise SchemaError(f"wrong type for {key!r}", f"{pointer}/{key}")
    return value


def parse_dataset(data, sha256=""):
    """Validate a decoded JSON object and build a :class:`Dataset`."""
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object", "/")
    if _require(data, "schema", Integral) != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version, expected {SCHEMA_VERSION}", "/schema")
    d = _require(data, "dim", Integral)
    if d < 2:
        raise SchemaError("dim must be >= 2", "/dim")
    povm_raw = _require(data, "povm", list)
    if not povm_raw:
        raise SchemaError("POVM must have at least one element", "/povm")
    elements = np.array([matrix_from_json(e, d, f"/povm/{i}") for i, e in enumerate(povm_raw)])
    counts = _require(data, "counts", list)
    if len(counts) != len(elements):
        raise SchemaError(f"expected {len(elements)} counts, got {len(counts)}", "/counts")
    for i, c in enumerate(counts):
        if not isinstance(c, Integral) or isinstance(c, bool) or c < 0:
            raise SchemaError("counts must be non-negative integers", f"/counts/{i}")
    if sum(counts) < 1:
        raise SchemaError("counts must not all be zero", "/counts")
    eps = _require(data, "epsilon", Real)
    if not 0.0 < eps < 1.0:
        raise SchemaError("epsilon must lie in (0, 1)", "/epsilon")

    split = EpsilonSplit()
    if "epsilon_split" in data:
        raw = _require(data, "epsilon_split", dict)
        strategy = _require(raw, "strategy", str, "/epsilon_split")
        if strategy not in ("uniform", "weighted"):
            raise SchemaError("strategy must be 'uniform' or 'weighted'", "/epsilon_split/strategy")
        weights = raw.get("weights")
        if weights is not None:
            if not isinstance(weights, list) or not all(
                    isinstance(w, Real) and not isinstance(w, bool) for w in weights):
                raise SchemaError("weights must be a list of numbers", "/epsilon_split/weights")
            weights = tuple(float(w) for w in weights)
        elif strategy == "weighted":
            raise SchemaError("weighted split needs weights", "/epsilon_split")
        split = EpsilonSplit(strategy, weights)

    groups = ()
    if "groups" in data:
        raw = _require(data, "groups", list)
        for gi, g in enumerate(raw):
            if not isinstance(g, list) or not all(
                    isinstance(i, Integral) and not isinstance(i, bool) for i in g):
                raise SchemaError("groups must be lists of integers", f"/groups/{gi}")
        groups = tuple(tuple(int(i) for i in g) for g in raw)

    meta = data.get("meta", {})
    if not isinstance(meta, dict):
        raise SchemaError("meta must be an object", "/meta")
    povm = embed_povm(elements)
    return Dataset(int(d), povm, np.array(counts, dtype=np.int64), float(eps), split,
                   groups, meta, sha256)


def ingest_dataset(path):
    """Read, hash and validate a dataset file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "/") from exc
    return parse_dataset(data, digest)
