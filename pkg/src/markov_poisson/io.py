"""JSON interchange documents for kernels, metrics, functions and distributions.

Each document carries ``n`` and optional ``labels`` next to its payload::

    {"n": 2, "rows": [[0.7, 0.3], [0.2, 0.8]]}
    {"n": 2, "kind": "general", "cost": [[0, 1], [1, 0]]}
    {"n": 2, "values": [0, 1]}
    {"n": 2, "weights": [0.4, 0.6]}

Loaders validate the invariants of the corresponding core type.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import Distribution, FiniteKernel, FiniteStateSpace, MetricSpec, StateFunction
from .errors import InvalidInput


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise InvalidInput(f"{path}: expected a JSON object")
    return doc


def _space(doc: dict, key: str, path) -> tuple[np.ndarray, FiniteStateSpace]:
    if key not in doc:
        raise InvalidInput(f"{path}: missing field {key!r}")
    try:
        arr = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: field {key!r} is not numeric") from exc
    n = doc.get("n", arr.shape[0] if arr.ndim else 0)
    if not isinstance(n, int) or arr.ndim == 0 or arr.shape[0] != n:
        raise InvalidInput(f"{path}: field 'n' = {n!r} does not match {key!r} of shape {arr.shape}")
    return arr, FiniteStateSpace(n, doc.get("labels"))


def _doc(space: FiniteStateSpace, **payload) -> dict:
    out = {"n": space.n}
    if space.labels is not None:
        out["labels"] = list(space.labels)
    out.update(payload)
    return out


def load_kernel(path) -> FiniteKernel:
    rows, space = _space(read_json(path), "rows", path)
    return FiniteKernel(rows, space)


def load_metric(path) -> MetricSpec:
    doc = read_json(path)
    cost, space = _space(doc, "cost", path)
    kind = doc.get("kind", "general")
    v = doc.get("v")
    if kind == "v-weighted":
        if v is None:
            raise InvalidInput(f"{path}: v-weighted metric needs field 'v'")
        spec = MetricSpec.v_weighted(v)
        if spec.cost.shape != cost.shape or not np.allclose(spec.cost, cost, rtol=1e-12, atol=0):
            raise InvalidInput(f"{path}: cost does not match its v-weighted construction")
        return spec
    if kind == "trivial" and not np.array_equal(cost, 2.0 * (1.0 - np.eye(space.n))):
        raise InvalidInput(f"{path}: trivial metric must be 2 * 1{{x != y}}")
    return MetricSpec(cost, kind=kind, space=space)


def load_function(path) -> StateFunction:
    values, space = _space(read_json(path), "values", path)
    return StateFunction(values, space)


def load_distribution(path) -> Distribution:
    weights, space = _space(read_json(path), "weights", path)
    return Distribution(weights, space)


def kernel_doc(P: FiniteKernel) -> dict:
    return _doc(P.space, rows=P.rows)


def metric_doc(d: MetricSpec) -> dict:
    out = _doc(d.space, kind=d.kind, cost=d.cost)
    if d.v is not None:
        out["v"] = d.v
    return out


def function_doc(f: StateFunction) -> dict:
    return _doc(f.space, values=f.values)


def distribution_doc(mu: Distribution) -> dict:
    return _doc(mu.space, weights=mu.weights)
