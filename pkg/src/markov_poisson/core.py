"""Finite state spaces: kernels, distributions, functions, metrics.

All containers are immutable wrappers around read-only numpy arrays and
support ``np.asarray``. Every operation accepts either a container or a plain
array-like in its place.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceFailure, InvalidInput, Reducible, ZeroDenominator

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
ROW_SUM_TOL = 1e-12
TRIANGLE_CHECK_MAX_N = 512
DIRECT_STATIONARY_MAX_N = 5000

METRIC_KINDS = ("general", "trivial", "line", "v-weighted")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FiniteStateSpace:
    n: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.n) < 2:
            raise InvalidInput(f"state space needs n >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.n:
                raise InvalidInput(f"{len(labels)} labels for {self.n} states")
            object.__setattr__(self, "labels", labels)


def _space_for(n: int, space: FiniteStateSpace | None) -> FiniteStateSpace:
    if space is None:
        return FiniteStateSpace(n)
    if space.n != n:
        raise InvalidInput(f"space has {space.n} states, data has {n}")
    return space


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self, what: str = "input") -> None:
        if self.violations:
            raise InvalidInput(f"invalid {what}: " + "; ".join(self.violations))


@dataclass(frozen=True, eq=False)
class FiniteKernel:
    """Row-stochastic matrix; row ``i`` is the law of the next state from ``i``."""

    rows: np.ndarray
    space: FiniteStateSpace | None = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        rows = _frozen(self.rows)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise InvalidInput(f"kernel must be square, got shape {rows.shape}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "space", _space_for(rows.shape[0], self.space))
        if self.check:
            validate_kernel(rows, ROW_SUM_TOL).raise_if_invalid("kernel")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)


@dataclass(frozen=True, eq=False)
class Distribution:
    weights: np.ndarray
    space: FiniteStateSpace | None = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1:
            raise InvalidInput("distribution weights must be a vector")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "space", _space_for(w.shape[0], self.space))
        if self.check:
            validate_distribution(w, ROW_SUM_TOL).raise_if_invalid("distribution")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    @classmethod
    def point_mass(cls, n: int, x: int) -> "Distribution":
        w = np.zeros(n)
        w[x] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class StateFunction:
    values: np.ndarray
    space: FiniteStateSpace | None = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1:
            raise InvalidInput("function values must be a vector")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("function values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "space", _space_for(v.shape[0], self.space))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True, eq=False)
class MetricSpec:
    """Symmetric cost matrix satisfying the metric axioms.

    ``v`` is only set for the ``v-weighted`` kind, where
    ``cost[x, y] = 1{x != y} (v[x] + v[y])``.
    """

    cost: np.ndarray
    kind: str = "general"
    space: FiniteStateSpace | None = None
    v: np.ndarray | None = None
    check: bool = field(default=True, repr=False)
    triangle_check: bool | None = field(default=None, repr=False)

    def __post_init__(self):
        cost = _frozen(self.cost)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
            raise InvalidInput(f"cost must be square, got shape {cost.shape}")
        if self.kind not in METRIC_KINDS:
            raise InvalidInput(f"unknown metric kind {self.kind!r}")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "space", _space_for(cost.shape[0], self.space))
        if self.v is not None:
            object.__setattr__(self, "v", _frozen(self.v))
        if self.kind == "v-weighted" and self.v is None:
            raise InvalidInput("v-weighted metric needs its weight function v")
        if self.check:
            validate_metric(cost, triangle=self.triangle_check).raise_if_invalid("metric")

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.cost if dtype is None else self.cost.astype(dtype)

    @classmethod
    def trivial(cls, n: int) -> "MetricSpec":
        """``d(x, y) = 2 * 1{x != y}``; its Wasserstein distance is total variation."""
        return cls(2.0 * (1.0 - np.eye(n)), kind="trivial")

    @classmethod
    def line(cls, positions: Sequence[float]) -> "MetricSpec":
        pos = np.asarray(positions, dtype=float)
        return cls(np.abs(pos[:, None] - pos[None, :]), kind="line")

    @classmethod
    def v_weighted(cls, v: Sequence[float]) -> "MetricSpec":
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0):
            raise InvalidInput("v-weighted metric needs v > 0")
        cost = (v[:, None] + v[None, :]) * (1.0 - np.eye(v.size))
        return cls(cost, kind="v-weighted", v=v)


# ---------------------------------------------------------------- coercion

def as_rows(P) -> np.ndarray:
    return P.rows if isinstance(P, FiniteKernel) else np.asarray(P, dtype=float)


def as_weights(mu) -> np.ndarray:
    return mu.weights if isinstance(mu, Distribution) else np.asarray(mu, dtype=float)


def as_values(f) -> np.ndarray:
    return f.values if isinstance(f, StateFunction) else np.asarray(f, dtype=float)


def as_cost(d) -> np.ndarray:
    return d.cost if isinstance(d, MetricSpec) else np.asarray(d, dtype=float)


def as_kernel(P) -> FiniteKernel:
    return P if isinstance(P, FiniteKernel) else FiniteKernel(P)


def as_metric(d) -> MetricSpec:
    return d if isinstance(d, MetricSpec) else MetricSpec(d)


def _check_len(n: int, *arrays: np.ndarray) -> None:
    for a in arrays:
        if a.shape[0] != n:
            raise InvalidInput(f"shape mismatch: expected {n} states, got {a.shape[0]}")


# ---------------------------------------------------------------- validators

def validate_kernel(P, tol: float = ROW_SUM_TOL) -> ValidationReport:
    """Check the row-stochastic invariants; never raises on bad data."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    rows = as_rows(P)
    out: list[str] = []
    if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
        return ValidationReport((f"kernel is not square: shape {rows.shape}",))
    if rows.shape[0] < 2:
        out.append("state space needs at least 2 states")
    if not np.all(np.isfinite(rows)):
        out.append("non-finite entry")
        return ValidationReport(tuple(out))
    bad = np.argwhere((rows < 0.0) | (rows > 1.0))
    for i, j in bad[:10]:
        out.append(f"entry out of range at ({i}, {j}): {rows[i, j]:g}")
    sums = rows.sum(axis=1)
    for i in np.flatnonzero(np.abs(sums - 1.0) > tol)[:10]:
        out.append(f"row {i} sums to {sums[i]:.12g}")
    return ValidationReport(tuple(out))


def validate_distribution(mu, tol: float = ROW_SUM_TOL) -> ValidationReport:
    w = as_weights(mu)
    out: list[str] = []
    if not np.all(np.isfinite(w)):
        return ValidationReport(("non-finite weight",))
    for i in np.flatnonzero(w < 0)[:10]:
        out.append(f"negative weight at {i}: {w[i]:g}")
    if abs(w.sum() - 1.0) > tol:
        out.append(f"weights sum to {w.sum():.12g}")
    return ValidationReport(tuple(out))


def validate_metric(d, triangle: bool | None = None, tol: float = 1e-12) -> ValidationReport:
    """Metric axioms; the O(n^3) triangle scan runs by default for n <= 512."""
    c = as_cost(d)
    n = c.shape[0]
    out: list[str] = []
    if not np.all(np.isfinite(c)):
        return ValidationReport(("non-finite distance",))
    if np.any(np.abs(np.diag(c)) > 0):
        out.append("nonzero diagonal")
    if np.any(np.abs(c - c.T) > tol * max(1.0, np.abs(c).max())):
        out.append("cost is not symmetric")
    off = c[~np.eye(n, dtype=bool)]
    if np.any(off <= 0):
        out.append("zero or negative distance between distinct states")
    if triangle is None:
        triangle = n <= TRIANGLE_CHECK_MAX_N
    if triangle:
        scale = tol * max(1.0, np.abs(c).max())
        for y in range(n):
            # d(x, z) <= d(x, y) + d(y, z) for every x, z with pivot y
            if np.any(c > c[:, y:y + 1] + c[y:y + 1, :] + scale):
                out.append(f"triangle inequality fails through state {y}")
                break
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------- calculus

def kernel_power(P, m: int) -> FiniteKernel:
    if int(m) < 1:
        raise InvalidInput("power must be >= 1")
    out = np.linalg.matrix_power(as_rows(P), int(m))
    drift = np.abs(out.sum(axis=1) - 1.0).max()
    if drift > 1e-9:
        warnings.warn(f"row sums drifted by {drift:.3g} in P^{m}; renormalising", RuntimeWarning)
    out = np.clip(out, 0.0, None)
    out /= out.sum(axis=1, keepdims=True)
    return FiniteKernel(out, space=getattr(P, "space", None))


def apply_to_function(P, f) -> StateFunction:
    rows, v = as_rows(P), as_values(f)
    _check_len(rows.shape[1], v)
    return StateFunction(rows @ v)


def apply_to_distribution(mu, P) -> Distribution:
    rows, w = as_rows(P), as_weights(mu)
    _check_len(rows.shape[0], w)
    out = np.clip(w @ rows, 0.0, None)
    return Distribution(out / out.sum())


def is_irreducible(P) -> bool:
    rows = as_rows(P)
    ncomp, _ = connected_components(csr_matrix(rows > 0), directed=True, connection="strong")
    return ncomp == 1


def stationary_distribution(P, tol: float = DEFAULT_TOL) -> Distribution:
    """Unique invariant law of an irreducible kernel.

    Solves ``(P^T - I) pi = 0`` with one equation swapped for the normalisation
    row; above 5000 states it falls back to power iteration on the lazy chain.
    """
    rows = as_rows(P)
    n = rows.shape[0]
    if not is_irreducible(rows):
        raise Reducible("support graph is not strongly connected; invariant law is not unique")
    if n <= DIRECT_STATIONARY_MAX_N:
        A = rows.T - np.eye(n)
        A[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        try:
            pi = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(f"stationary solve failed: {exc}") from exc
    else:
        lazy = 0.5 * (rows + np.eye(n))
        pi = np.full(n, 1.0 / n)
        for _ in range(100_000):
            nxt = pi @ lazy
            if np.abs(nxt - pi).sum() <= tol * 1e-2:
                pi = nxt
                break
            pi = nxt
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if pi.min() <= 0.0:
        raise ConvergenceFailure("stationary vector has a zero entry")
    if np.abs(pi @ rows - pi).sum() > tol:
        raise ConvergenceFailure(f"||pi P - pi||_1 = {np.abs(pi @ rows - pi).sum():.3g} exceeds {tol}")
    return Distribution(pi, space=getattr(P, "space", None))


def check_reversibility(P, pi, tol: float = DEFAULT_TOL) -> bool:
    rows, w = as_rows(P), as_weights(pi)
    if np.any(w <= 0):
        raise InvalidInput("reversibility check needs pi > 0")
    flow = w[:, None] * rows
    return bool(np.abs(flow - flow.T).max() <= tol)


def lipschitz_seminorm(f, d) -> float:
    """``max_{x != y} |f(x) - f(y)| / d(x, y)``; zero for constants."""
    v, c = as_values(f), as_cost(d)
    _check_len(c.shape[0], v)
    diff = np.abs(v[:, None] - v[None, :])
    off = ~np.eye(v.size, dtype=bool)
    return float((diff[off] / c[off]).max())


def radon_nikodym(nu, pi) -> StateFunction:
    a, b = as_weights(nu), as_weights(pi)
    _check_len(b.size, a)
    bad = (b <= 0) & (a > 0)
    if np.any(bad):
        raise ZeroDenominator(f"nu charges state {int(np.flatnonzero(bad)[0])} where pi vanishes")
    out = np.zeros_like(a)
    pos = b > 0
    out[pos] = a[pos] / b[pos]
    return StateFunction(out)


def lp_norm(f, pi, p: float) -> float:
    """``L^p(pi)`` norm; ``p = inf`` gives the max over the support of ``pi``."""
    v, w = as_values(f), as_weights(pi)
    _check_len(w.size, v)
    if p == np.inf:
        return float(np.abs(v[w > 0]).max())
    if not p >= 1:
        raise InvalidInput(f"p must be >= 1 or inf, got {p}")
    return float((w @ np.abs(v) ** p) ** (1.0 / p))


def expectation(f, pi) -> float:
    return float(as_weights(pi) @ as_values(f))


def center(f, pi) -> StateFunction:
    v = as_values(f)
    return StateFunction(v - as_weights(pi) @ v)
