"""Desk-scale chains and metrics with known answers, plus random instance generators.

Every constructor returns a :class:`ZooModel`, which unpacks like a tuple
(``P, d = two_state(0.3, 0.2)``) and carries a :class:`ModelSpec` recording
the parameters, the seed of randomised instances and any known values.

Heat-bath states use the bit encoding ``x = sum_g 2^g [spin_g = +1]``.

Only finite chains live here. Continuous samplers (slice sampling, MALA,
NUTS, stereographic and geodesic variants) are listed in ``DOCUMENTED_ONLY``
and are not discretised.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .core import (
    Distribution,
    FiniteKernel,
    MetricSpec,
    as_rows,
    as_weights,
)
from .errors import InvalidInput

MAX_ISING_SITES = 12


@dataclass(frozen=True)
class ModelSpec:
    """``expected`` maps a quantity name to ``(value, provenance)``."""

    name: str
    parameters: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ZooModel:
    kernel: FiniteKernel
    metric: MetricSpec | None
    spec: ModelSpec
    pi: Distribution | None = None
    parts: tuple = ()

    def _items(self) -> tuple:
        return self.parts or (self.kernel, self.metric)

    def __iter__(self):
        return iter(self._items())

    def __getitem__(self, i):
        return self._items()[i]

    def __len__(self):
        return len(self._items())


def _in_open_unit(name: str, x: float) -> None:
    if not 0.0 < x < 1.0:
        raise InvalidInput(f"{name} must lie in (0, 1), got {x}")


# ------------------------------------------------------------ named chains

def two_state(a: float, b: float) -> ZooModel:
    """``P = [[1-a, a], [b, 1-b]]`` with ``d(0, 1) = 1``.

    Known values: ``tau(P^j) = |1-a-b|^j``, ``pi = (b, a) / (a + b)``,
    ``Lambda = 1 / (1 - |1-a-b|)`` and ``kappa = |1-a-b|``.
    """
    _in_open_unit("a", a)
    _in_open_unit("b", b)
    P = FiniteKernel([[1.0 - a, a], [b, 1.0 - b]])
    d = MetricSpec.line([0.0, 1.0])
    lam = abs(1.0 - a - b)
    pi = Distribution([b / (a + b), a / (a + b)])
    expected = {
        "tau": (lam, "closed form |1-a-b|"),
        "pi": ([b / (a + b), a / (a + b)], "closed form (b, a)/(a+b)"),
        "Lambda": (1.0 / (1.0 - lam), "geometric series of |1-a-b|^j"),
        "kappa": (lam, "second eigenvalue 1-a-b"),
    }
    return ZooModel(P, d, ModelSpec("two_state", {"a": a, "b": b}, expected), pi)


def dyadic_shift(k: int) -> ZooModel:
    """Binary-digit shift ``m -> floor(m/2) + Z 2^{k-1}`` on ``2^k`` points ``m / 2^k``.

    The continuous version contracts at rate 1/2 per step. This truncation does
    not: neighbouring odd/even pairs keep ratio 1 until lag ``k``, where all
    rows of ``P^k`` coincide. So ``tau(P^j) = 1`` for ``j < k``,
    ``tau(P^k) = 0`` and ``Lambda = k``.
    """
    if not 2 <= k <= 12:
        raise InvalidInput(f"k must lie in [2, 12], got {k}")
    n = 2 ** k
    rows = np.zeros((n, n))
    m = np.arange(n)
    rows[m, m // 2] += 0.5
    rows[m, m // 2 + n // 2] += 0.5
    d = MetricSpec.line(m / n)
    expected = {
        "taus": ([1.0] * (k - 1) + [0.0], "rows of P^j differ by shifts of 2^-(k-j) until j = k"),
        "m": (k, "first lag with tau < 1"),
        "Lambda": (float(k), "1 + (k - 1) ones"),
        "pi": ([1.0 / n] * n, "doubly stochastic"),
    }
    return ZooModel(FiniteKernel(rows), d, ModelSpec("dyadic_shift", {"k": k}, expected),
                    Distribution(np.full(n, 1.0 / n)))


def _spins(n_sites: int) -> np.ndarray:
    x = np.arange(2 ** n_sites)
    return 2 * ((x[:, None] >> np.arange(n_sites)[None, :]) & 1) - 1


def ising_heat_bath(edges, beta: float, h: float = 0.0, n_sites: int | None = None) -> ZooModel:
    """Single-site heat bath for ``pi(x) ~ exp(beta sum_{ij in E} x_i x_j + h sum_i x_i)``.

    A uniformly chosen site is redrawn from its conditional law given the
    others. The metric is the Hamming distance (number of differing spins).
    """
    edges = [tuple(int(v) for v in e) for e in edges]
    if n_sites is None:
        n_sites = 1 + max((max(e) for e in edges), default=0)
    if not 1 <= n_sites <= MAX_ISING_SITES:
        raise InvalidInput(f"site count must lie in [1, {MAX_ISING_SITES}], got {n_sites}")
    if beta < 0:
        raise InvalidInput("beta must be >= 0")
    if any(i == j or not (0 <= i < n_sites and 0 <= j < n_sites) for i, j in edges):
        raise InvalidInput("edges must join two distinct sites in range")
    n = 2 ** n_sites
    s = _spins(n_sites)
    x = np.arange(n)
    neigh = np.zeros((n_sites, n_sites))
    for i, j in edges:
        neigh[i, j] += 1.0
        neigh[j, i] += 1.0
    field_ = beta * s @ neigh + h
    rows = np.zeros((n, n))
    for g in range(n_sites):
        # local field excludes site g itself because neigh has a zero diagonal
        p_up = 1.0 / (1.0 + np.exp(-2.0 * field_[:, g]))
        up = x | (1 << g)
        down = x & ~(1 << g)
        np.add.at(rows, (x, up), p_up / n_sites)
        np.add.at(rows, (x, down), (1.0 - p_up) / n_sites)
    energy = 0.5 * beta * np.einsum("xi,ij,xj->x", s, neigh, s) + h * s.sum(axis=1)
    w = np.exp(energy - energy.max())
    pi = w / w.sum()
    hamming = np.array([[bin(a ^ b).count("1") for b in range(n)] for a in range(n)], float)
    d = MetricSpec(hamming, kind="general")
    expected = {"pi": (pi.tolist(), "exact enumeration of the Gibbs weights")}
    if beta == 0.0 and h == 0.0:
        expected["tau"] = (1.0 - 1.0 / n_sites, "independent sites: one coordinate refreshed per step")
    spec = ModelSpec("ising_heat_bath", {"edges": [list(e) for e in edges], "beta": beta, "h": h,
                                         "n_sites": n_sites}, expected)
    return ZooModel(FiniteKernel(rows), d, spec, Distribution(pi))


def independent_mh(target, proposal) -> FiniteKernel:
    """Independence sampler: propose ``y ~ proposal``, accept with ``min(1, w(y)/w(x))``.

    ``w = target / proposal``; rejected mass stays on the diagonal.
    """
    t, q = as_weights(target), as_weights(proposal)
    if t.shape != q.shape:
        raise InvalidInput("target and proposal live on different spaces")
    if np.any((t > 0) & (q <= 0)):
        raise InvalidInput("proposal must be positive wherever the target is")
    w = np.divide(t, q, out=np.zeros_like(t), where=q > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w[:, None] > 0, w[None, :] / w[:, None], 1.0)
    rows = q[None, :] * np.minimum(1.0, ratio)
    np.fill_diagonal(rows, 0.0)
    np.fill_diagonal(rows, np.maximum(1.0 - rows.sum(axis=1), 0.0))  # rounding can dip below 0
    return FiniteKernel(np.clip(rows, 0.0, 1.0))


def dobrushin_mixture(Q, theta: float, pi_target, tol: float = 1e-10) -> FiniteKernel:
    """``(1 - theta) Q + theta Pi`` where every row of ``Pi`` is ``pi_target``."""
    rows, w = as_rows(Q), as_weights(pi_target)
    if not 0.0 < theta <= 1.0:
        raise InvalidInput(f"theta must lie in (0, 1], got {theta}")
    if np.abs(w @ rows - w).sum() > tol:
        raise InvalidInput("pi_target is not invariant for Q")
    return FiniteKernel((1.0 - theta) * rows + theta * np.broadcast_to(w, rows.shape))


# ------------------------------------------------------------ random instances

@dataclass(frozen=True)
class DriftSpec:
    """Geometric target ``pi(x) ~ exp(-decay x)`` with ``V(x) = exp(eta x)``.

    The metric is ``d_alpha(x, y) = 1{x != y}(V^alpha(x) + V^alpha(y))``.
    """

    eta: float = 0.5
    decay: float = 1.0
    alpha: float = 0.4
    noise: float = 0.0


def random_metric(n: int, seed: int, kind: str = "general") -> MetricSpec:
    """Random metric: off-diagonal entries uniform in [1, 2] (``general``),
    sorted uniform positions (``line``) or a random ``v-weighted`` metric."""
    rng = np.random.default_rng(seed)
    if kind == "general":
        a = rng.uniform(1.0, 2.0, size=(n, n))
        c = np.triu(a, 1)
        return MetricSpec(c + c.T, kind="general")
    if kind == "line":
        return MetricSpec.line(np.cumsum(rng.uniform(0.1, 1.0, size=n)))
    if kind == "v-weighted":
        return MetricSpec.v_weighted(rng.uniform(0.5, 2.0, size=n))
    if kind == "trivial":
        return MetricSpec.trivial(n)
    raise InvalidInput(f"unknown metric kind {kind!r}")


def _metropolis_uniform(pi: np.ndarray) -> np.ndarray:
    n = pi.size
    rows = np.minimum(1.0, pi[None, :] / pi[:, None]) / (n - 1)
    np.fill_diagonal(rows, 0.0)
    np.fill_diagonal(rows, np.maximum(1.0 - rows.sum(axis=1), 0.0))  # rounding can dip below 0
    return rows


def _metropolis_nearest(pi: np.ndarray) -> np.ndarray:
    n = pi.size
    rows = np.zeros((n, n))
    for x in range(n):
        for y in (x - 1, x + 1):
            if 0 <= y < n:
                rows[x, y] = 0.5 * min(1.0, pi[y] / pi[x])
        rows[x, x] = max(1.0 - rows[x].sum(), 0.0)
    return rows


def v_drift(n: int, drift: DriftSpec = DriftSpec(), seed: int = 0) -> ZooModel:
    """Nearest-neighbour Metropolis on a geometric target with the ``d_alpha`` metric.

    ``V(x) = exp(eta x)`` satisfies a drift condition for ``eta < decay``.
    """
    if n < 2:
        raise InvalidInput("n must be >= 2")
    if not 0.0 < drift.alpha < 0.5:
        raise InvalidInput("alpha must lie in (0, 1/2)")
    rng = np.random.default_rng(seed)
    x = np.arange(n)
    logw = -drift.decay * x + drift.noise * rng.standard_normal(n)
    pi = np.exp(logw - logw.max())
    pi /= pi.sum()
    V = np.exp(drift.eta * x)
    d = MetricSpec.v_weighted(V ** drift.alpha)
    params = {"n": n, "eta": drift.eta, "decay": drift.decay, "alpha": drift.alpha,
              "noise": drift.noise, "seed": seed}
    P = FiniteKernel(_metropolis_nearest(pi))
    return ZooModel(P, d, ModelSpec("v_drift", params), Distribution(pi),
                    parts=(P, Distribution(pi), d))


def random_reversible(n: int, seed: int, drift: DriftSpec | None = None,
                      metric: str = "trivial") -> ZooModel:
    """Random Metropolis chain; unpacks as ``(P, pi, d)``.

    Without ``drift``: uniform proposals over a lognormal target, with a
    ``metric`` of the requested kind. With ``drift``: the nearest-neighbour
    chain of :func:`v_drift` with a seeded perturbation of the target.
    """
    if n < 2:
        raise InvalidInput("n must be >= 2")
    if drift is not None:
        return v_drift(n, drift, seed)
    rng = np.random.default_rng(seed)
    w = rng.lognormal(0.0, 1.0, size=n)
    pi = w / w.sum()
    P = FiniteKernel(_metropolis_uniform(pi))
    d = random_metric(n, seed + 1, metric)
    spec = ModelSpec("random_reversible", {"n": n, "seed": seed, "metric": metric})
    return ZooModel(P, d, spec, Distribution(pi), parts=(P, Distribution(pi), d))


# ------------------------------------------------------------ registry

def _path_edges(n_sites: int):
    return [(i, i + 1) for i in range(n_sites - 1)]


def _ising_path(n_sites: int = 4, beta: float = 0.1, h: float = 0.0) -> ZooModel:
    return ising_heat_bath(_path_edges(int(n_sites)), float(beta), float(h), int(n_sites))


def _imh(n: int = 5, seed: int = 0) -> ZooModel:
    rng = np.random.default_rng(int(seed))
    t = rng.lognormal(size=int(n))
    t /= t.sum()
    q = np.full(int(n), 1.0 / int(n))
    P = independent_mh(t, q)
    w = t / q
    spec = ModelSpec("independent_mh", {"n": int(n), "seed": int(seed)},
                     {"tau_upper": (float(1.0 - 1.0 / w.max()), "uniform-ergodicity bound 1 - 1/max w")})
    return ZooModel(P, MetricSpec.trivial(int(n)), spec, Distribution(t))


def _mixture(n: int = 5, theta: float = 0.5, seed: int = 0) -> ZooModel:
    base = random_reversible(int(n), int(seed))
    P = dobrushin_mixture(base.kernel, float(theta), base.pi)
    spec = ModelSpec("dobrushin_mixture", {"n": int(n), "theta": float(theta), "seed": int(seed)})
    return ZooModel(P, MetricSpec.trivial(int(n)), spec, base.pi)


REGISTRY: dict[str, tuple[Callable[..., ZooModel], dict[str, Any], str]] = {
    "two_state": (lambda a=0.3, b=0.2: two_state(float(a), float(b)), {"a": 0.3, "b": 0.2},
                  "two-state chain with closed-form tau, pi, Lambda, u"),
    "dyadic_shift": (lambda k=4: dyadic_shift(int(k)), {"k": 4},
                     "binary-digit shift on 2^k points of [0, 1)"),
    "ising": (_ising_path, {"n_sites": 4, "beta": 0.1, "h": 0.0},
              "heat bath for the Ising model on a path graph"),
    "independent_mh": (_imh, {"n": 5, "seed": 0},
                       "independence sampler, random target, uniform proposal"),
    "dobrushin_mixture": (_mixture, {"n": 5, "theta": 0.5, "seed": 0},
                          "(1 - theta) Q + theta Pi over a random Metropolis chain"),
    "random_reversible": (lambda n=8, seed=0, metric="trivial":
                          random_reversible(int(n), int(seed), metric=str(metric)),
                          {"n": 8, "seed": 0, "metric": "trivial"},
                          "Metropolis chain with uniform proposals on a lognormal target"),
    "v_drift": (lambda n=20, eta=0.5, decay=1.0, alpha=0.4, seed=0, noise=0.0:
                v_drift(int(n), DriftSpec(float(eta), float(decay), float(alpha), float(noise)),
                        int(seed)),
                {"n": 20, "eta": 0.5, "decay": 1.0, "alpha": 0.4, "seed": 0, "noise": 0.0},
                "geometric target, V = exp(eta x), metric d_alpha"),
}

DOCUMENTED_ONLY = {
    "slice_sampling": "continuous state space; out of scope",
    "geodesic_slice_sampling": "continuous state space; out of scope",
    "stereographic_mcmc": "continuous state space; out of scope",
    "mala": "continuous state space; out of scope",
    "nuts": "continuous state space; out of scope",
}


def list_models() -> list[tuple[str, dict, str]]:
    return [(name, dict(defaults), doc) for name, (_, defaults, doc) in REGISTRY.items()]


def build(name: str, **params) -> ZooModel:
    if name not in REGISTRY:
        hint = " (documented only)" if name in DOCUMENTED_ONLY else ""
        raise InvalidInput(f"unknown zoo model {name!r}{hint}")
    fn, defaults, _ = REGISTRY[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidInput(f"unknown parameters for {name}: {sorted(unknown)}")
    return fn(**{**defaults, **params})
