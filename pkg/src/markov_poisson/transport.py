"""Exact 1-Wasserstein transport on finite metric spaces.

Distances, Kantorovich potentials, the Kantorovich norm ``tau`` of a kernel,
contraction profiles with a certified value of ``Lambda = sum_j tau(P^j)``,
eccentricities and the coarse diffusion coefficient.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _simplex
from .core import (
    MetricSpec,
    StateFunction,
    as_cost,
    as_rows,
    as_weights,
    lp_norm,
)
from .errors import InvalidInput, NotContractive, SolverFailure, WrongKind

log = logging.getLogger(__name__)

EXHAUSTIVE_PAIRS_MAX_N = 256
TIE_TOL = 1e-12


def _max_iter(n: int) -> int:
    return 50 * n * n


def _check_pair(mu, nu, d):
    a, b, c = as_weights(mu), as_weights(nu), as_cost(d)
    if not (a.shape == b.shape == c.shape[:1]):
        raise InvalidInput(f"shape mismatch: mu {a.shape}, nu {b.shape}, cost {c.shape}")
    return a, b, c


@dataclass(frozen=True, eq=False)
class TransportPlan:
    plan: np.ndarray
    value: float


def _solve_reduced(a, b, c):
    """Transport the positive part of ``a - b`` onto its negative part."""
    diff = a - b
    src = np.flatnonzero(diff > 0)
    snk = np.flatnonzero(diff < 0)
    if src.size == 0 or snk.size == 0:
        return src, snk, None, None, None
    sa, sb = diff[src], -diff[snk]
    total = 0.5 * (sa.sum() + sb.sum())
    sa = sa * (total / sa.sum())
    sb = sb * (total / sb.sum())
    C = np.ascontiguousarray(c[np.ix_(src, snk)])
    eps = 1e-12 * max(C.max(), 1.0)
    plan, u, v, status, _ = _simplex.transport_simplex(sa, sb, C, _max_iter(a.size), eps)
    if status != _simplex.OPTIMAL:
        raise SolverFailure(f"transportation simplex hit its cap of {_max_iter(a.size)} pivots")
    return src, snk, plan, u, v


def wasserstein(mu, nu, d) -> TransportPlan:
    """Optimal coupling of ``mu`` and ``nu`` for the cost ``d``.

    Mass shared by both marginals stays on the diagonal; only the signed
    excess goes through the transportation simplex, which is exact because
    ``d`` is a metric.
    """
    a, b, c = _check_pair(mu, nu, d)
    plan = np.diag(np.minimum(a, b))
    src, snk, sub, _, _ = _solve_reduced(a, b, c)
    if sub is not None:
        plan[np.ix_(src, snk)] += sub
    return TransportPlan(plan=plan, value=float((plan * c).sum()))


def kantorovich_potential(mu, nu, d) -> StateFunction:
    """1-Lipschitz ``f`` with ``sum f (mu - nu) = W(mu, nu)``, normalised to ``f(0) = 0``.

    Built as the c-transform ``f(x) = min_j d(x, j) - v_j`` of the sink
    potentials, which is 1-Lipschitz on the whole space.
    """
    a, b, c = _check_pair(mu, nu, d)
    src, snk, sub, _, v = _solve_reduced(a, b, c)
    if sub is None:
        return StateFunction(np.zeros(a.size))
    f = (c[:, snk] - v[None, :]).min(axis=1)
    return StateFunction(f - f[0])


def wasserstein_closed_form(mu, nu, d: MetricSpec) -> float:
    """Total variation / weighted-TV identities for the trivial and v-weighted metrics."""
    a, b, _ = _check_pair(mu, nu, d)
    kind = getattr(d, "kind", "general")
    if kind == "trivial":
        return float(np.abs(a - b).sum())
    if kind == "v-weighted":
        return float(d.v @ np.abs(a - b))
    raise WrongKind(f"no closed form for metric kind {kind!r}")


@dataclass(frozen=True)
class KantorovichNorm:
    tau: float
    witness: tuple[int, int]
    coverage: float = 1.0
    method: str = "lp"


def _all_pairs(n: int):
    return np.triu_indices(n, k=1)


def _pair_ratios_closed(rows, d: MetricSpec, pi_idx, pj_idx):
    c = d.cost
    weights = np.ones(rows.shape[0]) if d.kind == "trivial" else d.v
    out = np.empty(pi_idx.size)
    for x in np.unique(pi_idx):
        sel = np.flatnonzero(pi_idx == x)
        ys = pj_idx[sel]
        w = np.abs(rows[x][None, :] - rows[ys]) @ weights
        out[sel] = w / c[x, ys]
    return out


def kantorovich_norm(P, d, pairs=None, method: str = "auto") -> KantorovichNorm:
    """``tau(P) = max_{x != y} W(P(x, .), P(y, .)) / d(x, y)`` with a witness pair.

    Pairs are enumerated exhaustively up to 256 states; larger spaces need a
    caller-supplied ``pairs = (xs, ys)`` subsample and report its coverage.
    ``method='auto'`` uses the exact closed forms for trivial and v-weighted
    metrics and the transportation simplex otherwise; ``'lp'`` forces the LP.
    Ties go to the lexicographically first pair.
    """
    rows, c = as_rows(P), as_cost(d)
    n = rows.shape[0]
    total = n * (n - 1) // 2
    if pairs is None:
        if n > EXHAUSTIVE_PAIRS_MAX_N:
            raise InvalidInput(f"{n} states: pass an explicit pair subsample for tau")
        pi_idx, pj_idx = _all_pairs(n)
    else:
        xs, ys = (np.asarray(p, dtype=np.int64) for p in pairs)
        lo, hi = np.minimum(xs, ys), np.maximum(xs, ys)
        keep = lo != hi
        packed = np.unique(lo[keep] * n + hi[keep])
        pi_idx, pj_idx = packed // n, packed % n
    pi_idx = np.ascontiguousarray(pi_idx, dtype=np.int64)
    pj_idx = np.ascontiguousarray(pj_idx, dtype=np.int64)
    kind = getattr(d, "kind", "general")
    if method == "auto" and kind in ("trivial", "v-weighted"):
        ratios = _pair_ratios_closed(rows, d, pi_idx, pj_idx)
        used = "closed-form"
    elif method in ("auto", "lp"):
        vals, status = _simplex.pairwise_row_w1(
            np.ascontiguousarray(rows), np.ascontiguousarray(c), pi_idx, pj_idx, _max_iter(n))
        if np.any(status != _simplex.OPTIMAL):
            raise SolverFailure("transportation simplex hit its pivot cap on some pair")
        ratios = vals / c[pi_idx, pj_idx]
        used = "lp"
    else:
        raise InvalidInput(f"unknown method {method!r}")
    top = ratios.max()
    k = int(np.flatnonzero(ratios >= top - TIE_TOL * max(1.0, top))[0])
    return KantorovichNorm(
        tau=float(top),
        witness=(int(pi_idx[k]), int(pj_idx[k])),
        coverage=pi_idx.size / total,
        method=used,
    )


# ------------------------------------------------------------ Lambda and tails

def tail_bound(bounds, upto: int, n_exact: int) -> float:
    """Certified bound on ``sum_{l > upto} tau(P^l)``.

    ``bounds[l]`` bounds ``tau(P^l)`` (``bounds[0] = 1``); lags ``1..n_exact``
    are exact values. For any exact lag ``L`` with ``tau_L < 1``,
    submultiplicativity gives ``T <= tau_L (sum_{i=upto-L+1}^{upto} b_i + T)``.
    """
    b = np.asarray(bounds, dtype=float)
    best = np.inf
    for L in range(1, min(upto, n_exact) + 1):
        t = b[L]
        if t >= 1.0:
            continue
        if t == 0.0:
            return 0.0
        # summed directly: differences of cumulative sums cancel for tiny tails
        window = float(b[upto - L + 1:upto + 1].sum())
        best = min(best, t / (1.0 - t) * window)
    return float(best)


def extend_bounds(bounds, n_exact: int, upto: int) -> np.ndarray:
    """Extend lag bounds past the exact ones via ``tau_j <= tau_L tau_{j-L}``."""
    b = list(np.asarray(bounds, dtype=float)[: n_exact + 1])
    for j in range(len(b), upto + 1):
        b.append(min(b[L] * b[j - L] for L in range(1, n_exact + 1)))
    return np.asarray(b)


@dataclass(frozen=True, eq=False)
class ContractionProfile:
    """``taus[j-1] = tau(P^j)``; ``Lambda`` includes ``tau(P^0) = 1`` and the tail."""

    taus: tuple[float, ...]
    m: int
    Lambda: float
    certified_tail: float
    witnesses: tuple[tuple[int, int], ...]
    geometric_bound: float
    displayed_bound: float
    coverage: float = 1.0
    lambda_tol: float = 1e-8
    extras: dict = field(default_factory=dict)

    @property
    def bounds(self) -> np.ndarray:
        return np.concatenate([[1.0], self.taus])

    @property
    def tau_m(self) -> float:
        return self.taus[self.m - 1]

    def tail_after(self, upto: int) -> float:
        """Certified ``sum_{l > upto} tau(P^l)`` for any ``upto >= 0``."""
        R = len(self.taus)
        if upto >= R:
            b = extend_bounds(self.bounds, R, upto)
            return tail_bound(b, upto, R)
        beyond = float(np.sum(self.taus[upto:])) + self.certified_tail
        if upto == 0:
            return beyond
        return min(beyond, tail_bound(self.bounds, upto, R))

    def to_json(self) -> dict:
        return {
            "taus": list(self.taus),
            "m": self.m,
            "lambda": self.Lambda,
            "tail": self.certified_tail,
            "witnesses": [list(w) for w in self.witnesses],
            "geometric_bound": self.geometric_bound,
            "displayed_bound": self.displayed_bound,
            "coverage": self.coverage,
        }


def contraction_profile(P, d, m_max: int = 64, lambda_tol: float = 1e-8,
                        max_lags: int = 2000, pairs=None, method: str = "auto") -> ContractionProfile:
    """Compute ``tau(P^j)`` until contraction, then until the tail of Lambda is certified.

    Raises NotContractive if no lag ``m <= m_max`` has ``tau(P^m) < 1``.
    """
    if m_max < 1:
        raise InvalidInput("m_max must be >= 1")
    rows = as_rows(P)
    taus: list[float] = []
    wit: list[tuple[int, int]] = []
    cover = 1.0
    Q = rows.copy()
    m = None

    def record(Q):
        nonlocal cover
        r = kantorovich_norm(Q, d, pairs=pairs, method=method)
        taus.append(r.tau)
        wit.append(r.witness)
        cover = min(cover, r.coverage)

    def step(Q):
        Q = np.clip(Q @ rows, 0.0, None)
        return Q / Q.sum(axis=1, keepdims=True)

    for j in range(1, m_max + 1):
        record(Q)
        if taus[-1] < 1.0:
            m = j
            break
        Q = step(Q)
    if m is None:
        raise NotContractive(f"tau(P^j) >= 1 for every j <= {m_max}")

    b = np.concatenate([[1.0], taus])
    tail = tail_bound(b, len(taus), len(taus))
    while tail >= lambda_tol and len(taus) < max_lags:
        Q = step(Q)
        record(Q)
        b = np.concatenate([[1.0], taus])
        tail = tail_bound(b, len(taus), len(taus))
    if tail >= lambda_tol:
        warnings.warn(f"Lambda tail {tail:.3g} still above {lambda_tol:g} after {max_lags} lags",
                      RuntimeWarning)

    tau_m = taus[m - 1]
    head = 1.0 + sum(taus[: m - 1])
    return ContractionProfile(
        taus=tuple(taus),
        m=m,
        Lambda=1.0 + float(np.sum(taus)) + tail,
        certified_tail=tail,
        witnesses=tuple(wit),
        geometric_bound=head / (1.0 - tau_m),
        displayed_bound=m * taus[0] ** m / (1.0 - tau_m),
        coverage=cover,
        lambda_tol=lambda_tol,
    )


# ------------------------------------------------------------ moments of d

@dataclass(frozen=True, eq=False)
class EccentricityReport:
    p: float
    values: np.ndarray
    eps_p: float


def eccentricity(pi, d, p: float, x: int) -> float:
    if p < 1:
        raise InvalidInput("p must be >= 1")
    return float(as_cost(d)[x] ** p @ as_weights(pi))


def eccentricity_norm(pi, d, p: float) -> EccentricityReport:
    """``E_p(x)`` for every state plus ``eps_p``, the ``L^p(pi)`` norm of ``E_1``."""
    if p < 1:
        raise InvalidInput("p must be >= 1")
    w, c = as_weights(pi), as_cost(d)
    values = c ** p @ w
    e1 = c @ w
    return EccentricityReport(p=p, values=values, eps_p=lp_norm(e1, w, p))


def coarse_diffusion(P, d, pi):
    """Per-state coarse diffusion ``sigma(x)`` and its ``L^2(pi)`` norm."""
    rows, c, w = as_rows(P), as_cost(d), as_weights(pi)
    sq = 0.5 * np.einsum("xy,yz,xz->x", rows, c * c, rows)
    sq = np.clip(sq, 0.0, None)
    return StateFunction(np.sqrt(sq)), float(np.sqrt(w @ sq))


def diameter(d) -> float:
    return float(as_cost(d).max())
