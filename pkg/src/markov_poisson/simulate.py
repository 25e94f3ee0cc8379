"""Trajectories, the martingale decomposition of partial sums, and maximal inequalities.

For a solution ``u`` of ``u - Pu = f - pi(f)`` the centred partial sums split
path by path as ``S_k - k pi(f) = M_k + R_k`` with martingale increments
``u(X_{j+1}) - Pu(X_j)`` and remainder ``R_k = u(X_1) - u(X_{k+1})``. This
module samples chains, checks that identity, estimates the maxima by Monte
Carlo and evaluates the matching theoretical bounds.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _sampling
from ._accel import set_threads
from .core import (
    Distribution,
    as_cost,
    as_rows,
    as_values,
    as_weights,
    lipschitz_seminorm,
    lp_norm,
    radon_nikodym,
    stationary_distribution,
    validate_distribution,
)
from .errors import InfiniteDiameter, InvalidInput
from .poisson import PoissonSolution, solve_direct
from .transport import ContractionProfile, contraction_profile, eccentricity_norm

VARIANTS = ("as-stated", "proof-consistent")
SIGMA_MARGIN = 3.0
Z95 = 1.959963984540054


# ------------------------------------------------------------ paths

@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``X_1 .. X_{n+1}``; the extra state makes ``M_n`` and ``R_n`` computable."""

    states: np.ndarray
    seed: int
    nu: Distribution
    replica: int = 0

    @property
    def n(self) -> int:
        return self.states.size - 1


def sample_trajectory(P, nu, n: int, seed: int, replica: int = 0) -> Trajectory:
    """Inverse-CDF simulation of ``n + 1`` states, ``X_1 ~ nu``.

    Replica ``r`` of a Monte Carlo experiment with the same ``seed`` follows
    exactly this path.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    rows, w = as_rows(P), as_weights(nu)
    if w.shape != rows.shape[:1]:
        raise InvalidInput("nu and P live on different spaces")
    validate_distribution(w).raise_if_invalid("nu")
    states = _sampling.sample_paths(rows, w, n + 1, 1, seed, first_replica=replica)[0]
    states.setflags(write=False)
    nu = nu if isinstance(nu, Distribution) else Distribution(w)
    return Trajectory(states=states, seed=int(seed), nu=nu, replica=int(replica))


@dataclass(frozen=True, eq=False)
class DecompositionSeries:
    """Raw partial sums ``S``, martingale ``M`` and remainder ``R`` for ``k = 1..n``."""

    S: np.ndarray
    M: np.ndarray
    R: np.ndarray
    pi_f: float = 0.0

    @property
    def centered(self) -> np.ndarray:
        k = np.arange(1, self.S.size + 1)
        return self.S - k * self.pi_f

    @property
    def identity_error(self) -> float:
        if self.S.size == 0:
            return 0.0
        return float(np.abs(self.centered - self.M - self.R).max())


def _u_values(u) -> np.ndarray:
    return as_values(u.u if isinstance(u, PoissonSolution) else u)


def decompose(traj: Trajectory, f, u, P, pi=None) -> DecompositionSeries:
    """Split the partial sums of ``f`` along ``traj`` into martingale and remainder.

    ``u`` must solve Poisson's equation for ``f``; ``pi`` defaults to the
    stationary law of ``P``.
    """
    rows, fv, uv = as_rows(P), as_values(f), _u_values(u)
    n_states = rows.shape[0]
    if fv.shape != (n_states,) or uv.shape != (n_states,):
        raise InvalidInput("f, u and P live on different spaces")
    x = np.asarray(traj.states)
    if x.size and (x.min() < 0 or x.max() >= n_states):
        raise InvalidInput("trajectory visits states outside the kernel's space")
    w = as_weights(pi if pi is not None else stationary_distribution(rows))
    pu = rows @ uv
    S = np.cumsum(fv[x[:-1]])
    M = np.cumsum(uv[x[1:]] - pu[x[:-1]])
    R = uv[x[0]] - uv[x[1:]]
    return DecompositionSeries(S=S, M=M, R=R, pi_f=float(w @ fv))


def maximal_stats(series: DecompositionSeries) -> tuple[float, float, float]:
    """``(S*_n, M*_n, R*_n)``: running maxima of absolute values of the centred series."""
    if series.S.size == 0:
        return 0.0, 0.0, 0.0
    return (float(np.abs(series.centered).max()), float(np.abs(series.M).max()),
            float(np.abs(series.R).max()))


# ------------------------------------------------------------ bounds

def holder_conjugate(q: float) -> float:
    if not 1.0 < q < math.inf:
        raise InvalidInput(f"q must lie in (1, inf), got {q}")
    return q / (q - 1.0)


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise InvalidInput(f"variant must be one of {VARIANTS}, got {variant!r}")


def _check_common(delta: float, t: float | None = None) -> None:
    if not math.isfinite(delta):
        raise InfiniteDiameter("the metric has infinite diameter")
    if t is not None and not t > 0:
        raise InvalidInput("t must be > 0")


def martingale_second_moment_bound(delta, Lambda, n, q=2.0, rn_norm=1.0,
                                   variant="as-stated") -> float:
    """Bound on ``E_nu[M_n^2]`` for ``||f||_d <= 1`` with ``C = delta * Lambda``.

    ``as-stated`` uses ``2 n rho C^{2r}``; ``proof-consistent`` uses the
    increment lemma's constant and ``||u||_{L^r} <= C`` directly, giving
    ``4 n rho C^2``.
    """
    _check_variant(variant)
    _check_common(delta)
    r = 2.0 * holder_conjugate(q)
    C = delta * Lambda
    if variant == "as-stated":
        return 2.0 * n * rn_norm * C ** (2.0 * r)
    return 4.0 * n * rn_norm * C * C


def bound_doob_tail(delta, Lambda, n, t, p, q, rn_norm, moment_Mn, f_lip=1.0) -> float:
    """``(2/t)^p (E|M_n|^p + C^p ||f||_d^p)`` with ``C = delta * Lambda``.

    ``moment_Mn`` is ``E_nu|M_n|^p`` for ``f`` itself (not normalised).
    """
    _check_common(delta, t)
    holder_conjugate(q)
    if p < 1:
        raise InvalidInput("p must be >= 1")
    C = delta * Lambda
    return (2.0 / t) ** p * (moment_Mn + (C * f_lip) ** p)


def bound_doob_lipschitz(delta, Lambda, n, t, q=2.0, rn_norm=1.0, f_lip=1.0,
                         variant="as-stated") -> float:
    """Tail bound ``P_nu[S*_n > t]`` for Lipschitz ``f``.

    ``as-stated``: ``(4/t^2)(2 n rho C^{2r} + C^2)``; ``proof-consistent``:
    ``(4/t^2)(4 n rho C^2 + C^2)``. ``rho = ||d nu / d pi||_q``, ``r = 2s``
    with ``s`` the Hoelder conjugate of ``q``. A seminorm ``f_lip`` rescales
    ``t`` to ``t / f_lip``.
    """
    _check_common(delta, t)
    if f_lip == 0.0:
        return 0.0
    te = t / f_lip
    C = delta * Lambda
    m2 = martingale_second_moment_bound(delta, Lambda, n, q, rn_norm, variant)
    return 4.0 / te ** 2 * (m2 + C * C)


def bound_l2_maximal(delta, Lambda, n, q=2.0, rn_norm=1.0, f_lip=1.0,
                     variant="as-stated") -> float:
    """Bound on ``E_nu[(S*_n)^2]``.

    ``as-stated``: ``32 C^{2r} n rho + 2 C^2``; ``proof-consistent``:
    ``32 (4 n rho C^2) + 2 C^2``. Scales with ``f_lip ** 2``.
    """
    _check_variant(variant)
    _check_common(delta)
    C = delta * Lambda
    if variant == "as-stated":
        r = 2.0 * holder_conjugate(q)
        head = 32.0 * C ** (2.0 * r) * n * rn_norm
    else:
        head = 32.0 * martingale_second_moment_bound(delta, Lambda, n, q, rn_norm, variant)
    return (head + 2.0 * C * C) * f_lip ** 2


def bound_finite_moment(Lambda, eps_r, n, t, q=2.0, rn_norm=1.0, C_hat=0.0, f_lip=1.0,
                        variant="as-stated") -> float:
    """``(4n/t^2)(4 rho (Lambda eps_r)^2 + C_hat)`` under the remainder assumption.

    Both variants coincide here; the switch exists for a uniform interface.
    """
    _check_variant(variant)
    holder_conjugate(q)
    if not t > 0:
        raise InvalidInput("t must be > 0")
    if f_lip == 0.0:
        return 0.0
    te = t / f_lip
    return 4.0 * n / te ** 2 * (4.0 * rn_norm * (Lambda * eps_r) ** 2 + C_hat)


def bound_finite_moment_l2(Lambda, eps_r, n, q=2.0, rn_norm=1.0, C_hat=0.0, f_lip=1.0,
                           variant="as-stated") -> float:
    """``4n (8 rho (Lambda eps_r)^2 + C_hat)``, scaled by ``f_lip ** 2``."""
    _check_variant(variant)
    holder_conjugate(q)
    return 4.0 * n * (8.0 * rn_norm * (Lambda * eps_r) ** 2 + C_hat) * f_lip ** 2


# ------------------------------------------------------------ statistics

def clopper_pearson(k, N: int, level: float = 0.95):
    """Exact binomial interval for ``k`` successes out of ``N``."""
    k = np.asarray(k, dtype=float)
    a = 1.0 - level
    lo = np.where(k > 0, stats.beta.ppf(a / 2, k, N - k + 1), 0.0)
    hi = np.where(k < N, stats.beta.ppf(1 - a / 2, k + 1, N - k), 1.0)
    return np.nan_to_num(lo), np.nan_to_num(hi, nan=1.0)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass(frozen=True, eq=False)
class MaximalReport:
    """Monte Carlo estimates of the maximal statistics next to their bounds.

    Tails carry Clopper-Pearson 95% intervals and a binomial standard error;
    second moments carry a CLT standard error. A check passes when the
    estimate is at most ``bound + 3 * se``.
    """

    t_grid: np.ndarray
    empirical_tail: np.ndarray
    tail_ci_low: np.ndarray
    tail_ci_high: np.ndarray
    tail_se: np.ndarray
    empirical_second_moment: float
    second_moment_se: float
    theorem_bounds: dict
    l2_bounds: dict
    dominance: dict
    constants: dict
    params: dict
    extras: dict = field(default_factory=dict)

    @property
    def tail_radius(self) -> np.ndarray:
        return 0.5 * (self.tail_ci_high - self.tail_ci_low)

    @property
    def second_moment_radius(self) -> float:
        return Z95 * self.second_moment_se

    @property
    def degenerate_ci(self) -> bool:
        return self.params["replicas"] < 2

    @property
    def all_dominance_hold(self) -> bool:
        return all(bool(np.all(v)) for v in self.dominance.values())

    def to_csv(self) -> str:
        names = sorted(self.theorem_bounds)
        fields = ["t", "empirical_tail", "tail_ci_low", "tail_ci_high", "tail_se"]
        fields += [f"bound_{k}" for k in names] + [f"holds_{k}" for k in names]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(fields)
        for i, t in enumerate(self.t_grid):
            row = [t, self.empirical_tail[i], self.tail_ci_low[i], self.tail_ci_high[i],
                   self.tail_se[i]]
            row += [self.theorem_bounds[k][i] for k in names]
            row += [self.dominance[f"tail_{k}"][i] for k in names]
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "params": self.params,
            "constants": self.constants,
            "second_moment": {"estimate": self.empirical_second_moment,
                              "se": _nan_to_none(self.second_moment_se),
                              "radius95": _nan_to_none(self.second_moment_radius),
                              "bounds": self.l2_bounds},
            "dominance": {k: (bool(np.all(v)) if np.ndim(v) else bool(v))
                          for k, v in sorted(self.dominance.items())},
            "all_dominance_hold": self.all_dominance_hold,
            "degenerate_ci": self.degenerate_ci,
            "extras": {k: _nan_to_none(v) for k, v in self.extras.items()},
        }


def _nan_to_none(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def mc_maximal_experiment(P, nu, f, n: int, replicas: int, seed: int, t_grid, d,
                          q: float = 2.0, profile: ContractionProfile | None = None,
                          pi=None, threads: int | None = None) -> MaximalReport:
    """Estimate ``P_nu[S*_n > t]`` and ``E_nu[(S*_n)^2]`` and compare with the bounds.

    Parameters
    ----------
    P, nu, f : kernel, initial law (``None`` means ``pi``) and forcing function.
    n, replicas, seed : path length, number of independent paths, RNG key.
    t_grid : thresholds for the tail estimate; sorted internally.
    d : metric used for ``tau``, ``Lambda`` and ``||f||_d``.
    q : exponent for ``||d nu / d pi||_q``.
    profile : optional precomputed contraction profile for ``(P, d)``.
    threads : cap on worker threads; the result does not depend on it.

    Returns
    -------
    MaximalReport
        Evaluates both variants of the Doob-type and ``L^2`` bounds and the
        finite-moment bounds with a deterministic remainder constant
        ``C_hat = osc(u)^2 / ||f||_d^2``.
    """
    if n < 1 or replicas < 1:
        raise InvalidInput("n and replicas must be >= 1")
    t = np.sort(np.asarray(t_grid, dtype=float).ravel())
    if t.size == 0 or np.any(t <= 0):
        raise InvalidInput("t_grid must be a non-empty list of positive thresholds")
    rows, fv, c = as_rows(P), as_values(f), as_cost(d)
    w = as_weights(pi if pi is not None else stationary_distribution(rows))
    nu_w = w if nu is None else as_weights(nu)
    validate_distribution(nu_w).raise_if_invalid("nu")
    profile = profile or contraction_profile(rows, d)
    sol = solve_direct(rows, w, fv)
    u = as_values(sol.u)

    set_threads(threads)
    table = _sampling.replica_maxima(rows, nu_w, fv - w @ fv, u, n, replicas, seed)
    s_star, m_star, r_star, m_n = table[:, 0], table[:, 1], table[:, 2], table[:, 3]

    hits = (s_star[:, None] > t[None, :]).sum(axis=0)
    p_hat = hits / replicas
    lo, hi = clopper_pearson(hits, replicas)
    se_tail = np.sqrt(p_hat * (1.0 - p_hat) / replicas)
    m2, m2_se = _mean_se(s_star ** 2)

    delta = float(c.max())
    Lam = profile.Lambda
    s = holder_conjugate(q)
    r = 2.0 * s
    rho = lp_norm(radon_nikodym(nu_w, w), w, q)
    f_lip = lipschitz_seminorm(fv, c)
    eps_r = eccentricity_norm(w, c, r).eps_p
    osc = float(u.max() - u.min())
    c_hat = (osc / f_lip) ** 2 if f_lip > 0 else 0.0

    tails, l2 = {}, {}
    for variant in VARIANTS:
        key = variant.replace("-", "_")
        tails[f"doob_{key}"] = np.array(
            [bound_doob_lipschitz(delta, Lam, n, ti, q, rho, f_lip, variant) for ti in t])
        l2[f"l2_{key}"] = bound_l2_maximal(delta, Lam, n, q, rho, f_lip, variant)
    tails["finite_moment"] = np.array(
        [bound_finite_moment(Lam, eps_r, n, ti, q, rho, c_hat, f_lip) for ti in t])
    l2["finite_moment_l2"] = bound_finite_moment_l2(Lam, eps_r, n, q, rho, c_hat, f_lip)

    m2_margin = SIGMA_MARGIN * (0.0 if math.isnan(m2_se) else m2_se)
    dominance = {f"tail_{k}": p_hat <= b + SIGMA_MARGIN * se_tail for k, b in tails.items()}
    dominance.update({f"second_moment_{k}": bool(m2 <= b + m2_margin) for k, b in l2.items()})
    dominance["pathwise_eq3"] = bool(np.all(s_star <= m_star + r_star + 1e-9 * (1 + s_star)))

    mn_mean, mn_se = _mean_se(m_n)
    extras = {
        "mean_M_n": mn_mean,
        "mean_M_n_se": mn_se,
        "mean_M_star_sq": float(np.mean(m_star ** 2)),
        "mean_R_star_sq": float(np.mean(r_star ** 2)),
        "max_S_star": float(s_star.max()),
    }
    constants = {"delta": delta, "Lambda": Lam, "C": delta * Lam, "q": q, "s": s, "r": r,
                 "rn_norm": rho, "f_lip": f_lip, "eps_r": eps_r, "C_hat": c_hat,
                 "pi_f": float(w @ fv)}
    params = {"n": int(n), "replicas": int(replicas), "seed": int(seed),
              "t_grid": [float(x) for x in t]}
    return MaximalReport(t_grid=t, empirical_tail=p_hat, tail_ci_low=lo, tail_ci_high=hi,
                         tail_se=se_tail, empirical_second_moment=m2, second_moment_se=m2_se,
                         theorem_bounds=tails, l2_bounds=l2, dominance=dominance,
                         constants=constants, params=params, extras=extras)


# ------------------------------------------------------------ diagnostics

def martingale_increment_moments(P, nu, u, n: int, replicas: int, seed: int,
                                 p: float = 2.0, q: float = 2.0, pi=None):
    """Per-step estimates of ``E_nu|Delta_j|^p`` and the bound ``2 rho^{1/p} ||u||_{L^{ps}}``.

    Returns ``(estimate, se, bound)`` where ``estimate[j]`` is the ``p``-th
    moment (not its root) for ``j = 1..n`` and ``se`` its standard error.
    """
    rows, uv = as_rows(P), _u_values(u)
    w = as_weights(pi if pi is not None else stationary_distribution(rows))
    nu_w = w if nu is None else as_weights(nu)
    x = _sampling.sample_paths(rows, nu_w, n + 1, replicas, seed)
    delta = np.abs(uv[x[:, 1:]] - (rows @ uv)[x[:, :-1]]) ** p
    est = delta.mean(axis=0)
    se = delta.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.full(n, np.nan)
    s = holder_conjugate(q)
    rho = lp_norm(radon_nikodym(nu_w, w), w, q)
    bound = 2.0 * rho ** (1.0 / p) * lp_norm(uv, w, p * s)
    return est, se, bound


@dataclass(frozen=True, eq=False)
class RemainderDiagnostic:
    """``E[(R*_n)^2] / (n ||f||_d^2)`` across ``n``.

    ``c_hat`` is the largest estimate, ``c_hat_upper`` the largest
    ``estimate + 3 se`` and ``c_hat_det`` the path-wise bound
    ``osc(u)^2 / (n_min ||f||_d^2)``.
    """

    c_hat: float
    c_hat_upper: float
    c_hat_det: float
    n_grid: np.ndarray
    estimate: np.ndarray
    se: np.ndarray

    def __iter__(self):
        yield self.c_hat
        yield self.table()

    def table(self) -> list[dict]:
        return [{"n": int(n), "estimate": float(e), "se": float(s)}
                for n, e, s in zip(self.n_grid, self.estimate, self.se)]

    @property
    def spread(self) -> float:
        """Max over min of the positive estimates (``inf`` if some estimate is 0)."""
        lo = self.estimate.min()
        return float(self.estimate.max() / lo) if lo > 0 else math.inf

    def growth_detected(self, sigmas: float = SIGMA_MARGIN) -> bool:
        """True if some estimate exceeds its predecessor by more than ``sigmas`` joint se."""
        e, s = self.estimate, np.nan_to_num(self.se)
        jump = e[1:] - e[:-1]
        return bool(np.any(jump > sigmas * np.hypot(s[1:], s[:-1])))


def assumption_Rn_diagnostic(P, nu, f, u, n_grid, replicas: int, seed: int, d,
                             pi=None) -> RemainderDiagnostic:
    """Monte Carlo check that ``E_nu[(R*_n)^2] <= C_hat n ||f||_d^2`` stays bounded in ``n``.

    Unpacks as ``(c_hat, table)``.
    """
    rows, fv, uv, c = as_rows(P), as_values(f), _u_values(u), as_cost(d)
    w = as_weights(pi if pi is not None else stationary_distribution(rows))
    nu_w = w if nu is None else as_weights(nu)
    grid = np.sort(np.asarray(n_grid, dtype=np.int64))
    if grid.size == 0 or grid.min() < 1:
        raise InvalidInput("n_grid must hold positive path lengths")
    f_lip = lipschitz_seminorm(fv, c)
    est = np.zeros(grid.size)
    se = np.zeros(grid.size)
    if f_lip > 0:
        for i, n in enumerate(grid):
            table = _sampling.replica_maxima(rows, nu_w, fv - w @ fv, uv, int(n), replicas, seed)
            ratio = table[:, 2] ** 2 / (n * f_lip ** 2)
            est[i], se[i] = _mean_se(ratio)
    osc = float(uv.max() - uv.min())
    det = osc ** 2 / (grid.min() * f_lip ** 2) if f_lip > 0 else 0.0
    upper = float(np.max(est + SIGMA_MARGIN * np.nan_to_num(se)))
    return RemainderDiagnostic(c_hat=float(est.max()), c_hat_upper=upper, c_hat_det=det,
                               n_grid=grid, estimate=est, se=se)


def pathwise_rate_diagnostic(traj: Trajectory, f, pi):
    """``sup_{8 <= k <= n} sqrt(k) / log(k) |S_k / k - pi(f)|`` along one path.

    Returns ``(sup_stat, series)`` with ``series`` an array of rows ``(k, stat_k)``.
    """
    n = traj.n
    if n < 8:
        raise InvalidInput("path-wise diagnostic needs n >= 8")
    fv, w = as_values(f), as_weights(pi)
    S = np.cumsum(fv[np.asarray(traj.states)[:n]])
    k = np.arange(8, n + 1)
    stat = np.abs(S[7:] / k - w @ fv) * np.sqrt(k) / np.log(k)
    return float(stat.max()), np.column_stack([k, stat])
