"""Poisson's equation ``u - Pu = f - pi(f)`` and certified regularity bounds."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .core import StateFunction, as_cost, as_rows, as_values, as_weights, lipschitz_seminorm
from .errors import InvalidInput, NotContractive, SingularSystem
from .transport import ContractionProfile

CERT_SLACK = 1e-9
MAX_NEUMANN_TERMS = 1_000_000


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    u: StateFunction
    residual_inf: float
    method: str
    neumann_terms: int | None = None


@dataclass(frozen=True)
class BoundCertificate:
    """``lhs <= rhs`` claim; ``holds`` allows an absolute slack of 1e-9."""

    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs + CERT_SLACK)

    def as_row(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "holds": self.holds}


def residual(P, pi, f, u) -> float:
    rows, w, fv, uv = as_rows(P), as_weights(pi), as_values(f), as_values(u)
    return float(np.abs(uv - rows @ uv - (fv - w @ fv)).max())


def solve_direct(P, pi, f) -> PoissonSolution:
    """Centred solution by one linear solve on ``I - P + 1 pi^T``.

    The rank-one term removes the null direction of ``I - P``; one round of
    iterative refinement brings the residual to rounding level.
    """
    rows, w, fv = as_rows(P), as_weights(pi), as_values(f)
    n = rows.shape[0]
    if fv.shape != (n,) or w.shape != (n,):
        raise InvalidInput("shape mismatch between kernel, pi and f")
    rhs = fv - w @ fv
    A = np.eye(n) - rows + np.outer(np.ones(n), w)
    try:
        u = np.linalg.solve(A, rhs)
        u = u + np.linalg.solve(A, rhs - A @ u)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"Poisson system is singular: {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise SingularSystem("Poisson solve produced non-finite values")
    u = u - w @ u
    return PoissonSolution(StateFunction(u), residual(rows, w, fv, u), "direct")


def neumann_terms_needed(profile: ContractionProfile, f_lip: float, tol: float) -> int:
    """Smallest ``N`` whose certified remainder ``f_lip * sum_{l>N} tau_l`` is <= tol."""
    if f_lip == 0.0:
        return 0
    R = len(profile.taus)
    for N in range(0, R + 1):
        if f_lip * profile.tail_after(N) <= tol:
            return N
    # past the recorded lags the bounds decay geometrically; bisect on N
    lo, hi = R, 2 * R + 1
    while f_lip * profile.tail_after(hi) > tol:
        lo, hi = hi, 2 * hi
        if hi > MAX_NEUMANN_TERMS:
            raise NotContractive("Neumann remainder does not reach the tolerance")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f_lip * profile.tail_after(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def solve_neumann(P, pi, f, profile: ContractionProfile, d, tol: float = 1e-12) -> PoissonSolution:
    """Truncated series ``sum_{l=0}^N P^l (f - pi(f))`` with a certified remainder.

    ``N`` is chosen so ``||f||_d * sum_{l>N} tau(P^l) <= tol``, using the
    recorded lags of ``profile``; ``neumann_terms`` reports ``N``.
    """
    if profile is None or profile.m is None:
        raise NotContractive("Neumann series needs a contraction profile")
    rows, w, fv = as_rows(P), as_weights(pi), as_values(f)
    g = fv - w @ fv
    N = neumann_terms_needed(profile, lipschitz_seminorm(fv, as_cost(d)), tol)
    u = g.copy()
    for _ in range(N):
        g = rows @ g
        u += g
    u -= w @ u
    return PoissonSolution(StateFunction(u), residual(rows, w, fv, u), "neumann", N)


def certify_lipschitz_bounds(sol: PoissonSolution, f, d, pi, profile: ContractionProfile,
                             p: float = 2.0, p0: float | None = None) -> list[BoundCertificate]:
    """Evaluate every regularity bound for a solution of Poisson's equation.

    Returns certificates for the Lipschitz bound, the ``L^p`` bound through
    the best anchor state, the moment bound with exponent ``p0`` (defaults to
    ``p``) and the sup-norm bound.
    """
    u, fv, c, w = as_values(sol.u), as_values(f), as_cost(d), as_weights(pi)
    p0 = p if p0 is None else p0
    Lam = profile.Lambda
    f_lip = lipschitz_seminorm(fv, c)
    u_lip = lipschitz_seminorm(u, c)
    e1 = c @ w
    ep = c ** p @ w
    anchor = np.abs(u) ** p + u_lip ** p * ep
    return [
        BoundCertificate("lipschitz", u_lip, Lam * f_lip),
        BoundCertificate(f"lp_anchor_p{p:g}", float(w @ np.abs(u) ** p), 2.0 ** p * float(anchor.min())),
        BoundCertificate(f"moment_p{p0:g}", float(w @ np.abs(u) ** p0),
                         (Lam * f_lip) ** p0 * float(w @ e1 ** p0)),
        BoundCertificate("sup", float(np.abs(u).max()), float(e1.max()) * Lam * f_lip),
    ]


def certificates_csv(certs) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["name", "lhs", "rhs", "slack", "holds"],
                            lineterminator="\n")
    writer.writeheader()
    for cert in certs:
        row = cert.as_row()
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
