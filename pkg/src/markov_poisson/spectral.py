"""Spectral gap on ``L^2_0(pi)`` and the ``L^p`` consequences for Poisson's equation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_rows, as_values, as_weights, check_reversibility, lp_norm
from .errors import InvalidInput, NoGap, NotReversible, NumericalFailure
from .poisson import BoundCertificate, PoissonSolution, solve_direct
from .transport import ContractionProfile


@dataclass(frozen=True)
class GapReport:
    kappa: float
    reversible: bool
    method: str

    def to_json(self) -> dict:
        return {"kappa": self.kappa, "reversible": self.reversible, "method": self.method}


def _similarity(rows, w):
    s = np.sqrt(w)
    S = s[:, None] * rows / s[None, :]
    # project out the sqrt(pi) direction on both sides
    Q = np.eye(w.size) - np.outer(s, s)
    return Q @ S @ Q


def l2_gap(P, pi, method: str = "auto", tol: float = 1e-10) -> GapReport:
    """Norm of ``P`` on centred ``L^2(pi)``.

    ``D^{1/2} P D^{-1/2}`` maps the problem to euclidean space, where the
    constant direction becomes ``sqrt(pi)`` and is projected away explicitly.
    Reversible kernels give a symmetric matrix (eigensolve), others go
    through singular values.
    """
    rows, w = as_rows(P), as_weights(pi)
    if np.any(w <= 0):
        raise InvalidInput("spectral gap needs pi > 0")
    rev = check_reversibility(rows, w, tol)
    S0 = _similarity(rows, w)
    if method == "auto":
        method = "symmetric-eigen" if rev else "singular-values"
    try:
        if method == "symmetric-eigen":
            if not rev:
                raise NotReversible("eigensolve path requires a reversible kernel")
            ev = np.linalg.eigvalsh(0.5 * (S0 + S0.T))
            kappa = float(np.abs(ev).max())
        elif method == "singular-values":
            kappa = float(np.linalg.norm(S0, 2))
        else:
            raise InvalidInput(f"unknown method {method!r}")
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    if 1.0 < kappa <= 1.0 + 1e-9:
        kappa = 1.0
    return GapReport(kappa=kappa, reversible=rev, method=method)


def lp_power_bound(kappa: float, p: float, ell: int) -> float:
    """Bound on ``||P^ell||`` over centred ``L^p(pi)`` from the ``L^2`` gap ``kappa``."""
    if not 0.0 <= kappa <= 1.0:
        raise InvalidInput("kappa must lie in [0, 1]")
    if ell < 1:
        raise InvalidInput("ell must be >= 1")
    if p == 2:
        return kappa ** ell
    if 1 < p < 2:
        return 2.0 ** (2.0 / p) * kappa ** (2.0 * ell * (p - 1.0) / p)
    if p > 2 and np.isfinite(p):
        return 2.0 ** (2.0 * (p - 1.0) / p) * kappa ** (2.0 * ell / p)
    raise InvalidInput(f"p must lie in (1, inf), got {p}")


def poisson_lp_constant(kappa: float, p: float) -> float:
    """Operator-norm bound on ``(I - P)^{-1}`` over centred ``L^p(pi)``."""
    if kappa >= 1.0:
        raise NoGap(f"kappa = {kappa} >= 1")
    if p == 2:
        return 1.0 / (1.0 - kappa)
    if 1 < p < 2:
        return 2.0 ** (2.0 / p) / (1.0 - kappa ** (2.0 * (p - 1.0) / p))
    if p > 2 and np.isfinite(p):
        return 2.0 ** (2.0 * (p - 1.0) / p) / (1.0 - kappa ** (2.0 / p))
    raise InvalidInput(f"p must lie in (1, inf), got {p}")


def solve_with_lp_bound(P, pi, f, p: float, gap: GapReport | None = None):
    """Direct solve plus the certificate ``||u||_p <= const(kappa, p) ||f - pi(f)||_p``."""
    rows, w, fv = as_rows(P), as_weights(pi), as_values(f)
    gap = gap or l2_gap(rows, w)
    const = poisson_lp_constant(gap.kappa, p)
    sol: PoissonSolution = solve_direct(rows, w, fv)
    fc = fv - w @ fv
    cert = BoundCertificate(f"spectral_lp_p{p:g}", lp_norm(sol.u, w, p), const * lp_norm(fc, w, p))
    return sol, cert


def check_gap_vs_tau(P, pi, d, profile: ContractionProfile, gap: GapReport | None = None,
                     tol: float = 1e-10) -> BoundCertificate:
    """Certificate ``kappa <= tau(P^m)^{1/m}`` for a reversible contractive kernel.

    Only the inequality is certified; callers that want the observed ratio
    read it off ``lhs / rhs``.
    """
    rows, w = as_rows(P), as_weights(pi)
    if not check_reversibility(rows, w, tol):
        raise NotReversible("gap-vs-tau comparison requires a reversible kernel")
    gap = gap or l2_gap(rows, w)
    rhs = profile.tau_m ** (1.0 / profile.m)
    return BoundCertificate("gap_vs_tau", gap.kappa, rhs)
