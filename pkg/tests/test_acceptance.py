"""End-to-end acceptance checks, one test per criterion.

The terminal summary lists one PASS/FAIL line per criterion (see conftest).
"""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import w1_linprog
from markov_poisson import _sampling, zoo
from markov_poisson.core import (
    Distribution,
    MetricSpec,
    kernel_power,
    lipschitz_seminorm,
    lp_norm,
    stationary_distribution,
)
from markov_poisson.errors import NotContractive
from markov_poisson.poisson import certify_lipschitz_bounds, solve_direct, solve_neumann
from markov_poisson.simulate import (
    assumption_Rn_diagnostic,
    decompose,
    mc_maximal_experiment,
    pathwise_rate_diagnostic,
    sample_trajectory,
)
from markov_poisson.spectral import check_gap_vs_tau, l2_gap, solve_with_lp_bound
from markov_poisson.transport import (
    contraction_profile,
    kantorovich_norm,
    kantorovich_potential,
    wasserstein,
    wasserstein_closed_form,
)

pytestmark = pytest.mark.acceptance


def _random_measure(rng, n, sparsity=0.3):
    w = rng.exponential(size=n) * (rng.random(n) > sparsity)
    if w.sum() == 0:
        w[rng.integers(n)] = 1.0
    return w / w.sum()


@pytest.mark.criterion(1, "two-state closed forms")
def test_two_state_closed_forms():
    a, b = 0.3, 0.2
    P, d = zoo.two_state(a, b)
    tau_lp = kantorovich_norm(P, d, method="lp").tau
    assert abs(tau_lp - abs(1 - a - b)) <= 1e-9
    assert abs(w1_linprog(P.rows[0], P.rows[1], d.cost) - 0.5) <= 1e-9
    pi = stationary_distribution(P)
    assert np.allclose(pi.weights, [0.4, 0.6], atol=1e-12, rtol=0)
    prof = contraction_profile(P, d)
    assert abs(prof.Lambda - 2.0) <= 1e-6
    f = np.array([0.0, 1.0])
    sol = solve_direct(P, pi, f)
    assert np.allclose(sol.u.values, [-1.2, 0.8], atol=1e-9, rtol=0)
    assert abs(lipschitz_seminorm(sol.u, d) - prof.Lambda * lipschitz_seminorm(f, d)) <= 1e-9
    assert abs(l2_gap(P, pi).kappa - 0.5) <= 1e-10
    sol2, cert = solve_with_lp_bound(P, pi, f, 2.0)
    assert cert.holds
    assert abs(lp_norm(sol2.u, pi, 2) - 2 * lp_norm(f - pi.weights @ f, pi, 2)) <= 1e-8


@pytest.mark.criterion(2, "dyadic shift k=4")
def test_dyadic_shift():
    P, d = zoo.dyadic_shift(4)
    for j in (1, 2, 3):
        assert abs(kantorovich_norm(kernel_power(P, j), d).tau - 1.0) <= 1e-8
    assert kantorovich_norm(kernel_power(P, 4), d).tau <= 1e-10
    prof = contraction_profile(P, d)
    assert prof.m == 4
    assert abs(prof.Lambda - 4.0) <= 1e-6
    pi = stationary_distribution(P)
    rng = np.random.default_rng(2)
    for f in (np.arange(16.0), rng.normal(size=16), (np.arange(16) % 2).astype(float)):
        direct = solve_direct(P, pi, f).u.values
        neumann = solve_neumann(P, pi, f, prof, d).u.values
        assert np.abs(direct - neumann).max() <= 1e-10


@pytest.mark.criterion(3, "Kantorovich duality and closed forms")
def test_duality():
    rng = np.random.default_rng(3)
    kinds = ("general", "line", "v-weighted", "trivial")
    for i in range(200):
        n = int(rng.integers(2, 33))
        kind = kinds[i % 4]
        d = MetricSpec.trivial(n) if kind == "trivial" else zoo.random_metric(n, 1000 + i, kind)
        mu, nu = _random_measure(rng, n), _random_measure(rng, n)
        primal = wasserstein(mu, nu, d.cost).value
        pot = kantorovich_potential(mu, nu, d.cost)
        assert lipschitz_seminorm(pot, d) <= 1.0 + 1e-9
        dual = float(pot.values @ (mu - nu))
        assert abs(primal - dual) <= 1e-7
        assert abs(primal - w1_linprog(mu, nu, d.cost)) <= 1e-7
        if kind in ("trivial", "v-weighted"):
            assert abs(wasserstein_closed_form(mu, nu, d) - primal) <= 1e-9


def _contractive_instances(count, rng):
    """Random reversible chains across metric kinds; non-contractive draws are skipped."""
    kinds = ("trivial", "v-weighted", "general", "line")
    seed = 0
    found = 0
    while found < count:
        kind = kinds[found % 4]
        n = int(rng.integers(2, 65 if kind in ("trivial", "v-weighted") else 25))
        seed += 1
        P, pi, d = zoo.random_reversible(n, seed, metric=kind)
        try:
            prof = contraction_profile(P, d)
        except NotContractive:
            continue
        found += 1
        yield P, pi, d, prof


@pytest.mark.criterion(4, "regularity certificates on random reversible chains")
def test_certificate_suite():
    rng = np.random.default_rng(4)
    failures = []
    for P, pi, d, prof in _contractive_instances(100, rng):
        gap = l2_gap(P, pi)
        cert = check_gap_vs_tau(P, pi, d, prof, gap=gap)
        if cert.slack < -1e-9:
            failures.append(cert)
        for _ in range(5):
            f = rng.normal(size=P.n) * rng.exponential(size=P.n)
            sol = solve_direct(P, pi, f)
            for p in (1.5, 2.0, 4.0):
                certs = certify_lipschitz_bounds(sol, f, d, pi, prof, p=p)
                certs.append(solve_with_lp_bound(P, pi, f, p, gap=gap)[1])
                failures.extend(c for c in certs if c.slack < -1e-9)
    assert not failures, failures[:5]


@pytest.mark.criterion(5, "submultiplicativity and measure contraction")
def test_submultiplicativity():
    rng = np.random.default_rng(5)
    kinds = ("general", "line", "v-weighted", "trivial")
    for i in range(100):
        n = int(rng.integers(2, 13))
        kind = kinds[i % 4]
        d = MetricSpec.trivial(n) if kind == "trivial" else zoo.random_metric(n, 5000 + i, kind)
        alpha = rng.uniform(0.2, 3.0)
        P = rng.dirichlet(np.full(n, alpha), size=n)
        Q = rng.dirichlet(np.full(n, alpha), size=n)
        tP, tQ = kantorovich_norm(P, d).tau, kantorovich_norm(Q, d).tau
        assert kantorovich_norm(P @ Q, d).tau <= tP * tQ + 1e-8
        mu, nu = _random_measure(rng, n), _random_measure(rng, n)
        assert wasserstein(mu @ P, nu @ P, d.cost).value <= tP * wasserstein(mu, nu, d.cost).value + 1e-8


@pytest.mark.criterion(6, "martingale decomposition on every zoo chain")
@pytest.mark.parametrize("name", [m[0] for m in zoo.list_models()])
def test_decomposition(name):
    m = zoo.build(name)
    P = m.kernel
    pi = stationary_distribution(P)
    f = np.random.default_rng(6).normal(size=P.n)
    u = solve_direct(P, pi, f).u.values
    traj = sample_trajectory(P, pi, 10_000, seed=6)
    assert decompose(traj, f, u, P, pi).identity_error <= 1e-8
    table = _sampling.replica_maxima(P.rows, pi.weights, f - pi.weights @ f, u, 10_000, 10_000, 60)
    m_n = table[:, 3]
    se = m_n.std(ddof=1) / np.sqrt(m_n.size)
    assert abs(m_n.mean()) <= 3 * se


def _maximal_case(name):
    if name == "two_state":
        P, d = zoo.two_state(0.3, 0.2)
        f = np.array([0.0, 1.0])
    else:
        P, d = zoo.ising_heat_bath([(0, 1), (1, 2), (2, 3)], 0.1)
        f = np.array([bin(x).count("1") for x in range(16)], dtype=float)
    return P, d, f


@pytest.mark.criterion(7, "maximal-inequality dominance")
@pytest.mark.parametrize("name", ["two_state", "ising"])
def test_maximal_dominance(name):
    P, d, f = _maximal_case(name)
    pi = stationary_distribution(P)
    n = 1000
    scale = np.sqrt(n) * lipschitz_seminorm(f, d)
    t_grid = np.linspace(0.25, 5.0, 10) * scale
    rep = mc_maximal_experiment(P, pi, f, n, 10_000, 7, t_grid, d, q=2.0, pi=pi)
    for key in ("tail_doob_as_stated", "tail_doob_proof_consistent",
                "second_moment_l2_as_stated", "second_moment_l2_proof_consistent"):
        assert np.all(rep.dominance[key]), key
    assert rep.all_dominance_hold, {k: v for k, v in rep.dominance.items() if not np.all(v)}


@pytest.mark.criterion(8, "remainder growth diagnostic on the drift chain")
def test_remainder_diagnostic():
    m = zoo.v_drift(20, zoo.DriftSpec(alpha=0.4))
    P, pi, d = m
    f = d.v
    u = solve_direct(P, pi, f).u.values
    diag = assumption_Rn_diagnostic(P, pi, f, u, [100, 1000, 10_000], 2000, 8, d, pi=pi)
    print(f"\nremainder ratio by n: {diag.table()}  spread={diag.spread:.3f}")
    assert np.isfinite(diag.spread)
    assert not diag.growth_detected()
    assert diag.c_hat <= diag.c_hat_det + 1e-12


@pytest.mark.criterion(9, "path-wise rate diagnostic")
def test_pathwise_rate():
    P, d = zoo.two_state(0.3, 0.2)
    pi = stationary_distribution(P)
    f = np.array([0.0, 1.0])
    sups = np.array([pathwise_rate_diagnostic(sample_trajectory(P, pi, 100_000, seed), f, pi)[0]
                     for seed in range(10)])
    cv = sups.std(ddof=1) / sups.mean()
    print(f"\npath-wise sup statistics: mean={sups.mean():.4f} cv={cv:.4f}")
    assert np.all(np.isfinite(sups))
    assert cv < 1.0


@pytest.mark.criterion(10, "deterministic maximal reports")
def test_determinism(tmp_path):
    model = tmp_path / "model"
    cli = [sys.executable, "-m", "markov_poisson.cli"]
    subprocess.run(cli + ["zoo", "emit", "two_state", "--out", str(model)], check=True)

    def run(tag, threads):
        env = dict(os.environ, NUMBA_NUM_THREADS=str(max(threads, 8)))
        out = tmp_path / tag
        subprocess.run(cli + ["maximal", "--kernel", str(model / "kernel.json"),
                              "--metric", str(model / "metric.json"),
                              "--function", str(model / "f.json"),
                              "--n", "1000", "--replicas", "10000", "--seed", "10",
                              "--t-grid", "5,10,20,40", "--threads", str(threads),
                              "--out", str(out)], check=True, env=env)
        return (out / "maximal.json").read_bytes(), (out / "maximal.csv").read_bytes()

    first = run("a", 1)
    assert run("b", 1) == first
    assert run("c", 8) == first
    assert json.loads(first[0])["params"]["seed"] == 10
