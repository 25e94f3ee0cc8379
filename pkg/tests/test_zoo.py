import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import tau_brute
from markov_poisson import zoo
from markov_poisson.core import (
    MetricSpec,
    check_reversibility,
    kernel_power,
    stationary_distribution,
    validate_kernel,
    validate_metric,
)
from markov_poisson.errors import InvalidInput
from markov_poisson.poisson import solve_direct
from markov_poisson.spectral import l2_gap
from markov_poisson.transport import contraction_profile, kantorovich_norm


def test_two_state_expected_values():
    m = zoo.two_state(0.3, 0.2)
    prof = contraction_profile(*m)
    pi = stationary_distribution(m.kernel)
    exp = {k: v for k, (v, _) in m.spec.expected.items()}
    assert abs(prof.taus[0] - exp["tau"]) <= 1e-12
    assert np.allclose(pi.weights, exp["pi"], atol=1e-12)
    assert abs(prof.Lambda - exp["Lambda"]) <= 1e-8
    assert abs(l2_gap(m.kernel, pi).kappa - exp["kappa"]) <= 1e-12
    assert np.allclose(solve_direct(m.kernel, pi, [0, 1]).u.values, [-1.2, 0.8])


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (0.1, 0.9), (0.35, 0.65)])
def test_two_state_iid_cases(a, b):
    P, d = zoo.two_state(a, b)
    assert kantorovich_norm(P, d).tau <= 1e-15


def test_two_state_range():
    with pytest.raises(InvalidInput):
        zoo.two_state(0.0, 0.5)
    with pytest.raises(InvalidInput):
        zoo.two_state(0.5, 1.0)


def test_dyadic_k2_brute_force():
    P, d = zoo.dyadic_shift(2)
    assert tau_brute(P.rows, d.cost) == pytest.approx(1.0, abs=1e-12)
    assert tau_brute(kernel_power(P, 2).rows, d.cost) == pytest.approx(0.0, abs=1e-12)


def test_dyadic_structure():
    m = zoo.dyadic_shift(4)
    assert np.allclose(m.kernel.rows.sum(axis=0), 1.0)  # doubly stochastic
    assert np.allclose(stationary_distribution(m.kernel).weights, 1 / 16)
    with pytest.raises(InvalidInput):
        zoo.dyadic_shift(13)


@pytest.mark.parametrize("sites", [1, 2, 3])
def test_ising_independent_sites(sites):
    m = zoo.ising_heat_bath([], 0.0, 0.0, sites)
    expected = 1.0 - 1.0 / sites
    assert tau_brute(m.kernel.rows, m.metric.cost) == pytest.approx(expected, abs=1e-9)
    assert kantorovich_norm(*m).tau == pytest.approx(expected, abs=1e-12)


def test_ising_path_graph():
    m = zoo.ising_heat_bath([(0, 1), (1, 2), (2, 3)], 0.1)
    P, d = m
    pi = stationary_distribution(P)
    assert np.allclose(pi.weights, m.spec.expected["pi"][0], atol=1e-12)
    assert check_reversibility(P, pi, 1e-12)
    assert kantorovich_norm(P, d).tau < 1.0
    # Hamming metric and bit encoding: state 0b0101 is spins (+, -, +, -)
    assert d.cost[0b0101, 0b0000] == 2.0


def test_ising_limits():
    with pytest.raises(InvalidInput):
        zoo.ising_heat_bath([], 0.1, 0.0, 13)
    with pytest.raises(InvalidInput):
        zoo.ising_heat_bath([(0, 0)], 0.1)
    with pytest.raises(InvalidInput):
        zoo.ising_heat_bath([(0, 1)], -1.0)


def test_independent_mh():
    rng = np.random.default_rng(0)
    t = rng.dirichlet(np.ones(5))
    assert np.allclose(zoo.independent_mh(t, t).rows, np.tile(t, (5, 1)))
    q = np.full(5, 0.2)
    P = zoo.independent_mh(t, q)
    assert check_reversibility(P, t, 1e-12)
    w = t / q
    tau = tau_brute(P.rows, MetricSpec.trivial(5).cost)
    assert tau <= 1.0 - 1.0 / w.max() + 1e-8
    with pytest.raises(InvalidInput):
        zoo.independent_mh([0.5, 0.5], [1.0, 0.0])


def test_dobrushin_mixture():
    rng = np.random.default_rng(1)
    pi = rng.dirichlet(np.ones(4))
    d = MetricSpec.trivial(4)
    assert kantorovich_norm(zoo.dobrushin_mixture(np.eye(4), 1.0, pi), d).tau <= 1e-15
    half = zoo.dobrushin_mixture(np.eye(4), 0.5, pi)
    assert tau_brute(half.rows, d.cost) == pytest.approx(0.5, abs=1e-9)
    assert np.allclose(pi @ half.rows, pi)
    Q, qpi, _ = zoo.random_reversible(4, 3)
    mix = zoo.dobrushin_mixture(Q, 0.3, qpi)
    assert kantorovich_norm(mix, d).tau <= 0.7 * kantorovich_norm(Q, d).tau + 1e-12
    with pytest.raises(InvalidInput):
        zoo.dobrushin_mixture(Q, 0.3, np.full(4, 0.25) + [0.1, -0.1, 0, 0])
    with pytest.raises(InvalidInput):
        zoo.dobrushin_mixture(Q, 0.0, qpi)


@pytest.mark.parametrize("metric", ["trivial", "general", "line", "v-weighted"])
def test_random_reversible(metric):
    a = zoo.random_reversible(9, 42, metric=metric)
    b = zoo.random_reversible(9, 42, metric=metric)
    P, pi, d = a
    assert np.array_equal(P.rows, b.kernel.rows) and np.array_equal(d.cost, b.metric.cost)
    assert check_reversibility(P, pi, 1e-12)
    assert validate_kernel(P.rows) and validate_metric(d.cost)
    assert a.spec.parameters["seed"] == 42


def test_v_drift():
    P, pi, d = zoo.random_reversible(15, 0, drift=zoo.DriftSpec(alpha=0.4, noise=0.2))
    assert check_reversibility(P, pi, 1e-12)
    assert d.kind == "v-weighted"
    assert np.allclose(stationary_distribution(P).weights, pi.weights, atol=1e-10)
    flat = zoo.v_drift(6, zoo.DriftSpec(eta=0.0, alpha=0.4))
    assert np.allclose(flat.metric.cost, MetricSpec.trivial(6).cost)
    with pytest.raises(InvalidInput):
        zoo.v_drift(6, zoo.DriftSpec(alpha=0.5))


def test_registry_builds_valid_models():
    for name, defaults, _ in zoo.list_models():
        m = zoo.build(name)
        assert validate_kernel(m.kernel.rows), name
        assert validate_metric(m.metric.cost), name
        pi = stationary_distribution(m.kernel)
        if m.pi is not None:
            assert np.allclose(pi.weights, m.pi.weights, atol=1e-10), name
    with pytest.raises(InvalidInput, match="documented only"):
        zoo.build("nuts")
    with pytest.raises(InvalidInput):
        zoo.build("two_state", c=1)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 64), st.integers(0, 2 ** 32 - 1))
def test_random_reversible_entries_nonnegative(n, seed):
    P, _, _ = zoo.random_reversible(n, seed)
    assert P.rows.min() >= 0.0
