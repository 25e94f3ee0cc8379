import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import stationary_eig
from markov_poisson.core import (
    Distribution,
    FiniteKernel,
    FiniteStateSpace,
    MetricSpec,
    StateFunction,
    apply_to_distribution,
    apply_to_function,
    as_weights,
    check_reversibility,
    is_irreducible,
    kernel_power,
    lipschitz_seminorm,
    lp_norm,
    radon_nikodym,
    stationary_distribution,
    validate_distribution,
    validate_kernel,
    validate_metric,
)
from markov_poisson.errors import InvalidInput, Reducible, ZeroDenominator

TWO = [[0.7, 0.3], [0.2, 0.8]]


def random_kernel(rng, n, sparsity=0.0):
    rows = rng.random((n, n)) * (rng.random((n, n)) >= sparsity)
    rows[np.arange(n), (np.arange(n) + 1) % n] += 0.1  # keeps the chain irreducible
    return rows / rows.sum(axis=1, keepdims=True)


@st.composite
def kernels(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_kernel(np.random.default_rng(seed), n)


# ------------------------------------------------------------ types and validators

def test_state_space_needs_two_states():
    with pytest.raises(InvalidInput):
        FiniteStateSpace(1)
    with pytest.raises(InvalidInput):
        FiniteStateSpace(3, labels=["a", "b"])
    assert FiniteStateSpace(2, ["a", "b"]).labels == ("a", "b")


def test_validate_kernel_messages():
    assert validate_kernel(np.array([[0.7, 0.3], [0.8, 0.2]])).ok
    rep = validate_kernel(np.array([[0.5, 0.6], [0.5, 0.5]]))
    assert not rep and "row 0 sums to 1.1" in rep.violations[0]
    rep = validate_kernel(np.array([[1.1, -0.1], [0.5, 0.5]]))
    assert any("entry out of range" in v for v in rep.violations)
    assert not validate_kernel(np.array([[np.nan, 1.0], [0.5, 0.5]]))
    with pytest.raises(InvalidInput, match="row 0"):
        FiniteKernel([[0.5, 0.6], [0.5, 0.5]])


def test_kernel_is_read_only():
    P = FiniteKernel(TWO)
    with pytest.raises(ValueError):
        P.rows[0, 0] = 1.0


def test_validate_distribution():
    assert validate_distribution([0.4, 0.6])
    assert not validate_distribution([0.5, 0.6])
    assert not validate_distribution([-0.1, 1.1])


def test_validate_metric():
    assert validate_metric(MetricSpec.trivial(4).cost)
    bad = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], float)
    assert any("triangle" in v for v in validate_metric(bad).violations)
    assert not validate_metric(np.array([[0, 1], [2, 0]], float))
    assert not validate_metric(np.array([[0, 0], [0, 0]], float))
    # opting out of the O(n^3) scan
    assert validate_metric(bad, triangle=False)


def test_metric_constructors():
    assert np.array_equal(MetricSpec.trivial(3).cost, 2 * (1 - np.eye(3)))
    d = MetricSpec.line([0.0, 0.25, 1.0])
    assert d.kind == "line" and d.cost[0, 2] == 1.0
    v = MetricSpec.v_weighted([1.0, 2.0, 3.0])
    assert v.cost[0, 2] == 4.0 and v.cost[1, 1] == 0.0


# ------------------------------------------------------------ calculus

def test_kernel_power_against_repeated_product():
    P = np.array(TWO)
    assert np.allclose(kernel_power(P, 1).rows, P)
    # brute-force matrix multiplication oracle
    manual = [[sum(P[i, k] * P[k, j] for k in range(2)) for j in range(2)] for i in range(2)]
    assert np.allclose(kernel_power(P, 2).rows, manual, atol=1e-15)
    assert np.allclose(kernel_power(P, 2).rows[0], [0.55, 0.45])
    assert np.array_equal(kernel_power(np.eye(3), 7).rows, np.eye(3))
    with pytest.raises(InvalidInput):
        kernel_power(P, 0)


def test_apply_examples():
    assert np.allclose(apply_to_function(TWO, [0, 1]).values, [0.3, 0.8])
    assert np.allclose(apply_to_distribution([1, 0], TWO).weights, [0.7, 0.3])
    # uniform start, summed by hand: (0.5*0.7 + 0.5*0.2, 0.5*0.3 + 0.5*0.8)
    assert np.allclose(apply_to_distribution([0.5, 0.5], TWO).weights, [0.45, 0.55])


def test_apply_brute_force(rng):
    P = random_kernel(rng, 6)
    f = rng.normal(size=6)
    mu = rng.dirichlet(np.ones(6))
    pf = [sum(P[x, y] * f[y] for y in range(6)) for x in range(6)]
    mup = [sum(mu[x] * P[x, y] for x in range(6)) for y in range(6)]
    assert np.allclose(apply_to_function(P, f).values, pf, atol=1e-14)
    assert np.allclose(apply_to_distribution(mu, P).weights, mup, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(kernels(), st.floats(-1e3, 1e3))
def test_constants_preserved(P, c):
    out = apply_to_function(P, np.full(P.shape[0], c)).values
    assert np.allclose(out, c, rtol=0, atol=1e-12 * max(1.0, abs(c)))


@settings(max_examples=50, deadline=None)
@given(kernels(), st.integers(0, 2 ** 32 - 1))
def test_duality_of_actions(P, seed):
    rng = np.random.default_rng(seed)
    n = P.shape[0]
    mu = rng.dirichlet(np.ones(n))
    f = rng.normal(size=n)
    lhs = mu @ apply_to_function(P, f).values
    rhs = apply_to_distribution(mu, P).weights @ f
    assert abs(lhs - rhs) <= 1e-10


def test_stationary_examples():
    pi = stationary_distribution(TWO)
    assert np.allclose(pi.weights, [0.4, 0.6], atol=1e-12)
    perm = np.eye(4)[[1, 2, 3, 0]]
    ds = 0.5 * perm + 0.5 * np.eye(4)
    assert np.allclose(stationary_distribution(ds).weights, 0.25, atol=1e-12)
    with pytest.raises(Reducible):
        stationary_distribution(np.eye(3))


@settings(max_examples=40, deadline=None)
@given(kernels(max_n=10))
def test_stationary_matches_eigenvector(P):
    pi = stationary_distribution(P).weights
    assert np.abs(pi @ P - pi).sum() <= 1e-10
    assert pi.min() > 0
    assert np.allclose(pi, stationary_eig(P), atol=1e-9)


def test_irreducibility():
    assert is_irreducible(TWO)
    assert not is_irreducible(np.eye(2))
    assert not is_irreducible([[1.0, 0.0], [0.5, 0.5]])


def test_reversibility_examples(rng):
    assert check_reversibility(TWO, [0.4, 0.6])
    rot = np.eye(3)[[1, 2, 0]]
    assert not check_reversibility(rot, np.full(3, 1 / 3))
    a, b = rng.uniform(0.05, 0.95, 2)
    P = [[1 - a, a], [b, 1 - b]]
    assert check_reversibility(P, stationary_distribution(P))


def test_lipschitz_seminorm():
    d = MetricSpec.line([0.0, 1.0])
    assert lipschitz_seminorm([0, 1], d) == 1.0
    assert lipschitz_seminorm([3, 3], d) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1), st.floats(-100, 100))
def test_lipschitz_shift_invariance(n, seed, c):
    rng = np.random.default_rng(seed)
    d = MetricSpec.line(np.sort(rng.random(n)) + np.arange(n))
    f = rng.normal(size=n)
    # adding c can change rounding of differences; compare with integers-valued f exactly
    fi = np.round(f * 8)
    ci = float(round(c))
    assert lipschitz_seminorm(fi + ci, d) == lipschitz_seminorm(fi, d)


def test_radon_nikodym():
    assert np.allclose(radon_nikodym([0.4, 0.6], [0.4, 0.6]).values, 1.0)
    assert np.allclose(radon_nikodym([0.5, 0.5], [0.4, 0.6]).values, [1.25, 0.5 / 0.6])
    with pytest.raises(ZeroDenominator):
        radon_nikodym([0.5, 0.5], [1.0, 0.0])


def test_lp_norm_examples():
    pi = [0.4, 0.6]
    for p in (1, 2, 3.5, np.inf):
        assert np.isclose(lp_norm([1, 1], pi, p), 1.0)
    assert np.isclose(lp_norm([-1.2, 0.8], pi, 2), np.sqrt(0.96))
    assert lp_norm([-1.2, 0.8], pi, np.inf) == 1.2
    assert lp_norm([5.0, 1.0], [0.0, 1.0], np.inf) == 1.0
    with pytest.raises(InvalidInput):
        lp_norm([1, 1], pi, 0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2 ** 32 - 1))
def test_lp_norm_monotone_in_p(n, seed):
    rng = np.random.default_rng(seed)
    pi = rng.dirichlet(np.ones(n))
    f = rng.normal(size=n)
    norms = [lp_norm(f, pi, p) for p in (1, 1.5, 2, 3, 8, np.inf)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_containers_coerce():
    mu = Distribution.point_mass(3, 1)
    assert np.array_equal(as_weights(mu), [0, 1, 0])
    assert np.allclose(Distribution.uniform(4).weights, 0.25)
    assert np.asarray(StateFunction([1.0, 2.0])).tolist() == [1.0, 2.0]
    with pytest.raises(InvalidInput):
        StateFunction([1.0, np.inf])
