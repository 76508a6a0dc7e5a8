import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mklob.kernels import KernelSpec, gram
from mklob.svm import SVMProblem, decision_values, dual_objective, train_svm

from oracles import kkt_gap, qp_oracle

SPECS = [
    KernelSpec("rbf", rbf_sigma_sq=2.0),
    KernelSpec("polynomial", poly_degree=2),
    KernelSpec("arcsin_net", net_variance=1.0),
    KernelSpec("linear"),
]


def random_problem(seed, n=None, c=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(4, 31))
    X = rng.standard_normal((n, 3))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    K = gram(X, X, SPECS[seed % 4]).values
    return K, y, c if c is not None else [0.1, 1.0, 10.0][seed % 3]


def test_two_point_analytic():
    K = np.array([[1.0, -1.0], [-1.0, 1.0]])
    y = np.array([1.0, -1.0])
    m = train_svm(SVMProblem(K, y, 10.0))
    assert np.allclose(m.alphas, [0.5, 0.5])
    assert m.bias == pytest.approx(0.0)
    assert np.allclose(decision_values(m, y, K), [1.0, -1.0])


def test_single_class():
    K = np.eye(3)
    y = np.ones(3)
    m = train_svm(SVMProblem(K, y, 1.0))
    assert np.all(m.alphas == 0) and m.bias == 1.0
    assert decision_values(m, y, np.ones((4, 3))).tolist() == [1.0] * 4
    m = train_svm(SVMProblem(K, -y, 1.0))
    assert m.bias == -1.0


@pytest.mark.parametrize("kwargs", [
    dict(gram=np.eye(3), labels=[1, -1], c=1.0),
    dict(gram=np.eye(2), labels=[1, 0], c=1.0),
    dict(gram=np.eye(2), labels=[1, -1], c=0.0),
    dict(gram=np.ones((2, 3)), labels=[1, -1], c=1.0),
])
def test_problem_validation(kwargs):
    with pytest.raises(ValueError):
        SVMProblem(**kwargs)


def test_tolerance_must_be_positive():
    K, y, c = random_problem(0)
    with pytest.raises(ValueError):
        train_svm(SVMProblem(K, y, c), tolerance=0)


def test_decision_size_mismatch():
    K, y, c = random_problem(1, n=10)
    m = train_svm(SVMProblem(K, y, c))
    with pytest.raises(ValueError):
        decision_values(m, y, np.ones((3, 9)))


@pytest.mark.parametrize("seed", range(12))
def test_matches_qp_oracle(seed):
    K, y, c = random_problem(seed)
    ref, _ = qp_oracle(K, y, c)
    m = train_svm(SVMProblem(K, y, c), tolerance=1e-9)
    assert abs(m.objective - ref) <= 1e-6 * max(1.0, abs(ref))
    assert m.objective >= ref - 1e-6 * (1 + abs(ref))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 1.0, 10.0]))
def test_feasibility_and_kkt(seed, c):
    K, y, _ = random_problem(seed, c=c)
    m = train_svm(SVMProblem(K, y, c))
    assert np.all(m.alphas >= 0) and np.all(m.alphas <= c)
    assert abs(m.alphas @ y) <= 1e-8 * c
    assert m.kkt_violation <= 1e-4
    assert kkt_gap(K, y, m.alphas, c, eps=1e-8 * c) <= 1e-4 + 1e-12
    assert m.converged
    assert m.objective == pytest.approx(dual_objective(K, y, m.alphas))
    assert set(m.support_indices) == set(np.flatnonzero(m.alphas > 1e-8 * c))


def test_bias_from_free_support_vectors():
    K, y, c = random_problem(3, n=25, c=1.0)
    m = train_svm(SVMProblem(K, y, c), tolerance=1e-10)
    free = (m.alphas > 1e-6) & (m.alphas < c - 1e-6)
    assert free.any()
    f = decision_values(m, y, K)
    # free support vectors sit on the margin
    assert np.allclose(y[free] * f[free], 1.0, atol=1e-6)


def test_warm_start_reaches_same_optimum():
    K, y, c = random_problem(5, n=30, c=1.0)
    cold = train_svm(SVMProblem(K, y, c), tolerance=1e-9)
    warm = train_svm(SVMProblem(K * 1.01, y, c), tolerance=1e-9, alpha0=cold.alphas)
    ref, _ = qp_oracle(K * 1.01, y, c)
    assert warm.objective == pytest.approx(ref, rel=1e-8)


def test_permutation_invariance():
    K, y, c = random_problem(7, n=20, c=1.0)
    m = train_svm(SVMProblem(K, y, c))
    cross = np.random.default_rng(0).standard_normal((4, 20))
    perm = np.random.default_rng(1).permutation(20)
    f = decision_values(m, y, cross)
    from dataclasses import replace
    mp = replace(m, alphas=m.alphas[perm])
    assert np.allclose(decision_values(mp, y[perm], cross[:, perm]), f)


def test_larger_c_keeps_separable_signs():
    rng = np.random.default_rng(4)
    X = np.concatenate([rng.normal(2, 0.3, (10, 2)), rng.normal(-2, 0.3, (10, 2))])
    y = np.r_[np.ones(10), -np.ones(10)]
    K = gram(X, X, KernelSpec("linear")).values
    signs = [np.sign(decision_values(train_svm(SVMProblem(K, y, c)), y, K)) for c in (1.0, 10.0, 100.0)]
    assert all(np.array_equal(s, y) for s in signs)


def test_non_psd_gram_warns():
    K = np.array([[1.0, 2.0], [2.0, 1.0]])
    y = np.array([1.0, 1.0, -1.0])[:2] * np.array([1, -1])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        m = train_svm(SVMProblem(K, y, 1.0))
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)
    assert np.all((m.alphas >= 0) & (m.alphas <= 1.0))
