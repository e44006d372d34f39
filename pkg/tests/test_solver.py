import numpy as np
import pytest

from suprec.linalg import rng_from_seed
from suprec.norms import ComponentSpec, norm_eval
from suprec.solver import (
    SolverConfig,
    SuperpositionProblem,
    apg_solve,
    gradient_component,
    objective,
    solve_penalized,
)


def l1_problem(y, X, radius, truth=None):
    spec = ComponentSpec(kind="l1", radius=radius)
    gt = [truth] if truth is not None else None
    return SuperpositionProblem(y=y, X=X, components=[spec], ground_truth=gt)


def test_objective_exact_fit_and_zero():
    X = np.eye(2)
    y = np.array([1.0, 2.0])
    prob = l1_problem(y, X, 10.0)
    assert objective(prob, [y.copy()]) == 0.0
    assert objective(prob, [np.zeros(2)]) == y @ y


def test_objective_hand_value():
    prob = l1_problem(np.array([1.0, 0.0]), np.eye(2), 10.0)
    assert objective(prob, [np.array([0.0, 1.0])]) == 2.0


def test_gradient_zero_at_exact_fit():
    X = np.eye(3)
    y = np.array([1.0, -1.0, 2.0])
    prob = l1_problem(y, X, 10.0)
    assert np.allclose(gradient_component(prob, [y.copy()]), 0.0)


def test_gradient_at_zero():
    rng = rng_from_seed(0)
    X = rng.standard_normal((5, 4))
    y = rng.standard_normal(5)
    prob = l1_problem(y, X, 10.0)
    assert np.allclose(gradient_component(prob, [np.zeros(4)]), -2 * X.T @ y)


def test_gradient_matches_central_differences():
    rng = rng_from_seed(1)
    eps = 1e-6
    for _ in range(20):
        n = int(rng.integers(3, 15))
        p = int(rng.integers(2, 15))
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        prob = l1_problem(y, X, 1e6)
        th = rng.standard_normal(p) * 0.3
        g = gradient_component(prob, [th])
        for j in range(p):
            e = np.zeros(p)
            e[j] = eps
            fd = (objective(prob, [th + e]) - objective(prob, [th - e])) / (2 * eps)
            assert abs(g[j] - fd) < 1e-5 * max(1.0, abs(g[j]))


def test_solver_matches_least_squares_when_inactive():
    rng = rng_from_seed(2)
    for _ in range(5):
        p = int(rng.integers(5, 20))
        n = 2 * p
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        th_ls = np.linalg.lstsq(X, y, rcond=None)[0]
        prob = l1_problem(y, X, 2 * np.abs(th_ls).sum() + 1.0)
        res = apg_solve(prob, SolverConfig(max_iter=5000, rel_tol=1e-15))
        rel = np.linalg.norm(res.estimates[0] - th_ls) / max(1.0, np.linalg.norm(th_ls))
        assert rel < 1e-6


def test_solver_zero_observation():
    prob = l1_problem(np.zeros(4), rng_from_seed(3).standard_normal((4, 3)), 1.0)
    res = apg_solve(prob)
    assert res.objective == 0.0
    assert res.iterations == 0
    assert all(np.array_equal(t, np.zeros(3)) for t in res.estimates)


def test_solver_recovers_noiseless_sparse_mca():
    # 1-sparse plus 1-sparse with Q = I; recovery in at least 90% of trials
    from suprec.experiments import McaConfig, gen_mca_instance

    cfg = McaConfig(p=50, s1=1, s2=1, q_kind="identity", noise_sigma=0.0,
                    n_grid=(40,), trials=20, base_seed=101)
    hits = 0
    for trial in range(20):
        prob = gen_mca_instance(cfg, 40, trial)
        res = apg_solve(prob, SolverConfig(max_iter=2000, rel_tol=1e-14))
        if res.total_error <= 1e-4:
            hits += 1
    assert hits >= 18


def test_iterates_feasible():
    rng = rng_from_seed(4)
    X = rng.standard_normal((10, 8))
    spec1 = ComponentSpec(kind="l1", radius=1.0)
    spec2 = ComponentSpec(kind="ksupport", radius=1.5, k=2)
    prob = SuperpositionProblem(y=rng.standard_normal(10), X=X, components=[spec1, spec2])
    res = apg_solve(prob, SolverConfig(max_iter=100))
    for spec, t in zip(prob.components, res.estimates):
        assert norm_eval(spec, t) <= spec.radius * (1 + 1e-9)


def test_deterministic_objective_trace():
    rng = rng_from_seed(5)
    X = rng.standard_normal((12, 6))
    y = rng.standard_normal(12)
    prob = l1_problem(y, X, 0.8)
    a = apg_solve(prob, SolverConfig(max_iter=200))
    b = apg_solve(prob, SolverConfig(max_iter=200))
    assert a.objective_trace == b.objective_trace


def test_momentum_recursion_closed_form():
    # alpha_{t+1} = (1 + sqrt(1 + 4 alpha_t^2)) / 2 from alpha_0 = 0
    alpha = 0.0
    seq = [alpha]
    for _ in range(10):
        alpha = 0.5 * (1 + np.sqrt(1 + 4 * alpha * alpha))
        seq.append(alpha)
    assert seq[1] == 1.0
    assert abs(seq[2] - (1 + np.sqrt(5)) / 2) < 1e-15
    for a, b in zip(seq, seq[1:]):
        assert b == 0.5 * (1 + np.sqrt(1 + 4 * a * a))


def test_ground_truth_must_be_feasible():
    with pytest.raises(ValueError):
        SuperpositionProblem(
            y=np.zeros(2), X=np.eye(2),
            components=[ComponentSpec(kind="l1", radius=0.5)],
            ground_truth=[np.array([1.0, 1.0])],
        )


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(beta=1.5)
    with pytest.raises(ValueError):
        SolverConfig(eta0=0.0)


def test_error_fields_populated():
    rng = rng_from_seed(6)
    X = rng.standard_normal((20, 5))
    truth = np.array([1.0, 0, 0, 0, 0])
    prob = l1_problem(X @ truth, X, 1.0, truth=truth)
    res = apg_solve(prob, SolverConfig(max_iter=500, rel_tol=1e-14))
    assert res.componentwise_error is not None
    assert abs(res.total_error - sum(res.componentwise_error)) < 1e-12


# ------------------------------------------------------------- penalized form

def test_penalized_huge_lambda_collapses():
    rng = rng_from_seed(7)
    X = rng.standard_normal((10, 4))
    prob = l1_problem(rng.standard_normal(10), X, 1.0)
    res = solve_penalized(prob, [1e6], SolverConfig(max_iter=200))
    assert np.max(np.abs(res.estimates[0])) < 1e-8


def test_penalized_zero_lambda_is_least_squares():
    rng = rng_from_seed(8)
    p, n = 6, 12
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    prob = l1_problem(y, X, 1.0)
    res = solve_penalized(prob, [0.0], SolverConfig(max_iter=5000, rel_tol=1e-15))
    th_ls = np.linalg.lstsq(X, y, rcond=None)[0]
    assert np.linalg.norm(res.estimates[0] - th_ls) < 1e-6 * max(1.0, np.linalg.norm(th_ls))


def test_penalized_orthonormal_design_is_soft_threshold():
    # with X orthonormal the lasso solution thresholds X^T y at lambda / 2
    rng = rng_from_seed(9)
    p = 8
    X, _ = np.linalg.qr(rng.standard_normal((p, p)))
    y = rng.standard_normal(p)
    lam = 0.6
    prob = l1_problem(y, X, 1.0)
    res = solve_penalized(prob, [lam], SolverConfig(max_iter=5000, rel_tol=1e-15))
    z = X.T @ y
    expect = np.sign(z) * np.maximum(np.abs(z) - lam / 2, 0.0)
    assert np.max(np.abs(res.estimates[0] - expect)) < 1e-6


def test_penalized_rejects_ksupport():
    prob = SuperpositionProblem(
        y=np.zeros(3) + 1.0, X=np.eye(3),
        components=[ComponentSpec(kind="ksupport", radius=1.0, k=2)],
    )
    with pytest.raises(Exception):
        solve_penalized(prob, [0.1])
