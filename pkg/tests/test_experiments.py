import math
import os

import numpy as np
import pytest

from suprec.experiments import (
    LowRankSparseConfig,
    McaConfig,
    RECOVERY_THRESHOLD,
    TrialRecord,
    compare_estimators,
    emit_csv,
    emit_gnuplot,
    fraction_recovered_by_n,
    gen_lowrank_sparse_instance,
    gen_mca_instance,
    infimal_convolution_norm_bruteforce,
    mean_error_by_n,
    parse_csv,
    run_error_vs_n,
    run_ksupport_experiment,
    run_phase_transition,
)
from suprec.norms import ComponentSpec, ksupport_norm, norm_eval
from suprec.solver import SolverConfig


def test_config_validation():
    with pytest.raises(ValueError):
        McaConfig(p=3, s1=2, s2=2)
    with pytest.raises(ValueError):
        McaConfig(p=10, n_grid=(10, 10))
    with pytest.raises(ValueError):
        McaConfig(p=10, trials=0)
    with pytest.raises(ValueError):
        McaConfig(p=10, q_kind="hadamard")
    with pytest.raises(ValueError):
        LowRankSparseConfig(d1=3, d2=3, rank=4, sparsity=1)
    with pytest.raises(ValueError):
        LowRankSparseConfig(d1=3, d2=3, rank=1, sparsity=0)


def test_mca_identity_radii():
    cfg = McaConfig(p=10, s1=1, s2=1, q_kind="identity")
    prob = gen_mca_instance(cfg, 5, 0)
    assert prob.components[0].radius == 1.0
    assert prob.components[1].radius == 1.0


def test_mca_noiseless_exact():
    cfg = McaConfig(p=8, s1=1, s2=1, q_kind="identity", noise_sigma=0.0)
    prob = gen_mca_instance(cfg, 6, 0)
    total = prob.ground_truth[0] + prob.ground_truth[1]
    assert np.allclose(prob.y, prob.X @ total)


def test_mca_ksupport_radius_is_l2_on_support():
    cfg = McaConfig(p=12, s1=2, s2=1, q_kind="identity", norm_kind="ksupport")
    prob = gen_mca_instance(cfg, 5, 0)
    assert abs(prob.components[0].radius - math.sqrt(2.0)) < 1e-12


def test_mca_generator_feasibility():
    for qk in ("identity", "negative_identity", "random_orthogonal", "dct"):
        cfg = McaConfig(p=15, s1=2, s2=3, q_kind=qk, base_seed=3)
        prob = gen_mca_instance(cfg, 9, 1)
        for spec, t in zip(prob.components, prob.ground_truth):
            assert norm_eval(spec, t) <= spec.radius * (1 + 1e-10)


def test_lowrank_sparse_instance():
    cfg = LowRankSparseConfig(d1=4, d2=5, rank=2, sparsity=3, base_seed=1)
    prob = gen_lowrank_sparse_instance(cfg, 25, 0)
    L = prob.ground_truth[0].reshape(4, 5)
    S = prob.ground_truth[1]
    assert prob.components[0].radius == pytest.approx(np.linalg.svd(L, compute_uv=False).sum())
    assert np.count_nonzero(S) == 3
    assert set(np.abs(S[S != 0])) == {1.0}
    assert prob.components[1].radius == pytest.approx(ksupport_norm(S, 3))


def test_lowrank_rank1_radius_is_top_singular_value():
    cfg = LowRankSparseConfig(d1=3, d2=3, rank=1, sparsity=1, base_seed=2)
    prob = gen_lowrank_sparse_instance(cfg, 10, 0)
    L = prob.ground_truth[0].reshape(3, 3)
    s = np.linalg.svd(L, compute_uv=False)
    assert s[1] < 1e-10 * s[0]
    assert prob.components[0].radius == pytest.approx(s[0])


def test_rank1_spike_instance_loadable():
    # the rank-1 equals 1-sparse corner case: S = L = e1 e1^T is a valid
    # fixed instance even though it is maximally coherent
    spec_l = ComponentSpec(kind="nuclear", radius=1.0, matrix_shape=(2, 2))
    spec_s = ComponentSpec(kind="ksupport", radius=1.0, k=1)
    from suprec.solver import SuperpositionProblem

    M = np.zeros((2, 2))
    M[0, 0] = 1.0
    rng = np.random.default_rng(0)
    X = rng.standard_normal((12, 4))
    truth = M.reshape(-1) + M.reshape(-1)
    prob = SuperpositionProblem(y=X @ truth, X=X, components=[spec_l, spec_s],
                                ground_truth=[M.reshape(-1), M.reshape(-1)])
    assert prob.k == 2


def test_empty_n_grid():
    cfg = McaConfig(p=10, n_grid=())
    assert run_error_vs_n(cfg) == []


def test_negative_identity_never_recovers():
    # theta1 and theta2 cancel in y, so the decomposition is unidentifiable
    cfg = McaConfig(p=20, s1=1, s2=1, q_kind="negative_identity",
                    noise_sigma=0.0, n_grid=(15, 60), trials=5, base_seed=4)
    records = run_error_vs_n(cfg, SolverConfig(max_iter=500))
    means = mean_error_by_n(records)
    for n, m in means.items():
        assert m >= 1.0  # ||theta1*||_2 = 1


def test_identity_recovers_at_large_n():
    cfg = McaConfig(p=50, s1=1, s2=1, q_kind="identity", noise_sigma=0.0,
                    n_grid=(40,), trials=10, base_seed=5)
    records = run_error_vs_n(cfg, SolverConfig(max_iter=2000, rel_tol=1e-14))
    assert fraction_recovered_by_n(records)[40] >= 0.9


def test_seed_isolation():
    # a trial's record must not depend on which other trials run
    cfg_full = McaConfig(p=12, s1=1, s2=1, q_kind="identity", noise_sigma=0.5,
                         n_grid=(8, 16), trials=3, base_seed=6)
    cfg_single = McaConfig(p=12, s1=1, s2=1, q_kind="identity", noise_sigma=0.5,
                           n_grid=(16,), trials=3, base_seed=6)
    sc = SolverConfig(max_iter=300)
    full = {(r.n, r.trial): r for r in run_error_vs_n(cfg_full, sc)}
    single = {(r.n, r.trial): r for r in run_error_vs_n(cfg_single, sc)}
    for key, rec in single.items():
        assert full[key] == rec


def test_thread_count_invariance():
    cfg = McaConfig(p=15, s1=1, s2=1, q_kind="random_orthogonal", noise_sigma=1.0,
                    n_grid=(10, 20), trials=4, base_seed=7)
    sc = SolverConfig(max_iter=300)
    assert run_error_vs_n(cfg, sc, threads=1) == run_error_vs_n(cfg, sc, threads=4)


def test_recovered_flag_matches_threshold():
    cfg = McaConfig(p=10, s1=1, s2=1, q_kind="identity", noise_sigma=0.0,
                    n_grid=(12,), trials=4, base_seed=8)
    for r in run_error_vs_n(cfg, SolverConfig(max_iter=1000, rel_tol=1e-14)):
        assert r.recovered == (r.total_error <= RECOVERY_THRESHOLD)


def test_phase_transition_requires_noiseless():
    cfg = McaConfig(p=10, noise_sigma=0.5, n_grid=(5,), trials=1)
    with pytest.raises(ValueError):
        run_phase_transition([cfg])


def test_phase_transition_deterministic():
    cfg = McaConfig(p=10, s1=1, s2=1, noise_sigma=0.0, n_grid=(6, 12), trials=3, base_seed=9)
    sc = SolverConfig(max_iter=300)
    a = run_phase_transition([cfg], sc)
    b = run_phase_transition([cfg], sc)
    assert a == b


def test_ksupport_experiment_requires_ksupport():
    cfg = McaConfig(p=10, n_grid=(5,), trials=1, norm_kind="l1")
    with pytest.raises(ValueError):
        run_ksupport_experiment(cfg)


def test_ksupport_experiment_shapes():
    cfg = McaConfig(p=30, s1=2, s2=2, norm_kind="ksupport", n_grid=(25,),
                    trials=2, base_seed=10)
    out = run_ksupport_experiment(cfg, SolverConfig(eta0=1e-2, max_iter=50),
                                  s_grid=((2, 2),), p_grid=(30, 40))
    assert set(out.keys()) == {(30, 2, 2), (40, 2, 2)}
    for recs in out.values():
        assert len(recs) == 2


def test_compare_estimators_agree_on_easy_instance():
    # with Q = I the split theta1/theta2 is non-unique for the penalized
    # estimator (mass can slide between the components at equal penalty),
    # so only the summed estimate is comparable
    cfg = McaConfig(p=20, s1=1, s2=1, q_kind="identity", noise_sigma=0.0, base_seed=11)
    prob = gen_mca_instance(cfg, 60, 0)
    sc = SolverConfig(max_iter=4000, rel_tol=1e-15)
    con, pen, diff = compare_estimators(prob, [1e-3, 1e-3], sc)
    assert con.total_error <= 1e-3
    truth_sum = prob.ground_truth[0] + prob.ground_truth[1]
    assert np.linalg.norm(sum(pen.estimates) - truth_sum) <= 1e-2
    assert np.linalg.norm(sum(con.estimates) - sum(pen.estimates)) <= 1e-2
    assert diff >= 0.0


def test_compare_estimators_huge_lambda():
    cfg = McaConfig(p=10, s1=1, s2=1, q_kind="identity", noise_sigma=0.0, base_seed=12)
    prob = gen_mca_instance(cfg, 8, 0)
    con, pen, diff = compare_estimators(prob, [1e6, 1e6], SolverConfig(max_iter=300))
    assert max(np.max(np.abs(t)) for t in pen.estimates) < 1e-8
    assert max(np.max(np.abs(t)) for t in con.estimates) > 0.1


def test_constrained_solution_norm_at_radius_when_active():
    # k = 1 with a radius below the least-squares norm: the constraint binds
    rng = np.random.default_rng(13)
    X = rng.standard_normal((30, 6))
    truth = np.array([2.0, -1.0, 0, 0, 0, 0])
    spec = ComponentSpec(kind="l1", radius=1.0)
    from suprec.solver import SuperpositionProblem, apg_solve

    prob = SuperpositionProblem(y=X @ truth, X=X, components=[spec])
    res = apg_solve(prob, SolverConfig(max_iter=3000, rel_tol=1e-15))
    assert abs(np.abs(res.estimates[0]).sum() - 1.0) < 1e-6


# ------------------------------------------------------ infimal convolution

def test_ic_identical_l1_norms():
    spec = ComponentSpec(kind="l1", radius=1.0)
    val = infimal_convolution_norm_bruteforce([(spec, 1.0), (spec, 1.0)],
                                              np.array([1.0, 0.0]), 0.05)
    assert abs(val - 1.0) < 0.06


def test_ic_zero_vector():
    spec = ComponentSpec(kind="l1", radius=1.0)
    assert infimal_convolution_norm_bruteforce([(spec, 1.0), (spec, 2.0)],
                                               np.zeros(2), 0.05) == 0.0


def test_ic_takes_cheaper_component():
    spec = ComponentSpec(kind="l1", radius=1.0)
    theta = np.array([1.0, 0.5])
    val = infimal_convolution_norm_bruteforce([(spec, 1.0), (spec, 2.0)], theta, 0.05)
    assert abs(val - np.abs(theta).sum()) < 0.08


def test_ic_validates_inputs():
    spec = ComponentSpec(kind="l1", radius=1.0)
    with pytest.raises(ValueError):
        infimal_convolution_norm_bruteforce([(spec, 1.0)], np.zeros(2), 0.05)
    with pytest.raises(ValueError):
        infimal_convolution_norm_bruteforce([(spec, 1.0), (spec, 1.0)], np.zeros(4), 0.05)
    with pytest.raises(ValueError):
        infimal_convolution_norm_bruteforce([(spec, 1.0), (spec, 1.0)], np.zeros(2), 0.5)


# ----------------------------------------------------------------- csv / plot

def sample_records():
    return [
        TrialRecord(n=10, trial=0, seed=17, total_error=0.25, componentwise_error=(0.1, 0.15),
                    recovered=False, iterations=42, wall_ms=3.5),
        TrialRecord(n=10, trial=1, seed=18, total_error=1e-9, componentwise_error=(5e-10, 5e-10),
                    recovered=True, iterations=17, wall_ms=1.25),
        TrialRecord(n=20, trial=0, seed=19, total_error=1 / 3, componentwise_error=(1 / 6, 1 / 6),
                    recovered=False, iterations=99, wall_ms=7.125),
    ]


def test_csv_roundtrip(tmp_path):
    path = os.path.join(tmp_path, "records.csv")
    records = sample_records()
    emit_csv(records, path)
    assert parse_csv(path) == records
    # default output zeroes the timing column for reproducibility
    assert all(r.wall_ms == 0.0 for r in parse_csv(path))


def test_csv_timing_opt_in(tmp_path):
    path = os.path.join(tmp_path, "timed.csv")
    records = sample_records()
    emit_csv(records, path, timing=True)
    parsed = parse_csv(path)
    assert [r.wall_ms for r in parsed] == [r.wall_ms for r in records]


def test_csv_header(tmp_path):
    path = os.path.join(tmp_path, "records.csv")
    emit_csv(sample_records(), path)
    with open(path) as fh:
        head = fh.readline().strip()
    assert head == "n,trial,seed,total_error,recovered,iterations,wall_ms,err_0,err_1"


def test_csv_empty_records(tmp_path):
    path = os.path.join(tmp_path, "empty.csv")
    emit_csv([], path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines == ["n,trial,seed,total_error,recovered,iterations,wall_ms"]


def test_gnuplot_script_content(tmp_path):
    gp = os.path.join(tmp_path, "plot.gp")
    emit_gnuplot(gp, "records.csv", mode="error")
    text = open(gp).read()
    assert "records.csv" in text
    assert "logscale" in text
    assert "smooth unique" in text


def test_mean_and_fraction_aggregation():
    records = sample_records()
    means = mean_error_by_n(records)
    assert means[10] == pytest.approx((0.25 + 1e-9) / 2)
    fracs = fraction_recovered_by_n(records)
    assert fracs[10] == 0.5
    assert fracs[20] == 0.0
