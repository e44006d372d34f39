"""Synthetic instance generators and seeded trial runners: error-vs-n sweeps,
noiseless phase transitions, k-support sparsity sweeps, the low-rank+sparse
model, and the constrained-vs-penalized estimator comparison.

Each trial owns its seed (base_seed mixed with (n, trial)), so sweeps are
deterministic regardless of worker count and trial subsets.
"""

import csv
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import dct_matrix, random_orthogonal, rng_from_seed
from .norms import (
    KSUPPORT,
    L1,
    NUCLEAR,
    ROTATED_L1,
    ComponentSpec,
    ksupport_norm,
    norm_eval,
)
from .solver import SolverConfig, SuperpositionProblem, apg_solve, solve_penalized

RECOVERY_THRESHOLD = 1e-4

Q_IDENTITY = "identity"
Q_NEG_IDENTITY = "negative_identity"
Q_RANDOM = "random_orthogonal"
Q_DCT = "dct"


@dataclass(frozen=True)
class McaConfig:
    p: int
    s1: int = 1
    s2: int = 1
    q_kind: str = Q_IDENTITY
    noise_sigma: float = 0.0
    n_grid: tuple = ()
    trials: int = 1
    base_seed: int = 0
    norm_kind: str = L1
    q_fresh_per_trial: bool = False

    def __post_init__(self):
        if self.s1 + self.s2 > self.p:
            raise ValueError("s1 + s2 must not exceed p")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.q_kind not in (Q_IDENTITY, Q_NEG_IDENTITY, Q_RANDOM, Q_DCT):
            raise ValueError(f"unknown q_kind {self.q_kind!r}")
        if self.norm_kind not in (L1, KSUPPORT):
            raise ValueError("norm_kind must be l1 or ksupport")


@dataclass(frozen=True)
class LowRankSparseConfig:
    d1: int
    d2: int
    rank: int
    sparsity: int
    n_grid: tuple = ()
    trials: int = 1
    noise_sigma: float = 0.0
    base_seed: int = 0

    def __post_init__(self):
        if not (1 <= self.rank <= min(self.d1, self.d2)):
            raise ValueError("rank must be in [1, min(d1, d2)]")
        if not (1 <= self.sparsity <= self.d1 * self.d2):
            raise ValueError("sparsity must be in [1, d1*d2]")


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial: int
    seed: int
    total_error: float
    componentwise_error: tuple
    recovered: bool
    iterations: int
    # timing is diagnostic only; it must not break determinism comparisons
    wall_ms: float = field(compare=False, default=0.0)


def _mix_seed(base_seed, n, trial):
    # fixed integer mix; Python's hash() is salted and unusable here
    return (base_seed + 1_000_003 * n + 10_007 * trial + 7) & (2**62 - 1)


def _make_q(config, seed):
    if config.q_kind == Q_IDENTITY:
        return np.eye(config.p)
    if config.q_kind == Q_NEG_IDENTITY:
        return -np.eye(config.p)
    if config.q_kind == Q_DCT:
        return dct_matrix(config.p)
    Q = random_orthogonal(config.p, seed)
    # positive alignment of the two spikes; the recoverable sign case
    if config.s1 == 1 and config.s2 == 1 and Q[0, 0] < 0:
        Q = -Q
    return Q


def gen_mca_instance(config, n, trial):
    """One MCA instance: theta1 has s1 leading ones, Q theta2 has s2 leading
    ones, X and omega are i.i.d. Gaussian."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = _mix_seed(config.base_seed, n, trial)
    # fresh Q per trial, but the same Q across the n grid: each trial's
    # recovery is then monotone in n instead of resampling the geometry
    q_seed = _mix_seed(config.base_seed, 0, trial) if config.q_fresh_per_trial else config.base_seed
    Q = _make_q(config, q_seed)
    theta1 = np.zeros(config.p)
    theta1[: config.s1] = 1.0
    q_theta2 = np.zeros(config.p)
    q_theta2[: config.s2] = 1.0
    theta2 = Q.T @ q_theta2
    rng = rng_from_seed(seed)
    X = rng.standard_normal((n, config.p))
    y = X @ (theta1 + theta2)
    if config.noise_sigma > 0:
        y = y + config.noise_sigma * rng.standard_normal(n)
    if config.norm_kind == L1:
        spec1 = ComponentSpec(kind=L1, radius=float(np.abs(theta1).sum()))
        spec2 = ComponentSpec(kind=ROTATED_L1, radius=float(np.abs(q_theta2).sum()), rotation=Q)
    else:
        spec1 = ComponentSpec(kind=KSUPPORT, radius=ksupport_norm(theta1, config.s1), k=config.s1)
        spec2 = ComponentSpec(
            kind=KSUPPORT, radius=ksupport_norm(q_theta2, config.s2), k=config.s2, rotation=Q
        )
    return SuperpositionProblem(
        y=y, X=X, components=[spec1, spec2], ground_truth=[theta1, theta2]
    )


def gen_lowrank_sparse_instance(config, n, trial):
    """Low-rank plus sparse instance with vectorized Gaussian measurements."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = _mix_seed(config.base_seed, n, trial)
    rng = rng_from_seed(seed)
    d1, d2, r = config.d1, config.d2, config.rank
    # factor std 1/sqrt(r) keeps the nuclear radius roughly flat across ranks
    A = rng.standard_normal((d1, r)) / math.sqrt(r)
    B = rng.standard_normal((d2, r)) / math.sqrt(r)
    L = A @ B.T
    S = np.zeros(d1 * d2)
    pos = rng.choice(d1 * d2, size=config.sparsity, replace=False)
    S[pos] = rng.choice([-1.0, 1.0], size=config.sparsity)
    X = rng.standard_normal((n, d1 * d2))
    truth = L.reshape(-1) + S
    y = X @ truth
    if config.noise_sigma > 0:
        y = y + config.noise_sigma * rng.standard_normal(n)
    nuclear_radius = float(np.linalg.svd(L, compute_uv=False).sum())
    spec_l = ComponentSpec(kind=NUCLEAR, radius=nuclear_radius, matrix_shape=(d1, d2))
    spec_s = ComponentSpec(
        kind=KSUPPORT, radius=ksupport_norm(S, config.sparsity), k=config.sparsity
    )
    return SuperpositionProblem(
        y=y, X=X, components=[spec_l, spec_s], ground_truth=[L.reshape(-1), S]
    )


def _run_trial(config, solver_config, n, trial, generator):
    seed = _mix_seed(config.base_seed, n, trial)
    start = time.perf_counter()
    try:
        problem = generator(config, n, trial)
        result = apg_solve(problem, solver_config)
        wall_ms = 1000.0 * (time.perf_counter() - start)
        return TrialRecord(
            n=n,
            trial=trial,
            seed=seed,
            total_error=result.total_error,
            componentwise_error=tuple(result.componentwise_error),
            recovered=result.total_error <= RECOVERY_THRESHOLD,
            iterations=result.iterations,
            wall_ms=wall_ms,
        )
    except Exception:
        wall_ms = 1000.0 * (time.perf_counter() - start)
        k = 2
        return TrialRecord(
            n=n,
            trial=trial,
            seed=seed,
            total_error=math.inf,
            componentwise_error=(math.inf,) * k,
            recovered=False,
            iterations=0,
            wall_ms=wall_ms,
        )


def _run_grid(config, solver_config, generator, threads=1):
    tasks = [(n, t) for n in config.n_grid for t in range(config.trials)]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(
                pool.map(lambda nt: _run_trial(config, solver_config, *nt, generator), tasks)
            )
    else:
        records = [_run_trial(config, solver_config, n, t, generator) for n, t in tasks]
    return sorted(records, key=lambda r: (r.n, r.trial))


def run_error_vs_n(config, solver_config=None, threads=1):
    """Generate and solve every (n, trial) cell; per-trial failures are
    recorded as infinite error, not raised."""
    solver_config = solver_config or SolverConfig()
    return _run_grid(config, solver_config, gen_mca_instance, threads=threads)


def mean_error_by_n(records):
    out = {}
    for n in sorted({r.n for r in records}):
        errs = [r.total_error for r in records if r.n == n]
        out[n] = float(np.mean(errs))
    return out


def fraction_recovered_by_n(records):
    out = {}
    for n in sorted({r.n for r in records}):
        flags = [r.recovered for r in records if r.n == n]
        out[n] = float(np.mean(flags))
    return out


def run_phase_transition(configs, solver_config=None, threads=1):
    """Noiseless recovery sweep with a fresh random orthogonal Q per trial.
    Returns {p: records} since TrialRecord does not carry p."""
    solver_config = solver_config or SolverConfig()
    out = {}
    for config in configs:
        if config.noise_sigma != 0:
            raise ValueError("phase-transition sweep requires noise_sigma = 0")
        config = replace(config, q_kind=Q_RANDOM, q_fresh_per_trial=True)
        out[config.p] = _run_grid(config, solver_config, gen_mca_instance, threads=threads)
    return out


def run_ksupport_experiment(
    config, solver_config=None, s_grid=((2, 2), (2, 3), (3, 2), (3, 3)), p_grid=(100, 150), threads=1
):
    """Sparsity sweep with k-support constraints and a DCT rotation.
    Returns {(p, s1, s2): records}."""
    solver_config = solver_config or SolverConfig()
    if config.norm_kind != KSUPPORT:
        raise ValueError("k-support experiment requires norm_kind = ksupport")
    out = {}
    for p, (s1, s2) in itertools.product(p_grid, s_grid):
        cfg = replace(config, p=p, s1=s1, s2=s2, q_kind=Q_DCT)
        out[(p, s1, s2)] = _run_grid(cfg, solver_config, gen_mca_instance, threads=threads)
    return out


def compare_estimators(problem, lambdas, solver_config=None):
    """Solve the same instance with the constrained and the penalized
    estimator; returns (constrained, penalized, decomposition_difference)."""
    solver_config = solver_config or SolverConfig()
    con = apg_solve(problem, solver_config)
    pen = solve_penalized(problem, lambdas, solver_config)
    diff = float(
        sum(np.linalg.norm(a - b) for a, b in zip(con.estimates, pen.estimates))
    )
    return con, pen, diff


def infimal_convolution_norm_bruteforce(norms, theta, grid_step):
    """Grid-search oracle for the infimal-convolution norm at k = 2 in
    dimension <= 3. Test-only; accuracy is O(grid_step)."""
    if len(norms) != 2:
        raise ValueError("oracle supports exactly two component norms")
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    if d > 3:
        raise ValueError("oracle supports dimension <= 3 only")
    if grid_step > 0.05:
        raise ValueError("grid_step must be <= 0.05")
    (spec1, lam1), (spec2, lam2) = norms
    box = 2.0 * float(np.max(np.abs(theta))) if np.any(theta) else grid_step
    axis = np.arange(-box, box + grid_step / 2, grid_step)
    best = math.inf
    for point in itertools.product(*([axis] * d)):
        t1 = np.array(point)
        t2 = theta - t1
        val = lam1 * norm_eval(spec1, t1) + lam2 * norm_eval(spec2, t2)
        if val < best:
            best = val
    return best


CSV_BASE_FIELDS = ("n", "trial", "seed", "total_error", "recovered", "iterations", "wall_ms")


def _fmt(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def emit_csv(records, path, timing=False):
    """CSV with the fixed header plus one err_i column per component; floats
    carry full double precision for exact round-trips.

    wall_ms is written as 0 unless timing is requested, so the default output
    is byte-identical across reruns and thread counts."""
    k = len(records[0].componentwise_error) if records else 0
    header = list(CSV_BASE_FIELDS) + [f"err_{i}" for i in range(k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in records:
            row = [r.n, r.trial, r.seed, _fmt(r.total_error), _fmt(r.recovered), r.iterations,
                   _fmt(r.wall_ms if timing else 0.0)]
            row += [_fmt(e) for e in r.componentwise_error]
            writer.writerow(row)


def parse_csv(path):
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        err_cols = [i for i, name in enumerate(header) if name.startswith("err_")]
        for row in reader:
            records.append(
                TrialRecord(
                    n=int(row[0]),
                    trial=int(row[1]),
                    seed=int(row[2]),
                    total_error=float(row[3]),
                    componentwise_error=tuple(float(row[i]) for i in err_cols),
                    recovered=row[4] == "1",
                    iterations=int(row[5]),
                    wall_ms=float(row[6]),
                )
            )
    return records


def emit_gnuplot(path, csv_name, mode="error", title="mean total error vs n"):
    """gnuplot 5.x script plotting the per-n mean of the CSV on log-log axes."""
    ycol = "total_error" if mode == "error" else "recovered"
    ylabel = "mean total error" if mode == "error" else "recovery fraction"
    scale = "set logscale xy" if mode == "error" else "set logscale x"
    script = f"""set datafile separator ","
set key autotitle columnhead
{scale}
set xlabel "n"
set ylabel "{ylabel}"
set title "{title}"
set terminal pngcairo size 800,600
set output "plot.png"
plot "{csv_name}" using (column("n")):(column("{ycol}")) smooth unique \\
    with linespoints title "{ylabel}"
"""
    with open(path, "w") as fh:
        fh.write(script)
