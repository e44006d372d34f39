"""Accelerated projected-gradient solver for constrained superposition
recovery, plus the penalized (prox-based) variant used for comparisons.

The objective is f(theta) = ||y - X sum_i theta_i||_2^2 with one norm-ball
constraint per component. All components share the same gradient since f
depends only on the sum.
"""

from dataclasses import dataclass, field

import numpy as np

from .norms import ComponentSpec, norm_eval, project_ball, prox


class BacktrackingError(RuntimeError):
    def __init__(self, iteration):
        super().__init__(f"backtracking failed to find a step at iteration {iteration}")
        self.iteration = iteration


@dataclass
class SuperpositionProblem:
    y: np.ndarray
    X: np.ndarray
    components: list
    ground_truth: list = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.y.ndim != 1 or self.X.ndim != 2 or self.X.shape[0] != self.y.size:
            raise ValueError("y must be length n and X must be n x p")
        if not self.components:
            raise ValueError("at least one component required")
        p = self.X.shape[1]
        for spec in self.components:
            spec.check_dim(np.zeros(p))
        if self.ground_truth is not None:
            self.ground_truth = [np.asarray(t, dtype=float) for t in self.ground_truth]
            if len(self.ground_truth) != len(self.components):
                raise ValueError("ground_truth length must match components")
            for spec, t in zip(self.components, self.ground_truth):
                r = norm_eval(spec, t)
                if r > spec.radius * (1 + 1e-8) + 1e-12:
                    raise ValueError("ground-truth component violates its radius")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def k(self):
        return len(self.components)


@dataclass
class SolverConfig:
    eta0: float = 1.0
    beta: float = 0.5
    max_iter: int = 5000
    rel_tol: float = 1e-10
    max_backtracks: int = 60

    def __post_init__(self):
        if not (0 < self.beta < 1):
            raise ValueError("beta must be in (0, 1)")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be > 0")


@dataclass
class SolverResult:
    estimates: list
    objective: float
    iterations: int
    total_backtracks: int
    objective_trace: list = field(default_factory=list)
    componentwise_error: list = None
    total_error: float = None


def objective(problem, thetas):
    r = problem.y - problem.X @ np.sum(thetas, axis=0)
    return float(r @ r)


def gradient_component(problem, thetas):
    """Shared per-component gradient -2 X^T (y - X sum theta_i)."""
    r = problem.y - problem.X @ np.sum(thetas, axis=0)
    return -2.0 * (problem.X.T @ r)


def _finish(problem, tilde, f_tilde, iters, backtracks, trace):
    result = SolverResult(
        estimates=[t.copy() for t in tilde],
        objective=f_tilde,
        iterations=iters,
        total_backtracks=backtracks,
        objective_trace=trace,
    )
    if problem.ground_truth is not None:
        errs = [float(np.linalg.norm(t - g)) for t, g in zip(tilde, problem.ground_truth)]
        result.componentwise_error = errs
        result.total_error = float(sum(errs))
    return result


def _apg_loop(problem, config, step):
    """Shared accelerated loop. `step` maps (theta_i, eta, grad, i) to the
    candidate feasible point; the Armijo-style model test uses f only."""
    k, p = problem.k, problem.p
    theta = [np.zeros(p) for _ in range(k)]
    tilde_prev = [np.zeros(p) for _ in range(k)]
    alpha = 0.0
    trace = []
    total_bt = 0
    f_prev_tilde = None
    tilde = tilde_prev
    f_tilde = objective(problem, tilde)
    for t in range(config.max_iter):
        f_t = objective(problem, theta)
        if not np.isfinite(f_t):
            raise RuntimeError(f"non-finite objective at iteration {t}")
        if f_t == 0.0:
            tilde = theta
            f_tilde = 0.0
            trace.append(0.0)
            return _finish(problem, tilde, 0.0, t, total_bt, trace)
        grad = gradient_component(problem, theta)
        eta = config.eta0
        for bt in range(config.max_backtracks + 1):
            tilde = [step(theta[i], eta, grad, i) for i in range(k)]
            f_tilde = objective(problem, tilde)
            lin = float(grad @ np.sum([ti - th for ti, th in zip(tilde, theta)], axis=0))
            quad = sum(float(np.sum((ti - th) ** 2)) for ti, th in zip(tilde, theta))
            if f_tilde <= f_t + lin + quad / (2.0 * eta):
                break
            eta *= config.beta
            total_bt += 1
        else:
            raise BacktrackingError(t)
        alpha_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * alpha * alpha))
        mom = (alpha - 1.0) / alpha_next
        theta = [ti + mom * (ti - tp) for ti, tp in zip(tilde, tilde_prev)]
        tilde_prev = tilde
        alpha = alpha_next
        trace.append(f_tilde)
        # alpha_0 = 0 makes the first momentum step retrace iteration 0
        # exactly, so the change test only starts once real progress can show
        if t >= 2 and f_prev_tilde is not None and abs(f_tilde - f_prev_tilde) <= config.rel_tol * max(
            1.0, f_prev_tilde
        ):
            return _finish(problem, tilde, f_tilde, t + 1, total_bt, trace)
        f_prev_tilde = f_tilde
    return _finish(problem, tilde, f_tilde, config.max_iter, total_bt, trace)


def apg_solve(problem, config=None):
    """Accelerated projected gradient on the constrained estimator. Returns
    the feasible iterate (the projected point, not the extrapolated one)."""
    config = config or SolverConfig()
    specs = problem.components

    def step(th, eta, grad, i):
        return project_ball(specs[i], th - eta * grad)

    return _apg_loop(problem, config, step)


def solve_penalized(problem, lambdas, config=None):
    """FISTA on ||y - X sum theta_i||^2 + sum lambda_i R_i(theta_i); the radii
    in the specs are ignored. Requires a prox for every component."""
    config = config or SolverConfig()
    specs = problem.components
    if len(lambdas) != len(specs):
        raise ValueError("one lambda per component required")

    def step(th, eta, grad, i):
        lam = lambdas[i]
        if lam == 0:
            return th - eta * grad
        return prox(specs[i], th - eta * grad, eta * lam)

    result = _apg_loop(problem, config, step)
    pen = sum(
        lam * norm_eval(spec, t) for lam, spec, t in zip(lambdas, specs, result.estimates)
    )
    result.objective = result.objective + float(pen)
    return result
