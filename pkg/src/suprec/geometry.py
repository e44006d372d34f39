"""Empirical estimators for the geometry of component error cones: sampled
structural-coherence and restricted-eigenvalue constants, Gaussian widths,
and the closed-form incoherence quantities.

All estimators are Monte-Carlo with a one-sided bias: sampled minima over
cone tuples upper-bound the true infimum (rho, kappa), sampled suprema
lower-bound the true supremum (delta, cone widths). Everything is
deterministic given its seed.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .linalg import rng_from_seed, svd
from .norms import project_ball

SUBSPACE_EXACT = "SubspaceExact"
CONE_SAMPLED_SUP = "ConeSampledSup"
L1_NORMAL_CONE = "L1NormalConeDistance"


@dataclass(frozen=True, eq=False)
class ConeSample:
    direction: np.ndarray
    component_index: int


@dataclass(frozen=True)
class GeometryReport:
    rho_hat: float
    delta_hat: float
    kappa_hat: float
    num_samples: int
    seed: int


@dataclass(frozen=True)
class WidthEstimate:
    value: float
    std_error: float
    method: str
    draws: int


def _default_spread(spec, spread):
    if spread is not None:
        return spread
    return 0.5 * spec.radius if spec.radius > 0 else 1.0


def _cone_direction(spec, anchor, g, spread):
    """Constructive sampler step: a unit cone direction from a Gaussian
    perturbation, or None when the projection returns the anchor itself."""
    u = project_ball(spec, anchor + spread * g)
    delta = u - anchor
    nd = np.linalg.norm(delta)
    if nd < 1e-12:
        return None
    return delta / nd


def sample_cone_directions(spec, anchor, count, spread=None, seed=0, component_index=0):
    """Unit directions in the error cone at `anchor`, by projecting Gaussian
    perturbations of the anchor back onto the ball. Membership holds by
    convexity of the ball."""
    anchor = np.asarray(anchor, dtype=float)
    if count < 1:
        raise ValueError("count must be >= 1")
    spread = _default_spread(spec, spread)
    rng = rng_from_seed(seed)
    out = []
    attempts = 0
    while len(out) < count:
        if attempts >= 50 * count:
            raise RuntimeError(
                f"cone sampler accepted {len(out)}/{count} after {attempts} draws; "
                "spread too small or degenerate cone"
            )
        g = rng.standard_normal(anchor.size)
        attempts += 1
        d = _cone_direction(spec, anchor, g, spread)
        if d is not None:
            out.append(ConeSample(direction=d, component_index=component_index))
    return out


def _direction_pools(cone_specs, count, seed, spread=None):
    pools = []
    for i, (spec, anchor) in enumerate(cone_specs):
        samples = sample_cone_directions(
            spec, anchor, count, spread=spread, seed=seed + 7919 * (i + 1), component_index=i
        )
        pools.append(np.array([s.direction for s in samples]))
    return pools


def estimate_delta(cone_specs, samples_per_cone, seed=0, spread=None):
    """Sampled version of the worst pairwise cone alignment: max over i of
    sup -<u, v> with u in cone i and v a positive combination of the others.
    Lower-bounds the true delta; tightens with more samples."""
    if len(cone_specs) < 2:
        raise ValueError("estimate_delta requires k >= 2 cones")
    pools = _direction_pools(cone_specs, samples_per_cone, seed, spread)
    rng = rng_from_seed(seed + 104729)
    k = len(pools)
    best = -1.0
    for i in range(k):
        others = [pools[j] for j in range(k) if j != i]
        combos = []
        for _ in range(samples_per_cone):
            weights = rng.dirichlet(np.ones(k - 1))
            picks = [pool[rng.integers(pool.shape[0])] for pool in others]
            v = sum(w * d for w, d in zip(weights, picks))
            nv = np.linalg.norm(v)
            if nv > 1e-14:
                combos.append(v / nv)
        if not combos:
            raise RuntimeError("degenerate cone combination while estimating delta")
        V = np.array(combos)
        best = max(best, float(np.max(-(pools[i] @ V.T))))
    return min(best, 1.0)


def _tuple_stream(cone_specs, tuples, seed, spread=None):
    """Yields summed error tuples sum_i Delta_i with sum_i ||Delta_i|| = 1;
    the same seed yields the identical stream for rho and kappa."""
    pools = _direction_pools(cone_specs, tuples, seed, spread)
    rng = rng_from_seed(seed + 15485863)
    k = len(pools)
    for t in range(tuples):
        weights = rng.dirichlet(np.ones(k))
        yield sum(w * pool[t] for w, pool in zip(weights, pools))


def estimate_rho(cone_specs, tuples, seed=0, spread=None):
    """Sampled min of ||sum Delta_i|| over unit-total-norm cone tuples; an
    upper estimate of the structural-coherence constant. Exactly 1 at k=1."""
    if tuples < 1:
        raise ValueError("tuples must be >= 1")
    if len(cone_specs) == 1:
        return 1.0
    vals = [np.linalg.norm(s) for s in _tuple_stream(cone_specs, tuples, seed, spread)]
    return float(np.min(vals))


def estimate_kappa(X, cone_specs, tuples, seed=0, spread=None):
    """Sampled min of ||X sum Delta_i||_2 / sqrt(n) over the same tuple
    stream as estimate_rho; upper estimate of the RE constant."""
    X = np.asarray(X, dtype=float)
    if tuples < 1:
        raise ValueError("tuples must be >= 1")
    n = X.shape[0]
    vals = [
        np.linalg.norm(X @ s) / math.sqrt(n)
        for s in _tuple_stream(cone_specs, tuples, seed, spread)
    ]
    return float(np.min(vals))


def rho_from_delta(delta, k):
    """Closed-form lower bound rho >= (1/k) sqrt((1 - delta)/2)."""
    if abs(delta) > 1:
        raise ValueError("delta must lie in [-1, 1]")
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.sqrt((1.0 - delta) / 2.0) / k


def pairwise_bound(delta):
    """Two-cone constant sqrt((1 - delta)/2); requires delta < 1."""
    if delta >= 1:
        raise ValueError("delta must be < 1")
    return math.sqrt((1.0 - delta) / 2.0)


def geometry_report(cone_specs, X=None, tuples=1000, samples_per_cone=500, seed=0):
    """Bundle of the sampled geometric estimates for a set of cones."""
    k = len(cone_specs)
    rho = estimate_rho(cone_specs, tuples, seed=seed)
    delta = estimate_delta(cone_specs, samples_per_cone, seed=seed) if k >= 2 else -1.0
    kappa = estimate_kappa(X, cone_specs, tuples, seed=seed) if X is not None else float("nan")
    return GeometryReport(
        rho_hat=rho, delta_hat=delta, kappa_hat=kappa, num_samples=tuples, seed=seed
    )


def gaussian_width_subspace(dim, ambient):
    """Exact width of a dim-dimensional subspace cap: E||g_dim||_2."""
    if not (1 <= dim <= ambient):
        raise ValueError("need 1 <= dim <= ambient")
    value = math.sqrt(2.0) * math.exp(gammaln((dim + 1) / 2.0) - gammaln(dim / 2.0))
    return WidthEstimate(value=value, std_error=0.0, method=SUBSPACE_EXACT, draws=0)


def gaussian_width_cone_mc(
    spec, anchor, gaussian_draws, directions_per_draw, seed=0, spread=None
):
    """Monte-Carlo lower-biased estimate of w(C cap S^{p-1}).

    For each Gaussian draw the sup is taken over a fixed pool of sampled cone
    directions plus the cone direction adapted to the draw itself (the
    projected perturbation along g), clamped below at 0.
    """
    if gaussian_draws < 1 or directions_per_draw < 1:
        raise ValueError("counts must be >= 1")
    anchor = np.asarray(anchor, dtype=float)
    spread = _default_spread(spec, spread)
    pool = sample_cone_directions(
        spec, anchor, directions_per_draw, spread=spread, seed=seed
    )
    U = np.array([s.direction for s in pool])
    rng = rng_from_seed(seed + 32452843)
    vals = np.empty(gaussian_draws)
    for t in range(gaussian_draws):
        g = rng.standard_normal(anchor.size)
        best = float(np.max(U @ g))
        adapted = _cone_direction(spec, anchor, g, spread)
        if adapted is not None:
            best = max(best, float(adapted @ g))
        vals[t] = max(best, 0.0)
    se = float(np.std(vals, ddof=1) / math.sqrt(gaussian_draws)) if gaussian_draws > 1 else 0.0
    return WidthEstimate(
        value=float(np.mean(vals)), std_error=se, method=CONE_SAMPLED_SUP, draws=gaussian_draws
    )


def _golden_min(f, lo, hi, tol=1e-8):
    """Golden-section minimum of a 1-D convex function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(fc, fd)


def width_upper_bound_l1_cone(sparsity, p, anchor, gaussian_draws, seed=0):
    """sqrt(E dist^2(g, normal cone)) for the l1 error cone at an s-sparse
    anchor; upper-bounds the spherical-cap width since w^2 <= E dist^2."""
    anchor = np.asarray(anchor, dtype=float)
    supp = anchor != 0
    if int(np.sum(supp)) != sparsity:
        raise ValueError("anchor support must match sparsity")
    signs = np.sign(anchor[supp])
    rng = rng_from_seed(seed)
    vals = np.empty(gaussian_draws)
    for t in range(gaussian_draws):
        g = rng.standard_normal(p)
        gs, go = g[supp], np.abs(g[~supp])

        def dist_sq(tt):
            on = gs - tt * signs
            off = np.maximum(go - tt, 0.0)
            return float(on @ on + off @ off)

        vals[t] = _golden_min(dist_sq, 0.0, float(np.max(np.abs(g))))
    mean = float(np.mean(vals))
    value = math.sqrt(mean)
    se_mean = float(np.std(vals, ddof=1) / math.sqrt(gaussian_draws)) if gaussian_draws > 1 else 0.0
    se = se_mean / (2.0 * value) if value > 0 else 0.0
    return WidthEstimate(value=value, std_error=se, method=L1_NORMAL_CONE, draws=gaussian_draws)


def mca_incoherence_M(Q):
    """Max absolute entry of the rotation."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("Q must be square")
    return float(np.max(np.abs(Q)))


def ksupport_sigma(Q, s1, s2, budget=100_000, seed=0):
    """Max largest-singular-value over s1 x s2 submatrices of Q.

    Exact when the number of submatrices fits in `budget`; otherwise the max
    over `budget` sampled row/column subsets, which is only a lower bound.
    Returns (value, exact).
    """
    Q = np.asarray(Q, dtype=float)
    p = Q.shape[0]
    if s1 > p or s2 > p:
        raise ValueError("submatrix size exceeds matrix size")
    total = math.comb(p, s1) * math.comb(p, s2)
    best = 0.0
    if total <= budget:
        for rows in itertools.combinations(range(p), s1):
            sub_rows = Q[list(rows), :]
            for cols in itertools.combinations(range(p), s2):
                s = svd(sub_rows[:, list(cols)]).singular_values
                best = max(best, float(s[0]))
        return best, True
    rng = rng_from_seed(seed)
    for _ in range(budget):
        rows = rng.choice(p, size=s1, replace=False)
        cols = rng.choice(p, size=s2, replace=False)
        s = svd(Q[np.ix_(rows, cols)]).singular_values
        best = max(best, float(s[0]))
    return best, False
