"""Component norm families: evaluation, duals, ball projection, prox, and
descent-direction tests.

Four families are supported: l1, rotated l1 (``||Q v||_1`` for orthogonal Q),
nuclear (vectors reshaped row-major to matrices), and the k-support norm.
The k-support norm may also carry a rotation, in which case it is evaluated
and projected in the rotated frame.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import svd

L1 = "l1"
ROTATED_L1 = "rotated_l1"
NUCLEAR = "nuclear"
KSUPPORT = "ksupport"

_KINDS = (L1, ROTATED_L1, NUCLEAR, KSUPPORT)


class UnsupportedNormOperation(ValueError):
    """Raised when an operation is not defined for a norm family (e.g. the
    prox of the k-support norm)."""


@dataclass(frozen=True, eq=False)
class ComponentSpec:
    """One norm constraint R(theta) <= radius.

    rotation: orthogonal matrix Q for rotated_l1 (optional for ksupport,
        meaning the constraint applies to Q theta).
    k: cardinality parameter of the k-support norm.
    matrix_shape: (d1, d2) for the nuclear norm; vectors of length d1*d2 are
        interpreted as row-major matrices.
    """

    kind: str
    radius: float
    rotation: np.ndarray = None
    k: int = None
    matrix_shape: tuple = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if self.kind == ROTATED_L1:
            Q = self.rotation
            if Q is None:
                raise ValueError("rotated_l1 requires a rotation matrix")
            Q = np.asarray(Q, dtype=float)
            if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
                raise ValueError("rotation must be square")
            if np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > 1e-8:
                raise ValueError("rotation must be orthogonal to 1e-8")
        if self.kind == KSUPPORT:
            if self.k is None or self.k < 1:
                raise ValueError("ksupport requires k >= 1")
            if self.rotation is not None:
                Q = np.asarray(self.rotation, dtype=float)
                if np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > 1e-8:
                    raise ValueError("rotation must be orthogonal to 1e-8")
        if self.kind == NUCLEAR:
            if self.matrix_shape is None or len(self.matrix_shape) != 2:
                raise ValueError("nuclear requires matrix_shape=(d1, d2)")

    def check_dim(self, v):
        v = np.asarray(v, dtype=float)
        if v.ndim != 1:
            raise ValueError("expected a 1-D vector")
        if self.kind == NUCLEAR:
            d1, d2 = self.matrix_shape
            if v.size != d1 * d2:
                raise ValueError(f"vector length {v.size} != {d1}*{d2}")
        elif self.kind == ROTATED_L1 or (self.kind == KSUPPORT and self.rotation is not None):
            if v.size != np.asarray(self.rotation).shape[0]:
                raise ValueError("vector length does not match rotation size")
        if self.kind == KSUPPORT and self.k > v.size:
            raise ValueError("ksupport k exceeds ambient dimension")
        return v

    def as_matrix(self, v):
        return np.asarray(v, dtype=float).reshape(self.matrix_shape)


def ksupport_norm(v, k):
    """k-support norm via the sorted-magnitude closed form.

    With |v| sorted descending as z (1-indexed), the unique r in {0,..,k-1}
    satisfies z_(k-r-1) > S_r/(r+1) >= z_(k-r) where S_r = sum_{i>=k-r} z_(i)
    and z_(0) = +inf; then R^2 = sum_{i<k-r} z_(i)^2 + S_r^2/(r+1).
    """
    v = np.asarray(v, dtype=float)
    p = v.size
    if k >= p:
        return float(np.linalg.norm(v))
    z = np.sort(np.abs(v))[::-1]
    tail = np.cumsum(z[::-1])[::-1]  # tail[i] = sum z[i:]
    for r in range(k):
        head = z[k - r - 2] if k - r - 2 >= 0 else np.inf
        s_r = tail[k - r - 1]
        if head > s_r / (r + 1) >= z[k - r - 1]:
            sq = np.dot(z[: k - r - 1], z[: k - r - 1]) + s_r**2 / (r + 1)
            return float(np.sqrt(sq))
    # unreachable for valid inputs; guard against fp ties at the boundary
    s_r = tail[0]
    return float(np.sqrt(s_r**2 / k))


def project_l1_ball(v, radius):
    """Euclidean projection onto the l1 ball, exact sort-based threshold."""
    v = np.asarray(v, dtype=float)
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u * idx > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _project_simplex(w):
    """Projection onto {w >= 0, sum w = 1}."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, w.size + 1)
    rho = np.nonzero(u * idx > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(w - theta, 0.0)


def _ksupport_lmo(g, k, radius):
    """argmin over the k-support ball of radius `radius` of <g, a>: the
    negatively aligned top-k atom."""
    idx = np.argpartition(np.abs(g), g.size - k)[g.size - k:]
    a = np.zeros_like(g)
    nrm = np.linalg.norm(g[idx])
    if nrm == 0:
        return a
    a[idx] = -radius * g[idx] / nrm
    return a


def _hull_least_squares(A, v):
    """Exact min_w 0.5 ||A w - v||^2 over {w >= 0, sum w <= 1}.

    Plain NNLS when the sum constraint is slack; otherwise an active-set
    solve of the simplex-constrained KKT system. Atom counts stay small, so
    the dense KKT solves are cheap.
    """
    from scipy.optimize import nnls

    w, _ = nnls(A, v)
    if w.sum() <= 1.0 + 1e-12:
        return w
    m = A.shape[1]
    G = A.T @ A
    b = A.T @ v
    support = list(range(m))
    w = np.zeros(m)
    for _ in range(100 + 4 * m):
        s = len(support)
        K = np.zeros((s + 1, s + 1))
        K[:s, :s] = G[np.ix_(support, support)]
        K[:s, s] = 1.0
        K[s, :s] = 1.0
        rhs = np.concatenate([b[support], [1.0]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        ws, nu = sol[:s], sol[s]
        if np.min(ws) < -1e-12:
            support.pop(int(np.argmin(ws)))
            continue
        w = np.zeros(m)
        w[support] = np.maximum(ws, 0.0)
        mult = G @ w - b + nu
        outside = [i for i in range(m) if i not in support]
        if not outside:
            return w
        worst = min(outside, key=lambda i: mult[i])
        if mult[worst] >= -1e-10 * (1.0 + abs(nu)):
            return w
        support.append(worst)
    return w


def _ksupport_shrink(v, k, mu, z_asc, csum):
    """argmin_u 0.5 ||u - v||^2 + (mu/2) ||u||_ksp^2, via the variational form
    ||u||_ksp^2 = min {sum u_i^2 / theta_i : 0 <= theta <= 1, sum theta = k}.

    Water-filling: theta_i = clip(|v_i| t - mu, 0, 1) with t chosen so the
    thetas sum to k, then u_i = v_i theta_i / (theta_i + mu). z_asc is |v|
    sorted ascending and csum[i] the sum of the i largest magnitudes, both
    precomputed by the caller. Requires more than k nonzeros in v.
    """
    p = z_asc.size
    pos = z_asc[z_asc > 0]
    bps = np.unique(np.concatenate([mu / pos, (1.0 + mu) / pos]))
    # G(t) = sum clip(z t - mu, 0, 1), increasing piecewise linear in t:
    # a entries saturated, the next (b - a) active
    a = p - np.searchsorted(z_asc, (1.0 + mu) / bps, side="left")
    b = p - np.searchsorted(z_asc, mu / bps, side="right")
    G = a + bps * (csum[b] - csum[a]) - mu * (b - a)
    j = int(np.searchsorted(G, k))
    if j >= bps.size:
        t = bps[-1]  # all nonzeros saturated; G there is the nonzero count >= k
    elif G[j] == k or j == 0:
        t = bps[j]
    else:
        tm = 0.5 * (bps[j - 1] + bps[j])
        am = p - int(np.searchsorted(z_asc, (1.0 + mu) / tm, side="left"))
        bm = p - int(np.searchsorted(z_asc, mu / tm, side="right"))
        slope = csum[bm] - csum[am]
        t = (k - am + mu * (bm - am)) / slope if slope > 0 else tm
    theta = np.clip(np.abs(v) * t - mu, 0.0, 1.0)
    return v * theta / (theta + mu)


def _ksupport_ball_candidate(v, k, radius):
    """Near-exact projection onto the k-support ball, used to warm-start the
    Frank-Wolfe loop: root-find the multiplier mu of the squared-norm
    constraint until the shrunk point lands on the sphere, then scale inside."""
    from scipy.optimize import brentq

    if np.count_nonzero(v) <= k:
        # on a <=k-sparse support the norm is plain l2, so project radially
        return v * (radius / np.linalg.norm(v))
    z_asc = np.sort(np.abs(v))
    csum = np.concatenate([[0.0], np.cumsum(z_asc[::-1])])

    def excess(mu):
        return ksupport_norm(_ksupport_shrink(v, k, mu, z_asc, csum), k) - radius

    mu_lo, mu_hi = 1e-30, 1.0
    while excess(mu_hi) > 0:
        mu_lo = mu_hi
        mu_hi *= 4.0
        if mu_hi > 1e18:
            break
    mu = brentq(excess, mu_lo, mu_hi, xtol=1e-18, rtol=1e-14)
    x = _ksupport_shrink(v, k, mu, z_asc, csum)
    r = ksupport_norm(x, k)
    return x * (radius / r) if r > radius else x


def project_ksupport_with_certificate(v, k, radius, max_iter=10_000):
    """Projection onto the k-support ball via fully-corrective Frank-Wolfe.

    Returns (x, gap): the projected point and the final duality gap, which
    certifies ||x - x*||^2 <= 2*gap. Stops at gap <= 1e-8 * (1 + ||v||^2).
    The loop is warm-started from the water-filling candidate, which is an
    ordinary feasible atom as far as the corrective step is concerned; in the
    common case the certificate already holds at iteration 0.
    """
    v = np.asarray(v, dtype=float)
    if radius <= 0:
        return np.zeros_like(v), 0.0
    if ksupport_norm(v, k) <= radius:
        return v.copy(), 0.0
    tol = 1e-8 * (1.0 + float(v @ v))
    x = _ksupport_ball_candidate(v, k, radius)
    atoms = [x]
    gap = np.inf
    for _ in range(max_iter):
        g = x - v
        a = _ksupport_lmo(g, k, radius)
        gap = float(g @ (x - a))
        if gap <= tol:
            break
        atoms.append(a)
        A = np.column_stack(atoms)
        w = _hull_least_squares(A, v)
        x = A @ w
        keep = w > 1e-14
        if not np.all(keep):
            atoms = [atoms[i] for i in np.nonzero(keep)[0]]
            w = w[keep]
            x = np.column_stack(atoms) @ w if atoms else np.zeros_like(v)
    return x, gap


def _rotate(spec, v):
    return np.asarray(spec.rotation, dtype=float) @ v


def norm_eval(spec, v):
    v = spec.check_dim(v)
    if spec.kind == L1:
        return float(np.abs(v).sum())
    if spec.kind == ROTATED_L1:
        return float(np.abs(_rotate(spec, v)).sum())
    if spec.kind == NUCLEAR:
        return float(svd(spec.as_matrix(v)).singular_values.sum())
    if spec.rotation is not None:
        v = _rotate(spec, v)
    return ksupport_norm(v, spec.k)


def norm_dual_eval(spec, v):
    v = spec.check_dim(v)
    if spec.kind == L1:
        return float(np.max(np.abs(v))) if v.size else 0.0
    if spec.kind == ROTATED_L1:
        return float(np.max(np.abs(_rotate(spec, v))))
    if spec.kind == NUCLEAR:
        s = svd(spec.as_matrix(v)).singular_values
        return float(s[0]) if s.size else 0.0
    if spec.rotation is not None:
        v = _rotate(spec, v)
    # dual of k-support: l2 norm of the k largest magnitudes
    a = np.sort(np.abs(v))[::-1][: spec.k]
    return float(np.linalg.norm(a))


def project_ball(spec, v):
    """Euclidean projection onto {u : R(u) <= spec.radius}."""
    v = spec.check_dim(v)
    if spec.radius == 0:
        return np.zeros_like(v)
    if spec.kind == L1:
        return project_l1_ball(v, spec.radius)
    if spec.kind == ROTATED_L1:
        Q = np.asarray(spec.rotation, dtype=float)
        return Q.T @ project_l1_ball(Q @ v, spec.radius)
    if spec.kind == NUCLEAR:
        f = svd(spec.as_matrix(v))
        s = project_l1_ball(f.singular_values, spec.radius)
        return ((f.U * s) @ f.V.T).reshape(-1)
    if spec.rotation is not None:
        Q = np.asarray(spec.rotation, dtype=float)
        x, _ = project_ksupport_with_certificate(Q @ v, spec.k, spec.radius)
        return Q.T @ x
    x, _ = project_ksupport_with_certificate(v, spec.k, spec.radius)
    return x


def _soft_threshold(v, lam):
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def prox(spec, v, lam):
    """argmin_u 0.5 ||u - v||^2 + lam * R(u). Not available for k-support."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    v = spec.check_dim(v)
    if spec.kind == L1:
        return _soft_threshold(v, lam)
    if spec.kind == ROTATED_L1:
        Q = np.asarray(spec.rotation, dtype=float)
        return Q.T @ _soft_threshold(Q @ v, lam)
    if spec.kind == NUCLEAR:
        f = svd(spec.as_matrix(v))
        s = np.maximum(f.singular_values - lam, 0.0)
        return ((f.U * s) @ f.V.T).reshape(-1)
    raise UnsupportedNormOperation("prox of the k-support norm is not supported")


def descent_directional_derivative(spec, anchor, d):
    """One-sided directional derivative R'(anchor; d).

    Directions with derivative <= 0 generate the error cone at the anchor.
    """
    anchor = spec.check_dim(anchor)
    d = spec.check_dim(d)
    if np.linalg.norm(anchor) == 0:
        raise ValueError("descent derivative undefined at the zero anchor")
    if spec.kind == L1:
        return _l1_directional(anchor, d)
    if spec.kind == ROTATED_L1:
        Q = np.asarray(spec.rotation, dtype=float)
        return _l1_directional(Q @ anchor, Q @ d)
    if spec.kind == NUCLEAR:
        A = spec.as_matrix(anchor)
        D = spec.as_matrix(d)
        f = svd(A)
        s = f.singular_values
        r = int(np.sum(s > 1e-10 * s[0])) if s[0] > 0 else 0
        U1, V1 = f.U[:, :r], f.V[:, :r]
        term1 = float(np.sum((U1 @ V1.T) * D))
        P = D - U1 @ (U1.T @ D)
        P = P - (P @ V1) @ V1.T
        term2 = float(svd(P).singular_values.sum())
        return term1 + term2
    eps = 1e-7 * np.linalg.norm(anchor) / max(np.linalg.norm(d), 1e-30)
    return (norm_eval(spec, anchor + eps * d) - norm_eval(spec, anchor)) / eps


def _l1_directional(a, d):
    on = a != 0
    return float(np.dot(np.sign(a[on]), d[on]) + np.abs(d[~on]).sum())
