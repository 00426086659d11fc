"""Exact Euclidean projections onto the constraint sets used by the solvers.

Implemented balls, for a matrix V with rows v_i:

* l1:       sum_ij |v_ij| <= r     (applied to the flattened matrix)
* l21:      sum_i ||v_i||_2 <= r   (group sparsity; zeroes whole rows)
* l12:      sum_i (sum_j |v_ij|)^2 <= r^2   (exclusive sparsity; rows compete)
* nuclear:  sum of singular values <= r     (low-rank weights)

plus the l-infinity box and the Frobenius unit ball needed by the dual
updates.  The l12 projection solves for its Lagrange multiplier with a
guarded Newton iteration; ``proj_l12_bisection`` is a slow, structurally
independent double-bisection used to cross-check it in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import check_matrix

__all__ = [
    "BallSpec",
    "L12NewtonState",
    "NewtonConvergenceError",
    "ball_norm",
    "clip_box",
    "proj_frobenius_unit",
    "proj_l1_matrix",
    "proj_l1_vector",
    "proj_l1_vector_scan",
    "proj_l12",
    "proj_l12_bisection",
    "proj_l12_with_state",
    "proj_l21",
    "proj_nuclear",
    "project_ball",
]

BALL_KINDS = ("l1", "l21", "l12", "nuclear")


@dataclass(frozen=True)
class BallSpec:
    """Constraint descriptor: which ball, and its radius."""

    kind: str
    radius: float

    def __post_init__(self):
        if self.kind not in BALL_KINDS:
            raise ValueError(f"unknown ball kind {self.kind!r}, expected one of {BALL_KINDS}")
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")


class NewtonConvergenceError(RuntimeError):
    """Raised when the l12 Newton iteration fails to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _check_radius(radius) -> float:
    radius = float(radius)
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    return radius


def proj_l1_vector(v, radius) -> np.ndarray:
    """Project a vector onto the l1 ball of the given radius.

    Sort-and-scan method: sort magnitudes descending, locate the largest
    active set whose soft threshold stays positive, then shrink.  Inputs
    already inside the ball are returned unchanged.
    """
    radius = _check_radius(radius)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = int(np.nonzero(u * j > css - radius)[0][-1])
    theta = (css[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def proj_l1_vector_scan(v, radius) -> np.ndarray:
    """Project onto the l1 ball with a sort-free pruning scan.

    Single pass maintaining a candidate active set and a running threshold
    estimate, followed by cleanup passes that evict entries falling below
    the threshold.  Expected linear time; kept as an independent code path
    to cross-validate the sort-based method.
    """
    radius = _check_radius(radius)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()

    y = a.tolist()
    active = [y[0]]
    waiting: list[float] = []
    rho = y[0] - radius
    for x in y[1:]:
        if x > rho:
            rho += (x - rho) / (len(active) + 1)
            if rho > x - radius:
                active.append(x)
            else:
                waiting.extend(active)
                active = [x]
                rho = x - radius
    for x in waiting:
        if x > rho:
            active.append(x)
            rho += (x - rho) / len(active)
    # evict entries at or below the threshold until a fixed point is reached
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(active):
            x = active[i]
            if x <= rho:
                active[i] = active[-1]
                active.pop()
                rho += (rho - x) / len(active)
                changed = True
            else:
                i += 1
    return np.sign(v) * np.maximum(a - rho, 0.0)


def proj_l1_matrix(V, radius) -> np.ndarray:
    """Project a matrix onto the l1 ball of its flattened entries."""
    V = check_matrix(V, "V")
    return proj_l1_vector(V.ravel(), radius).reshape(V.shape)


def clip_box(Z, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Clamp every entry into [lo, hi]."""
    if lo > hi:
        raise ValueError(f"need lo <= hi, got [{lo}, {hi}]")
    return np.clip(Z, lo, hi)


def proj_frobenius_unit(Z) -> np.ndarray:
    """Project onto the Frobenius-norm unit ball (radial scaling)."""
    Z = np.asarray(Z, dtype=np.float64)
    n = float(np.linalg.norm(Z))
    if n <= 1.0:
        return Z.copy()
    return Z / n


def proj_l21(V, radius) -> np.ndarray:
    """Project onto the ball of the row-wise l21 norm (sum of row 2-norms).

    The vector of row norms is projected onto the l1 ball, and each row is
    rescaled toward the origin accordingly, keeping its direction.  Zero
    rows map to zero rows.
    """
    radius = _check_radius(radius)
    V = check_matrix(V, "V")
    norms = np.linalg.norm(V, axis=1)
    t = proj_l1_vector(norms, radius)
    denom = np.maximum(t, norms)
    scale = np.divide(t, denom, out=np.zeros_like(t), where=denom > 0)
    return V * scale[:, None]


def proj_nuclear(V, radius) -> np.ndarray:
    """Project onto the nuclear-norm ball (sum of singular values <= radius).

    Thin SVD of the smaller orientation, l1 projection of the spectrum,
    reconstruction.  Feasible inputs are returned unchanged, bypassing the
    SVD round-trip.
    """
    radius = _check_radius(radius)
    V = check_matrix(V, "V")
    transposed = V.shape[0] < V.shape[1]
    M = V.T if transposed else V
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"SVD failed during nuclear projection: {exc}") from exc
    if s.sum() <= radius:
        return V.copy()
    s_proj = proj_l1_vector(s, radius)
    out = (U * s_proj) @ Vt
    return out.T if transposed else out


@dataclass
class L12NewtonState:
    """Internals of the l12 multiplier search, kept for diagnostics/tests.

    ``lambdas`` records every multiplier iterate starting from the lower
    bound, ``p`` the per-row active counts at the final multiplier, and
    ``residual`` the final constraint value minus radius^2.
    """

    sorted_abs: np.ndarray
    prefix_sums: np.ndarray
    lam: float
    p: np.ndarray
    residual: float
    lambdas: list[float] = field(default_factory=list)
    iterations: int = 0


def _l12_row_state(S: np.ndarray, lam: float):
    """Active counts and per-row best ratios S_ip / (1 + lam p) at fixed lam."""
    n, m = S.shape
    p_range = np.arange(1, m + 1, dtype=np.float64)
    ratios = S / (1.0 + lam * p_range)
    p_idx = np.argmax(ratios, axis=1)
    row_best = ratios[np.arange(n), p_idx]
    return p_idx + 1, row_best


def proj_l12_with_state(V, radius, tol: float = 1e-12,
                        max_iter: int = 100) -> tuple[np.ndarray, L12NewtonState]:
    """Project onto the l12 ball and return the multiplier-search state.

    The constraint is sum_i (sum_j |w_ij|)^2 <= radius^2.  The multiplier
    lambda starts at a computable lower bound, so the Newton iterates
    increase monotonically toward the root; the per-row active counts are
    refreshed once per multiplier update.  Stops at relative residual
    ``tol`` and raises ``NewtonConvergenceError`` after ``max_iter``
    updates without convergence.
    """
    radius = _check_radius(radius)
    V = check_matrix(V, "V")
    n, m = V.shape
    A = np.abs(V)
    target = radius * radius

    row_l1 = A.sum(axis=1)
    if float((row_l1 * row_l1).sum()) <= target:
        # feasible: multiplier 0, all entries active
        srt0 = np.sort(A, axis=1)[:, ::-1]
        state = L12NewtonState(
            sorted_abs=srt0,
            prefix_sums=np.cumsum(srt0, axis=1),
            lam=0.0,
            p=np.full(n, m),
            residual=float((row_l1 * row_l1).sum()) - target,
            lambdas=[0.0],
        )
        return V.copy(), state

    # stable descending sort: ties keep original column order
    order = np.argsort(-A, axis=1, kind="stable")
    srt = np.take_along_axis(A, order, axis=1)
    S = np.cumsum(srt, axis=1)

    p_range = np.arange(1, m + 1, dtype=np.float64)
    col = np.sqrt((S * S).sum(axis=0))
    lam = max(0.0, float(((col / radius - 1.0) / p_range).max()))
    lambdas = [lam]

    p, row_best = _l12_row_state(S, lam)
    val = float((row_best * row_best).sum())
    iterations = 0
    if val - target > tol * target:
        for iterations in range(1, max_iter + 1):
            deriv = 2.0 * float((p * row_best * row_best / (1.0 + lam * p)).sum())
            lam = lam + (val - target) / deriv
            lambdas.append(lam)
            p, row_best = _l12_row_state(S, lam)
            val = float((row_best * row_best).sum())
            if val - target <= tol * target:
                break
        else:
            raise NewtonConvergenceError(
                f"l12 multiplier search did not converge in {max_iter} iterations "
                f"(residual {val - target:.3e})",
                residual=val - target,
            )

    deltas = lam * row_best
    W = np.sign(V) * np.maximum(A - deltas[:, None], 0.0)
    state = L12NewtonState(
        sorted_abs=srt,
        prefix_sums=S,
        lam=lam,
        p=p.astype(np.int64),
        residual=val - target,
        lambdas=lambdas,
        iterations=iterations,
    )
    return W, state


def proj_l12(V, radius, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Project onto the l12 ball: sum_i (sum_j |w_ij|)^2 <= radius^2."""
    W, _ = proj_l12_with_state(V, radius, tol=tol, max_iter=max_iter)
    return W


def proj_l12_bisection(V, radius, lam_iters: int = 100,
                       threshold_iters: int = 72) -> np.ndarray:
    """Slow independent l12 projection for cross-checking (test oracle).

    For a fixed multiplier the per-row soft threshold solves the scalar
    fixed point d = lam * sum_j (|v_j| - d)^+, found here by bisection; the
    constraint value is decreasing in the multiplier, so an outer bisection
    on lam closes the loop.  No sorting, prefix sums or Newton steps are
    shared with ``proj_l12``.
    """
    radius = _check_radius(radius)
    V = check_matrix(V, "V")
    A = np.abs(V)
    target = radius * radius
    row_l1 = A.sum(axis=1)
    if float((row_l1 * row_l1).sum()) <= target:
        return V.copy()

    row_max = A.max(axis=1)

    def thresholds(lam: float) -> np.ndarray:
        lo = np.zeros(A.shape[0])
        hi = row_max.copy()
        for _ in range(threshold_iters):
            mid = 0.5 * (lo + hi)
            g = lam * np.maximum(A - mid[:, None], 0.0).sum(axis=1) - mid
            grow = g > 0
            lo = np.where(grow, mid, lo)
            hi = np.where(grow, hi, mid)
        return 0.5 * (lo + hi)

    def constraint(lam: float) -> float:
        d = thresholds(lam)
        W = np.maximum(A - d[:, None], 0.0)
        s = W.sum(axis=1)
        return float((s * s).sum())

    lo, hi = 0.0, 1.0
    while constraint(hi) > target:
        hi *= 2.0
        if hi > 1e18:  # pragma: no cover - defensive
            raise RuntimeError("l12 bisection could not bracket the multiplier")
    for _ in range(lam_iters):
        mid = 0.5 * (lo + hi)
        if constraint(mid) > target:
            lo = mid
        else:
            hi = mid
    lam = hi
    d = thresholds(lam)
    return np.sign(V) * np.maximum(A - d[:, None], 0.0)


def ball_norm(V, kind: str) -> float:
    """Evaluate the norm underlying a ball constraint."""
    V = check_matrix(V, "V")
    if kind == "l1":
        return float(np.abs(V).sum())
    if kind == "l21":
        return float(np.linalg.norm(V, axis=1).sum())
    if kind == "l12":
        return float(np.linalg.norm(np.abs(V).sum(axis=1)))
    if kind == "nuclear":
        return float(np.linalg.svd(V, compute_uv=False).sum())
    raise ValueError(f"unknown ball kind {kind!r}")


def project_ball(V, ball: BallSpec) -> np.ndarray:
    """Dispatch to the projection matching the ball descriptor."""
    if ball.kind == "l1":
        return proj_l1_matrix(V, ball.radius)
    if ball.kind == "l21":
        return proj_l21(V, ball.radius)
    if ball.kind == "l12":
        return proj_l12(V, ball.radius)
    if ball.kind == "nuclear":
        return proj_nuclear(V, ball.radius)
    raise ValueError(f"unknown ball kind {ball.kind!r}")
