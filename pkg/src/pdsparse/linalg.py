"""Dense-matrix utilities: validation, one-hot labels, operator-norm estimation.

Matrices are plain 2-D float64 numpy arrays in row-major order.  Every public
entry point validates shapes and finiteness, since mismatched dimensions are
the dominant failure mode when sample, feature and class counts all vary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OneHotLabels",
    "OperatorNormEstimate",
    "check_matrix",
    "one_hot",
    "spectral_norm",
    "label_operator_norm",
    "normalize_features",
]


def check_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate *a* as a finite 2-D float64 array and return it C-contiguous."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class OneHotLabels:
    """One-hot label matrix (m x k) together with per-class sample counts."""

    matrix: np.ndarray
    class_counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class OperatorNormEstimate:
    """Largest-singular-value estimate from power iteration.

    ``converged`` is False when the iteration hit ``max_iter`` before the
    Rayleigh-quotient residual dropped below ``tolerance``.
    """

    value: float
    iterations: int
    tolerance: float
    converged: bool


def one_hot(labels, k: int) -> OneHotLabels:
    """Encode integer labels into an m x k one-hot matrix.

    Parameters
    ----------
    labels : sequence of int
        Class indices, each in ``[0, k)``.
    k : int
        Number of classes, at least 2.

    Returns
    -------
    OneHotLabels
        Row i has a single 1 at column ``labels[i]``.
    """
    lab = np.asarray(labels)
    if lab.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {lab.shape}")
    if k < 2:
        raise ValueError(f"need at least 2 classes, got k={k}")
    if not np.issubdtype(lab.dtype, np.integer):
        if not np.all(lab == lab.astype(np.int64)):
            raise ValueError("labels must be integers")
        lab = lab.astype(np.int64)
    bad = np.nonzero((lab < 0) | (lab >= k))[0]
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"label {int(lab[i])} at index {i} outside [0, {k})")
    m = lab.shape[0]
    mat = np.zeros((m, k))
    mat[np.arange(m), lab] = 1.0
    counts = np.bincount(lab, minlength=k)
    return OneHotLabels(matrix=mat, class_counts=counts)


def spectral_norm(A, tol: float = 1e-9, max_iter: int = 1000,
                  seed: int = 0) -> OperatorNormEstimate:
    """Estimate the operator (spectral) norm of *A* by power iteration.

    The iteration runs on the Gram matrix of the smaller side, with a
    seeded random unit start, and stops once successive Rayleigh quotients
    agree to relative ``tol``.  The Gram matrix is never formed explicitly.

    Returns an estimate that never exceeds the true largest singular value.
    A zero matrix yields value 0, flagged converged.
    """
    A = check_matrix(A, "A")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not A.any():
        return OperatorNormEstimate(0.0, 0, tol, True)
    # Iterate v <- B^T B v on the thin side so each step costs O(m d).
    B = A if A.shape[0] >= A.shape[1] else A.T
    n = B.shape[1]
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    converged = False
    its = 0
    for its in range(1, max_iter + 1):
        w = B.T @ (B @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            # start vector landed in the null space; redraw deterministically
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        if abs(nw - lam) <= tol * nw:
            lam = nw
            converged = True
            break
        lam = nw
    return OperatorNormEstimate(float(np.sqrt(lam)), its, tol, converged)


def label_operator_norm(labels: OneHotLabels) -> float:
    """Operator norm of a one-hot label matrix.

    The Gram matrix of a one-hot Y is diag(class_counts), so the norm is
    sqrt of the largest class count, exactly.
    """
    return float(np.sqrt(labels.class_counts.max()))


def normalize_features(X, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Rescale *X* to unit operator norm.

    Returns the scaled matrix and the scale (the divisor applied).  Raises
    on an all-zero matrix, which cannot be normalized.
    """
    X = check_matrix(X, "X")
    est = spectral_norm(X, tol=tol)
    if est.value == 0.0:
        raise ValueError("cannot normalize a zero matrix")
    return X / est.value, est.value
