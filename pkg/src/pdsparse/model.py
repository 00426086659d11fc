"""Shared problem and model types consumed across the solver and classifier."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import check_matrix
from .losses import LossSpec
from .projections import BallSpec, ball_norm

__all__ = ["Problem", "ProblemTemplate", "TrainedModel"]

FEASIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class Problem:
    """Immutable training instance: data, one-hot labels, loss/ball, weights.

    ``rho`` weighs the center-anchoring penalty (rho/2)||I - mu||_F^2 and
    ``alpha`` the optional elastic term (alpha/2)||W||_F^2.
    """

    X: np.ndarray
    Y: np.ndarray
    loss: LossSpec
    ball: BallSpec
    rho: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        X = check_matrix(self.X, "X")
        Y = check_matrix(self.Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if Y.shape[1] < 2:
            raise ValueError("Y must have at least 2 classes")
        if not np.all((Y == 0.0) | (Y == 1.0)) or not np.all(Y.sum(axis=1) == 1.0):
            raise ValueError("Y must be one-hot: binary entries, one 1 per row")
        if self.rho < 0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class ProblemTemplate:
    """Problem settings without data, for reuse across folds and sweeps."""

    loss: LossSpec
    ball: BallSpec
    rho: float = 1.0
    alpha: float = 0.0

    def bind(self, X, Y) -> Problem:
        """Attach data to the template."""
        return Problem(X=X, Y=Y, loss=self.loss, ball=self.ball,
                       rho=self.rho, alpha=self.alpha)

    def with_radius(self, radius: float) -> "ProblemTemplate":
        """Copy of the template with a different constraint radius."""
        return replace(self, ball=BallSpec(self.ball.kind, radius))


@dataclass(frozen=True)
class TrainedModel:
    """Final weights and centers, plus what is needed to score new samples.

    ``feature_scale`` is the divisor applied to the training features;
    queries must be divided by it before projecting through W.
    """

    W: np.ndarray
    mu: np.ndarray
    ball: BallSpec
    loss: LossSpec
    feature_scale: float = 1.0

    def __post_init__(self):
        W = check_matrix(self.W, "W")
        mu = check_matrix(self.mu, "mu")
        k = W.shape[1]
        if mu.shape != (k, k):
            raise ValueError(f"mu has shape {mu.shape}, expected {(k, k)}")
        if not self.feature_scale > 0:
            raise ValueError(f"feature_scale must be positive, got {self.feature_scale}")
        if ball_norm(W, self.ball.kind) > self.ball.radius * (1.0 + FEASIBILITY_RTOL):
            raise ValueError("W violates the model's ball constraint")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "mu", mu)

    @property
    def n_features(self) -> int:
        return self.W.shape[0]

    @property
    def n_classes(self) -> int:
        return self.W.shape[1]
