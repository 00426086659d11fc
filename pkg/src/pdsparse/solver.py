"""Primal-dual saddle-point solvers for constrained robust classification.

One iteration alternates a projected gradient step on the weights W, a
closed-form prox on the centers mu, and a prox ascent step on the dual
variable Z built from extrapolated primal iterates:

    W <- P_ball(W + tau X^T Z)
    mu <- (mu + rho tau_mu I - tau_mu Y^T Z) / (1 + tau_mu rho)
    Z  <- dual_prox(Z + sigma (Y (2 mu - mu_old) - X (2 W - W_old)))

Variants: fixed centers (mu pinned to I), Frobenius loss (dual projected
onto the Frobenius unit ball), accelerated (step-size schedule driven by
the dual strong convexity of the huber loss), over-relaxed, and elastic
net (shrink on W before projection).  Convergence requires a strict
inequality on (tau, tau_mu, sigma); the solver refuses to run otherwise.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import spectral_norm
from .losses import ObjectiveBreakdown, dual_prox, primal_objective
from .model import Problem, TrainedModel
from .projections import BallSpec, project_ball

__all__ = [
    "HistoryRecord",
    "SolverDivergenceError",
    "SolverParams",
    "SolverState",
    "StepConditionError",
    "TrainingHistory",
    "VARIANTS",
    "check_step_condition",
    "default_steps",
    "ergodic_gap_bound",
    "solve",
]

VARIANTS = ("base", "fixed-mu", "frobenius", "accelerated", "over-relaxed", "elastic")

# default_steps picks sigma strictly inside the admissible region
STEP_STRICTNESS = 0.999


class StepConditionError(ValueError):
    """Raised when the step sizes violate the variant's convergence condition."""


class SolverDivergenceError(RuntimeError):
    """Raised when an iterate stops being finite."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate detected at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverParams:
    """Step sizes, variant switches and iteration budget.

    Step sizes left as None are derived at solve time from the problem's
    norms (``beta`` scales the center-step heuristic).  ``rho``, ``delta``
    and ``alpha`` must match the problem they are used with; build params
    via :meth:`for_problem` to keep them consistent.
    """

    tau: float | None = None
    tau_mu: float | None = None
    sigma: float | None = None
    rho: float = 1.0
    delta: float = 1.0
    alpha: float = 0.0
    gamma: float = 0.0
    beta: float = 1.0
    max_iter: int = 2000
    record_every: int = 50
    variant: str = "base"
    early_stop_tol: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if not -1.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (-1, 1), got {self.gamma}")
        for name in ("rho", "delta", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be at least 1, got {self.record_every}")
        for name in ("tau", "tau_mu", "sigma"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")

    @classmethod
    def for_problem(cls, problem: Problem, **overrides) -> "SolverParams":
        """Params whose rho/delta/alpha mirror the problem's."""
        overrides.setdefault("rho", problem.rho)
        overrides.setdefault("delta", problem.loss.delta)
        overrides.setdefault("alpha", problem.alpha)
        return cls(**overrides)

    def has_steps(self) -> bool:
        return None not in (self.tau, self.tau_mu, self.sigma)


@dataclass
class SolverState:
    """Iterates, iteration counter and running ergodic averages."""

    W: np.ndarray
    mu: np.ndarray
    Z: np.ndarray
    iter: int = 0
    theta: float = 1.0
    ergodic_W: np.ndarray | None = None
    ergodic_mu: np.ndarray | None = None
    ergodic_Z: np.ndarray | None = None


@dataclass(frozen=True)
class HistoryRecord:
    """Diagnostics captured at one recorded iteration."""

    iteration: int
    objective: ObjectiveBreakdown
    ergodic_objective: ObjectiveBreakdown
    gap_bound: float
    wall_time: float


@dataclass
class TrainingHistory:
    """Per-run diagnostics: recorded objectives plus final ergodic averages."""

    records: list[HistoryRecord] = field(default_factory=list)
    ergodic_W: np.ndarray | None = None
    ergodic_mu: np.ndarray | None = None
    ergodic_Z: np.ndarray | None = None
    params: SolverParams | None = None

    def iterations(self) -> list[int]:
        return [r.iteration for r in self.records]


def default_steps(X_norm: float, Y_norm: float, m: int, k: int,
                  rho: float, beta: float, eta: float) -> tuple[float, float, float]:
    """Step sizes from the ball radius and data norms.

    With the weights confined to a ball of radius eta the primal diameter
    is at most 2 eta, which fixes tau; tau_mu follows the tuned-beta
    heuristic; sigma is then set just inside the convergence boundary.
    Raises when beta is too large for the heuristic's denominator.
    """
    if X_norm <= 0 or Y_norm <= 0:
        raise ValueError("data norms must be positive")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    tau = eta / (math.sqrt(m * k) * X_norm)
    den = 2.0 * math.sqrt(m) * Y_norm - 0.25 * beta * rho
    if den <= 0:
        raise ValueError(
            f"center-step denominator is {den:.3e} <= 0; choose a smaller beta")
    tau_mu = beta / den
    sigma = STEP_STRICTNESS / (
        tau_mu * Y_norm**2 / (1.0 + 0.25 * tau_mu * rho) + tau * X_norm**2)
    return tau, tau_mu, sigma


def _condition_lhs(tau: float, tau_mu: float, sigma: float, rho: float,
                   gamma: float, X_norm: float, Y_norm: float, variant: str) -> float:
    if variant == "fixed-mu":
        return sigma * tau * X_norm**2
    if variant == "over-relaxed":
        if gamma >= 0.5:
            return sigma * (tau_mu * Y_norm**2 + tau * X_norm**2)
        shrink = 1.0 + 0.25 * tau_mu * rho * (1.0 - 2.0 * gamma) / (1.0 - gamma)
        return sigma * (tau_mu * Y_norm**2 / shrink + tau * X_norm**2)
    return sigma * (tau_mu * Y_norm**2 / (1.0 + 0.25 * tau_mu * rho) + tau * X_norm**2)


def check_step_condition(params: SolverParams, X_norm: float, Y_norm: float,
                         variant: str | None = None) -> tuple[bool, float]:
    """Whether the variant-appropriate convergence inequality holds strictly.

    Returns ``(ok, slack)`` with ``slack = 1 - lhs``; the condition passes
    only when the slack is strictly positive.
    """
    if not params.has_steps():
        raise ValueError("params must carry explicit tau, tau_mu and sigma")
    variant = variant or params.variant
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    lhs = _condition_lhs(params.tau, params.tau_mu, params.sigma, params.rho,
                         params.gamma, X_norm, Y_norm, variant)
    return lhs < 1.0, 1.0 - lhs


def ergodic_gap_bound(state: SolverState, problem: Problem,
                      params: SolverParams) -> float:
    """Computable O(1/N) bound on the ergodic primal suboptimality.

    Uses the surrogates 2*eta for the weight diameter and beta*sqrt(k) for
    the center diameter; exact optima are unknowable at runtime.
    """
    if state.iter < 1:
        raise ValueError("need at least one iteration for the bound")
    if not params.has_steps():
        raise ValueError("params must carry explicit step sizes")
    return _gap_bound(state.iter, problem.n_samples, problem.n_classes,
                      params.sigma, params.tau, params.tau_mu, params.rho,
                      params.beta, problem.ball.radius,
                      problem.loss.kind == "frobenius")


def _gap_bound(n_iter: int, m: int, k: int, sigma: float, tau: float,
               tau_mu: float, rho: float, beta: float, eta: float,
               frobenius: bool) -> float:
    dual_diam_sq = 4.0 if frobenius else 4.0 * m * k
    d_mu_sq = (beta * math.sqrt(k)) ** 2
    d_w_sq = (2.0 * eta) ** 2
    return (dual_diam_sq / sigma
            + (0.375 * rho + 1.0 / tau_mu) * d_mu_sq
            + d_w_sq / tau) / n_iter


def _canonical_variant(variant: str, loss_kind: str) -> str:
    if loss_kind == "frobenius":
        if variant in ("base", "frobenius"):
            return "frobenius"
        raise ValueError(f"the frobenius loss only supports the base iteration, got {variant!r}")
    if variant == "frobenius":
        raise ValueError("the frobenius variant requires the frobenius loss")
    return variant


def _check_params_match(params: SolverParams, problem: Problem):
    if params.rho != problem.rho:
        raise ValueError(f"params.rho={params.rho} differs from problem.rho={problem.rho}")
    if params.delta != problem.loss.delta:
        raise ValueError(
            f"params.delta={params.delta} differs from problem.loss.delta={problem.loss.delta}")
    if params.alpha != problem.alpha:
        raise ValueError(f"params.alpha={params.alpha} differs from problem.alpha={problem.alpha}")


def solve(problem: Problem, params: SolverParams, ball: BallSpec | None = None,
          initial: SolverState | None = None, callback=None
          ) -> tuple[TrainedModel, TrainingHistory]:
    """Run the primal-dual iteration for ``params.max_iter`` iterations.

    Parameters
    ----------
    problem : Problem
        Training instance; its loss/constraint drive the prox dispatch.
    params : SolverParams
        Steps, variant and budget.  Missing step sizes are derived from
        the problem norms; the applicable convergence condition is checked
        before iterating and the solver refuses to run when it fails.
    ball : BallSpec, optional
        Overrides the problem's constraint (used by radius sweeps).
    initial : SolverState, optional
        Starting iterates; defaults to W = 0, mu = I, Z = 0.  Ergodic
        averaging always restarts.
    callback : callable, optional
        Called after every iteration with a live SolverState view; copy
        anything you keep.

    Returns
    -------
    (TrainedModel, TrainingHistory)
        The final (non-ergodic) weights and centers, and diagnostics with
        the final ergodic averages.

    Notes
    -----
    The over-relaxed variant keeps its feasible pre-relaxation iterates
    for the ergodic averages, the recorded diagnostics and the returned
    model; only the internal recursion sees the relaxed variables.
    """
    _check_params_match(params, problem)
    if ball is not None and ball != problem.ball:
        problem = replace(problem, ball=ball)
    ball = problem.ball
    variant = _canonical_variant(params.variant, problem.loss.kind)
    X, Y = problem.X, problem.Y
    m, d = X.shape
    k = Y.shape[1]
    loss = problem.loss
    rho, delta, alpha, gamma = params.rho, params.delta, params.alpha, params.gamma

    X_norm = spectral_norm(X).value
    Y_norm = float(np.sqrt(Y.sum(axis=0).max()))
    if params.has_steps():
        tau, tau_mu, sigma = params.tau, params.tau_mu, params.sigma
    else:
        tau, tau_mu, sigma = default_steps(X_norm, Y_norm, m, k, rho,
                                           params.beta, ball.radius)
        # derived defaults target the base condition; shrink sigma when the
        # requested variant's condition is stricter
        lhs = _condition_lhs(tau, tau_mu, sigma, rho, gamma, X_norm, Y_norm, variant)
        if lhs >= STEP_STRICTNESS:
            sigma *= STEP_STRICTNESS / lhs
    resolved = replace(params, tau=tau, tau_mu=tau_mu, sigma=sigma)
    ok, slack = check_step_condition(resolved, X_norm, Y_norm, variant)
    if not ok:
        raise StepConditionError(
            f"step sizes violate the {variant} convergence condition "
            f"(slack {slack:.3e}); reduce sigma or the primal steps")

    if initial is not None:
        W = np.array(initial.W, dtype=np.float64)
        mu = np.array(initial.mu, dtype=np.float64)
        Z = np.array(initial.Z, dtype=np.float64)
        if W.shape != (d, k) or mu.shape != (k, k) or Z.shape != (m, k):
            raise ValueError("initial state shapes do not match the problem")
    else:
        W = np.zeros((d, k))
        mu = np.eye(k)
        Z = np.zeros((m, k))

    I_k = np.eye(k)
    sum_W = np.zeros_like(W)
    sum_mu = np.zeros_like(mu)
    sum_Z = np.zeros_like(Z)
    fixed_mu = variant == "fixed-mu"
    accelerated = variant == "accelerated"
    relax = variant == "over-relaxed" and gamma != 0.0
    elastic = variant == "elastic"

    history = TrainingHistory(params=resolved)
    state = SolverState(W=W, mu=mu, Z=Z)
    theta = 1.0
    t0 = time.perf_counter()
    prev_obj_total = None

    n = 0
    for n in range(1, params.max_iter + 1):
        W_old, mu_old, Z_old = W, mu, Z

        G = W + tau * (X.T @ Z)
        if elastic:
            G /= 1.0 + tau * alpha
        W = project_ball(G, ball)
        if not fixed_mu:
            mu = (mu_old + (rho * tau_mu) * I_k - tau_mu * (Y.T @ Z)) / (1.0 + tau_mu * rho)

        if accelerated:
            theta = 1.0 / math.sqrt(1.0 + delta * sigma)
        W_ext = (1.0 + theta) * W - theta * W_old
        if fixed_mu:
            coupling = Y - X @ W_ext
        else:
            coupling = Y @ ((1.0 + theta) * mu - theta * mu_old) - X @ W_ext
        Z = dual_prox(Z + sigma * coupling, sigma, loss)

        if accelerated:
            sigma *= theta
            tau /= theta
            tau_mu /= theta
            lhs = _condition_lhs(tau, tau_mu, sigma, rho, gamma, X_norm, Y_norm, variant)
            if lhs >= 1.0:
                raise StepConditionError(
                    f"accelerated step rescaling violated the convergence "
                    f"condition at iteration {n}")

        # feasible iterates drive the averages, diagnostics and the output
        W_f, mu_f, Z_f = W, mu, Z
        if not (np.isfinite(W_f).all() and np.isfinite(mu_f).all()
                and np.isfinite(Z_f).all()):
            raise SolverDivergenceError(n)
        sum_W += W_f
        sum_mu += mu_f
        sum_Z += Z_f

        if relax:
            W = W_f + gamma * (W_f - W_old)
            mu = mu_f + gamma * (mu_f - mu_old)
            Z = Z_f + gamma * (Z_f - Z_old)

        state.W, state.mu, state.Z = W_f, mu_f, Z_f
        state.iter = n
        state.theta = theta

        record_now = (n % params.record_every == 0) or n == params.max_iter
        stop_now = False
        if params.early_stop_tol is not None and n % 100 == 0:
            obj_now = primal_objective(W_f, mu_f, problem).total
            if prev_obj_total is not None:
                if abs(prev_obj_total - obj_now) <= params.early_stop_tol * max(1.0, abs(obj_now)):
                    stop_now = True
                    record_now = True
            prev_obj_total = obj_now
        if callback is not None or record_now:
            state.ergodic_W = sum_W / n
            state.ergodic_mu = sum_mu / n
            state.ergodic_Z = sum_Z / n
        if callback is not None:
            callback(state)
        if record_now:
            history.records.append(HistoryRecord(
                iteration=n,
                objective=primal_objective(W_f, mu_f, problem),
                ergodic_objective=primal_objective(state.ergodic_W, state.ergodic_mu, problem),
                gap_bound=_gap_bound(n, m, k, resolved.sigma, resolved.tau,
                                     resolved.tau_mu, rho, params.beta,
                                     ball.radius, loss.kind == "frobenius"),
                wall_time=time.perf_counter() - t0,
            ))
        if stop_now:
            break

    history.ergodic_W = sum_W / n
    history.ergodic_mu = sum_mu / n
    history.ergodic_Z = sum_Z / n
    model = TrainedModel(W=state.W, mu=state.mu, ball=ball, loss=loss)
    return model, history
