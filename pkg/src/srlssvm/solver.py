"""Training engine for the sparse robust least-squares SVM.

Training minimizes

    (lambda / 2) alpha^T K alpha + (1/m) sum_i L_tau(y_i - K_i alpha - b)

over a rank-r factor P P^T ~ K.  The nonconvex truncated loss is handled
by a CCCP loop: each iteration solves the convex least-squares problem
obtained by linearizing the concave part at the current residuals, which
reduces to one r x r solve against the fixed matrix

    J = m*lambda I_r + P^T P - (P^T e)(P^T e)^T / m,

factored once.  Iterates are tracked through upsilon = P^T alpha; the
sparse coefficients alpha_B = (P_B^T)^(-1) upsilon over the landmark rows
are recovered per step, every other coefficient being exactly zero.  With
gamma = 0 the first step is the plain (non-robust) primal LSSVM solution,
which therefore serves as the warm start.

A dense reference trainer iterating the full (m+1)-dimensional system is
included as a small-scale test oracle only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve, solve_triangular

from . import losses
from .data import Dataset
from .errors import InvalidInputError, NumericalError
from .kernels import KernelSpec, gram
from .lowrank import LowRankFactor, pivoted_cholesky
from .model import Model

# |gamma_i| above this counts as nonzero for the sparse update's index set
GAMMA_NONZERO_TOL = 1e-12
# estimated condition numbers above this abort precompute
COND_LIMIT = 1e14
# largest m the dense reference oracle accepts
DENSE_ORACLE_MAX_M = 500


@dataclass(frozen=True)
class AnnealSchedule:
    """Truncation-level annealing: shrink tau by delta down to tau_min."""

    delta: float
    tau_min: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError("anneal delta must be in (0, 1)")
        if not self.tau_min > 0.0:
            raise InvalidInputError("anneal tau_min must be > 0")


@dataclass(frozen=True)
class SolverConfig:
    """Training hyperparameters.

    ``lambda_m`` is the product m*lambda (the quantity grid searches range
    over); the factor algebra uses it directly.
    """

    lambda_m: float
    tau: float
    rank_r: int
    p: float = 1e4
    epsilon: float = 1e-2
    max_iter: int = 200
    anneal: AnnealSchedule | None = None

    def __post_init__(self):
        if not self.lambda_m > 0:
            raise InvalidInputError("lambda_m must be > 0")
        if not self.tau >= 0:
            raise InvalidInputError("tau must be >= 0")
        if not self.p > 0:
            raise InvalidInputError("p must be > 0")
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be > 0")
        if self.rank_r < 1:
            raise InvalidInputError("rank_r must be a positive integer")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be a positive integer")


@dataclass(frozen=True)
class Precomputed:
    """Per-training constants shared by every CCCP step."""

    J: np.ndarray
    J_cho: tuple
    G: np.ndarray            # (P_B^T)^(-1) J^(-1)
    P_hat: np.ndarray        # P^T e
    alpha_LS: np.ndarray     # plain primal-LSSVM coefficients
    upsilon_LS: np.ndarray   # J^(-1)(P^T y - mean(y) P_hat)
    factor: LowRankFactor
    y: np.ndarray

    @property
    def m(self) -> int:
        return self.factor.m


def _chunked_gram(P: np.ndarray, chunks: int) -> np.ndarray:
    """P^T P as a row-chunk reduction; result independent of chunk count."""
    if chunks <= 1:
        return P.T @ P
    m = P.shape[0]
    bounds = np.linspace(0, m, chunks + 1, dtype=int)
    total = np.zeros((P.shape[1], P.shape[1]))
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        block = P[lo:hi]
        total += block.T @ block
    return total


def precompute(factor: LowRankFactor, y, lambda_m: float, *,
               chunks: int = 1) -> Precomputed:
    """Assemble and factor J, the fast-path matrix G, and the warm start."""
    if not lambda_m > 0:
        raise InvalidInputError("lambda_m must be > 0")
    P = factor.P
    m, r = P.shape
    y = np.asarray(y, dtype=float)
    if y.shape != (m,):
        raise InvalidInputError(f"targets must have length m={m}")

    P_hat = P.sum(axis=0)
    J = lambda_m * np.eye(r) + _chunked_gram(P, chunks) - np.outer(P_hat, P_hat) / m
    try:
        J_cho = cho_factor(J, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - J is PD by construction
        raise NumericalError(f"J is not positive definite: {exc}; "
                             "increase the regularization lambda") from exc
    diag = np.abs(np.diagonal(J_cho[0]))
    cond_est = (diag.max() / diag.min()) ** 2
    if cond_est > COND_LIMIT:
        raise NumericalError(
            f"J is numerically singular (condition estimate {cond_est:.2e}); "
            "increase the regularization lambda")

    J_inv = cho_solve(J_cho, np.eye(r))
    P_B_T = factor.P_B.T
    if factor.pivot_triangular:
        # P_B^T is upper triangular, so this back-substitution is O(r^2) per column
        G = solve_triangular(P_B_T, J_inv, lower=False)
    else:
        G = np.linalg.solve(P_B_T, J_inv)

    rhs = P.T @ y - (y.sum() / m) * P_hat
    upsilon_LS = cho_solve(J_cho, rhs)
    alpha_LS = G @ rhs
    return Precomputed(J, J_cho, G, P_hat, alpha_LS, upsilon_LS, factor, y)


@dataclass(frozen=True)
class CccpStep:
    """One convex-subproblem solution: compressed and sparse coefficients."""

    upsilon: np.ndarray
    alpha_B: np.ndarray
    b: float
    xi: np.ndarray
    support_size: int  # |S_t| of the gamma that produced this step


def cccp_step(pre: Precomputed, gamma_t) -> CccpStep:
    """Sparse fast update from the warm start.

    alpha_B = alpha_LS - G (P_S^T gamma_S - (e^T gamma / m) P_hat); only
    the nonzero entries of gamma touch P, so the correction costs
    O(|S_t| r) on top of the O(m r) residual refresh.
    """
    g = np.asarray(gamma_t, dtype=float)
    P = pre.factor.P
    m = pre.m
    if g.shape != (m,):
        raise InvalidInputError(f"gamma must have length m={m}")
    S = np.flatnonzero(np.abs(g) > GAMMA_NONZERO_TOL)
    q = P[S].T @ g[S] - (g.sum() / m) * pre.P_hat
    upsilon = pre.upsilon_LS - cho_solve(pre.J_cho, q)
    alpha_B = pre.alpha_LS - pre.G @ q
    b = float(((pre.y - g).sum() - pre.P_hat @ upsilon) / m)
    xi = pre.y - P @ upsilon - b
    return CccpStep(upsilon, alpha_B, b, xi, support_size=len(S))


def cccp_step_direct(pre: Precomputed, gamma_t) -> CccpStep:
    """Reference update solving the centered system from scratch.

    Algebraically identical to :func:`cccp_step`; kept as the independent
    route for cross-checking the fast path.
    """
    g = np.asarray(gamma_t, dtype=float)
    P = pre.factor.P
    m = pre.m
    if g.shape != (m,):
        raise InvalidInputError(f"gamma must have length m={m}")
    z = pre.y - g
    z = z - z.sum() / m
    upsilon = cho_solve(pre.J_cho, P.T @ z)
    P_B_T = pre.factor.P_B.T
    if pre.factor.pivot_triangular:
        alpha_B = solve_triangular(P_B_T, upsilon, lower=False)
    else:
        alpha_B = np.linalg.solve(P_B_T, upsilon)
    b = float(((pre.y - g).sum() - pre.P_hat @ upsilon) / m)
    xi = pre.y - P @ upsilon - b
    return CccpStep(upsilon, alpha_B, b, xi,
                    support_size=int(np.count_nonzero(np.abs(g) > GAMMA_NONZERO_TOL)))


@dataclass(frozen=True)
class TrainState:
    """Solver state after an iteration; ``gamma`` is the refreshed coefficient."""

    t: int
    gamma: np.ndarray
    xi: np.ndarray
    upsilon: np.ndarray
    b: float
    support: np.ndarray

    @property
    def support_size(self) -> int:
        return len(self.support)


@dataclass
class TrainReport:
    """Per-run diagnostics; ``final_state`` is kept in memory only."""

    iterations: int
    converged: bool
    gamma_change: list[float]
    objective: list[float]
    support_sizes: list[int]
    wall_time_ms: float
    rank: int
    tau_schedule: list[float] | None = None
    final_state: TrainState | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        d = {
            "iterations": self.iterations,
            "converged": self.converged,
            "gamma_change": self.gamma_change,
            "objective": self.objective,
            "support_sizes": self.support_sizes,
            "rank": self.rank,
            "timing": {"wall_time_ms": self.wall_time_ms},
        }
        if self.tau_schedule is not None:
            d["tau_schedule"] = self.tau_schedule
        return d


def _objective_value(upsilon, xi, params: losses.LossParams,
                     lambda_m: float, m: int) -> float:
    """(lambda/2) ||upsilon||^2 + mean smoothed truncated loss, lambda = lambda_m / m."""
    quad = float(upsilon @ upsilon)
    return lambda_m / (2.0 * m) * quad + float(
        np.mean(losses.smoothed_truncated_loss(xi, params)))


def _model_from(dataset: Dataset, spec: KernelSpec, factor: LowRankFactor,
                alpha_B, b: float) -> Model:
    return Model(landmarks=dataset.features[list(factor.B)], alpha=alpha_B,
                 b=b, kernel=spec, task=dataset.task)


def _run_cccp(pre: Precomputed, config: SolverConfig, tau0: float,
              anneal: AnnealSchedule | None, t_start: float):
    """Shared CCCP loop; anneals tau on inner convergence when requested."""
    m = pre.m
    tau = tau0
    params = losses.LossParams(tau=tau, p=config.p)
    gamma_prev = np.zeros(m)
    changes: list[float] = []
    objectives: list[float] = []
    supports: list[int] = []
    taus: list[float] = []
    converged = False
    step = None
    gamma_next = gamma_prev

    for _ in range(config.max_iter):
        step = cccp_step(pre, gamma_prev)
        gamma_next = np.asarray(losses.gamma(step.xi, params))
        change = float(np.linalg.norm(gamma_next - gamma_prev))
        changes.append(change)
        objectives.append(_objective_value(step.upsilon, step.xi, params,
                                           config.lambda_m, m))
        supports.append(step.support_size)
        taus.append(tau)
        if change < config.epsilon:
            if anneal is None or tau <= anneal.tau_min:
                converged = True
                break
            tau = max(tau * anneal.delta, anneal.tau_min)
            params = losses.LossParams(tau=tau, p=config.p)
        gamma_prev = gamma_next

    state = TrainState(t=len(changes), gamma=gamma_next, xi=step.xi,
                       upsilon=step.upsilon, b=step.b,
                       support=np.flatnonzero(np.abs(gamma_next) > GAMMA_NONZERO_TOL))
    report = TrainReport(
        iterations=len(changes),
        converged=converged,
        gamma_change=changes,
        objective=objectives,
        support_sizes=supports,
        wall_time_ms=(time.perf_counter() - t_start) * 1e3,
        rank=pre.factor.r,
        tau_schedule=taus if anneal is not None else None,
        final_state=state,
    )
    return step, report


def _prepare(dataset: Dataset, spec: KernelSpec, config: SolverConfig,
             chunks: int) -> Precomputed:
    if dataset.m < 1:
        raise InvalidInputError("dataset is empty")
    if config.rank_r > dataset.m:
        raise InvalidInputError(
            f"rank_r={config.rank_r} exceeds the number of samples m={dataset.m}")
    factor = pivoted_cholesky(dataset, spec, config.rank_r)
    return precompute(factor, dataset.targets, config.lambda_m, chunks=chunks)


def train(dataset: Dataset, spec: KernelSpec, config: SolverConfig, *,
          chunks: int = 1) -> tuple[Model, TrainReport]:
    """Robust training at fixed tau.

    Runs the CCCP loop from gamma = 0 until the gamma change drops below
    epsilon or max_iter is hit; non-convergence is reported, not raised.
    The model carries at most rank_r nonzero coefficients by construction.
    """
    t0 = time.perf_counter()
    pre = _prepare(dataset, spec, config, chunks)
    step, report = _run_cccp(pre, config, config.tau, None, t0)
    return _model_from(dataset, spec, pre.factor, step.alpha_B, step.b), report


def train_annealed(dataset: Dataset, spec: KernelSpec, config: SolverConfig, *,
                   chunks: int = 1) -> tuple[Model, TrainReport]:
    """Robust training with tau annealing.

    Starts from tau = delta * max |warm-start residual| (never below
    tau_min); each time the inner loop converges, tau shrinks by delta
    until it reaches tau_min, after which convergence terminates the run.
    """
    if config.anneal is None:
        raise InvalidInputError("train_annealed requires config.anneal")
    t0 = time.perf_counter()
    pre = _prepare(dataset, spec, config, chunks)
    warm = cccp_step(pre, np.zeros(pre.m))
    tau0 = max(config.anneal.delta * float(np.abs(warm.xi).max()),
               config.anneal.tau_min)
    step, report = _run_cccp(pre, config, tau0, config.anneal, t0)
    return _model_from(dataset, spec, pre.factor, step.alpha_B, step.b), report


def train_lssvm(dataset: Dataset, spec: KernelSpec, config: SolverConfig, *,
                chunks: int = 1) -> tuple[Model, TrainReport]:
    """Plain (non-robust) primal LSSVM on the same low-rank factor.

    This is exactly the warm start of :func:`train`: the single convex
    solve with gamma = 0.  Used as the robustness baseline.
    """
    t0 = time.perf_counter()
    pre = _prepare(dataset, spec, config, chunks)
    step = cccp_step(pre, np.zeros(pre.m))
    params = losses.LossParams(tau=config.tau, p=config.p)
    report = TrainReport(
        iterations=1,
        converged=True,
        gamma_change=[],
        objective=[_objective_value(step.upsilon, step.xi, params,
                                    config.lambda_m, pre.m)],
        support_sizes=[0],
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
        rank=pre.factor.r,
        final_state=TrainState(t=1, gamma=np.zeros(pre.m), xi=step.xi,
                               upsilon=step.upsilon, b=step.b,
                               support=np.array([], dtype=int)),
    )
    return _model_from(dataset, spec, pre.factor, step.alpha_B, step.b), report


def objective(model_or_state, dataset: Dataset, config: SolverConfig) -> float:
    """Smoothed robust objective of a model or training state.

    For a model the quadratic term alpha^T K alpha is evaluated on the
    landmark block; for a state it is ||upsilon||^2, the same quantity
    expressed through the factor.
    """
    params = losses.LossParams(tau=config.tau, p=config.p)
    m = dataset.m
    if isinstance(model_or_state, Model):
        model = model_or_state
        from .model import predict_raw

        xi = dataset.targets - predict_raw(model, dataset.features)
        K_BB = gram(model.kernel, model.landmarks)
        quad = float(model.alpha @ K_BB @ model.alpha)
        return config.lambda_m / (2.0 * m) * quad + float(
            np.mean(losses.smoothed_truncated_loss(xi, params)))
    state = model_or_state
    return _objective_value(state.upsilon, state.xi, params, config.lambda_m, m)


def dense_reference_train(dataset: Dataset, spec: KernelSpec,
                          config: SolverConfig) -> tuple[Model, TrainReport]:
    """Small-scale dense CCCP oracle (m <= 500 enforced).

    Iterates the full (m+1)-dimensional centered linear system

        [[m*lambda I_m + K, e], [e^T, 0]] [beta; b] = [y - gamma; 0]

    with the same smoothed gamma refresh and stop rule as :func:`train`.
    Every training point is a potential support vector here.  The system
    matrix is factored once and reused across iterations.
    """
    t0 = time.perf_counter()
    m = dataset.m
    if m > DENSE_ORACLE_MAX_M:
        raise InvalidInputError(
            f"dense reference solver is a test oracle; m={m} exceeds {DENSE_ORACLE_MAX_M}")
    K = gram(spec, dataset.features)
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = config.lambda_m * np.eye(m) + K
    A[:m, m] = 1.0
    A[m, :m] = 1.0
    lu = lu_factor(A)

    params = losses.LossParams(tau=config.tau, p=config.p)
    y = dataset.targets
    gamma_prev = np.zeros(m)
    changes: list[float] = []
    objectives: list[float] = []
    supports: list[int] = []
    converged = False
    beta = np.zeros(m)
    b = 0.0
    gamma_next = gamma_prev

    for _ in range(config.max_iter):
        sol = lu_solve(lu, np.concatenate([y - gamma_prev, [0.0]]))
        beta, b = sol[:m], float(sol[m])
        xi = y - K @ beta - b
        gamma_next = np.asarray(losses.gamma(xi, params))
        change = float(np.linalg.norm(gamma_next - gamma_prev))
        changes.append(change)
        quad = float(beta @ K @ beta)
        objectives.append(config.lambda_m / (2.0 * m) * quad + float(
            np.mean(losses.smoothed_truncated_loss(xi, params))))
        supports.append(int(np.count_nonzero(np.abs(gamma_prev) > GAMMA_NONZERO_TOL)))
        if change < config.epsilon:
            converged = True
            break
        gamma_prev = gamma_next

    model = Model(landmarks=dataset.features.copy(), alpha=beta, b=b,
                  kernel=spec, task=dataset.task)
    report = TrainReport(
        iterations=len(changes),
        converged=converged,
        gamma_change=changes,
        objective=objectives,
        support_sizes=supports,
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
        rank=m,
    )
    return model, report
