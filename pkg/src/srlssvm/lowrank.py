"""Greedy pivoted (incomplete) Cholesky factorization of the kernel matrix.

Produces P (m x r) with P P^T ~ K, touching only r kernel columns plus
the diagonal.  The pivot rows of P form a lower-triangular block with
positive diagonal, so solves against P_B cost O(r^2).  An adapter wraps
externally supplied Nystrom blocks into the same factor type.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError, NumericalError

# residual diagonals in [NEG_DIAG_TOL, 0) are floating-point drift on a PSD
# matrix: clamped to zero and never pivoted; anything below is a breakdown
NEG_DIAG_TOL = -1e-8
# pivot candidates within this distance of the max diagonal tie-break to
# the smallest index, for reproducibility
PIVOT_TIE_TOL = 1e-12


@dataclass(frozen=True)
class LowRankFactor:
    """Rank-r factor P with ordered landmark (pivot) indices B.

    ``pivot_triangular`` records whether the rows of P at B, in pivot
    order, form a lower-triangular block (true for the greedy
    factorization, not guaranteed for adapted Nystrom blocks); the solver
    picks the triangular fast path accordingly.  ``trace_history[t]`` is
    trace(K - P_t P_t^T) after t pivots, starting at trace(K).
    ``residual_trace`` is None for adapted factors, which never see K's
    diagonal.
    """

    P: np.ndarray
    B: tuple[int, ...]
    residual_trace: float | None
    trace_history: tuple[float, ...]
    pivot_triangular: bool = True

    @property
    def m(self) -> int:
        return self.P.shape[0]

    @property
    def r(self) -> int:
        return len(self.B)

    @property
    def P_B(self) -> np.ndarray:
        """Rows of P at the landmark indices, in pivot order (r x r)."""
        return self.P[list(self.B), :]


def pivoted_cholesky(dataset, spec: kernels.KernelSpec, r: int,
                     tol: float | None = None) -> LowRankFactor:
    """Greedy max-residual-diagonal pivoted Cholesky of the kernel matrix.

    Stops after r pivots, or earlier once the largest residual diagonal
    drops to ``tol`` (default 1e-12 * m), which avoids dividing by
    near-zero pivots.  Exactly |B| kernel columns are evaluated.
    """
    X = np.asarray(getattr(dataset, "features", dataset), dtype=float)
    m = X.shape[0]
    if not 1 <= r <= m:
        raise InvalidInputError(f"rank r={r} must satisfy 1 <= r <= m={m}")
    if tol is None:
        tol = 1e-12 * m
    if tol < 0:
        raise InvalidInputError("tol must be >= 0")

    d = np.asarray(kernels.kernel_diag(spec, dataset), dtype=float).copy()
    P = np.zeros((m, r))
    pivots: list[int] = []
    history = [float(d.sum())]

    for t in range(r):
        if d.min() < NEG_DIAG_TOL:
            raise NumericalError(
                f"residual diagonal fell below {NEG_DIAG_TOL} at pivot step {t}; "
                "kernel matrix is not numerically positive semi-definite")
        np.maximum(d, 0.0, out=d)
        dmax = d.max()
        if dmax <= tol:
            break
        j = int(np.argmax(d >= dmax - PIVOT_TIE_TOL))
        root = np.sqrt(d[j])
        col = kernels.kernel_column(spec, dataset, j) - P[:, :t] @ P[j, :t]
        P[:, t] = col / root
        # exact-arithmetic zeros at previous pivots, exact root at the pivot
        P[pivots, t] = 0.0
        P[j, t] = root
        d -= P[:, t] * P[:, t]
        d[j] = 0.0
        pivots.append(j)
        history.append(float(np.maximum(d, 0.0).sum()))

    P = np.ascontiguousarray(P[:, :len(pivots)])
    return LowRankFactor(
        P=P,
        B=tuple(pivots),
        residual_trace=history[-1],
        trace_history=tuple(history),
    )


def from_nystrom(K_MB, K_BB, landmarks=None) -> LowRankFactor:
    """Wrap Nystrom blocks into a factor: P = K_MB @ K_BB^(-1/2).

    ``landmarks`` gives the row indices of the landmark points within the
    m rows of K_MB; when omitted they are chosen by QR column pivoting on
    P^T, which picks r rows forming a well-conditioned square block.  The
    pivot rows are not triangular here, so the factor is flagged for the
    general solve path.
    """
    K_MB = np.asarray(K_MB, dtype=float)
    K_BB = np.asarray(K_BB, dtype=float)
    if K_MB.ndim != 2 or K_BB.ndim != 2 or K_BB.shape[0] != K_BB.shape[1]:
        raise InvalidInputError("K_MB must be m x r and K_BB r x r")
    r = K_BB.shape[0]
    if K_MB.shape[1] != r:
        raise InvalidInputError(
            f"K_MB has {K_MB.shape[1]} columns but K_BB is {r} x {r}")
    if not np.allclose(K_BB, K_BB.T, atol=1e-10 * max(1.0, np.abs(K_BB).max())):
        raise InvalidInputError("K_BB must be symmetric")

    w, V = np.linalg.eigh(0.5 * (K_BB + K_BB.T))
    if w.min() <= 1e-12 * max(w.max(), 1.0):
        raise NumericalError(
            "K_BB is singular (or indefinite) beyond tolerance; "
            "cannot form its inverse square root")
    inv_sqrt = (V / np.sqrt(w)) @ V.T
    P = K_MB @ inv_sqrt

    if landmarks is None:
        from scipy.linalg import qr

        _, _, piv = qr(P.T, pivoting=True, mode="economic")
        landmarks = piv[:r]
    B = tuple(int(i) for i in landmarks)
    if len(B) != r or not all(0 <= i < K_MB.shape[0] for i in B):
        raise InvalidInputError("landmarks must be r distinct row indices of K_MB")

    return LowRankFactor(
        P=P,
        B=B,
        residual_trace=None,
        trace_history=(),
        pivot_triangular=False,
    )


def dump_csv(factor: LowRankFactor, path) -> None:
    """Debug dump: header with m, r, the pivot list, then the rows of P."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", factor.m, "r", factor.r])
        writer.writerow(["B", *factor.B])
        writer.writerows(factor.P.tolist())
