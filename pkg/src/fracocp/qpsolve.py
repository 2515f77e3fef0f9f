"""Primal-dual interior-point solver for the standard-form convex QP.

Mehrotra predictor-corrector on

    min 1/2 v^T H v + c^T v + c0   s.t.   A v = b,   B v + s = h,   s >= 0,

with ``H`` diagonal. Each iteration factors the regularized augmented matrix

    [ H + B^T (Z/S) B + reg I    A^T    ]
    [ A                          -reg I ]

once and reuses the factors for the predictor and corrector solves. For the
bound-type ``B`` produced by assembly, ``B^T (Z/S) B`` is diagonal and the
system reduces to a dense symmetric positive definite one.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.linalg as la
import scipy.sparse.linalg as spla

from fracocp.qpform import StandardQP

logger = logging.getLogger(__name__)

STEP_TO_BOUNDARY = 0.995
REFINEMENT_STEPS = 2


class Status(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1.0e-12
    max_iter: int = 100
    reg: float = 1.0e-10
    #: scale of the initial slacks and multipliers
    mu_init: float = 1.0

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError(f"tol must be positive: {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1: {self.max_iter}")
        if self.reg < 0:
            raise ValueError(f"reg must be non-negative: {self.reg}")
        if not self.mu_init > 0:
            raise ValueError(f"mu_init must be positive: {self.mu_init}")


@dataclass(frozen=True)
class SolveReport:
    status: Status
    iterations: int
    primal_residual: float
    dual_residual: float
    complementarity: float
    objective: float
    y_eq: np.ndarray = field(repr=False, default=None)
    z_ineq: np.ndarray = field(repr=False, default=None)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def kkt_residuals(
    qp: StandardQP, v: np.ndarray, y_eq: np.ndarray, z: np.ndarray
) -> tuple[float, float, float, float]:
    """Infinity norms of dual, equality, inequality and complementarity residuals."""

    def norm(x: np.ndarray) -> float:
        return float(np.max(np.abs(x))) if x.size else 0.0

    slack = qp.h - qp.B @ v
    r_dual = qp.H_diag * v + qp.c + qp.A.T @ y_eq + qp.B.T @ z
    r_eq = qp.A @ v - qp.b
    r_ineq = np.maximum(-slack, 0.0)
    comp = z * slack
    return norm(r_dual), norm(r_eq), norm(r_ineq), norm(comp)


def primal_scale(qp: StandardQP, v: np.ndarray) -> float:
    """Scale for the equality residual: rounding in ``A v`` alone reaches ``eps |A| |v|``."""
    anorm = float(abs(qp.A).sum(axis=1).max()) if qp.A.nnz else 0.0
    vn = float(np.max(np.abs(v))) if v.size else 0.0
    return residual_scale(qp) + anorm * vn


def residual_scale(qp: StandardQP) -> float:
    bn = float(np.max(np.abs(qp.b))) if qp.b.size else 0.0
    cn = float(np.max(np.abs(qp.c))) if qp.c.size else 0.0
    return 1.0 + bn + cn


class _KKTSystem:
    """Factored augmented matrix for one interior-point iteration.

    When the top block is diagonal, the primal unknowns are eliminated and the
    dense normal matrix ``A D^-1 A^T + reg I`` is factored by Cholesky. The
    collocation constraints couple every state to every other, so that matrix
    is full anyway and a sparse LU of the augmented matrix fills in almost
    completely. Other top blocks go through a sparse LU.
    """

    def __init__(self, qp: StandardQP, top: sp.spmatrix, reg: float) -> None:
        nv, ne = qp.nvars, qp.A.shape[0]
        top = sp.csr_matrix(top)
        d = top.diagonal() + reg
        self.K = sp.bmat(
            [[top + reg * sp.identity(nv), qp.A.T], [qp.A, -reg * sp.identity(ne)]], format="csc"
        )
        self.nv = nv
        self.A = sp.csr_matrix(qp.A)
        self.d = None
        self.lu = None

        diagonal = (top - sp.diags(top.diagonal())).count_nonzero() == 0
        if diagonal and np.all(d > 0):
            N = (self.A @ sp.diags(1.0 / d) @ self.A.T).toarray()
            N[np.diag_indices_from(N)] += reg
            try:
                self.chol = la.cho_factor(N, lower=True, check_finite=False)
                self.d = d
                return
            except la.LinAlgError:
                logger.debug("normal matrix not positive definite, using sparse LU")
        self.lu = spla.splu(self.K, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})

    def _solve_once(self, rhs: np.ndarray) -> np.ndarray:
        if self.d is None:
            return self.lu.solve(rhs)
        r1, r2 = rhs[: self.nv], rhs[self.nv :]
        dy = la.cho_solve(self.chol, self.A @ (r1 / self.d) - r2, check_finite=False)
        dv = (r1 - self.A.T @ dy) / self.d
        return np.concatenate([dv, dy])

    def solve(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rhs = np.concatenate([r1, r2])
        x = self._solve_once(rhs)
        # iterative refinement against the regularized matrix
        for _ in range(REFINEMENT_STEPS):
            x += self._solve_once(rhs - self.K @ x)
        if not np.all(np.isfinite(x)):
            raise np.linalg.LinAlgError("non-finite KKT solution")
        return x[: self.nv], x[self.nv :]


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-x[neg] / dx[neg])))


def _equality_only(qp: StandardQP, opts: SolverOptions) -> tuple[np.ndarray, SolveReport]:
    v = np.zeros(qp.nvars)
    y = np.zeros(qp.A.shape[0])
    z = np.zeros(0)
    tol = opts.tol * residual_scale(qp)
    kkt = _KKTSystem(qp, qp.H, opts.reg)
    it = 0
    for it in range(1, opts.max_iter + 1):
        r_d = qp.H_diag * v + qp.c + qp.A.T @ y
        r_p = qp.A @ v - qp.b
        dv, dy = kkt.solve(-r_d, -r_p)
        v, y = v + dv, y + dy
        rd, rp, _, _ = kkt_residuals(qp, v, y, z)
        if rd <= tol and rp <= opts.tol * primal_scale(qp, v):
            break
    rd, rp, ri, comp = kkt_residuals(qp, v, y, z)
    done = rd <= tol and rp <= opts.tol * primal_scale(qp, v)
    status = Status.OPTIMAL if done else Status.MAX_ITER
    return v, SolveReport(status, it, rp, rd, comp, qp.objective(v), y, z)


def solve(qp: StandardQP, opts: SolverOptions | None = None) -> tuple[np.ndarray, SolveReport]:
    """Solve *qp*; returns the primal vector and a report with the multipliers."""
    opts = opts or SolverOptions()
    if np.any(qp.H_diag < 0):
        raise ValueError("H must be positive semi-definite")

    if qp.B.shape[0] == 0:
        try:
            return _equality_only(qp, opts)
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            logger.warning("KKT factorization failed: %s", exc)
            nan = float("nan")
            v = np.full(qp.nvars, nan)
            return v, SolveReport(Status.NUMERICAL_FAILURE, 0, nan, nan, nan, nan)

    A, B = qp.A, qp.B
    BT = B.T.tocsr()
    ni = B.shape[0]
    tol = opts.tol * residual_scale(qp)

    # least-norm point on the equality constraints
    v = np.zeros(qp.nvars)
    y = np.zeros(A.shape[0])
    try:
        start = _KKTSystem(qp, sp.identity(qp.nvars), opts.reg)
        v, _ = start.solve(np.zeros(qp.nvars), qp.b)
    except RuntimeError as exc:
        logger.warning("initial factorization failed: %s", exc)
    s = np.maximum(qp.h - B @ v, opts.mu_init)
    z = np.full(ni, opts.mu_init)

    status = Status.MAX_ITER
    it = 0
    initial_infeas = None
    for it in range(1, opts.max_iter + 1):
        r_d = qp.H_diag * v + qp.c + A.T @ y + BT @ z
        r_p = A @ v - qp.b
        r_i = B @ v + s - qp.h
        mu = float(s @ z) / ni

        rd, rp, ri, comp = kkt_residuals(qp, v, y, z)
        infeas = max(rp, float(np.max(np.abs(r_i))))
        if initial_infeas is None:
            initial_infeas = infeas
        logger.debug("it %3d  mu %.3e  rd %.3e  rp %.3e  ri %.3e", it, mu, rd, rp, ri)
        tol_p = opts.tol * primal_scale(qp, v)
        if max(rd, comp) <= tol and max(rp, float(np.max(np.abs(r_i)))) <= tol_p:
            status = Status.OPTIMAL
            it -= 1
            break
        if infeas > 1.0e8 * (1.0 + initial_infeas) or not np.isfinite(mu):
            status = Status.INFEASIBLE
            break

        sigma_w = z / s
        try:
            kkt = _KKTSystem(qp, qp.H + BT @ sp.diags(sigma_w) @ B, opts.reg)
        except RuntimeError as exc:
            logger.warning("KKT factorization failed: %s", exc)
            status = Status.NUMERICAL_FAILURE
            break

        def direction(r_c: np.ndarray):
            r1 = -r_d - BT @ (sigma_w * r_i - r_c / s)
            dv, dy = kkt.solve(r1, -r_p)
            dz = sigma_w * (B @ dv + r_i) - r_c / s
            ds = -(r_c + s * dz) / z
            return dv, dy, dz, ds

        try:
            # predictor
            dv, dy, dz, ds = direction(s * z)
            alpha = min(_max_step(s, ds), _max_step(z, dz))
            mu_aff = float((s + alpha * ds) @ (z + alpha * dz)) / ni
            sigma = (mu_aff / mu) ** 3

            # corrector
            dv, dy, dz, ds = direction(s * z + ds * dz - sigma * mu)
        except np.linalg.LinAlgError as exc:
            logger.warning("KKT solve failed: %s", exc)
            status = Status.NUMERICAL_FAILURE
            break

        alpha = STEP_TO_BOUNDARY * min(_max_step(s, ds), _max_step(z, dz))
        alpha = min(alpha, 1.0)
        v = v + alpha * dv
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
    else:
        it = opts.max_iter

    rd, rp, ri, comp = kkt_residuals(qp, v, y, z)
    report = SolveReport(status, it, max(rp, ri), rd, comp, qp.objective(v), y, z)
    return v, report

