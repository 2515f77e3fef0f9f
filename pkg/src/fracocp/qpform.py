"""Assembly of the sparse standard-form quadratic program.

The unknowns are stacked as ``v = [vec(Y); vec(U)]`` with ``Y`` of shape
``(n, m + 1)`` and ``U`` of shape ``(n, m)``, ``vec`` stacking columns. The QP
reads

    min 1/2 v^T H v + c^T v + c0   s.t.   A v = b,   B v <= h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from fracocp.discretize import SemiDiscreteOCP

#: refuse Kronecker products whose dense size would overflow an int64 index
MAX_KRON_ENTRIES = 2**62


def vec(M) -> np.ndarray:
    """Stack the columns of *M* into one vector."""
    M = np.asarray(M)
    return M.reshape(-1, order="F") if M.ndim > 1 else M.copy()


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v).reshape((rows, cols), order="F")


def kron(A, B) -> sp.csr_matrix:
    """Sparse Kronecker product ``[a_ij B]``."""
    (p, q), (r, s) = np.shape(A), np.shape(B)
    if p * r * q * s > MAX_KRON_ENTRIES:
        raise OverflowError(f"Kronecker product of {p}x{q} and {r}x{s} is too large")
    return sp.kron(sp.csr_matrix(A), sp.csr_matrix(B), format="csr")


# {{{ standard form


@dataclass(frozen=True)
class StandardQP:
    n: int
    m: int
    H_diag: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    c0: float
    A: sp.csc_matrix = field(repr=False)
    b: np.ndarray = field(repr=False)
    B: sp.csc_matrix = field(repr=False)
    h: np.ndarray = field(repr=False)

    @property
    def nvars(self) -> int:
        return self.H_diag.size

    @property
    def H(self) -> sp.dia_matrix:
        return sp.diags(self.H_diag)

    def objective(self, v: np.ndarray) -> float:
        return float(0.5 * v @ (self.H_diag * v) + self.c @ v + self.c0)

    def y_slice(self) -> slice:
        return slice(0, self.n * (self.m + 1))

    def u_slice(self) -> slice:
        return slice(self.n * (self.m + 1), self.nvars)


def weight_matrix(sd: SemiDiscreteOCP) -> np.ndarray:
    """Diagonal of ``S = diag(varpi kron w)`` as an ``(n, m)`` array."""
    return np.outer(sd.w_obj, sd.temporal.varpi)


def assemble_objective(sd: SemiDiscreteOCP) -> tuple[np.ndarray, np.ndarray, float]:
    """Return ``(H_diag, c, c0)``.

    The final-time state ``y_{m+1}`` carries no weight: the Radau rule does
    not sample it.
    """
    n, m = sd.n, sd.m
    s = vec(weight_matrix(sd))
    z = vec(sd.Z_obj)

    H = np.concatenate([s, np.zeros(n), s])
    c = np.concatenate([-s * z, np.zeros(n), np.zeros(n * m)])
    c0 = 0.5 * float(z @ (s * z))
    return H, c, c0


def assemble_dynamics(sd: SemiDiscreteOCP) -> tuple[sp.csc_matrix, np.ndarray]:
    """Return the equality constraints ``(A, b)``.

    The first ``n`` rows pin ``y_1 = g``. Row ``n + i n + p`` is the collocated
    dynamics at time node ``i`` and space node ``p``:

        sum_j dbar[i, j] Y[p, j] - C[p, i] (D Y[:, i])[p] - U[p, i] = F[p, i].

    Zero products from ``C`` are stored so the structural count stays fixed.
    """
    n, m = sd.n, sd.m
    dbar = sd.temporal.dbar
    D = sd.d_pm
    C = sd.C
    ny = n * (m + 1)

    # initial condition
    r0 = np.arange(n)
    c0 = np.arange(n)
    v0 = np.ones(n)

    # time derivative, (dbar kron I_n)
    i, j, p = np.meshgrid(np.arange(m), np.arange(m + 1), np.arange(n), indexing="ij")
    r1 = (n + i * n + p).ravel()
    c1 = (j * n + p).ravel()
    v1 = dbar[i, j].ravel()

    # fractional diffusion, I_C (Ibar_m^T kron D)
    i, p, q = np.meshgrid(np.arange(m), np.arange(n), np.arange(n), indexing="ij")
    r2 = (n + i * n + p).ravel()
    c2 = (i * n + q).ravel()
    v2 = (-C[p, i] * D[p, q]).ravel()

    # control
    k = np.arange(n * m)
    r3 = n + k
    c3 = ny + k
    v3 = -np.ones(n * m)

    rows = np.concatenate([r0, r1, r2, r3])
    cols = np.concatenate([c0, c1, c2, c3])
    vals = np.concatenate([v0, v1, v2, v3])
    A = sp.csc_matrix((vals, (rows, cols)), shape=(ny, n * (2 * m + 1)))
    A.sum_duplicates()
    A.sort_indices()

    b = np.concatenate([sd.g, vec(sd.F)])
    return A, b


def assemble_inequalities(
    sd: SemiDiscreteOCP, with_state_bound: bool = False
) -> tuple[sp.csc_matrix, np.ndarray]:
    """Return ``(B, h)`` for ``u >= u_min`` and optionally ``y >= y_min``."""
    n, m = sd.n, sd.m
    ny, nu = n * (m + 1), n * m
    nv = ny + nu

    rows_u = sp.hstack([sp.csr_matrix((nu, ny)), -sp.identity(nu, format="csr")])
    if not with_state_bound:
        return sp.csc_matrix(rows_u), -vec(sd.U_min)

    if sd.Y_min is None:
        raise ValueError("missing_state_bound: the problem declares no y_min")
    rows_y = sp.hstack([-sp.identity(ny, format="csr"), sp.csr_matrix((ny, nu))])
    B = sp.vstack([rows_y, rows_u], format="csc")
    assert B.shape == (ny + nu, nv)
    return B, -np.concatenate([vec(sd.Y_min), vec(sd.U_min)])


def assemble(sd: SemiDiscreteOCP, with_state_bound: bool = False) -> StandardQP:
    H, c, c0 = assemble_objective(sd)
    A, b = assemble_dynamics(sd)
    B, h = assemble_inequalities(sd, with_state_bound)
    for a in (H, c, b, h):
        a.flags.writeable = False
    return StandardQP(sd.n, sd.m, H, c, c0, A, b, B, h)


def expected_nnz(n: int, m: int) -> int:
    return n * m * (n + m + 1) + n


# }}}


# {{{ loop-form references


def dynamics_residual_loop(sd: SemiDiscreteOCP, Y: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Residual of the initial condition and collocated dynamics, entry by entry."""
    n, m = sd.n, sd.m
    dbar, D, C, F = sd.temporal.dbar, sd.d_pm, sd.C, sd.F
    res = np.empty(n * (m + 1))
    res[:n] = Y[:, 0] - sd.g
    for i in range(m):
        for p in range(n):
            lhs = sum(dbar[i, j] * Y[p, j] for j in range(m + 1))
            diffusion = C[p, i] * sum(D[p, q] * Y[q, i] for q in range(n))
            res[n + i * n + p] = lhs - diffusion - F[p, i] - U[p, i]
    return res


def objective_loop(sd: SemiDiscreteOCP, Y: np.ndarray, U: np.ndarray) -> float:
    """The discrete performance index as the plain double sum."""
    varpi, w, Z = sd.temporal.varpi, sd.w_obj, sd.Z_obj
    total = 0.0
    for j in range(sd.m):
        for i in range(sd.n):
            total += varpi[j] * w[i] * ((Y[i, j] - Z[i, j]) ** 2 + U[i, j] ** 2)
    return 0.5 * total


# }}}


# {{{ solution layout


@dataclass(frozen=True)
class SolutionGrid:
    """Collocated state ``Y`` (n x (m+1)), control ``U`` (n x m) and objective."""

    Y: np.ndarray
    U: np.ndarray
    J: float


def pack(Y: np.ndarray, U: np.ndarray) -> np.ndarray:
    return np.concatenate([vec(Y), vec(U)])


def extract_solution(v: np.ndarray, n: int, m: int, qp: StandardQP | None = None) -> SolutionGrid:
    v = np.asarray(v, dtype=float)
    if v.size != n * (2 * m + 1):
        raise ValueError(f"length_mismatch: expected {n * (2 * m + 1)} entries, got {v.size}")
    ny = n * (m + 1)
    Y = unvec(v[:ny], n, m + 1)
    U = unvec(v[ny:], n, m)
    J = qp.objective(v) if qp is not None else float("nan")
    return SolutionGrid(Y, U, J)


# }}}


# {{{ text dump


def _write_sparse(path: Path, M) -> None:
    M = sp.coo_matrix(M)
    order = np.lexsort((M.col, M.row))
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]} {M.nnz}\n")
        for k in order:
            fh.write(f"{M.row[k]} {M.col[k]} {M.data[k]:.17g}\n")


def _write_vector(path: Path, x) -> None:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{x.size}\n")
        for value in x:
            fh.write(f"{value:.17g}\n")


def dump_qp(qp: StandardQP, directory: str | Path) -> list[Path]:
    """Write the QP as plain text files, one per component.

    Sparse files start with ``rows cols nnz`` followed by ``row col value``
    lines (0-based, sorted by row then column); vector files start with the
    length followed by one value per line. Values use 17 significant digits.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, M in (("A", qp.A), ("B", qp.B)):
        path = directory / f"{name}.txt"
        _write_sparse(path, M)
        written.append(path)
    for name, x in (("H", qp.H_diag), ("c", qp.c), ("b", qp.b), ("h", qp.h), ("c0", qp.c0)):
        path = directory / f"{name}.txt"
        _write_vector(path, x)
        written.append(path)
    return written


def read_sparse(path: str | Path) -> sp.csc_matrix:
    with open(path) as fh:
        rows, cols, nnz = (int(tok) for tok in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.empty((0, 3))
    return sp.csc_matrix(
        (data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(rows, cols)
    )


def read_vector(path: str | Path) -> np.ndarray:
    with open(path) as fh:
        size = int(fh.readline())
        return np.loadtxt(fh, ndmin=1) if size else np.empty(0)


# }}}
