"""Space and time grids, and sampling of a problem onto them.

Space uses the Jacobi(1, 1) Gauss nodes on [0, 1]. Time uses the left
Legendre-Gauss-Radau nodes on [0, T] with the final time appended as an
extra, non-collocated interpolation node.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from fracocp.errors import NonFiniteSampleError
from fracocp.fracdiff import FracDiffPair, frac_diff_pair, shifted_gauss11
from fracocp.orthopoly import legendre_gauss_radau, map_to_interval

if TYPE_CHECKING:
    from fracocp.problems import OCProblem


class ObjectiveForm(enum.Enum):
    #: ``omega / (x (1 - x))`` normalized to unit sum, with plain target samples
    CONSISTENT = "consistent"
    #: ``W = diag(omega) / 2`` with the target divided by ``x (1 - x)``
    PAPER_MATRIX = "paper-matrix"


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.flags.writeable = False


# {{{ space


@dataclass(frozen=True)
class SpatialGrid:
    """Shifted Jacobi(1, 1) Gauss nodes with their two sets of weights.

    ``omega`` integrates ``x (1 - x) f(x)`` over [0, 1]. ``obj_weights`` is
    ``omega / (x (1 - x))`` scaled to unit sum: it integrates exactly every
    function ``x (1 - x) p(x)`` with ``deg p <= 2n - 1`` up to that scale, so
    pairing a state with a fractional derivative stays consistent with the
    discrete transpose, and constants integrate exactly.
    """

    n: int
    xi_hat: np.ndarray
    omega: np.ndarray
    obj_weights: np.ndarray
    bary: np.ndarray = field(repr=False)


def _bary_weights(x: np.ndarray) -> np.ndarray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def build_spatial(n: int) -> SpatialGrid:
    if n < 1:
        raise ValueError(f"need at least one spatial node: {n}")

    rule = shifted_gauss11(n)
    x = np.array(rule.nodes)
    omega = np.array(rule.weights)
    w = omega / (x * (1.0 - x))
    w /= np.sum(w)

    arrays = (x, omega, w, _bary_weights(x))
    _freeze(*arrays)
    return SpatialGrid(n, *arrays)


def lagrange_basis(nodes: np.ndarray, bary: np.ndarray, x) -> np.ndarray:
    """``L[j, k] = l_j(x_k)`` by the second barycentric formula."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[None, :] - nodes[:, None]
    exact = diff == 0.0
    diff[exact] = 1.0
    terms = bary[:, None] / diff
    L = terms / np.sum(terms, axis=0)

    hit = np.any(exact, axis=0)
    if np.any(hit):
        L[:, hit] = exact[:, hit].astype(float)
    return L


def basis_eval(grid: SpatialGrid, j: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(l_j(x), ring_l_j(x))`` for the 0-based basis index *j*.

    ``ring_l_j = x (1 - x) l_j(x) / (xi_j (1 - xi_j))`` vanishes at both ends
    of [0, 1] and carries the state.
    """
    if not 0 <= j < grid.n:
        raise IndexError(f"basis index out of range: {j}")
    x = np.asarray(x, dtype=float)
    ell = lagrange_basis(grid.xi_hat, grid.bary, x)[j].reshape(x.shape)
    xj = grid.xi_hat[j]
    ring = x * (1.0 - x) / (xj * (1.0 - xj)) * ell
    return ell, ring


def objective_weights(grid: SpatialGrid, form: ObjectiveForm | str) -> np.ndarray:
    form = ObjectiveForm(form)
    if form is ObjectiveForm.CONSISTENT:
        return grid.obj_weights
    # omega on [-1, 1] is 8 times the [0, 1] weight
    return 0.5 * 8.0 * grid.omega


# }}}


# {{{ time


@dataclass(frozen=True)
class TemporalGrid:
    """Radau nodes on [0, T] plus the appended final time.

    ``dbar[i, j]`` is the derivative of the ``j``-th Lagrange polynomial over
    all ``m + 1`` nodes, evaluated at collocation node ``i < m``.
    """

    m: int
    T: float
    tau_hat: np.ndarray
    varpi: np.ndarray
    dbar: np.ndarray = field(repr=False)


def differentiation_matrix(nodes: np.ndarray) -> np.ndarray:
    """Barycentric first-derivative matrix with negative-sum diagonal."""
    w = _bary_weights(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


def build_temporal(m: int, T: float) -> TemporalGrid:
    if m < 1:
        raise ValueError(f"need at least one time node: {m}")
    if not T > 0.0:
        raise ValueError(f"horizon must be positive: {T}")

    rule = map_to_interval(legendre_gauss_radau(m), 0.0, T)
    tau = np.append(rule.nodes, T)
    tau[0] = 0.0
    dbar = differentiation_matrix(tau)[:m]

    arrays = (tau, np.array(rule.weights), dbar)
    _freeze(*arrays)
    return TemporalGrid(m, float(T), *arrays)


# }}}


# {{{ sampling


@dataclass(frozen=True)
class SemiDiscreteOCP:
    """A problem sampled on the space-time grid.

    Sample matrices are indexed ``[space, time]``. ``Z_obj`` and ``w_obj`` are
    the target and spatial weights the objective actually uses; they differ
    from ``Z`` and the grid weights only for the paper-matrix form.
    """

    spatial: SpatialGrid
    temporal: TemporalGrid
    beta: float
    r: float
    T: float
    pair: FracDiffPair = field(repr=False)
    C: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    U_min: np.ndarray = field(repr=False)
    Y_min: np.ndarray | None = field(repr=False, default=None)
    objective_form: ObjectiveForm = ObjectiveForm.CONSISTENT
    Z_obj: np.ndarray = field(repr=False, default=None)
    w_obj: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.spatial.n

    @property
    def m(self) -> int:
        return self.temporal.m

    @property
    def d_pm(self) -> np.ndarray:
        return self.pair.d_combined


def _sample(name: str, fn, X: np.ndarray, Tt: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        values = np.asarray(fn(X, Tt), dtype=float)
    values = np.broadcast_to(values, X.shape).copy()
    if not np.all(np.isfinite(values)):
        raise NonFiniteSampleError(f"nonfinite_sample: '{name}' is not finite on the grid")
    return values


def sample_problem(
    problem: OCProblem,
    spatial: SpatialGrid,
    temporal: TemporalGrid,
    *,
    objective_form: ObjectiveForm | str = ObjectiveForm.CONSISTENT,
    pair: FracDiffPair | None = None,
) -> SemiDiscreteOCP:
    """Evaluate the problem data at the grid points.

    ``C, F, Z, U_min`` use the ``m`` collocation times; ``Y_min`` also uses
    the final time since the state lives on all ``m + 1`` nodes.
    """
    form = ObjectiveForm(objective_form)
    x = spatial.xi_hat
    t = temporal.tau_hat
    if pair is None:
        pair = frac_diff_pair(spatial.n, problem.beta, problem.r)

    X, Tt = np.meshgrid(x, t[:-1], indexing="ij")
    C = _sample("c", problem.c, X, Tt)
    F = _sample("f", problem.f, X, Tt)
    Z = _sample("z", problem.z, X, Tt)
    U_min = _sample("u_min", problem.u_min, X, Tt)

    with np.errstate(all="ignore"):
        g = np.broadcast_to(np.asarray(problem.g(x), dtype=float), x.shape).copy()
    if not np.all(np.isfinite(g)):
        raise NonFiniteSampleError("nonfinite_sample: 'g' is not finite on the grid")

    Y_min = None
    if problem.y_min is not None:
        Xf, Tf = np.meshgrid(x, t, indexing="ij")
        Y_min = _sample("y_min", problem.y_min, Xf, Tf)

    if form is ObjectiveForm.PAPER_MATRIX:
        Z_obj = Z / (x * (1.0 - x))[:, None]
    else:
        Z_obj = Z
    w_obj = objective_weights(spatial, form)

    arrays = [C, F, Z, g, U_min, Z_obj] + ([Y_min] if Y_min is not None else [])
    _freeze(*arrays)
    return SemiDiscreteOCP(
        spatial,
        temporal,
        problem.beta,
        problem.r,
        problem.T,
        pair,
        C,
        F,
        Z,
        g,
        U_min,
        Y_min,
        form,
        Z_obj,
        w_obj,
    )


# }}}
