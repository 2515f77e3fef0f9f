"""Left and right Riemann-Liouville differentiation matrices of order ``2 - beta``.

The state basis on [0, 1] is ``x (1 - x) l_j(x) / (xi_j (1 - xi_j))`` where
``l_j`` are the Lagrange polynomials on the shifted Jacobi(1, 1) Gauss nodes
``xi``. Each basis function is expanded in ``x (1 - x) P_{k-1}^{(1,1)}(2x - 1)``;
those terms have closed-form fractional derivatives, so

    D+[i, j] = sum_k lam[j, k] zeta_k(xi_i)

and the right matrix follows from the reflection ``x -> 1 - x``. An
independent route through monomial expansions and the power rule is kept in
:func:`rl_power_rule_oracle` and :func:`oracle_matrices`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.special import gammaln

from fracocp.errors import NormalizationError, OracleMismatchError
from fracocp.orthopoly import (
    JacobiParams,
    QuadratureRule,
    jacobi_gauss,
    jacobi_norm2,
    jacobi_table,
    map_to_interval,
)

JACOBI11 = JacobiParams(1.0, 1.0)

#: working precision of the monomial oracle, in decimal digits
ORACLE_DPS = 40

#: the monomial oracle refuses polynomials beyond this degree
MAX_ORACLE_DEGREE = 15


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


def _check_beta(beta: float) -> None:
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1): {beta}")


def shifted_gauss11(n: int) -> QuadratureRule:
    """The *n*-point Jacobi(1, 1) Gauss rule mapped to [0, 1]."""
    return map_to_interval(jacobi_gauss(JACOBI11, n), 0.0, 1.0)


# {{{ expansion coefficients


@dataclass(frozen=True)
class LambdaCoeffs:
    """Coefficients ``values[j, k]`` of the basis in ``x (1-x) P_k^{(1,1)}(2x-1)``.

    Column ``k`` (0-based) multiplies the degree-``k`` shifted polynomial.
    """

    n: int
    values: np.ndarray


def _basis_norms(n: int) -> np.ndarray:
    # int_0^1 x (1 - x) [P_k^{(1,1)}(2x - 1)]^2 dx = k'/((2k'+1)(k'+1)), k' = k + 1
    return np.array([jacobi_norm2(JACOBI11, k) / 8.0 for k in range(n)])


def lambda_coeffs(n: int, rule: QuadratureRule | None = None) -> LambdaCoeffs:
    """Expansion coefficients of the boundary-vanishing Lagrange basis.

    *rule* is the Jacobi(1, 1) Gauss rule on [0, 1]; it is built when omitted.
    The coefficients are checked against the Kronecker property at the nodes.
    """
    if rule is None:
        rule = shifted_gauss11(n)
    if rule.size != n or rule.interval != (0.0, 1.0):
        raise ValueError("expected the n-point Jacobi(1, 1) rule mapped to [0, 1]")

    x, w = rule.nodes, rule.weights
    bubble = x * (1.0 - x)
    # P[k, j] = P_k^{(1,1)}(2 x_j - 1)
    P = jacobi_table(JACOBI11, n - 1, 2.0 * x - 1.0)

    lam = (w / bubble)[:, None] * P.T / _basis_norms(n)[None, :]

    # Kronecker check: sum_k lam[j, k] x_i (1 - x_i) P_k(x_i) = delta_ij
    recon = (bubble[:, None] * P.T) @ lam.T
    err = np.max(np.abs(recon - np.eye(n)))
    if err > 1.0e-8:
        raise NormalizationError(f"Kronecker reconstruction error {err:.3e}")

    lam.flags.writeable = False
    return LambdaCoeffs(n, lam)


# }}}


# {{{ closed-form derivatives of the expansion terms


def _ratio(num: float, den: float) -> float:
    """Gamma(num) / Gamma(den) for positive arguments."""
    return math.exp(gammaln(num) - gammaln(den))


def _zeta_tables(n: int, beta: float, s: np.ndarray) -> tuple[np.ndarray, ...]:
    """Jacobi tables used by both sides, evaluated at ``2 s - 1``."""
    t = 2.0 * s - 1.0
    p1 = jacobi_table((3.0 - beta, beta - 1.0), n - 1, t)
    p2 = jacobi_table((3.0 - beta, beta), n - 1, t)
    return p1, p2


def zeta_eval(k: int, beta: float, x) -> np.ndarray | float:
    """Left derivative of order ``2 - beta`` of ``x (1-x) P_{k-1}^{(1,1)}(2x-1)``.

    *k* is the 1-based mode index; for ``k = 1`` the degree ``k - 2`` term is
    absent.
    """
    _check_beta(beta)
    if k < 1:
        raise ValueError(f"mode index must be >= 1: {k}")
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= 0.0) | (xa >= 1.0)):
        raise ValueError("domain_error: zeta is evaluated on the open interval (0, 1)")

    result = _zeta_matrix(k, beta, np.atleast_1d(xa))[:, k - 1]
    return float(result[0]) if xa.ndim == 0 else result.reshape(xa.shape)


def _zeta_matrix(n: int, beta: float, x: np.ndarray) -> np.ndarray:
    """``Z[i, k - 1] = zeta_k(x_i)`` for ``k = 1, ..., n``."""
    p1, p2 = _zeta_tables(n, beta, x)
    xb1 = x ** (beta - 1.0)
    xb = x**beta

    Z = np.empty((x.size, n))
    for k in range(1, n + 1):
        c1 = _ratio(k + 1, k - 1 + beta)
        c2 = _ratio(k + 2, k + beta) * (k + 2) / (2 * k + 1)
        c3 = c1 * k / (2 * k + 1)
        # group the two x^beta terms before combining with the x^(beta-1) one
        tail = c2 * p2[k - 1]
        if k >= 2:
            tail = tail + c3 * p2[k - 2]
        Z[:, k - 1] = c1 * xb1 * p1[k - 1] - xb * tail
    return Z


def _zeta_right_matrix(n: int, beta: float, x: np.ndarray) -> np.ndarray:
    """Right derivative of the same expansion terms, ``Zr[i, k - 1]``.

    Written directly with the parameter-swapped polynomials. The sign of the
    degree ``k - 2`` term is ``+``, since that term comes from the
    ``(a - 1, b)`` contiguous relation which carries a minus sign.
    """
    t = 2.0 * x - 1.0
    q1 = jacobi_table((beta - 1.0, 3.0 - beta), n - 1, t)
    q2 = jacobi_table((beta, 3.0 - beta), n - 1, t)
    s = 1.0 - x
    sb1 = s ** (beta - 1.0)
    sb = s**beta

    Z = np.empty((x.size, n))
    for k in range(1, n + 1):
        c1 = _ratio(k + 1, k - 1 + beta)
        c2 = _ratio(k + 2, k + beta) * (k + 2) / (2 * k + 1)
        c3 = c1 * k / (2 * k + 1)
        tail = c2 * q2[k - 1]
        if k >= 2:
            tail = tail - c3 * q2[k - 2]
        Z[:, k - 1] = c1 * sb1 * q1[k - 1] - sb * tail
    return Z


# }}}


# {{{ matrices


def left_matrix(n: int, beta: float, lam: LambdaCoeffs, nodes: np.ndarray) -> np.ndarray:
    """``D+[i, j]``: left derivative of basis function *j* at node *i*."""
    _check_beta(beta)
    if lam.n != n or len(nodes) != n:
        raise ValueError("coefficients and nodes do not match n")
    return _zeta_matrix(n, beta, np.asarray(nodes, dtype=float)) @ lam.values.T


def right_matrix(
    n: int,
    beta: float,
    lam: LambdaCoeffs,
    nodes: np.ndarray,
    *,
    validate: bool = False,
) -> np.ndarray:
    """``D-[i, j]``: right derivative of basis function *j* at node *i*.

    With *validate*, the result is compared with the index-reversed left
    matrix, which it must equal for nodes symmetric about 1/2.
    """
    _check_beta(beta)
    if lam.n != n or len(nodes) != n:
        raise ValueError("coefficients and nodes do not match n")
    D = _zeta_right_matrix(n, beta, np.asarray(nodes, dtype=float)) @ lam.values.T

    if validate:
        Dp = left_matrix(n, beta, lam, nodes)
        err = reflection_error(Dp, D)
        if err > 1.0e-8:
            raise OracleMismatchError(f"right matrix fails the reflection check: {err:.3e}")
    return D


def combined_matrix(d_plus: np.ndarray, d_minus: np.ndarray, r: float) -> np.ndarray:
    if d_plus.shape != d_minus.shape:
        raise ValueError(f"shape mismatch: {d_plus.shape} vs {d_minus.shape}")
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1]: {r}")
    return r * d_plus + (1.0 - r) * d_minus


def reflection_error(d_plus: np.ndarray, d_minus: np.ndarray) -> float:
    """Scaled max deviation of ``d_minus`` from ``P d_plus P``."""
    scale = max(np.max(np.abs(d_plus)), 1.0e-300)
    return float(np.max(np.abs(d_minus - d_plus[::-1, ::-1])) / scale)


@dataclass(frozen=True)
class FracDiffPair:
    n: int
    beta: float
    r: float
    nodes: np.ndarray = field(repr=False)
    d_plus: np.ndarray = field(repr=False)
    d_minus: np.ndarray = field(repr=False)
    d_combined: np.ndarray = field(repr=False)


def frac_diff_pair(n: int, beta: float, r: float, *, validate: bool = False) -> FracDiffPair:
    """Build both matrices and their ``r``-weighted combination on *n* nodes."""
    _check_beta(beta)
    rule = shifted_gauss11(n)
    lam = lambda_coeffs(n, rule)
    dp = left_matrix(n, beta, lam, rule.nodes)
    dm = right_matrix(n, beta, lam, rule.nodes, validate=validate)
    dc = combined_matrix(dp, dm, r)
    for a in (dp, dm, dc):
        a.flags.writeable = False
    return FracDiffPair(n, beta, r, rule.nodes, dp, dm, dc)


# }}}


# {{{ monomial oracle


def _power_rule_mp(coeffs, alpha, side: Side, x) -> list:
    """Power rule in extended precision; *coeffs* and *x* are mpmath numbers."""
    if side is Side.RIGHT:
        # q(s) = p(1 - s), expanded by repeated synthetic substitution
        q = [mp.mpf(0)] * len(coeffs)
        for p, c in enumerate(coeffs):
            for k in range(p + 1):
                q[k] += c * mp.binomial(p, k) * (-1) ** k
        coeffs = q
        x = [1 - xi for xi in x]

    factors = [c * mp.gamma(p + 1) * mp.rgamma(p + 1 - alpha) for p, c in enumerate(coeffs)]
    return [
        mp.fsum(f * xi ** (p - alpha) for p, f in enumerate(factors) if f != 0) for xi in x
    ]


def rl_power_rule_oracle(coeffs, alpha: float, side: Side | str, x) -> np.ndarray | float:
    """Riemann-Liouville derivative of a polynomial by the power rule.

    *coeffs* are monomial coefficients in increasing degree, in ``x`` for the
    left side. For the right side the polynomial is re-expanded in powers of
    ``1 - x`` and the same rule is applied in the reflected variable. The
    arithmetic runs in extended precision so cancellation between monomials
    does not pollute the reference values.
    """
    side = Side(side)
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if coeffs.size - 1 > MAX_ORACLE_DEGREE:
        raise ValueError(
            f"degree_overflow: degree {coeffs.size - 1} exceeds {MAX_ORACLE_DEGREE}"
        )

    xa = np.asarray(x, dtype=float)
    with mp.workdps(ORACLE_DPS):
        values = _power_rule_mp(
            [mp.mpf(float(c)) for c in coeffs], mp.mpf(alpha), side, [mp.mpf(float(v)) for v in xa.ravel()]
        )
        result = np.array([float(v) for v in values]).reshape(xa.shape)
    return float(result) if xa.ndim == 0 else result


def _ring_basis_mp(nodes: list, j: int) -> list:
    """Monomial coefficients of the *j*-th ring basis function, in mpmath."""
    xj = nodes[j]
    coeffs = [mp.mpf(1)]
    for k, xk in enumerate(nodes):
        if k == j:
            continue
        shifted = [mp.mpf(0)] + coeffs
        for i, c in enumerate(coeffs):
            shifted[i] -= xk * c
        coeffs = [c / (xj - xk) for c in shifted]
    # multiply by x (1 - x) / (xj (1 - xj))
    out = [mp.mpf(0)] * (len(coeffs) + 2)
    for i, c in enumerate(coeffs):
        out[i + 1] += c
        out[i + 2] -= c
    scale = xj * (1 - xj)
    return [c / scale for c in out]


def ring_basis_monomials(nodes: np.ndarray, j: int) -> np.ndarray:
    """Monomial coefficients of ``x (1-x) l_j(x) / (x_j (1 - x_j))`` (0-based *j*)."""
    with mp.workdps(ORACLE_DPS):
        mp_nodes = [mp.mpf(float(v)) for v in np.asarray(nodes, dtype=float)]
        return np.array([float(c) for c in _ring_basis_mp(mp_nodes, j)])


def oracle_matrices(n: int, beta: float, nodes: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Both differentiation matrices from the monomial power rule.

    Basis coefficients are kept in extended precision end to end; only the
    final entries are rounded.
    """
    _check_beta(beta)
    if nodes is None:
        nodes = shifted_gauss11(n).nodes
    if n + 1 > MAX_ORACLE_DEGREE:
        raise ValueError(f"degree_overflow: degree {n + 1} exceeds {MAX_ORACLE_DEGREE}")
    Dp = np.empty((n, n))
    Dm = np.empty((n, n))
    with mp.workdps(ORACLE_DPS):
        x = [mp.mpf(float(v)) for v in nodes]
        alpha = 2 - mp.mpf(beta)
        for j in range(n):
            c = _ring_basis_mp(x, j)
            Dp[:, j] = [float(v) for v in _power_rule_mp(c, alpha, Side.LEFT, x)]
            Dm[:, j] = [float(v) for v in _power_rule_mp(c, alpha, Side.RIGHT, x)]
    return Dp, Dm


# }}}
