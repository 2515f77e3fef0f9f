"""Jacobi polynomials and Gauss-type quadrature rules.

Polynomials are evaluated with the three-term recurrence. Gauss nodes come
from the Golub-Welsch eigenvalue problem and are polished by Newton's method;
weights use the closed form in the derivative at the polished nodes.
The left Legendre-Gauss-Radau rule reuses the Jacobi(0, 1) Gauss nodes, which
are exactly its interior points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, poch

from fracocp.errors import ConvergenceError

ArrayLike = Union[float, np.ndarray]

#: Newton polish is accepted when the correction is below this (relative).
NODE_TOL = 1.0e-14


@dataclass(frozen=True)
class JacobiParams:
    """Exponents of the Jacobi weight ``(1 - t)**a * (1 + t)**b``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > -1.0 and self.b > -1.0):
            raise ValueError(f"Jacobi parameters must exceed -1: a={self.a}, b={self.b}")


LEGENDRE = JacobiParams(0.0, 0.0)


class RuleKind(enum.Enum):
    GAUSS = "gauss"
    RADAU = "radau"


@dataclass(frozen=True)
class QuadratureRule:
    params: JacobiParams
    kind: RuleKind
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1d arrays of equal length")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, f) -> float:
        """Apply the rule to a callable or to samples at the nodes."""
        fx = f(self.nodes) if callable(f) else np.asarray(f)
        return float(self.weights @ fx)


def _as_params(params) -> JacobiParams:
    if isinstance(params, JacobiParams):
        return params
    a, b = params
    return JacobiParams(float(a), float(b))


# {{{ evaluation


def jacobi_table(params, n: int, tau: ArrayLike) -> np.ndarray:
    """Return ``P_0, ..., P_n`` at *tau* stacked along the first axis."""
    p = _as_params(params)
    a, b = p.a, p.b
    tau = np.asarray(tau, dtype=float)
    if n < 0:
        raise ValueError(f"degree must be non-negative: {n}")

    out = np.empty((n + 1, *tau.shape))
    out[0] = 1.0
    if n == 0:
        return out
    out[1] = 0.5 * ((a + b + 2.0) * tau + (a - b))

    ab = a + b
    for k in range(2, n + 1):
        c = 2 * k + ab
        a1 = 2.0 * k * (k + ab) * (c - 2.0)
        a2 = (c - 1.0) * (a * a - b * b)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        out[k] = ((a2 + a3 * tau) * out[k - 1] - a4 * out[k - 2]) / a1

    return out


def jacobi_eval(params, n: int, tau: ArrayLike) -> ArrayLike:
    """Evaluate ``P_n^{(a, b)}(tau)`` by the three-term recurrence."""
    if n < 0:
        return np.zeros_like(np.asarray(tau, dtype=float))
    result = jacobi_table(params, n, tau)[n]
    return float(result) if result.ndim == 0 else result


def shifted_jacobi_eval(params, n: int, x: ArrayLike) -> ArrayLike:
    """Evaluate the shifted polynomial ``P_n^{(a, b)}(2 x - 1)`` on [0, 1]."""
    return jacobi_eval(params, n, 2.0 * np.asarray(x, dtype=float) - 1.0)


def jacobi_deriv(params, n: int, k: int, tau: ArrayLike) -> ArrayLike:
    """Evaluate the *k*-th derivative of ``P_n^{(a, b)}``.

    Uses ``d^k P_n^{(a,b)} = Gamma(n+a+b+k+1) / (2^k Gamma(n+a+b+1))
    P_{n-k}^{(a+k, b+k)}``. Requesting ``k > n`` raises instead of silently
    returning zero.
    """
    p = _as_params(params)
    if k < 0:
        raise ValueError(f"derivative order must be non-negative: {k}")
    if n < k:
        raise ValueError(f"degree_too_low: cannot take {k} derivatives of degree {n}")
    if k == 0:
        return jacobi_eval(p, n, tau)

    scale = poch(n + p.a + p.b + 1.0, k) / 2.0**k
    return scale * jacobi_eval(JacobiParams(p.a + k, p.b + k), n - k, tau)


def jacobi_norm2(params, n: int) -> float:
    """Squared weighted L2 norm of ``P_n^{(a, b)}`` on [-1, 1]."""
    p = _as_params(params)
    a, b = p.a, p.b
    if n == 0:
        # avoid the 0/0 in (2n + a + b + 1) Gamma(n + a + b + 1) when a + b = -1
        log = (a + b + 1) * math.log(2.0) + gammaln(a + 1) + gammaln(b + 1) - gammaln(a + b + 2)
        return float(math.exp(log))

    log = (
        (a + b + 1) * math.log(2.0)
        + gammaln(n + a + 1)
        + gammaln(n + b + 1)
        - gammaln(n + 1)
        - gammaln(n + a + b + 1)
    )
    return float(math.exp(log) / (2 * n + a + b + 1))


# }}}


# {{{ quadrature


def _recurrence_coefficients(p: JacobiParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Monic recurrence coefficients (diagonal, off-diagonal) of length n, n - 1."""
    a, b = p.a, p.b
    k = np.arange(n, dtype=float)
    s = 2.0 * k + a + b

    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / (s * (s + 2.0))
    # k = 0 has a removable 0/0 when a + b = 0
    diag[0] = (b - a) / (a + b + 2.0)

    if n == 1:
        return diag, np.empty(0)

    k = np.arange(1, n, dtype=float)
    s = 2.0 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        off2 = 4.0 * k * (k + a) * (k + b) * (k + a + b) / (s**2 * (s + 1.0) * (s - 1.0))
    # k = 1 has a removable 0/0 when a + b = -1
    off2[0] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) ** 2 * (3.0 + a + b))
    return diag, np.sqrt(off2)


def _newton_polish(p: JacobiParams, n: int, x: np.ndarray) -> np.ndarray:
    f = jacobi_eval(p, n, x)
    df = jacobi_deriv(p, n, 1, x)
    dx = f / df
    x = x - dx

    if not np.all(np.abs(dx) <= 1.0e3 * NODE_TOL * np.maximum(1.0, np.abs(x))):
        # one more step to confirm quadratic convergence
        f = jacobi_eval(p, n, x)
        dx = f / jacobi_deriv(p, n, 1, x)
        x = x - dx
        if not np.all(np.abs(dx) <= 1.0e2 * NODE_TOL * np.maximum(1.0, np.abs(x))):
            raise ConvergenceError(
                f"Gauss-Jacobi nodes did not converge: max correction {np.max(np.abs(dx)):.3e}"
            )
    return x


def _gauss_weights(p: JacobiParams, n: int, x: np.ndarray) -> np.ndarray:
    # closed form keeps full relative accuracy in the small end weights, unlike
    # the squared first eigenvector components
    a, b = p.a, p.b
    log = (
        (a + b + 1) * math.log(2.0)
        + gammaln(n + a + 1)
        + gammaln(n + b + 1)
        - gammaln(n + a + b + 1)
        - gammaln(n + 1)
    )
    dp = jacobi_deriv(p, n, 1, x)
    return np.exp(log) / ((1.0 - x * x) * dp**2)


def jacobi_gauss(params, n: int) -> QuadratureRule:
    """Return the *n*-point Gauss-Jacobi rule on [-1, 1].

    The rule integrates ``(1 - t)^a (1 + t)^b f(t)`` exactly for polynomials
    ``f`` of degree up to ``2 n - 1``.
    """
    p = _as_params(params)
    if n < 1:
        raise ValueError(f"number of points must be positive: {n}")

    diag, off = _recurrence_coefficients(p, n)
    x = diag.copy() if n == 1 else eigh_tridiagonal(diag, off, eigvals_only=True)
    x = _newton_polish(p, n, x)
    w = _gauss_weights(p, n, x)

    order = np.argsort(x)
    x, w = x[order], w[order]
    if p.a == p.b:
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
    return QuadratureRule(p, RuleKind.GAUSS, x, w)


def legendre_gauss_radau(m: int) -> QuadratureRule:
    """Return the *m*-point left Legendre-Gauss-Radau rule on [-1, 1].

    Nodes are the roots of ``P_{m-1} + P_m``, the first being ``-1``. The rule
    is exact for polynomials of degree up to ``2 m - 2``.
    """
    if m < 1:
        raise ValueError(f"number of points must be positive: {m}")
    if m == 1:
        return QuadratureRule(LEGENDRE, RuleKind.RADAU, np.array([-1.0]), np.array([2.0]))

    # interior Radau points are the Gauss points of the (0, 1) weight
    interior = jacobi_gauss(JacobiParams(0.0, 1.0), m - 1).nodes
    nodes = np.concatenate([[-1.0], interior])

    weights = np.empty(m)
    weights[0] = 2.0 / m**2
    pm1 = jacobi_eval(LEGENDRE, m - 1, interior)
    weights[1:] = (1.0 - interior) / (m**2 * pm1**2)

    return QuadratureRule(LEGENDRE, RuleKind.RADAU, nodes, weights)


def map_to_interval(rule: QuadratureRule, lo: float, hi: float) -> QuadratureRule:
    """Affinely map *rule* from its interval to ``[lo, hi]``.

    Weights pick up the Jacobian ``h**(a + b + 1)`` with ``h`` the length
    ratio, so the result integrates ``(hi - x)^a (x - lo)^b f(x)``.
    """
    if not lo < hi:
        raise ValueError(f"invalid interval: [{lo}, {hi}]")

    a0, b0 = rule.interval
    h = (hi - lo) / (b0 - a0)
    nodes = lo + h * (rule.nodes - a0)
    if rule.kind is RuleKind.RADAU:
        nodes[0] = lo
    weights = rule.weights * h ** (rule.params.a + rule.params.b + 1.0)

    return QuadratureRule(rule.params, rule.kind, nodes, weights, (float(lo), float(hi)))


# }}}
