"""Self-checks of the numerical building blocks, shared by the CLI and tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fracocp.discretize import build_temporal
from fracocp.fracdiff import FracDiffPair, frac_diff_pair, oracle_matrices, reflection_error
from fracocp.orthopoly import jacobi_gauss, legendre_gauss_radau
from fracocp.qpform import kron, vec

ORACLE_TOL = 1.0e-8
QUADRATURE_TOL = 1.0e-12
IDENTITY_TOL = 1.0e-12
REFLECTION_TOL = 1.0e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.name}: max deviation {self.deviation:.3e} (tolerance {self.tolerance:.1e}) {verdict}"


def _jacobi11_moment(k: int) -> float:
    """Integral of (1 - t)(1 + t) t^k over [-1, 1]."""
    if k % 2:
        return 0.0
    return 2.0 / (k + 1) - 2.0 / (k + 3)


def quadrature_checks(n: int) -> list[CheckResult]:
    """Gauss-Jacobi(1, 1) and Radau exactness at their maximal degrees."""
    gauss = jacobi_gauss((1.0, 1.0), n)
    dev = max(
        abs(gauss.integrate(lambda t, k=k: t**k) - _jacobi11_moment(k)) for k in range(2 * n)
    )
    results = [CheckResult(f"gauss_jacobi11_exactness(n={n})", dev, QUADRATURE_TOL)]

    radau = legendre_gauss_radau(n)
    dev = max(
        abs(radau.integrate(lambda t, k=k: t**k) - (0.0 if k % 2 else 2.0 / (k + 1)))
        for k in range(2 * n - 1)
    )
    results.append(CheckResult(f"radau_exactness(m={n})", dev, QUADRATURE_TOL))
    return results


def pair_for(n: int, beta: float) -> FracDiffPair:
    return frac_diff_pair(n, beta, 0.5)


def operator_checks(n: int, beta: float, seed: int = 0) -> list[CheckResult]:
    """Differentiation matrices against the power-rule oracle plus the
    Kronecker and time-matrix identities."""
    pair = pair_for(n, beta)
    Dp, Dm = oracle_matrices(n, beta, pair.nodes)
    scale = float(np.max(np.abs(Dp)))
    results = [
        CheckResult(
            f"left_matrix_oracle(n={n}, beta={beta})",
            float(np.max(np.abs(pair.d_plus - Dp))) / scale,
            ORACLE_TOL,
        ),
        CheckResult(
            f"right_matrix_oracle(n={n}, beta={beta})",
            float(np.max(np.abs(pair.d_minus - Dm))) / float(np.max(np.abs(Dm))),
            ORACLE_TOL,
        ),
        CheckResult(
            "reflection_symmetry", reflection_error(pair.d_plus, pair.d_minus) / scale, REFLECTION_TOL
        ),
    ]

    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    X = rng.standard_normal((n, n + 1))
    E = rng.standard_normal((n + 1, 3))
    lhs = vec(A @ X @ E)
    rhs = kron(E.T, A) @ vec(X)
    dev = float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(lhs))))
    results.append(CheckResult("kron_vec_identity", dev, IDENTITY_TOL))

    T = 3.0
    grid = build_temporal(n, T)
    tau = grid.tau_hat
    dev = max(
        float(np.max(np.abs(grid.dbar @ (tau / T) ** p - p * (tau[:-1] / T) ** max(p - 1, 0) / T)))
        for p in range(n + 1)
    )
    results.append(CheckResult(f"time_matrix_exactness(m={n})", dev, 1.0e-10 * max(1, n) ** 2))
    return results
