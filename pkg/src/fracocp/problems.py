"""Problem definitions: the built-in catalog, config files and error norms.

A problem is

    y_t = c (r D+ y + (1 - r) D- y) + f + u    on (0, 1) x (0, T],
    y(x, 0) = g(x),   y(0, t) = y(1, t) = 0,   u >= u_min  (and y >= y_min),

minimizing ``1/2 int int (y - z)^2 + u^2``. ``D+`` and ``D-`` are the left
and right Riemann-Liouville derivatives of order ``2 - beta``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special

from fracocp.discretize import SpatialGrid, TemporalGrid
from fracocp.qpform import SolutionGrid

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]
Profile = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExactSolution:
    u: Field
    y: Field
    J: Optional[float] = None


@dataclass(frozen=True)
class OCProblem:
    beta: float
    r: float
    T: float
    c: Field
    f: Field
    z: Field
    g: Profile
    u_min: Field
    y_min: Optional[Field] = None
    exact: Optional[ExactSolution] = None
    name: str = "custom"
    #: free-form parameters used to build the problem, kept for reports
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in the open interval (0, 1): {self.beta}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1]: {self.r}")
        if not self.T > 0.0:
            raise ValueError(f"T must be positive: {self.T}")
        if self.exact is not None:
            ends = np.abs(np.asarray(self.g(np.array([0.0, 1.0])), dtype=float))
            if np.max(ends) > 1.0e-8:
                raise ValueError("g must vanish at x = 0 and x = 1 when an exact solution is given")

    def without_state_bound(self) -> OCProblem:
        return replace(self, y_min=None)


# {{{ catalog


def _bubble(x):
    return x * x * (1.0 - x) ** 2


def _frac_bubble(beta: float, x):
    """Left derivative of order ``2 - beta`` of ``x^2 (1 - x)^2``."""
    return (
        2.0 * x**beta / special.gamma(1.0 + beta)
        - 12.0 * x ** (1.0 + beta) / special.gamma(2.0 + beta)
        + 24.0 * x ** (2.0 + beta) / special.gamma(3.0 + beta)
    )


def _example1_fields(beta: float, r: float, T: float) -> tuple[Field, Field]:
    """The control profile ``q`` and the target ``z`` of the first example.

    ``z`` makes ``y = 0`` optimal: it is ``-q_t`` minus the adjoint operator
    ``r D- + (1 - r) D+`` applied to ``c q = x^2 (1-x)^2 sin(T - t)``.
    """

    def q(x, t):
        return 100.0 * _bubble(x) * np.sin(T - t) / (1.0 + x * t)

    def z(x, t):
        s = 1.0 - x
        adjoint = r * _frac_bubble(beta, s) + (1.0 - r) * _frac_bubble(beta, x)
        return (
            100.0 * x**3 * s**2 * np.sin(T - t) / (1.0 + x * t) ** 2
            + 100.0 * _bubble(x) * np.cos(T - t) / (1.0 + x * t)
            - np.sin(T - t) * adjoint
        )

    return q, z


def _example1(beta: float = 0.2, r: float = 0.8, T: float = 1.0) -> OCProblem:
    q, z = _example1_fields(beta, r, T)

    def u_ex(x, t):
        return np.maximum(q(x, t), 1.0)

    exact = ExactSolution(
        u=u_ex,
        y=lambda x, t: np.zeros(np.broadcast(x, t).shape),
        J=_example1_objective(beta, r, T),
    )
    return OCProblem(
        beta=beta,
        r=r,
        T=T,
        c=lambda x, t: (1.0 + x * t) / 100.0,
        f=lambda x, t: -u_ex(x, t),
        z=z,
        g=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        u_min=lambda x, t: np.ones(np.broadcast(x, t).shape),
        exact=exact,
        name="example1",
        meta={"beta": beta, "r": r, "T": T},
    )


def _crossings(fn, lo: float, hi: float, samples: int) -> list[float]:
    """Roots of ``fn`` on ``[lo, hi]`` found by sign changes on a grid."""
    grid = np.linspace(lo, hi, samples)
    vals = np.array([fn(g) for g in grid])
    return [
        optimize.brentq(fn, a, b, xtol=1.0e-15)
        for a, b, va, vb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:])
        if va * vb < 0.0
    ]


@functools.lru_cache(maxsize=32)
def _example1_objective(beta: float, r: float, T: float) -> float:
    """``1/2 int int z^2 + u_ex^2`` for the first example (its exact state is 0).

    The kinks of ``max(q, 1)`` are located and used as breakpoints, so every
    quadrature sees a smooth integrand.
    """
    q, z = _example1_fields(beta, r, T)
    opts = {"epsabs": 1.0e-14, "epsrel": 1.0e-13, "limit": 200}

    def inner(x: float) -> float:
        tracking = integrate.quad(lambda t: z(x, t) ** 2, 0.0, T, **opts)[0]
        edges = [0.0, *_crossings(lambda t: q(x, t) - 1.0, 0.0, T, 401), T]
        control = sum(
            integrate.quad(lambda t: max(q(x, t), 1.0) ** 2, a, b, **opts)[0]
            for a, b in zip(edges[:-1], edges[1:])
        )
        return 0.5 * (tracking + control)

    # the inner integrand has kinks in x where the crossing leaves t = 0
    edges = [0.0, *_crossings(lambda x: q(x, 0.0) - 1.0, 0.0, 1.0, 2001), 1.0]
    return float(sum(integrate.quad(inner, a, b, **opts)[0] for a, b in zip(edges[:-1], edges[1:])))


def _example2(beta: float = 0.5, r: float = 0.25, T: float = 30.0) -> OCProblem:
    def u_min(x, t):
        return np.maximum(x * np.exp(-2.0 * (x - 0.5)), np.sin(2.0 * x * (1.0 - x) * t**0.6))

    return OCProblem(
        beta=beta,
        r=r,
        T=T,
        c=lambda x, t: (1.0 + x * (1.0 - x) * t) / 10.0,
        f=lambda x, t: np.ones(np.broadcast(x, t).shape),
        z=lambda x, t: 1.0 + x / (1.0 + t),
        g=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        u_min=u_min,
        name="example2",
        meta={"beta": beta, "r": r, "T": T},
    )


def _example3(beta: float = 0.2, r: float = 0.8, T: float = 1.0) -> OCProblem:
    base = _example1(beta, r, T)

    def y_min(x, t):
        return np.sqrt(np.maximum(0.0, 0.1 - (x - 0.5) ** 2 - (t - 0.5) ** 2))

    # the state bound changes the optimum, so the first example's exact
    # solution no longer applies
    return replace(base, y_min=y_min, exact=None, name="example3")


def _example4(beta: float = 0.5, r: float = 0.5, T: float = 3.0) -> OCProblem:
    return OCProblem(
        beta=beta,
        r=r,
        T=T,
        c=lambda x, t: np.ones(np.broadcast(x, t).shape),
        f=lambda x, t: np.zeros(np.broadcast(x, t).shape),
        z=lambda x, t: np.full(np.broadcast(x, t).shape, 0.5),
        g=lambda x: np.sin(np.pi * np.asarray(x, dtype=float)),
        u_min=lambda x, t: np.zeros(np.broadcast(x, t).shape),
        name="example4",
        meta={"beta": beta, "r": r, "T": T},
    )


def example5_fbar_coefficients(beta: float) -> np.ndarray:
    """Coefficients of ``x^(p + beta)``, p = 2..6, in the manufactured forcing."""
    numerators = np.array([1.0, -20.0, 180.0, -840.0, 1680.0])
    return np.array([c / math.gamma(p + 1 + beta) for p, c in zip(range(2, 7), numerators)])


def _example5(beta: float = 0.5, r: float = 0.5, T: float = 3.0) -> OCProblem:
    coeffs = example5_fbar_coefficients(beta)
    powers = np.arange(2, 7) + beta

    def fbar(x):
        x = np.asarray(x, dtype=float)
        return sum(c * x**p for c, p in zip(coeffs, powers))

    def y_ex(x, t):
        return np.exp(t) * x**4 * (1.0 - x) ** 4

    def f(x, t):
        # the optimal control sits on its bound u = 1, so the forcing carries
        # the -1 that keeps y_ex an exact trajectory
        diffusion = 24.0 * (r * fbar(x) + (1.0 - r) * fbar(1.0 - x))
        manufactured = np.exp(t) * (x**4 * (1.0 - x) ** 4 - diffusion)
        return manufactured - 1.0

    return OCProblem(
        beta=beta,
        r=r,
        T=T,
        c=lambda x, t: np.ones(np.broadcast(x, t).shape),
        f=f,
        z=y_ex,
        g=lambda x: np.asarray(x, dtype=float) ** 4 * (1.0 - np.asarray(x, dtype=float)) ** 4,
        u_min=lambda x, t: np.ones(np.broadcast(x, t).shape),
        exact=ExactSolution(u=lambda x, t: np.ones(np.broadcast(x, t).shape), y=y_ex, J=0.5 * T),
        name="example5",
        meta={"beta": beta, "r": r, "T": T},
    )


_CATALOG = {1: _example1, 2: _example2, 3: _example3, 4: _example4, 5: _example5}


def example(
    id: int, *, beta: float | None = None, r: float | None = None, T: float | None = None
) -> OCProblem:
    """Return catalog problem *id* (1 to 5), optionally overriding its scalars."""
    try:
        factory = _CATALOG[int(id)]
    except KeyError:
        raise ValueError(f"unknown example {id}; choose from {sorted(_CATALOG)}") from None

    kwargs = {k: v for k, v in (("beta", beta), ("r", r), ("T", T)) if v is not None}
    return factory(**kwargs)


# }}}


# {{{ error norms


@dataclass(frozen=True)
class ErrorNorms:
    E_J: float
    E2_u: float
    Einf_u: float
    E2_y: float
    Einf_y: float

    def as_dict(self) -> dict[str, float]:
        return {
            "E_J": self.E_J,
            "E2_u": self.E2_u,
            "Einf_u": self.Einf_u,
            "E2_y": self.E2_y,
            "Einf_y": self.Einf_y,
        }


def error_norms(
    sol: SolutionGrid, problem: OCProblem, spatial: SpatialGrid, temporal: TemporalGrid
) -> ErrorNorms:
    """Errors at the ``n x m`` collocation points against the exact solution.

    The state is compared on its first ``m`` columns, i.e. at the collocation
    times; ``E_J`` is NaN when the exact objective is unknown.
    """
    if problem.exact is None:
        raise ValueError(f"no_exact_solution: {problem.name} has no exact solution")

    X, Tt = np.meshgrid(spatial.xi_hat, temporal.tau_hat[:-1], indexing="ij")
    du = np.asarray(problem.exact.u(X, Tt), dtype=float) - sol.U
    dy = np.asarray(problem.exact.y(X, Tt), dtype=float) - sol.Y[:, :-1]
    J_ex = problem.exact.J
    return ErrorNorms(
        E_J=abs(J_ex - sol.J) if J_ex is not None else float("nan"),
        E2_u=float(np.sqrt(np.sum(du**2))),
        Einf_u=float(np.max(np.abs(du))),
        E2_y=float(np.sqrt(np.sum(dy**2))),
        Einf_y=float(np.max(np.abs(dy))),
    )


# }}}


# {{{ config files

#: keys holding expressions; the ones without a default are required
EXPRESSION_KEYS = ("c", "f", "z", "g", "u_min", "y_min", "u_ex", "y_ex")
SCALAR_KEYS = ("beta", "r", "T", "J_ex", "tol", "reg")
INTEGER_KEYS = ("n", "m", "max_iter")
TEXT_KEYS = ("objective_form", "name")
REQUIRED_KEYS = ("beta", "r", "T", "c", "f", "z", "g", "u_min")


def parse_config(text: str) -> dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = set(EXPRESSION_KEYS + SCALAR_KEYS + INTEGER_KEYS + TEXT_KEYS)
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in INTEGER_KEYS:
            values[key] = int(value)
        elif key in SCALAR_KEYS:
            values[key] = float(value)
        else:
            values[key] = value

    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ValueError(f"missing required keys: {', '.join(missing)}")
    return values


def problem_from_config(values: dict[str, object]) -> OCProblem:
    from fracocp.expr import parse

    beta, r, T = float(values["beta"]), float(values["r"]), float(values["T"])
    constants = {"beta": beta, "r": r, "T": T}

    def field_of(key: str) -> Field:
        expr = parse(str(values[key]))
        return lambda x, t: expr.evaluate(x=x, t=t, **constants)

    def profile_of(key: str) -> Profile:
        expr = parse(str(values[key]))
        if "t" in expr.variables():
            raise ValueError(f"{key} depends on t, but it is a function of x only")
        return lambda x: expr.evaluate(x=x, t=0.0, **constants)

    exact = None
    if "u_ex" in values and "y_ex" in values:
        exact = ExactSolution(field_of("u_ex"), field_of("y_ex"), values.get("J_ex"))

    return OCProblem(
        beta=beta,
        r=r,
        T=T,
        c=field_of("c"),
        f=field_of("f"),
        z=field_of("z"),
        g=profile_of("g"),
        u_min=field_of("u_min"),
        y_min=field_of("y_min") if "y_min" in values else None,
        exact=exact,
        name=str(values.get("name", "config")),
        meta={k: values[k] for k in values},
    )


def load_config(path: str | Path) -> tuple[OCProblem, dict[str, object]]:
    """Read a config file; returns the problem and the full key-value map."""
    values = parse_config(Path(path).read_text())
    return problem_from_config(values), values


# }}}
