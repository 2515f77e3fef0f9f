from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from fracocp.discretize import build_spatial, build_temporal
from fracocp.fracdiff import rl_power_rule_oracle
from fracocp.pipeline import run
from fracocp.problems import (
    ErrorNorms,
    OCProblem,
    error_norms,
    example,
    example5_fbar_coefficients,
    load_config,
    parse_config,
    problem_from_config,
)
from fracocp.qpform import SolutionGrid

DEMOS = Path(__file__).resolve().parents[1] / "demos"

#: 1/2 int int z^2 + u_ex^2 for the first example; kink-split nested
#: quadrature gives 8.21682214859112 and plain nquad 8.216822148580409
EXAMPLE1_J = 8.21682214859

EXAMPLE2_CONFIG = (DEMOS / "example2.cfg").read_text()


class TestCatalog:
    def test_first_example_exact_control(self):
        ex = example(1)
        assert ex.exact.u(0.5, 1.0) == pytest.approx(1.0)
        assert np.all(ex.exact.y(np.linspace(0, 1, 5), 0.3) == 0)
        assert ex.exact.J == pytest.approx(EXAMPLE1_J, abs=1e-9)

    def test_first_example_objective_second_route(self):
        # plain adaptive cubature over the square, blind to the kinks
        import warnings

        ex = example(1)

        def integrand(t, x):
            return 0.5 * (float(ex.z(x, t)) ** 2 + float(ex.exact.u(x, t)) ** 2)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, _ = integrate.nquad(
                integrand, [[0.0, 1.0], [0.0, 1.0]], opts={"epsabs": 1e-13, "epsrel": 1e-13, "limit": 200}
            )
        assert value == pytest.approx(EXAMPLE1_J, abs=1e-9)

    def test_first_example_printed_target(self):
        # the target as printed for beta = 0.2, r = 0.8
        from math import gamma

        ex = example(1)
        x = np.linspace(0, 1, 21)[:, None]
        t = np.linspace(0, 1, 9)[None, :]
        s = 1 - x
        frac = (x**0.2 + 4 * s**0.2) - 5 * (x**1.2 + 4 * s**1.2) + 50 / 11 * (x**2.2 + 4 * s**2.2)
        printed = (
            100 * x**3 * s**2 * np.sin(1 - t) / (1 + x * t) ** 2
            + 100 * x**2 * s**2 * np.cos(1 - t) / (1 + x * t)
            - 2 * np.sin(1 - t) / (5 * gamma(1.2)) * frac
        )
        assert np.allclose(ex.z(x, t), printed, rtol=1e-14, atol=1e-13)

    def test_manufactured_state(self):
        assert example(5).exact.y(0.5, 0.0) == pytest.approx(1 / 256)
        assert example(5).exact.J == 1.5

    def test_constant_target(self):
        z = example(4).z(np.linspace(0, 1, 4)[:, None], np.linspace(0, 3, 3)[None, :])
        assert np.all(z == 0.5)

    def test_third_example_bound(self):
        ex = example(3)
        assert ex.exact is None
        assert float(ex.y_min(0.5, 0.5)) == pytest.approx(np.sqrt(0.1))
        assert float(ex.y_min(0.0, 0.0)) == 0.0

    @pytest.mark.parametrize("beta", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("r", [0.8, 0.3])
    def test_first_example_target_is_adjoint_consistent(self, beta, r):
        # with q = 100 x^2 (1-x)^2 sin(T-t)/(1+xt) and c q = x^2 (1-x)^2 sin(T-t),
        # z = -q_t - (r D- + (1-r) D+)(c q); checked with the monomial oracle
        ex = example(1, beta=beta, r=r)
        T = ex.T
        x = np.array([0.05, 0.3, 0.5, 0.71, 0.93])
        coef = [0, 0, 1, -2, 1]
        Dp = rl_power_rule_oracle(coef, 2 - beta, "left", x)
        Dm = rl_power_rule_oracle(coef, 2 - beta, "right", x)
        for t in (0.0, 0.4, 0.9):
            s, co = np.sin(T - t), np.cos(T - t)
            qt = 100 * x**2 * (1 - x) ** 2 * (-co * (1 + x * t) - x * s) / (1 + x * t) ** 2
            ref = -qt - s * (r * Dm + (1 - r) * Dp)
            assert np.allclose(ex.z(x, t), ref, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("beta", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("r", [0.5, 0.2])
    def test_manufactured_forcing_against_oracle(self, beta, r):
        # printed forcing = y_t - c (r D+ + (1-r) D-) y for y = e^t x^4 (1-x)^4
        ex = example(5, beta=beta, r=r)
        x = np.array([0.07, 0.25, 0.5, 0.66, 0.9])
        coef = np.polynomial.polynomial.polypow([0, 1, -1], 4)
        Dp = rl_power_rule_oracle(coef, 2 - beta, "left", x)
        Dm = rl_power_rule_oracle(coef, 2 - beta, "right", x)
        t = 0.8
        y = x**4 * (1 - x) ** 4
        printed = ex.f(x, t) + 1.0
        ref = np.exp(t) * (y - r * Dp - (1 - r) * Dm)
        assert np.allclose(printed, ref, rtol=1e-11, atol=1e-12)

    def test_fbar_coefficients(self):
        from math import gamma

        c = example5_fbar_coefficients(0.5)
        assert c[0] == pytest.approx(1 / gamma(3.5))
        assert c[-1] == pytest.approx(1680 / gamma(7.5))

    @pytest.mark.parametrize("ex", range(1, 6))
    def test_finite_on_grid(self, ex):
        p = example(ex)
        x = np.linspace(0, 1, 41)[:, None]
        t = np.linspace(0, p.T, 31)[None, :]
        for fn in (p.c, p.f, p.z, p.u_min):
            assert np.all(np.isfinite(fn(x, t)))
        assert np.all(np.isfinite(p.g(x[:, 0])))

    def test_overrides(self):
        p = example(2, beta=0.3, T=5.0)
        assert (p.beta, p.r, p.T) == (0.3, 0.25, 5.0)

    def test_unknown_example(self):
        with pytest.raises(ValueError):
            example(6)

    @pytest.mark.parametrize("kw", [dict(beta=0.0), dict(beta=1.0), dict(r=1.2), dict(T=0.0)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            replace(example(4), **kw)

    def test_exact_requires_boundary_zero(self):
        ex = example(5)
        with pytest.raises(ValueError):
            replace(ex, g=lambda x: np.ones_like(np.asarray(x, dtype=float)))

    def test_state_bound_removal(self):
        assert example(3).without_state_bound().y_min is None


class TestErrorNorms:
    def setup_method(self):
        self.problem = example(5)
        self.spatial, self.temporal = build_spatial(4), build_temporal(3, 3.0)
        X, Tt = np.meshgrid(self.spatial.xi_hat, self.temporal.tau_hat, indexing="ij")
        self.Y = self.problem.exact.y(X, Tt)
        self.U = self.problem.exact.u(X[:, :-1], Tt[:, :-1])

    def test_exact_samples(self):
        norms = error_norms(SolutionGrid(self.Y, self.U, 1.5), self.problem, self.spatial, self.temporal)
        assert norms == ErrorNorms(0.0, 0.0, 0.0, 0.0, 0.0)

    def test_single_perturbation(self):
        U = self.U.copy()
        U[2, 1] += 1e-3
        Y = self.Y.copy()
        Y[1, 3] += 5.0  # final-time column is not compared
        norms = error_norms(SolutionGrid(Y, U, 1.5), self.problem, self.spatial, self.temporal)
        assert norms.Einf_u == pytest.approx(1e-3)
        assert norms.E2_u == pytest.approx(1e-3)
        assert norms.E2_y == 0.0

    def test_no_exact_solution(self):
        with pytest.raises(ValueError, match="no_exact_solution"):
            error_norms(SolutionGrid(self.Y, self.U, 0.0), example(2), self.spatial, self.temporal)

    def test_first_example_small_grid(self):
        res = run(example(1), 10, 10)
        assert res.norms.E2_u <= 1e-3
        assert res.norms.Einf_u <= 5e-3


class TestConfig:
    def test_parse(self):
        values = parse_config(EXAMPLE2_CONFIG)
        assert values["beta"] == 0.5 and values["n"] == 40
        assert values["u_min"].startswith("max(")

    def test_matches_catalog(self):
        problem = problem_from_config(parse_config(EXAMPLE2_CONFIG))
        ref = example(2)
        x = np.linspace(0, 1, 9)[:, None]
        t = np.linspace(0, 30, 7)[None, :]
        for name in ("c", "f", "z", "u_min"):
            assert np.allclose(getattr(problem, name)(x, t), getattr(ref, name)(x, t), rtol=1e-15, atol=0)
        assert np.allclose(problem.g(x[:, 0]), ref.g(x[:, 0]))

    def test_same_objective_as_catalog(self):
        a = run(problem_from_config(parse_config(EXAMPLE2_CONFIG)), 8, 8)
        b = run(example(2), 8, 8)
        assert a.solution.J == pytest.approx(b.solution.J, rel=1e-12)

    def test_load(self, tmp_path):
        path = tmp_path / "p.cfg"
        path.write_text(EXAMPLE2_CONFIG)
        problem, values = load_config(path)
        assert isinstance(problem, OCProblem) and problem.name == "example2-config"

    def test_exact_solution_keys(self):
        text = EXAMPLE2_CONFIG.replace("g = 1", "g = x*(1 - x)") + "u_ex = 1\ny_ex = 0\nJ_ex = 2.5\n"
        problem = problem_from_config(parse_config(text))
        assert problem.exact.J == 2.5

    @pytest.mark.parametrize(
        "text,msg",
        [
            ("beta = 0.5\n", "missing required keys"),
            ("beta 0.5\n", "expected 'key = value'"),
            ("gamma = 1\n", "unknown key"),
            ("beta = 0.5\nbeta = 0.6\n", "duplicate key"),
        ],
    )
    def test_parse_errors(self, text, msg):
        with pytest.raises(ValueError, match=msg):
            parse_config(text)

    def test_initial_profile_must_not_depend_on_time(self):
        values = parse_config(EXAMPLE2_CONFIG.replace("g = 1", "g = t"))
        with pytest.raises(ValueError, match="depends on t"):
            problem_from_config(values)
