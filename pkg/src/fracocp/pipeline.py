"""End-to-end driver: grids, sampling, assembly, solve and error norms."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from fracocp.discretize import (
    ObjectiveForm,
    SemiDiscreteOCP,
    SpatialGrid,
    TemporalGrid,
    build_spatial,
    build_temporal,
    sample_problem,
)
from fracocp.problems import ErrorNorms, OCProblem, error_norms
from fracocp.qpform import SolutionGrid, StandardQP, assemble, extract_solution
from fracocp.qpsolve import SolveReport, SolverOptions, solve


@dataclass(frozen=True)
class RunResult:
    problem: OCProblem = field(repr=False)
    n: int
    m: int
    spatial: SpatialGrid = field(repr=False)
    temporal: TemporalGrid = field(repr=False)
    sd: SemiDiscreteOCP = field(repr=False)
    qp: StandardQP = field(repr=False)
    solution: SolutionGrid = field(repr=False)
    report: SolveReport
    state_bound: bool
    norms: ErrorNorms | None
    assembly_seconds: float
    solve_seconds: float


def run(
    problem: OCProblem,
    n: int,
    m: int,
    *,
    state_bound: bool | None = None,
    objective_form: ObjectiveForm | str = ObjectiveForm.CONSISTENT,
    options: SolverOptions | None = None,
) -> RunResult:
    """Discretize and solve *problem* on ``n`` space and ``m`` time nodes.

    The state bound is enforced whenever the problem declares one, unless
    *state_bound* says otherwise.
    """
    if state_bound is None:
        state_bound = problem.y_min is not None

    t0 = time.perf_counter()
    spatial = build_spatial(n)
    temporal = build_temporal(m, problem.T)
    sd = sample_problem(problem, spatial, temporal, objective_form=objective_form)
    qp = assemble(sd, with_state_bound=state_bound)
    t1 = time.perf_counter()
    v, report = solve(qp, options)
    t2 = time.perf_counter()

    solution = extract_solution(v, n, m, qp)
    norms = None
    if problem.exact is not None and np.all(np.isfinite(v)):
        norms = error_norms(solution, problem, spatial, temporal)
    return RunResult(
        problem, n, m, spatial, temporal, sd, qp, solution, report, state_bound, norms,
        t1 - t0, t2 - t1,
    )
