"""Command line interface: ``solve``, ``sweep`` and ``validate``."""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import hashlib
import io
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from fracocp import checks
from fracocp.discretize import ObjectiveForm
from fracocp.errors import FracOCPError
from fracocp.pipeline import RunResult, run
from fracocp.problems import OCProblem, example, load_config, problem_from_config
from fracocp.qpform import dump_qp
from fracocp.qpsolve import SolverOptions

logger = logging.getLogger(__name__)

#: the monomial oracle loses all accuracy beyond this many nodes
ORACLE_MAX_N = 12

NORM_KEYS = ("E_J", "E2_u", "Einf_u", "E2_y", "Einf_y")


class UsageError(Exception):
    pass


def _fmt(value: float) -> str:
    return f"{value:.17g}"


# {{{ problem selection


@dataclass(frozen=True)
class ProblemSpec:
    """Everything needed to rebuild a problem, picklable for worker processes."""

    example: int | None = None
    config: str | None = None
    beta: float | None = None
    r: float | None = None
    T: float | None = None
    state_bound: bool = False
    config_values: dict = field(default_factory=dict, compare=False, repr=False)

    def build(self) -> OCProblem:
        if self.example is not None:
            problem = example(self.example, beta=self.beta, r=self.r, T=self.T)
        else:
            values = dict(self.config_values)
            for key in ("beta", "r", "T"):
                if getattr(self, key) is not None:
                    values[key] = getattr(self, key)
            problem = problem_from_config(values)
        if self.state_bound and problem.y_min is None:
            # the state constraint of the third catalog example
            problem = replace(problem, y_min=example(3).y_min, exact=None)
        return problem

    def label(self) -> str:
        return f"example{self.example}" if self.example is not None else str(self.config)


def _problem_spec(args: argparse.Namespace) -> tuple[ProblemSpec, dict]:
    values: dict = {}
    config_hash = None
    if args.config is not None:
        path = Path(args.config)
        text = path.read_text()
        config_hash = hashlib.sha256(text.encode()).hexdigest()
        _, values = load_config(path)
    spec = ProblemSpec(
        example=args.example,
        config=args.config,
        beta=getattr(args, "beta", None),
        r=args.r,
        T=args.T,
        state_bound=args.state_bound,
        config_values=values,
    )
    return spec, {"config_hash": config_hash, **values}


def _solver_options(args: argparse.Namespace, config: dict) -> SolverOptions:
    defaults = SolverOptions()
    tol = args.tol if args.tol is not None else config.get("tol", defaults.tol)
    max_iter = args.max_iter if args.max_iter is not None else config.get("max_iter", defaults.max_iter)
    reg = config.get("reg", defaults.reg)
    return SolverOptions(tol=float(tol), max_iter=int(max_iter), reg=float(reg))


def _objective_form(args: argparse.Namespace, config: dict) -> ObjectiveForm:
    if args.objective_form is not None:
        return ObjectiveForm(args.objective_form)
    return ObjectiveForm(config.get("objective_form", ObjectiveForm.CONSISTENT.value))


# }}}


# {{{ solve


def _write_grid(result: RunResult, path: Path) -> None:
    """One row per collocation point, time outermost."""
    x = result.spatial.xi_hat
    t = result.temporal.tau_hat
    U, Y = result.solution.U, result.solution.Y
    with open(path, "w", newline="") as fh:
        fh.write("x,t,u,y\n")
        for j in range(result.m):
            for i in range(result.n):
                fh.write(f"{_fmt(x[i])},{_fmt(t[j])},{_fmt(U[i, j])},{_fmt(Y[i, j])}\n")


def _report_lines(result: RunResult, spec: ProblemSpec, extra: dict) -> list[tuple[str, str]]:
    problem = result.problem
    rep = result.report
    lines = [
        ("problem", spec.label()),
        ("config_hash", extra.get("config_hash") or "none"),
        ("n", str(result.n)),
        ("m", str(result.m)),
        ("beta", _fmt(problem.beta)),
        ("r", _fmt(problem.r)),
        ("T", _fmt(problem.T)),
        ("objective_form", result.sd.objective_form.value),
        ("state_bound", str(result.state_bound).lower()),
        ("J", _fmt(result.solution.J)),
        ("status", rep.status.value),
        ("iterations", str(rep.iterations)),
        ("primal_residual", _fmt(rep.primal_residual)),
        ("dual_residual", _fmt(rep.dual_residual)),
        ("complementarity", _fmt(rep.complementarity)),
        ("assembly_seconds", _fmt(result.assembly_seconds)),
        ("solve_seconds", _fmt(result.solve_seconds)),
    ]
    if result.norms is not None:
        lines += [(k, _fmt(v)) for k, v in result.norms.as_dict().items()]
    return lines


def summary_line(result: RunResult, label: str) -> str:
    rep = result.report
    text = (
        f"{label}: n={result.n} m={result.m} J={result.solution.J:.10g} "
        f"iterations={rep.iterations} status={rep.status.value} "
        f"seconds={result.solve_seconds:.3f}"
    )
    if result.norms is not None:
        text += " " + " ".join(f"{k}={v:.3e}" for k, v in result.norms.as_dict().items())
    return text


def cmd_solve(args: argparse.Namespace) -> int:
    spec, extra = _problem_spec(args)
    problem = spec.build()
    n = args.n if args.n is not None else int(extra.get("n", 10))
    m = args.m if args.m is not None else int(extra.get("m", 10))
    result = run(
        problem,
        n,
        m,
        objective_form=_objective_form(args, extra),
        options=_solver_options(args, extra),
    )
    print(summary_line(result, spec.label()))

    if args.dump_qp is not None:
        dump_qp(result.qp, args.dump_qp)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        grid_path, report_path = out / "grid.csv", out / "report.txt"
        _write_grid(result, grid_path)
        lines = _report_lines(result, spec, extra)
        lines += [
            ("grid_csv", str(grid_path)),
            ("report", str(report_path)),
            ("timestamp", datetime.datetime.now(datetime.timezone.utc).isoformat()),
        ]
        report_path.write_text("".join(f"{k}: {v}\n" for k, v in lines))

    if not result.report.optimal:
        print(f"error: solver finished with status {result.report.status.value}", file=sys.stderr)
        return 1
    return 0


# }}}


# {{{ sweep


def parse_sizes(text: str) -> list[int]:
    """``"10,20,30"`` or ``"3:10"`` (inclusive) or ``"10:60:10"``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError
            sizes = list(range(lo, hi + 1, step))
        else:
            sizes = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot read sizes {text!r}") from None
    if not sizes:
        raise UsageError(f"empty size range {text!r}")
    if any(s < 2 for s in sizes):
        raise UsageError("sizes must be at least 2")
    return sizes


@dataclass(frozen=True)
class SweepTask:
    spec: ProblemSpec
    n: int
    m: int
    objective_form: str
    options: SolverOptions


def _run_task(task: SweepTask) -> dict:
    row: dict = {"n": task.n, "m": task.m}
    try:
        problem = task.spec.build()
        row["beta"] = problem.beta
        result = run(
            problem, task.n, task.m, objective_form=task.objective_form, options=task.options
        )
    except (FracOCPError, ValueError, ArithmeticError, MemoryError) as exc:
        row["status"] = f"error: {exc}".replace(",", ";")
        return row
    row["cpu"] = result.solve_seconds
    row["J"] = result.solution.J
    row["status"] = result.report.status.value
    if result.norms is not None:
        row.update(result.norms.as_dict())
    return row


def cmd_sweep(args: argparse.Namespace) -> int:
    sizes = parse_sizes(args.sizes)
    m_sizes = parse_sizes(args.m_sizes) if args.m_sizes else sizes
    if len(m_sizes) != len(sizes):
        raise UsageError("--m-sizes must list as many entries as --sizes")
    betas = [float(b) for b in args.betas.split(",")] if args.betas else [args.beta]

    spec, extra = _problem_spec(args)
    form = _objective_form(args, extra).value
    options = _solver_options(args, extra)
    tasks = [
        SweepTask(replace(spec, beta=beta), n, m, form, options)
        for beta in betas
        for n, m in zip(sizes, m_sizes)
    ]

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_run_task, tasks))
    else:
        rows = [_run_task(t) for t in tasks]

    has_exact = spec.build().exact is not None
    metrics = list(NORM_KEYS) if has_exact else ["J"]
    columns = ["n", "m", "beta"] + ([] if args.no_cpu else ["cpu"]) + metrics + ["status"]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for col in columns:
            value = row.get(col, "")
            if col == "beta":
                value = repr(value) if isinstance(value, float) else value
            cells.append(_fmt(value) if isinstance(value, float) else value)
        writer.writerow(cells)

    if args.out is not None:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    failures = sum(1 for r in rows if r.get("status") != "optimal")
    if failures:
        print(f"{failures} of {len(rows)} runs did not reach optimality", file=sys.stderr)
    return 0


# }}}


# {{{ validate


def _write_matrix_csv(path: Path, M: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def cmd_validate(args: argparse.Namespace) -> int:
    if not args.quadrature_only and args.n > ORACLE_MAX_N:
        raise UsageError(
            f"degree_overflow: the monomial oracle needs n <= {ORACLE_MAX_N}, got {args.n}"
        )

    results = checks.quadrature_checks(args.n)
    if not args.quadrature_only:
        results += checks.operator_checks(args.n, args.beta)
        if args.dump is not None:
            out = Path(args.dump)
            out.mkdir(parents=True, exist_ok=True)
            pair = checks.pair_for(args.n, args.beta)
            _write_matrix_csv(out / "d_plus.csv", pair.d_plus)
            _write_matrix_csv(out / "d_minus.csv", pair.d_minus)

    failed = [c for c in results if not c.passed]
    for c in results:
        print(c.line())
    if failed:
        print("failed: " + ", ".join(c.name for c in failed), file=sys.stderr)
        return 1
    return 0


# }}}


def _add_problem_args(p: argparse.ArgumentParser, *, beta: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", type=int, choices=range(1, 6), metavar="N", help="catalog problem 1-5")
    src.add_argument("--config", metavar="PATH", help="problem config file")
    if beta:
        p.add_argument("--beta", type=float, help="override beta")
    p.add_argument("--r", type=float, help="override r")
    p.add_argument("--T", type=float, help="override the horizon")
    p.add_argument("--tol", type=float, help="solver tolerance")
    p.add_argument("--max-iter", type=int, help="solver iteration cap")
    p.add_argument(
        "--objective-form",
        choices=[f.value for f in ObjectiveForm],
        help="spatial weights of the objective",
    )
    p.add_argument(
        "--state-bound",
        action="store_true",
        help="enforce y >= y_min, adding the third example's bound when the problem has none",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracocp",
        description="Optimal control of two-sided space-fractional diffusion by pseudospectral collocation.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem")
    _add_problem_args(p)
    p.add_argument("--n", type=int, help="spatial nodes (default 10)")
    p.add_argument("--m", type=int, help="time nodes (default 10)")
    p.add_argument("--out", metavar="DIR", help="write grid.csv and report.txt here")
    p.add_argument("--dump-qp", metavar="DIR", help="write the assembled QP as text files")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a range of grid sizes")
    _add_problem_args(p)
    p.add_argument("--sizes", required=True, help="n values: '10,20,30', '3:10' or '10:60:10'")
    p.add_argument("--m-sizes", help="m values in the same form (default: equal to n)")
    p.add_argument("--betas", help="comma-separated beta values, one sweep each")
    p.add_argument("--jobs", type=int, default=1, help="concurrent solves")
    p.add_argument("--no-cpu", action="store_true", help="omit the timing column")
    p.add_argument("--out", metavar="FILE", help="CSV destination (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check quadrature and differentiation matrices")
    p.add_argument("--n", type=int, default=8, help="node count (default 8, at most 12 for the oracle)")
    p.add_argument("--beta", type=float, default=0.5, help="fractional parameter (default 0.5)")
    p.add_argument("--quadrature-only", action="store_true", help="skip the matrix oracle checks")
    p.add_argument("--dump", metavar="DIR", help="write d_plus.csv and d_minus.csv here")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (FracOCPError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
