"""Objective value of the long-horizon problem on growing grids.

Equivalent to ``fracocp sweep --config demos/example2.cfg --sizes 10:40:10``.
"""

from __future__ import annotations

from pathlib import Path

from fracocp.problems import load_config
from fracocp import run

problem, _ = load_config(Path(__file__).with_name("example2.cfg"))
for n in (10, 20, 30, 40):
    res = run(problem, n, n)
    print(f"n=m={n:3d} J={res.solution.J:.6f} iterations={res.report.iterations} "
          f"seconds={res.assembly_seconds + res.solve_seconds:.2f}")
