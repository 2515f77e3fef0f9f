"""Spectral convergence on the manufactured-solution problem.

Prints the error norms against the exact state, control and objective as the
grid is refined, for three fractional orders.
"""

from __future__ import annotations

from fracocp import example, run

print(f"{'beta':>5} {'n=m':>4} {'E_J':>10} {'E2_u':>10} {'E2_y':>10} {'Einf_y':>10} {'iters':>6}")
for beta in (0.1, 0.5, 0.9):
    problem = example(5, beta=beta)
    for n in range(3, 11):
        res = run(problem, n, n)
        e = res.norms
        print(f"{beta:5.1f} {n:4d} {e.E_J:10.2e} {e.E2_u:10.2e} {e.E2_y:10.2e} {e.Einf_y:10.2e} "
              f"{res.report.iterations:6d}")
    print()
