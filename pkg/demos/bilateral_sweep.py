"""Control errors for the problem with an active control bound.

The exact control has kinks where the bound becomes active, so the errors
decay algebraically rather than spectrally.
"""

from __future__ import annotations

from fracocp import example, run

problem = example(1)
print(f"{'n=m':>4} {'J':>12} {'E_J':>10} {'E2_u':>10} {'Einf_u':>10} {'seconds':>8}")
for n in (6, 10, 14, 20, 26, 30):
    res = run(problem, n, n)
    e = res.norms
    secs = res.assembly_seconds + res.solve_seconds
    print(f"{n:4d} {res.solution.J:12.8f} {e.E_J:10.2e} {e.E2_u:10.2e} {e.Einf_u:10.2e} {secs:8.2f}")
