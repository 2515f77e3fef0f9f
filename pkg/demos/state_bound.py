"""Effect of the extra state bound on the third catalog problem.

Solves once with and once without ``y >= y_min`` and reports how far the
unconstrained state dips below the bound.
"""

from __future__ import annotations

import numpy as np

from fracocp import example, run

problem = example(3)
for bounded in (False, True):
    res = run(problem, 12, 12, state_bound=bounded)
    Y_min = res.sd.Y_min
    gap = float(np.min(res.solution.Y - Y_min))
    print(f"state bound {'on ' if bounded else 'off'}: J={res.solution.J:.8f} "
          f"min(y - y_min)={gap:+.3e} min(u)={res.solution.U.min():.6f} "
          f"iterations={res.report.iterations} status={res.report.status.value}")
