"""The crossover: oscillation on W, decay off W, in one 2-D solve.

alpha(y) = 1 + 0.3 cos y, zeta = 1/2 + 0.6i, grid 2048 x 128 on
[1e-6, 12] x S^1, eight limiting-absorption rungs.  At each boundary
point the solution near x = 0 is fitted to x^{p + iq}; on W we expect
p = 1/2 with q != 0, off W p = Re sigma and q = 0.  Points within 0.5 of a
crossover are masked.  Takes about a minute.

    python3 demos/04_crossover.py [n_t n_y]
"""
import sys
import time

import numpy as np

from ccscatter.acceptance import COS, crossover_setup
from ccscatter.geometry import build_indicial_field
from ccscatter.scattering import decay_exponent_map
from ccscatter.solver import radiation_diagnostic

n_t, n_y = (int(sys.argv[1]), int(sys.argv[2])) if len(sys.argv) > 2 else (2048, 128)

# %% solve
t0 = time.perf_counter()
s = crossover_setup(n_t, n_y)
print(f"solved {n_t} x {n_y}, 8 rungs + incoming field in {time.perf_counter() - t0:.1f} s")
lap = s["lap"]
print("weighted differences:", " ".join(f"{d:.2e}" for d in lap.weighted_diffs))
out = radiation_diagnostic(lap.final, s["metric"], s["ext"], s["rhs"])
inc = radiation_diagnostic(s["incoming"], s["metric"], s["ext"], s["rhs"])
print(f"radiation residual: outgoing {out:.2e}, incoming {inc:.2e}, ratio {out / inc:.1e}")

# %% exponent map
m = decay_exponent_map(lap.final, build_indicial_field(s["spectral"], COS, s["grid"].y))
print("\n    y     in W      p        q     Re sigma  verdict")
for r in m.rows()[:: max(1, n_y // 32)]:
    print(f"{r[0]:6.3f}   {'yes' if r[1] else 'no ':3s}  {r[2]:7.4f}  {r[3]:7.4f}  {r[4]:7.4f}   {r[6]}")
for v in ("oscillatory", "decaying", "masked"):
    print(f"{v:12s}: {int(np.sum(m.verdict == v))}")
