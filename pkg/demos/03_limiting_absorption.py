"""Limiting absorption for a single mode on the critical line.

At zeta = 1/2 + 0.7i the operator has continuous spectrum, so the solver
works at lambda - i eps and lets eps -> 0.  The rungs should converge, and
the limit should agree with the outgoing Green's function
(x< ^{1/2} I_nu)(x> ^{1/2} K_nu) applied to the source.  Needs mpmath.

    python3 demos/03_limiting_absorption.py
"""
import warnings

import mpmath
import numpy as np

from ccscatter.geometry import AlphaProfile, SpectralPoint
from ccscatter.solver import (Grid, ModelMetric, interior_source, limiting_absorption_sweep,
                              richardson)

zeta, k = 0.5 + 0.7j, 1.0
sp = SpectralPoint(zeta)
metric = ModelMetric(AlphaProfile.constant(1.0))


def oracle(ts, center=0.0, width=1.0):
    """Outgoing Green's function applied to the bump source (mpmath quadrature)."""
    nu = mpmath.mpc(zeta - 0.5)
    v1 = lambda s: mpmath.exp(s / 2) * mpmath.besseli(nu, k * mpmath.exp(s))
    v2 = lambda s: mpmath.exp(s / 2) * mpmath.besselk(nu, k * mpmath.exp(s))
    fb = lambda s: mpmath.exp(-1 / (1 - ((s - center) / width) ** 2))
    a, b = center - width, center + width
    out = []
    for t in ts:
        i1 = mpmath.quad(lambda s: v1(s) * mpmath.exp(-s) * fb(s), [a, min(t, b)]) if t > a else 0
        i2 = mpmath.quad(lambda s: v2(s) * mpmath.exp(-s) * fb(s), [max(t, a), b]) if t < b else 0
        out.append(complex(v2(t) * i1 + v1(t) * i2))
    return np.array(out)


# %% sweep on two nested grids
ladder = 0.1 * 0.5 ** np.arange(8)
sweeps = []
for n_t in (2049, 4097):
    g = Grid(1e-6, 40.0, n_t, 1, mode=k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sweeps.append(limiting_absorption_sweep(metric, g, sp, interior_source(g, angular=False), ladder))

print(" eps        weighted diff    radiation")
for d in sweeps[1].diagnostics:
    print(f"{d['epsilon']:.5f}   {d['weighted_diff'] if d['weighted_diff'] is not None else float('nan'):.3e}"
          f"      {d['radiation']:.3e}")

# %% compare with the exact outgoing solution
u = richardson(sweeps[0].extrapolated, sweeps[1].extrapolated)
g = u.grid
sel = np.arange(200, g.n_t - 200, 150)
ref = oracle(g.t[sel])
print("\nrelative error vs Green's function:",
      float(np.max(np.abs(u.values[sel, 0] - ref)) / np.max(np.abs(ref))))
