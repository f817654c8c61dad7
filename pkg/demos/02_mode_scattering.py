"""Per-mode scattering coefficients against the exact symbol.

With constant alpha every Fourier mode e^{imy} decouples into a Bessel
equation.  Solving the Poisson problem numerically and reading the ratio of
the x^sigma and x^{n-sigma} coefficients gives S(m), which should equal

    2^{n - 2 zeta} Gamma(n/2 - zeta) / Gamma(zeta - n/2) |m|^{2 zeta - n}.

    python3 demos/02_mode_scattering.py
"""
import warnings

import numpy as np

from ccscatter.geometry import SpectralPoint
from ccscatter.scattering import estimate_normalization, mode_scattering, principal_symbol

sp = SpectralPoint(0.75)

# %% the table
print(" m        S(m) numeric         symbol            rel. error")
for m in range(1, 9):
    S = mode_scattering(m, sp)
    sym = principal_symbol(sp, 1.0, m)
    print(f"{m:2d}  {S.real:+.12f}  {sym.real:+.12f}  {abs(S - sym) / abs(sym):.2e}")

# %% m = 0 is not covered by the symbol
with warnings.catch_warnings(record=True) as w:
    warnings.simplefilter("always")
    mode_scattering(0, sp)
    print("\nm = 0:", w[0].message if w else "no warning")

# %% the normalization constant from the kernel boundary limit
mean, spread, vals = estimate_normalization(SpectralPoint(1.2), modes=range(1, 4))
print(f"\nnormalization at zeta = 1.2: {mean.real:.8f} (spread {spread:.1e}); "
      f"1/(2 sigma - n) = {1 / (2 * 1.2 - 1):.8f}")
