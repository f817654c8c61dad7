"""Indicial roots, the scattering set W and the crossover points.

For alpha(y) = 1 + 0.3 cos y and zeta = 1/2 + 0.6i the spectral parameter
lambda = alpha0^2 zeta (1 - zeta) sits above the threshold alpha^2/4 on part
of the circle only.  There sigma(zeta, y) has real part 1/2 (oscillation);
elsewhere it is real and > 1/2 (decay).  The switch happens at two points.

    python3 demos/01_boundary_geometry.py
"""
import numpy as np

from ccscatter.geometry import (AlphaProfile, SpectralPoint, build_indicial_field,
                                crossover_regular_check, gamma_set_test, scattering_regions)

# %% setup
profile = AlphaProfile([(0, 1.0), (1, 0.3)])
sp = SpectralPoint.for_profile(0.5 + 0.6j, profile)
print(f"alpha0 = {sp.alpha0:.3f}   lambda = {sp.lam.real:.6f}")

# %% the scattering set and its endpoints
reg = scattering_regions(sp.lam.real, profile)
print("W arcs       :", [(round(a, 6), round(b, 6)) for a, b in reg.scattering_arcs])
print("crossovers   :", [round(p, 6) for p in reg.crossover_points])
print("regular      :", crossover_regular_check(sp.lam.real, profile))

# %% sigma along the circle
ind = build_indicial_field(sp, profile, np.linspace(0, 2 * np.pi, 13))
print("\n    y      alpha    Re sigma   Im sigma   in W")
for y, a, s, w in zip(ind.y, ind.alpha, ind.sigma, reg.contains(ind.y)):
    print(f"{y:6.3f}  {a:7.4f}  {s.real:9.5f}  {s.imag:9.5f}   {'yes' if w else 'no'}")
print("max indicial defect:", float(ind.indicial_defect().max()))

# %% the Gamma set: sigma hitting (n - k)/2 means a resonance of the expansion
for z in (0.5 + 0.6j, 1.0, 0.0):
    hit, wit = gamma_set_test(SpectralPoint.for_profile(z, profile), profile)
    print(f"zeta = {z}: on Gamma set = {hit}", wit[:2])
