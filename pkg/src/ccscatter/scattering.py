"""Scattering data from solved fields.

On the scattering set W a Poisson field behaves like x^{n-sigma} f + x^sigma f'
at the boundary; f -> f' is the scattering matrix.  In the constant-alpha
model each Fourier mode decouples and f'/f is a Gamma-function ratio, which is
also the principal symbol of the scattering matrix for variable alpha.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .errors import ConfigError, DegenerateFit, PoleError
from .expansion import Tangential, fit_exponent, solve_away
from .geometry import (AlphaProfile, BoundaryRegions, IndicialField, SpectralPoint,
                       indicial_root, scattering_regions)
from .solver import (DiscreteField, Grid, ModelMetric, PoissonResult, build_system,
                     limiting_absorption_sweep, poisson_solve, richardson, solve)

__all__ = [
    "ScatteringData",
    "ExponentMap",
    "extract_outgoing",
    "principal_symbol",
    "bessel_coefficient",
    "mode_scattering",
    "decay_exponent_map",
    "estimate_normalization",
    "VERDICTS",
]

VERDICTS = ("masked", "degenerate", "oscillatory", "decaying", "mismatch")


@dataclass
class ScatteringData:
    y: np.ndarray
    f: np.ndarray
    f_out: np.ndarray  # NaN outside W and inside the collar mask
    in_w: np.ndarray
    masked: np.ndarray
    residuals: np.ndarray
    modes: dict = field(default_factory=dict)
    normalization: complex | None = None

    @property
    def ratio(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.f_out / self.f


@dataclass
class ExponentMap:
    y: np.ndarray
    p: np.ndarray
    q: np.ndarray
    sigma: np.ndarray
    in_w: np.ndarray
    verdict: np.ndarray

    def rows(self):
        """(y, in_W, p, q, re_sigma, im_sigma, verdict) rows."""
        return [(float(y), bool(w), float(p), float(q), float(s.real), float(s.imag), str(v))
                for y, w, p, q, s, v in zip(self.y, self.in_w, self.p, self.q, self.sigma, self.verdict)]

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("y,in_W,p,q,re_sigma,im_sigma,verdict\n")
            for r in self.rows():
                fh.write("%.17g,%d,%.17g,%.17g,%.17g,%.17g,%s\n" % (r[0], r[1], *r[2:6], r[6]))


def _regions(spectral: SpectralPoint, profile: AlphaProfile) -> BoundaryRegions | None:
    if spectral.on_critical_line:
        return scattering_regions(spectral.lam.real, profile, spectral.n)
    return None


def _collar(regions, y, width):
    if regions is None or not regions.crossover_points:
        return np.zeros(len(y), bool)
    return regions.distance_to_crossover(y) < width


# ---------------------------------------------------------------------------


def principal_symbol(spectral: SpectralPoint, alpha, xi_norm) -> complex:
    """2^{n-2sigma} Gamma(n/2-sigma)/Gamma(sigma-n/2) |xi|^{2sigma-n}."""
    n = spectral.n
    s = complex(indicial_root(spectral, alpha))
    nu = s - n / 2
    if abs(nu - round(nu.real)) < 1e-8:
        raise PoleError(f"sigma - n/2 = {nu} is (within 1e-8 of) an integer")
    if xi_norm <= 0:
        raise ValueError("xi_norm must be positive")
    lg = loggamma(complex(-nu)) - loggamma(complex(nu))
    return complex(np.exp(lg + 2 * nu * np.log(xi_norm / 2)))


def bessel_coefficient(nu: complex, k: float) -> complex:
    """(k/2)^{2 nu} Gamma(-nu)/Gamma(nu): ratio of the x^{1/2+nu} and x^{1/2-nu}
    coefficients of x^{1/2} K_nu(kx)."""
    return complex(np.exp(2 * nu * np.log(k / 2) + loggamma(complex(-nu)) - loggamma(complex(nu))))


def _two_branch_fit(x, r, e_out, e_in, extra=()):
    """Least squares r ~ a x^{e_out} + b x^{e_in} + sum c_j x^{extra_j}."""
    cols = [x**e_out, x**e_in] + [x**e for e in extra]
    A = np.stack(cols, axis=1)
    scale = np.max(np.abs(A), axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, r, rcond=None)
    coef = coef / scale
    res = np.linalg.norm(A @ coef - r) / max(np.linalg.norm(r), 1e-300)
    return coef, res


def extract_outgoing(result: PoissonResult, spectral: SpectralPoint | None = None,
                     regions: BoundaryRegions | None = None, window=(1e-5, 1e-2),
                     mask_width: float = 0.5) -> ScatteringData:
    """Fit u - u1 ~ f' x^sigma at each boundary point of W.

    u1 is the evaluated incoming expansion x^{n-sigma}(f + ...).  The fit uses
    x^sigma, x^{sigma+2} and x^{n-sigma} (the last absorbs any leakage of the
    incoming branch); f' is the x^sigma coefficient.  Points within
    ``mask_width`` of the crossover set are masked.  Off the critical line
    (W empty, S the continuation) every boundary point is reported.
    """
    u = result.field
    g = u.grid
    spectral = spectral or u.spectral
    lead = result.leading
    f = lead.coefficient(0, 0)
    x = g.x
    sel = (x >= window[0]) & (x <= window[1])
    if sel.sum() < 8 or np.log10(x[sel].max() / x[sel].min()) < 1:
        raise DegenerateFit("fit window is not resolved by the grid")
    xs = x[sel]
    r = u.values[sel] - lead.evaluate(xs)
    if g.mode is not None:
        sig = np.atleast_1d(indicial_root(spectral, lead.calculus.alpha))
        y = np.zeros(1)
        in_w = np.ones(1, bool)
        masked = np.zeros(1, bool)
    else:
        y = g.y
        profile = lead.calculus.profile
        sig = np.asarray(indicial_root(spectral, profile(y)), dtype=complex)
        regions = regions if regions is not None else _regions(spectral, profile)
        # off the critical line S is the continuation: report it everywhere
        in_w = regions.contains(y) if regions is not None else np.ones(len(y), bool)
        masked = _collar(regions, y, mask_width)
    n = spectral.n
    f_out = np.full(len(y), np.nan + 0j)
    res = np.full(len(y), np.nan)
    for j in range(len(y)):
        if not in_w[j] or masked[j]:
            continue
        if abs(f[j]) == 0 and np.max(np.abs(r[:, j])) == 0:
            f_out[j], res[j] = 0.0, 0.0
            continue
        coef, rr = _two_branch_fit(xs, r[:, j], sig[j], n - sig[j], (sig[j] + 2,))
        f_out[j], res[j] = coef[0], rr
    return ScatteringData(y, np.asarray(f), f_out, in_w, masked, res)


def _mode_field(m, spectral, circumference, profile, h0, x_min, n_t, N, eps_ladder):
    k = 2 * np.pi * abs(m) / circumference
    metric = ModelMetric(profile, h0, spectral.n)
    kk = max(k / np.sqrt(h0), 1e-12)
    x_max = 40.0 / kk if k > 0 else 10.0
    x_max = max(x_max, 1e3 * x_min)
    fields = []
    for nt in (n_t, 2 * (n_t - 1) + 1):
        grid = Grid(x_min, x_max, nt, 1, mode=k)
        fields.append(poisson_solve(1.0, spectral, metric, grid, N, eps_ladder=eps_ladder))
    return fields, k


def mode_scattering(m: int, spectral: SpectralPoint, circumference: float = 2 * np.pi,
                    profile: AlphaProfile | None = None, h0: float = 1.0, x_min: float = 1e-6,
                    n_t: int = 2**14 + 1, N: int = 6, window=None, eps_ladder=None,
                    details: bool = False):
    """S_m = f'/f for the Fourier mode e^{2 pi i m y / L} (constant alpha).

    Two nested per-mode Poisson solves are Richardson-extrapolated; u - u1 is
    then fitted against the exact sigma-branch Frobenius series plus the
    n - sigma branch.  m = 0 has no Bessel scale and its coefficient depends
    on the x_max cap; it is returned with a warning.
    """
    profile = profile or AlphaProfile.constant(spectral.alpha0, circumference)
    if not profile.is_constant:
        raise ConfigError("mode_scattering needs a constant alpha profile")
    if m == 0:
        warnings.warn("m = 0: coefficient set by the x_max cap, not universal", stacklevel=2)
    fields, k = _mode_field(m, spectral, circumference, profile, h0, x_min, n_t, N, eps_ladder)
    u = richardson(fields[0].field, fields[1].field)
    lead = fields[0].leading
    calc = lead.calculus
    vs = solve_away(np.ones(1), spectral, calc, "sigma", 40)
    x = u.grid.x
    kk = max(k / np.sqrt(h0), 1e-12)
    lo, hi = window if window is not None else (10 * x_min, min(1e-2 / kk, 1e-2 * x.max()))
    sel = (x >= lo) & (x <= hi)
    xs = x[sel]
    A = np.column_stack([vs.evaluate(xs)[:, 0], lead.evaluate(xs)[:, 0]])
    r = u.values[sel, 0] - lead.evaluate(xs)[:, 0]
    sc = np.max(np.abs(A), axis=0)
    coef, *_ = np.linalg.lstsq(A / sc, r, rcond=None)
    coef = coef / sc
    S = complex(coef[0])
    if details:
        return S, {"k": k, "leakage": complex(coef[1]), "residual":
                   float(np.linalg.norm(A @ coef - r) / np.linalg.norm(r))}
    return S


def decay_exponent_map(u: DiscreteField, indicial: IndicialField, window=(1e-5, 1e-2),
                       regions: BoundaryRegions | None = None, mask_width: float = 0.5,
                       tol: float = 0.05) -> ExponentMap:
    """Fit |u| ~ x^p, arg u ~ q log x per boundary point and classify.

    oscillatory: |p - n/2| < tol and |q| > max(|Im sigma|/2, tol)
    decaying:    |p - Re sigma| < tol and |q| <= tol
    masked: within ``mask_width`` of the crossover set; degenerate: fit failed.
    """
    g = u.grid
    if g.mode is not None:
        raise ConfigError("decay_exponent_map needs a 2-D field")
    sp_ = indicial.spectral
    sigma = np.asarray(indicial_root(sp_, indicial.profile(g.y)), dtype=complex)
    if regions is None:
        regions = _regions(sp_, indicial.profile)
    in_w = regions.contains(g.y) if regions is not None else np.zeros(g.n_y, bool)
    masked = _collar(regions, g.y, mask_width)
    n = sp_.n
    p = np.full(g.n_y, np.nan)
    q = np.full(g.n_y, np.nan)
    verdict = np.empty(g.n_y, dtype=object)
    try:
        fit = fit_exponent(g.x, u.values, window=window)
        p, q = np.asarray(fit.p, float), np.asarray(fit.q, float)
        ok = np.isfinite(p) & np.isfinite(q)
    except DegenerateFit:
        ok = np.zeros(g.n_y, bool)
    for j in range(g.n_y):
        if masked[j]:
            verdict[j] = "masked"
        elif not ok[j]:
            verdict[j] = "degenerate"
        elif abs(p[j] - n / 2) < tol and abs(q[j]) > max(abs(sigma[j].imag) / 2, tol):
            verdict[j] = "oscillatory"
        elif abs(p[j] - sigma[j].real) < tol and abs(q[j]) <= tol:
            verdict[j] = "decaying"
        else:
            verdict[j] = "mismatch"
    return ExponentMap(g.y, p, q, sigma, in_w, verdict.astype(str))


def estimate_normalization(spectral: SpectralPoint, modes=range(1, 7),
                           circumference: float = 2 * np.pi, h0: float = 1.0,
                           x_min: float = 1e-8, x_src: float = 1e-5, n_t: int = 4097):
    """B^(sigma) = b0 / (f sqrt(h0)) from the boundary limit of the resolvent kernel.

    Per mode, a unit point source at x' (a discrete delta for the Riemannian
    volume) gives u(x) = R(x, x'); for x' < x << 1 this is x'^sigma B^ x^{n-sigma}
    up to O(x'^2) and the x^sigma branch, which is fitted alongside.  Returns
    (mean, relative spread, per-mode values).
    """
    if spectral.on_critical_line:
        raise ConfigError("use Re zeta > n/2 (B is meromorphic; evaluate off the line)")
    profile = AlphaProfile.constant(spectral.alpha0, circumference)
    metric = ModelMetric(profile, h0, spectral.n)
    n = spectral.n
    vals = []
    for m in modes:
        k = 2 * np.pi * abs(m) / circumference
        kk = k / np.sqrt(h0)
        grid = Grid(x_min, 40.0 / kk, n_t, 1, mode=k)
        i0 = int(np.argmin(np.abs(grid.x - x_src)))
        x0 = grid.x[i0]
        vol = grid.dt * np.exp(-n * grid.t[i0]) * np.sqrt(h0) / spectral.alpha0
        rhs = np.zeros(grid.shape, complex)
        rhs[i0, 0] = 1.0 / vol
        fields = []
        for gr in (grid, grid.refined()):
            r2 = np.zeros(gr.shape, complex)
            r2[int(np.argmin(np.abs(gr.x - x0))), 0] = 1.0 / (vol / (gr.n_t - 1) * (grid.n_t - 1))
            fields.append(solve(build_system(metric, gr, spectral, 0.0, r2)))
        u = richardson(*fields)
        calc = Tangential.for_mode(profile, k, h0)
        v_in = solve_away(np.ones(1), spectral, calc, "n_minus_sigma", 40)
        v_out = solve_away(np.ones(1), spectral, calc, "sigma", 40)
        x = grid.x
        sel = (x > 30 * x0) & (x < min(1e-1 / kk, 1e-1))
        A = np.column_stack([v_in.evaluate(x[sel])[:, 0], v_out.evaluate(x[sel])[:, 0]])
        sc = np.max(np.abs(A), axis=0)
        coef, *_ = np.linalg.lstsq(A / sc, u.values[sel, 0], rcond=None)
        b0 = coef[0] / sc[0]
        # divide by the source's own sigma-branch amplitude x'^sigma (1 + O(x'^2))
        src = v_out.evaluate(np.array([x0]))[0, 0]
        vals.append(complex(b0 / src / np.sqrt(h0)))
    vals = np.array(vals)
    mean = complex(np.mean(vals))
    spread = float(np.max(np.abs(vals - mean)) / abs(mean))
    return mean, spread, vals
