"""Finite-volume solver for Delta - lambda_eps on [x_min, x_max] x S^1.

Coordinates are t = log x (uniform) and y (uniform, periodic).  With the
weight w = e^{-nt}/alpha the operator is in divergence form,

    w Delta u = -alpha d_t(e^{-nt} d_t u) - (e^{(2-n)t}/h0) d_y(alpha^{-1} d_y u),

so the flux discretization below is symmetric for the bilinear pairing
<u, v> = sum u v dg with dg = e^{-nt} dt sqrt(h0) dy / alpha (the Riemannian
volume).  At t_min a half-cell row imposes the Robin condition
(d_t - sigma~) u = 0 through the boundary flux; t_max is homogeneous Dirichlet.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.special import expit

from .errors import ConfigError, NonConvergence
from .expansion import PhgExpansion, Tangential, apply_operator, solve_away
from .geometry import (AlphaProfile, SigmaExtension, SpectralPoint, indicial_root,
                       scattering_regions)

__all__ = [
    "ModelMetric",
    "Grid",
    "DiscreteField",
    "LinearSystem",
    "build_system",
    "solve",
    "bilinear",
    "weighted_norm",
    "radiation_diagnostic",
    "energy_ratio",
    "LapResult",
    "limiting_absorption_sweep",
    "PoissonResult",
    "poisson_solve",
    "collar_cutoff",
    "richardson",
    "interior_source",
]

DELTA = 0.1
EPS_W = 0.05


@dataclass(frozen=True)
class ModelMetric:
    """g = dx^2/(alpha^2 x^2) + h0 dy^2 / x^2 (normal form, h independent of x)."""

    profile: AlphaProfile
    h0: float = 1.0
    n: int = 1
    normal_form: bool = True

    def __post_init__(self):
        if not self.h0 > 0:
            raise ConfigError("h0 must be positive")
        if self.n < 1:
            raise ConfigError("n must be >= 1")


@dataclass(frozen=True)
class Grid:
    """Uniform t = log x nodes (all unknowns) times uniform y nodes.

    ``mode`` (a wavenumber k) selects the per-mode reduction u = v(t) e^{iky}
    with a single y node.
    """

    x_min: float
    x_max: float
    n_t: int
    n_y: int = 1
    circumference: float = 2 * np.pi
    mode: float | None = None

    def __post_init__(self):
        if not (self.x_min > 0 and self.x_max > self.x_min):
            raise ConfigError("need 0 < x_min < x_max")
        if np.log10(self.x_max / self.x_min) < 2:
            raise ConfigError("x range must span at least two decades")
        if self.n_t < 16:
            raise ConfigError("n_t must be >= 16")
        if self.mode is None and self.n_y < 16:
            raise ConfigError("n_y must be >= 16 (or give a mode for the per-mode reduction)")
        if self.mode is not None and self.n_y != 1:
            raise ConfigError("per-mode grids have n_y = 1")

    @property
    def t(self):
        return np.linspace(np.log(self.x_min), np.log(self.x_max), self.n_t)

    @property
    def x(self):
        return np.exp(self.t)

    @property
    def dt(self) -> float:
        return (np.log(self.x_max) - np.log(self.x_min)) / (self.n_t - 1)

    @property
    def y(self):
        if self.mode is not None:
            return np.zeros(1)
        return np.arange(self.n_y) * (self.circumference / self.n_y)

    @property
    def dy(self) -> float:
        return self.circumference / self.n_y

    @property
    def shape(self):
        return (self.n_t, self.n_y)

    def refined(self, factor: int = 2) -> "Grid":
        """Same domain with the t spacing divided by ``factor`` (nodes nest)."""
        return Grid(self.x_min, self.x_max, factor * (self.n_t - 1) + 1, self.n_y,
                    self.circumference, self.mode)


@dataclass(frozen=True)
class DiscreteField:
    values: np.ndarray
    grid: Grid
    spectral: SpectralPoint
    epsilon: float
    profile_token: str
    bc: str = "robin"
    radiation: str = "outgoing"
    residual: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite field values")
        object.__setattr__(self, "values", v)

    @property
    def x(self):
        return self.grid.x

    def metadata(self) -> dict:
        g = self.grid
        return {
            "zeta": [self.spectral.zeta.real, self.spectral.zeta.imag],
            "n": self.spectral.n,
            "alpha0": self.spectral.alpha0,
            "epsilon": self.epsilon,
            "profile": self.profile_token,
            "bc": self.bc,
            "radiation": self.radiation,
            "grid": {"x_min": g.x_min, "x_max": g.x_max, "n_t": g.n_t, "n_y": g.n_y,
                     "circumference": g.circumference, "mode": g.mode},
            "residual": self.residual,
        }

    def rows(self):
        """(t_index, y_index, re, im) rows of the field dump format."""
        i, j = np.indices(self.values.shape)
        v = self.values
        return np.column_stack([i.ravel(), j.ravel(), v.real.ravel(), v.imag.ravel()])

    def save_csv(self, path):
        np.savetxt(path, self.rows(), delimiter=",", fmt=["%d", "%d", "%.17g", "%.17g"],
                   header=json.dumps(self.metadata()), comments="# ")

    def replace(self, values) -> "DiscreteField":
        return DiscreteField(values, self.grid, self.spectral, self.epsilon, self.profile_token,
                             self.bc, self.radiation, None)


@dataclass(frozen=True)
class LinearSystem:
    matrix: sp.csc_matrix
    rhs: np.ndarray
    grid: Grid
    metric: ModelMetric
    spectral: SpectralPoint
    epsilon: float
    lam: complex
    bc: str
    radiation: str
    robin: np.ndarray | None
    boundary_rows: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def interior_source(grid: Grid, center: float = 1.0, width: float = 1.0, angular: bool = True):
    """Smooth compactly supported rhs: bump in t = log x around log(center) of
    half-width ``width``, times 1 + 0.3 sin y on 2-D grids (if ``angular``)."""
    c = np.log(center)
    if c - width <= grid.t[3] or c + width >= grid.t[-4]:
        raise ConfigError("source support must lie inside the grid")
    s = (grid.t - c) / width
    inside = np.abs(s) < 1
    b = np.where(inside, np.exp(-1 / (1 - np.where(inside, s * s, 0.0))), 0.0)
    ang = np.ones(grid.n_y)
    if angular and grid.mode is None:
        ang = 1 + 0.3 * np.sin(grid.y)
    return (b[:, None] * ang[None, :]).astype(complex)


# ---------------------------------------------------------------------------
# assembly


def _volume(grid: Grid, metric: ModelMetric):
    """Quadrature weights dg at the nodes (trapezoid in t)."""
    om = np.full(grid.n_t, grid.dt)
    om[[0, -1]] = grid.dt / 2
    if grid.mode is not None:
        a = np.full(1, metric.profile.alpha_min)
        wy = grid.circumference
    else:
        a = metric.profile(grid.y)
        wy = grid.dy
    return (om * np.exp(-metric.n * grid.t))[:, None] * (wy * np.sqrt(metric.h0) / a)[None, :]


def boundary_exponent(spectral: SpectralPoint, metric: ModelMetric, grid: Grid, lam,
                      radiation: str = "outgoing", width: float = 0.5):
    """sigma~(x_min, y) on the boundary nodes for the chosen radiation side."""
    sp_ = spectral if radiation == "outgoing" else spectral.conjugate()
    if radiation not in ("outgoing", "incoming"):
        raise ConfigError(f"unknown radiation condition {radiation!r}")
    if grid.mode is not None:
        return np.atleast_1d(indicial_root(sp_, metric.profile.alpha_min, lam=lam))
    pts = ()
    if sp_.on_critical_line:
        pts = tuple(scattering_regions(sp_.lam.real, metric.profile, sp_.n).crossover_points)
    ext = SigmaExtension(sp_, metric.profile, pts, width, lam)
    return np.asarray(ext(grid.x_min, grid.y), dtype=complex)


def build_system(metric: ModelMetric, grid: Grid, spectral: SpectralPoint, epsilon: float = 0.0,
                 rhs=None, bc: str = "robin", radiation: str = "outgoing",
                 width: float = 0.5) -> LinearSystem:
    """Assemble Delta - lambda_eps with lambda_eps = lambda -+ i eps.

    The sign of the absorption follows the side of the real axis of zeta
    (``SpectralPoint.shifted_lambda``); ``radiation="incoming"`` uses the
    conjugate side, i.e. the opposite limit.
    """
    if bc not in ("robin", "dirichlet"):
        raise ConfigError(f"unknown boundary condition {bc!r}")
    if epsilon < 0:
        raise ConfigError("epsilon must be >= 0")
    if epsilon == 0 and spectral.on_critical_line:
        raise ConfigError("epsilon = 0 on the critical line: use a limiting-absorption sweep")
    if spectral.n != metric.n:
        raise ConfigError("spectral point and metric disagree on n")
    if grid.mode is not None and not metric.profile.is_constant:
        raise ConfigError("per-mode reduction needs a constant alpha profile")
    if grid.mode is None and grid.x_max * 2 * np.pi / grid.circumference < 12:
        warnings.warn("x_max * 2 pi / L < 12: Dirichlet wall may reflect", stacklevel=2)
    nt, ny = grid.shape
    n = metric.n
    t, dt = grid.t, grid.dt
    if rhs is None:
        rhs = np.zeros(grid.shape, dtype=complex)
    f = np.asarray(rhs, dtype=complex).reshape(grid.shape)
    scale = np.max(np.abs(f)) if f.size else 0.0
    if scale > 0 and (np.max(np.abs(f[:3])) > 0 or np.max(np.abs(f[-3:])) > 0):
        raise ConfigError("rhs must vanish within 3 cells of both x-ends")

    lam_eps = spectral.shifted_lambda(epsilon)
    if radiation == "incoming":
        lam_eps = spectral.conjugate().shifted_lambda(epsilon)

    if grid.mode is not None:
        a = np.full(1, metric.profile.alpha_min)
    else:
        a = metric.profile(grid.y)
    a2 = a**2
    idx = np.arange(nt * ny).reshape(nt, ny)
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    # radial fluxes between i and i+1 for the unknown rows 0..nt-2
    th = t[:-1] + dt / 2
    inner = np.arange(1, nt - 1)
    cp = (np.exp(n * t[inner] - n * th[inner]))[:, None] * a2[None, :] / dt**2
    cm = (np.exp(n * t[inner] - n * th[inner - 1]))[:, None] * a2[None, :] / dt**2
    put(idx[inner], idx[inner], cp + cm)
    put(idx[inner], idx[inner - 1], -cm)
    keep = inner + 1 < nt - 1  # the Dirichlet node is eliminated (u = 0)
    put(idx[inner[keep]], idx[inner[keep] + 1], -cp[keep])

    robin = None
    if bc == "robin":
        robin = boundary_exponent(spectral, metric, grid, lam_eps, radiation, width)
        c0 = 2 * np.exp(n * t[0] - n * th[0]) * a2 / dt**2
        put(idx[0], idx[0], c0 + 2 * a2 * robin / dt)
        put(idx[0], idx[1], -c0)

    # tangential part on rows 0..nt-2 (row 0 only for the Robin half cell)
    first = 0 if bc == "robin" else 1
    ti = np.arange(first, nt - 1)
    ex = np.exp(2 * t[ti]) / metric.h0
    if grid.mode is not None:
        put(idx[ti], idx[ti], (ex * grid.mode**2)[:, None])
    else:
        dy = grid.dy
        ah = metric.profile(grid.y + dy / 2)  # alpha at j + 1/2
        dp = ex[:, None] * (a / ah)[None, :] / dy**2
        dm = ex[:, None] * (a / np.roll(ah, 1))[None, :] / dy**2
        put(idx[ti], idx[ti], dp + dm)
        put(idx[ti], np.roll(idx[ti], -1, axis=1), -dp)
        put(idx[ti], np.roll(idx[ti], 1, axis=1), -dm)

    put(idx[first:nt - 1], idx[first:nt - 1], np.full((nt - 1 - first, ny), -lam_eps))
    # Dirichlet rows: identity
    dirichlet = [idx[-1]] if bc == "robin" else [idx[0], idx[-1]]
    for d in dirichlet:
        put(d, d, np.ones(ny))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nt * ny, nt * ny)).tocsc()
    b = f.copy().ravel()
    brows = np.concatenate([idx[0], idx[-1]])
    b[np.concatenate(dirichlet)] = 0.0
    return LinearSystem(A, b, grid, metric, spectral, epsilon, lam_eps, bc, radiation, robin, brows)


def solve(system: LinearSystem, tol: float = 1e-9) -> DiscreteField:
    """Sparse direct solve; raises NonConvergence if the relative residual >= tol."""
    A, b = system.matrix, system.rhs
    bn = np.linalg.norm(b)
    if bn == 0:
        u = np.zeros_like(b)
        res = 0.0
    else:
        try:
            lu = splu(A, permc_spec="MMD_AT_PLUS_A")
            u = lu.solve(b)
        except RuntimeError as err:  # singular factor
            raise NonConvergence(f"factorization failed: {err}") from err
        res = float(np.linalg.norm(A @ u - b) / bn)
        if not np.isfinite(res) or res >= tol:
            # one refinement step before giving up
            u = u + lu.solve(b - A @ u)
            res = float(np.linalg.norm(A @ u - b) / bn)
            if not np.isfinite(res) or res >= tol:
                raise NonConvergence(f"relative residual {res:.3e} >= {tol:.1e}", res)
    g = system.grid
    return DiscreteField(u.reshape(g.shape), g, system.spectral, system.epsilon,
                         system.metric.profile.token(), system.bc, system.radiation, res)


# ---------------------------------------------------------------------------
# norms and diagnostics


def bilinear(u, v, grid: Grid, metric: ModelMetric) -> complex:
    """sum u v dg (no conjugation)."""
    return complex(np.sum(np.asarray(u) * np.asarray(v) * _volume(grid, metric)))


def weighted_norm(values, grid: Grid, metric: ModelMetric, delta: float = DELTA, mask=None) -> float:
    """|| x^delta u ||_{L^2(dg)}, optionally restricted to a boolean t-mask."""
    w = _volume(grid, metric) * (grid.x ** (2 * delta))[:, None]
    v = np.abs(np.asarray(values)) ** 2 * w
    if mask is not None:
        v = v[mask]
    return float(np.sqrt(np.sum(v)))


def _derivatives(field: DiscreteField):
    g = field.grid
    u = field.values
    ut = np.gradient(u, g.dt, axis=0, edge_order=2)
    if g.mode is not None:
        uy = 1j * g.mode * u
    else:
        uy = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * g.dy)
    return ut, uy


def _alpha_nodes(grid: Grid, metric: ModelMetric):
    if grid.mode is not None:
        return np.full(1, metric.profile.alpha_min)
    return metric.profile(grid.y)


def radiation_diagnostic(u: DiscreteField, metric: ModelMetric, ext=None, rhs=None,
                         delta: float = DELTA, eps_w: float = EPS_W, window=None,
                         sigma=None) -> float:
    """|| x^{-eps_w} d_sigma~ u ||^2 / (|| x^delta u ||^2 + ||f||^2).

    The numerator is taken over the boundary window ``window = (x_lo, x_hi)``
    (default: x <= 1e-2); |d_sigma~ u|^2 = alpha^2 |u_t - sigma~ u|^2 +
    x^2 |u_y|^2 / h0.  ``ext`` is a SigmaExtension (2-D); per-mode fields pass
    ``sigma`` (a number) instead.
    """
    g = u.grid
    x = g.x
    lo, hi = window if window is not None else (g.x_min, min(1e-2, g.x_max))
    mask = (x >= lo) & (x <= hi)
    ut, uy = _derivatives(u)
    if sigma is not None:
        s = np.broadcast_to(np.asarray(sigma, dtype=complex), g.shape)
    else:
        s = np.asarray(ext(x[:, None], g.y[None, :]), dtype=complex)
    a = _alpha_nodes(g, metric)
    d2 = (a[None, :] ** 2) * np.abs(ut - s * u.values) ** 2 + (x**2)[:, None] * np.abs(uy) ** 2 / metric.h0
    vol = _volume(g, metric) * (x ** (-2 * eps_w))[:, None]
    num = float(np.sum((d2 * vol)[mask]))
    den = weighted_norm(u.values, g, metric, delta) ** 2
    if rhs is not None:
        den += weighted_norm(rhs, g, metric, 0.0) ** 2
    return num / den


def energy_ratio(u: DiscreteField, metric: ModelMetric, rhs=None, delta: float = DELTA) -> float:
    """||x^delta grad u||^2 / (|lambda| ||x^delta u||^2 + ||f||^2)."""
    g = u.grid
    ut, uy = _derivatives(u)
    a = _alpha_nodes(g, metric)
    grad2 = (a[None, :] ** 2) * np.abs(ut) ** 2 + (g.x**2)[:, None] * np.abs(uy) ** 2 / metric.h0
    num = float(np.sum(grad2 * _volume(g, metric) * (g.x ** (2 * delta))[:, None]))
    den = abs(u.spectral.lam) * weighted_norm(u.values, g, metric, delta) ** 2
    if rhs is not None:
        den += weighted_norm(rhs, g, metric, 0.0) ** 2
    return num / den


# ---------------------------------------------------------------------------
# limiting absorption


@dataclass
class LapResult:
    fields: list
    diagnostics: list
    extrapolated: DiscreteField
    plateau_index: int | None = None

    @property
    def final(self) -> DiscreteField:
        return self.fields[-1]

    @property
    def weighted_diffs(self):
        return [d["weighted_diff"] for d in self.diagnostics[1:]]

    def to_json(self) -> str:
        return json.dumps(self.diagnostics, indent=1)


def limiting_absorption_sweep(metric: ModelMetric, grid: Grid, spectral: SpectralPoint, rhs,
                              eps_ladder: Sequence[float], bc: str = "robin",
                              radiation: str = "outgoing", delta: float = DELTA,
                              eps_w: float = EPS_W, width: float = 0.5, window=None,
                              plateau_ratio: float = 0.9) -> LapResult:
    """Solve for each eps in a strictly decreasing ladder and record diagnostics.

    Diagnostics per rung: epsilon, weighted_diff = ||x^delta (u_j - u_{j-1})||
    (None for the first rung), radiation, residual, energy_ratio.  A warning
    is issued at the first rung where the difference stops shrinking by at
    least ``plateau_ratio``.  The extrapolated field is the linear
    extrapolation of the last two rungs to eps = 0.
    """
    eps = [float(e) for e in eps_ladder]
    if len(eps) < 2 or any(b >= a for a, b in zip(eps, eps[1:])) or eps[-1] < 0:
        raise ConfigError("eps_ladder must be strictly decreasing and >= 0")
    if spectral.on_critical_line and spectral.zeta.imag == 0:
        raise ConfigError("zeta = n/2 sits at the bottom of the continuous spectrum")
    sp_ = spectral if radiation == "outgoing" else spectral.conjugate()
    pts = ()
    if grid.mode is None and sp_.on_critical_line:
        pts = tuple(scattering_regions(sp_.lam.real, metric.profile, sp_.n).crossover_points)
    fields, diags = [], []
    plateau = None
    for j, e in enumerate(eps):
        system = build_system(metric, grid, spectral, e, rhs, bc, radiation, width)
        u = solve(system)
        if grid.mode is None:
            ext = SigmaExtension(sp_, metric.profile, pts, width, system.lam)
            rad = radiation_diagnostic(u, metric, ext, rhs, delta, eps_w, window)
        else:
            rad = radiation_diagnostic(u, metric, rhs=rhs, delta=delta, eps_w=eps_w, window=window,
                                       sigma=system.robin[0] if system.robin is not None else
                                       indicial_root(sp_, metric.profile.alpha_min))
        d = {"epsilon": e, "weighted_diff": None, "radiation": rad, "residual": u.residual,
             "energy_ratio": energy_ratio(u, metric, rhs, delta)}
        if fields:
            d["weighted_diff"] = weighted_norm(u.values - fields[-1].values, grid, metric, delta)
            prev = diags[-1]["weighted_diff"]
            if plateau is None and prev is not None and d["weighted_diff"] > plateau_ratio * prev:
                plateau = j
                warnings.warn(f"limiting-absorption differences plateau at eps = {e:g}", stacklevel=2)
        fields.append(u)
        diags.append(d)
    e1, e2 = eps[-2], eps[-1]
    u1, u2 = fields[-2].values, fields[-1].values
    extrap = u2 + (u2 - u1) * e2 / (e1 - e2)
    return LapResult(fields, diags, fields[-1].replace(extrap), plateau)


def richardson(coarse: DiscreteField, fine: DiscreteField, order: int = 2) -> DiscreteField:
    """Richardson extrapolation on the coarse nodes of a nested refinement pair."""
    gc, gf = coarse.grid, fine.grid
    r = (gf.n_t - 1) // (gc.n_t - 1)
    if r * (gc.n_t - 1) != gf.n_t - 1 or gf.n_y != gc.n_y:
        raise ConfigError("grids are not nested")
    f = fine.values[::r]
    p = r**order
    return coarse.replace((p * f - coarse.values) / (p - 1))


# ---------------------------------------------------------------------------
# Poisson operator


def collar_cutoff(t, t1: float, t2: float):
    """chi(t) = 1 for t <= t1, 0 for t >= t2, smooth; returns (chi, chi_t, chi_tt)."""
    L = t2 - t1
    s = np.clip((np.asarray(t, float) - t1) / L, 0.0, 1.0)
    inside = (s > 0) & (s < 1)
    ss = np.where(inside, s, 0.5)
    with np.errstate(over="ignore"):
        h = 1 / ss - 1 / (1 - ss)
        S = expit(-h)
        h1 = -1 / ss**2 - 1 / (1 - ss) ** 2
        h2 = 2 / ss**3 - 2 / (1 - ss) ** 3
        S1 = -S * (1 - S) * h1
        S2 = -S1 * (1 - 2 * S) * h1 - S * (1 - S) * h2
    S = np.where(inside, S, (s >= 1).astype(float))
    S1 = np.where(inside, S1, 0.0)
    S2 = np.where(inside, S2, 0.0)
    return 1 - S, -S1 / L, -S2 / L**2


@dataclass
class PoissonResult:
    field: DiscreteField
    leading: PhgExpansion
    correction: DiscreteField
    chi: np.ndarray
    lap: LapResult | None = None


def poisson_solve(f, spectral: SpectralPoint, metric: ModelMetric, grid: Grid, N: int = 6,
                  collar=None, eps_ladder=None, width: float = 0.5,
                  extrapolate: bool = True) -> PoissonResult:
    """u with (Delta - lambda) u = 0, u ~ x^{n-sigma} f + x^sigma f' at x = 0.

    u1 = solve_away(f, n - sigma) is cut off to the collar x <= collar[1];
    phi = (Delta - lambda)(chi u1) is evaluated exactly; u = chi u1 - R phi
    with R the outgoing resolvent (a direct solve off the critical line, a
    limiting-absorption sweep on it).
    """
    g = grid
    if g.mode is not None:
        calc = Tangential.for_mode(metric.profile, g.mode, metric.h0)
    else:
        calc = Tangential(metric.profile, g.y, None, metric.h0)
    fb = np.asarray(f, dtype=complex) * np.ones(calc.size)
    u1 = solve_away(fb, spectral, calc, "n_minus_sigma", N)
    if collar is None:
        kmax = abs(g.mode) if g.mode is not None else 2 * np.pi / g.circumference * g.n_y / 3
        hi = min(0.25 / max(kmax, 1e-12), 0.1 * g.x_max) if g.mode is not None else min(0.05, 0.1 * g.x_max)
        collar = (hi / 4, hi)
    t1, t2 = np.log(collar[0]), np.log(collar[1])
    if t1 <= g.t[5] or t2 >= g.t[-5]:
        raise ConfigError("collar cutoff must lie inside the grid")
    x = g.x
    chi, chi_t, chi_tt = collar_cutoff(g.t, t1, t2)
    near = chi > 0
    U = np.zeros(g.shape, complex)
    Ut = np.zeros(g.shape, complex)
    R = np.zeros(g.shape, complex)
    U[near] = u1.evaluate(x[near])
    Ut[near] = u1.evaluate(x[near], 1)
    R[near] = apply_operator(u1).evaluate(x[near])
    a2 = (calc.alpha**2)[None, :]
    n = metric.n
    phi = chi[:, None] * R + a2 * (-chi_tt[:, None] * U - 2 * chi_t[:, None] * Ut + n * chi_t[:, None] * U)
    phi[:3] = 0.0
    phi[-3:] = 0.0
    lap = None
    if spectral.on_critical_line:
        ladder = eps_ladder if eps_ladder is not None else 0.1 * 0.5 ** np.arange(8)
        lap = limiting_absorption_sweep(metric, g, spectral, phi, ladder, width=width)
        w = lap.extrapolated if extrapolate else lap.final
    else:
        w = solve(build_system(metric, g, spectral, 0.0, phi, "robin", "outgoing", width))
    u = w.replace(chi[:, None] * U - w.values)
    return PoissonResult(u, u1, w, chi, lap)
