"""Geometry at infinity for the model metric g = dx^2/(alpha^2 x^2) + h0 dy^2/x^2.

The boundary is a circle of circumference L.  Everything here is pointwise in
the boundary variable y: the curvature profile alpha(y), the spectral map
zeta -> lambda, the indicial root sigma(zeta, y), the scattering set
W = {alpha^2 < 4 lambda / n^2}, its boundary (the crossover points) and the
interior extension sigma~(x, y) used by the radiation condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ConfigError

__all__ = [
    "AlphaProfile",
    "SpectralPoint",
    "IndicialField",
    "BoundaryRegions",
    "SigmaExtension",
    "lambda_of_zeta",
    "indicial_root",
    "indicial_root_derivatives",
    "build_indicial_field",
    "gamma_set_test",
    "scattering_regions",
    "crossover_regular_check",
    "sigma_extension",
    "sigma_extension_eval",
    "branch_sqrt",
]


# ---------------------------------------------------------------------------
# curvature profile


@dataclass(frozen=True)
class AlphaProfile:
    """Real trigonometric polynomial alpha(y) on the circle [0, L).

    ``fourier_coeffs`` holds ``(m, c)`` pairs.  A pair with m >= 0 contributes
    ``c*cos(2 pi m y / L)``; m < 0 contributes ``c*sin(2 pi |m| y / L)``.
    So ``1 + 0.3 cos y`` on L = 2 pi is ``[(0, 1.0), (1, 0.3)]``.
    """

    fourier_coeffs: tuple = ((0, 1.0),)
    circumference: float = 2 * np.pi
    n_samples: int = 128
    alpha_min: float = field(init=False)
    alpha_max: float = field(init=False)

    def __post_init__(self):
        coeffs = tuple((int(m), float(c)) for m, c in self.fourier_coeffs)
        object.__setattr__(self, "fourier_coeffs", coeffs)
        if not self.circumference > 0:
            raise ConfigError("circumference must be positive")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        lo, hi = self._extrema()
        if lo <= 0:
            raise ConfigError(f"alpha must be positive, min alpha = {lo:.6g}")
        object.__setattr__(self, "alpha_min", lo)
        object.__setattr__(self, "alpha_max", hi)

    @classmethod
    def constant(cls, value=1.0, circumference=2 * np.pi, n_samples=128):
        return cls(((0, float(value)),), circumference, n_samples)

    @property
    def is_constant(self) -> bool:
        return all(m == 0 or c == 0.0 for m, c in self.fourier_coeffs)

    def _omega(self, m):
        return 2 * np.pi * abs(m) / self.circumference

    def __call__(self, y, deriv: int = 0):
        """alpha or its ``deriv``-th derivative at y (exact)."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for m, c in self.fourier_coeffs:
            w = self._omega(m)
            # d^k/dy^k cos(wy) = w^k cos(wy + k pi/2), same shift for sin
            phase = deriv * np.pi / 2
            if m >= 0:
                if m == 0:
                    if deriv == 0:
                        out = out + c
                    continue
                out = out + c * w**deriv * np.cos(w * y + phase)
            else:
                out = out + c * w**deriv * np.sin(w * y + phase)
        return out

    def derivative(self, y, order: int = 1):
        return self(y, deriv=order)

    def grid(self, n=None):
        n = self.n_samples if n is None else int(n)
        return np.arange(n) * (self.circumference / n)

    def _extrema(self):
        if self.is_constant:
            v = float(sum(c for m, c in self.fourier_coeffs if m == 0))
            return v, v
        n = 4096
        y = np.arange(n) * (self.circumference / n)
        a = self(y)
        h = self.circumference / n
        i_lo, i_hi = int(np.argmin(a)), int(np.argmax(a))
        opts = {"xatol": 1e-13}
        r_lo = minimize_scalar(lambda s: float(self(s)), bounds=(y[i_lo] - h, y[i_lo] + h),
                               method="bounded", options=opts)
        r_hi = minimize_scalar(lambda s: -float(self(s)), bounds=(y[i_hi] - h, y[i_hi] + h),
                               method="bounded", options=opts)
        return float(min(a[i_lo], r_lo.fun)), float(max(a[i_hi], -r_hi.fun))

    def token(self) -> str:
        """Short stable identifier used in field metadata."""
        body = ",".join(f"{m}:{c:.17g}" for m, c in self.fourier_coeffs)
        return f"alpha[{body}]L={self.circumference:.17g}"


# ---------------------------------------------------------------------------
# spectral parameter


def lambda_of_zeta(zeta: complex, n: int = 1, alpha0: float = 1.0) -> complex:
    """lambda = alpha0^2 zeta (n - zeta)."""
    return alpha0**2 * zeta * (n - zeta)


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter zeta with lambda = alpha0^2 zeta (n - zeta)."""

    zeta: complex
    n: int = 1
    alpha0: float = 1.0
    lam: complex = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not self.alpha0 > 0:
            raise ConfigError("alpha0 must be positive")
        object.__setattr__(self, "zeta", complex(self.zeta))
        object.__setattr__(self, "lam", complex(lambda_of_zeta(self.zeta, self.n, self.alpha0)))

    @classmethod
    def for_profile(cls, zeta: complex, profile: "AlphaProfile", n: int = 1) -> "SpectralPoint":
        """Spectral point normalized by alpha0 = min alpha of ``profile``."""
        return cls(zeta, n, profile.alpha_min)

    @property
    def on_critical_line(self) -> bool:
        return abs(self.zeta.real - self.n / 2) <= 1e-14 * max(1.0, self.n)

    @property
    def branch_sign(self) -> float:
        """+1 if Im zeta >= 0 else -1: side of the real axis the limit comes from."""
        return 1.0 if self.zeta.imag >= 0 else -1.0

    def conjugate(self) -> "SpectralPoint":
        return SpectralPoint(self.zeta.conjugate(), self.n, self.alpha0)

    def shifted_lambda(self, eps: float) -> complex:
        """lambda moved off the real axis on the side consistent with the branch."""
        return self.lam - 1j * self.branch_sign * eps


def branch_sqrt(z, sign=1.0):
    """Principal square root, except that a negative real argument maps to
    ``sign * 1j * sqrt(|z|)`` (the limit from the matching half plane)."""
    z = np.asarray(z, dtype=complex)
    r = np.sqrt(z)
    neg = (z.imag == 0) & (z.real < 0)
    if np.any(neg):
        r = np.where(neg, sign * 1j * np.sqrt(np.abs(z.real)), r)
    return r


def _root_offset(spectral: SpectralPoint, alpha, lam=None):
    """S = sigma - n/2 on the branch with Re S >= 0 for Re zeta >= n/2,
    continued analytically into Re zeta < n/2."""
    n = spectral.n
    alpha = np.asarray(alpha, dtype=float)
    lam = spectral.lam if lam is None else lam
    w = spectral.zeta - n / 2
    if w.real >= 0 or lam != spectral.lam:
        return branch_sqrt(n * n / 4 - lam / alpha**2, spectral.branch_sign)
    # Re zeta < n/2: S = (alpha0/alpha) w sqrt(1 + c^2/w^2) with
    # c^2 = (n^2/4)(alpha^2/alpha0^2 - 1); analytic off the segment Re w = 0
    c2 = (n * n / 4) * (alpha**2 / spectral.alpha0**2 - 1.0)
    return (spectral.alpha0 / alpha) * w * np.sqrt(1 + c2 / w**2)


def indicial_root(spectral: SpectralPoint, alpha, lam=None):
    """Indicial root sigma(zeta, y) for the curvature value(s) ``alpha``.

    Solves alpha^2 sigma (n - sigma) = lambda.  For Re zeta >= n/2 this is
    n/2 + sqrt(n^2/4 - lambda/alpha^2) with the principal root (Re sigma >=
    n/2); a negative real radicand is resolved as the limit from Re zeta >
    n/2, i.e. +i|.|^(1/2) when Im zeta >= 0.  For Re zeta < n/2 the root is
    the analytic continuation, so sigma = zeta when alpha = alpha0.

    ``lam`` overrides lambda (used for the shifted value lambda - i eps).
    """
    s = spectral.n / 2 + _root_offset(spectral, alpha, lam)
    return s if np.ndim(s) else complex(s)


def indicial_root_derivatives(spectral: SpectralPoint, profile: AlphaProfile, y, lam=None):
    """(sigma, sigma_y, sigma_yy) at y, exact in terms of alpha and its derivatives.

    With S = sigma - n/2, S^2 = n^2/4 - lambda/alpha^2, so
    S' = lambda alpha'/(alpha^3 S).  Points with S = 0 (crossover) get
    non-finite derivatives replaced by 0; callers must not rely on them there.
    """
    lam = spectral.lam if lam is None else lam
    a = profile(y)
    a1 = profile(y, 1)
    a2 = profile(y, 2)
    S = _root_offset(spectral, a, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        S1 = lam * a1 / (a**3 * S)
        S2 = lam * (a2 / a**3 - 3 * a1**2 / a**4) / S - lam * a1 * S1 / (a**3 * S**2)
    S1 = np.where(np.isfinite(S1), S1, 0.0)
    S2 = np.where(np.isfinite(S2), S2, 0.0)
    return spectral.n / 2 + S, S1, S2


# ---------------------------------------------------------------------------
# sampled indicial root


@dataclass(frozen=True)
class IndicialField:
    """sigma(zeta, y) sampled on the boundary grid of ``profile``."""

    sigma: np.ndarray
    y: np.ndarray
    spectral: SpectralPoint
    profile: AlphaProfile

    @property
    def alpha(self):
        return self.profile(self.y)

    def degenerate(self, tol=1e-12):
        """Grid points where sigma = n/2 (roots coincide)."""
        return np.abs(self.sigma - self.spectral.n / 2) <= tol

    def indicial_defect(self):
        """|alpha^2 sigma (n - sigma) - lambda| / |lambda| per grid point."""
        n = self.spectral.n
        lam = self.spectral.lam
        r = np.abs(self.alpha**2 * self.sigma * (n - self.sigma) - lam)
        return r / max(abs(lam), 1e-300)


def build_indicial_field(spectral: SpectralPoint, profile: AlphaProfile, y=None) -> IndicialField:
    y = profile.grid() if y is None else np.asarray(y, dtype=float)
    sigma = np.asarray(indicial_root(spectral, profile(y)), dtype=complex)
    return IndicialField(sigma, y, spectral, profile)


def gamma_set_test(spectral: SpectralPoint, profile: AlphaProfile, tolerance: float = 1e-8, y=None):
    """Does sigma(zeta, y) hit (n - k)/2, k = 0, 1, 2, ..., on the grid?

    Returns ``(hit, witnesses)`` with witnesses a list of ``(y, k)``.  Only k
    with (n - k)/2 >= min Re sigma - 1 are candidates.
    """
    field_ = build_indicial_field(spectral, profile, y)
    s = field_.sigma
    n = spectral.n
    lo = float(np.min(s.real))
    witnesses = []
    k = 0
    while (n - k) / 2 >= lo - 1:
        hit = np.abs(s - (n - k) / 2) < tolerance
        witnesses.extend((float(yy), k) for yy in field_.y[hit])
        k += 1
    return bool(witnesses), witnesses


# ---------------------------------------------------------------------------
# scattering set and crossover points


def _periodic_distance(y, points, L):
    y = np.asarray(y, dtype=float)
    if len(points) == 0:
        return np.full_like(y, np.inf)
    d = np.abs(y[..., None] - np.asarray(points)[None, :]) % L
    return np.min(np.minimum(d, L - d), axis=-1)


@dataclass(frozen=True)
class BoundaryRegions:
    """Scattering arcs W (as (start, end) with end possibly > L) and the
    crossover points Lambda on the boundary circle."""

    scattering_arcs: tuple
    crossover_points: tuple
    lam: float
    n: int
    profile: AlphaProfile

    @property
    def threshold(self) -> float:
        return 4 * self.lam / self.n**2

    def contains(self, y):
        """Grid-wise membership in W: alpha(y)^2 < 4 lambda / n^2."""
        return self.profile(y) ** 2 < self.threshold

    def distance_to_crossover(self, y):
        return _periodic_distance(y, self.crossover_points, self.profile.circumference)

    @property
    def empty(self) -> bool:
        return len(self.scattering_arcs) == 0

    @property
    def whole(self) -> bool:
        return len(self.scattering_arcs) == 1 and len(self.crossover_points) == 0


def scattering_regions(lam: float, profile: AlphaProfile, n: int = 1,
                       n_scan: int = 4096, xtol: float = 1e-12) -> BoundaryRegions:
    """Locate W = {alpha^2 < 4 lambda/n^2} and its endpoints.

    Sign changes of alpha^2 - 4 lambda/n^2 on a dense scan are refined by a
    bracketing root finder to ``xtol``.
    """
    lam = complex(lam)
    if abs(lam.imag) > 1e-12 * max(1.0, abs(lam)):
        raise ConfigError("scattering regions need real lambda")
    lam = lam.real
    L = profile.circumference
    thr = 4 * lam / n**2
    g = lambda s: float(profile(s)) ** 2 - thr
    y = np.arange(n_scan) * (L / n_scan)
    v = profile(y) ** 2 - thr
    inside = v < 0
    if not inside.any():
        return BoundaryRegions((), (), lam, n, profile)
    if inside.all():
        return BoundaryRegions(((0.0, L),), (), lam, n, profile)
    roots, kinds = [], []
    for i in range(n_scan):
        a, b = y[i], y[i] + L / n_scan
        va, vb = v[i], v[(i + 1) % n_scan]
        if va == 0.0:
            r = a
        elif (va < 0) != (vb < 0) and vb != 0.0:
            r = brentq(g, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)
        else:
            continue
        roots.append(r % L)
        kinds.append("enter" if vb < 0 else "leave")
    # pair each entry into W with the next exit, going around the circle
    order = np.argsort(roots)
    roots = [roots[i] for i in order]
    kinds = [kinds[i] for i in order]
    arcs = []
    m = len(roots)
    for i in range(m):
        if kinds[i] != "enter":
            continue
        for j in range(1, m + 1):
            jj = (i + j) % m
            if kinds[jj] == "leave":
                end = roots[jj] if roots[jj] > roots[i] else roots[jj] + L
                arcs.append((roots[i], end))
                break
    return BoundaryRegions(tuple(arcs), tuple(roots), lam, n, profile)


def crossover_regular_check(lam: float, profile: AlphaProfile, tol: float = 1e-8, n: int = 1) -> bool:
    """True iff |alpha'| > tol at every crossover point (Lambda is regular)."""
    regions = scattering_regions(lam, profile, n)
    pts = np.asarray(regions.crossover_points)
    if pts.size == 0:
        # extremum touching the threshold is invisible to the sign scan
        thr = 4 * regions.lam / n**2
        for a in (profile.alpha_min, profile.alpha_max):
            if abs(a**2 - thr) <= 1e-12 * max(1.0, thr):
                return False
        return True
    return bool(np.all(np.abs(profile(pts, 1)) > tol))


# ---------------------------------------------------------------------------
# interior extension of sigma


def _bump(s):
    """Smooth cutoff: 1 for s <= 1/2, 0 for s >= 1."""
    s = np.asarray(s, dtype=float)

    def g(t):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    a = g(1.0 - s)
    b = g(s - 0.5)
    return a / (a + b)


@dataclass(frozen=True)
class SigmaExtension:
    """sigma~(x, y) = n/2 + sqrt(n^2/4 - lambda/alpha^2 + i s x b(y)).

    b is a smooth bump equal to 1 within width/2 of each crossover point and
    0 beyond ``width``; s = +-1 is the side of the real axis fixed by Im zeta.
    Away from the bumps sigma~ is the x-independent extension of sigma.
    ``lam`` may be the shifted value lambda -+ i eps.
    """

    spectral: SpectralPoint
    profile: AlphaProfile
    crossover_points: tuple = ()
    width: float = 0.5
    lam: complex | None = None

    def bump(self, y):
        d = _periodic_distance(y, self.crossover_points, self.profile.circumference)
        return _bump(d / self.width)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        lam = self.spectral.lam if self.lam is None else self.lam
        n = self.spectral.n
        sgn = self.spectral.branch_sign
        if len(self.crossover_points) == 0:
            return indicial_root(self.spectral, self.profile(y) + 0 * x, lam=lam)
        arg = n * n / 4 - lam / self.profile(y) ** 2 + 1j * sgn * x * self.bump(y)
        if np.all(x == 0) and lam == self.spectral.lam:
            return indicial_root(self.spectral, self.profile(y) + 0 * x, lam=lam)
        return n / 2 + branch_sqrt(arg, sgn)

    def normal_coordinate(self, y):
        """y_n = lambda/alpha(y)^2 - n^2/4 (zero exactly on Lambda)."""
        lam = self.spectral.lam if self.lam is None else self.lam
        return (lam / self.profile(y) ** 2 - self.spectral.n**2 / 4).real


def sigma_extension(spectral: SpectralPoint, profile: AlphaProfile, width: float = 0.5,
                    lam=None) -> SigmaExtension:
    """Build sigma~ for ``spectral``; crossover points come from lambda if real."""
    pts = ()
    if spectral.on_critical_line:
        pts = scattering_regions(spectral.lam.real, profile, spectral.n).crossover_points
    return SigmaExtension(spectral, profile, tuple(pts), width, lam)


def sigma_extension_eval(ext: SigmaExtension, x, y):
    return ext(x, y)
