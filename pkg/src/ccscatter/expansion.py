"""Truncated polyhomogeneous expansions with variable leading exponent.

An expansion is ``u = x^{e(y)} sum_{k,l} x^k (log x)^l a_{k,l}(y)`` on the
boundary grid (or for a single Fourier mode).  ``apply_operator`` computes
(Delta - lambda) u exactly as another finite expansion, ``solve_away`` runs
the recursion that kills the error term by term, and ``fit_exponent`` reads
exponents back off sampled fields.

The model operator (h = h0 dy^2, x-independent) is

    Delta = alpha^2 [-(x d_x)^2 + n x d_x] - (x^2/h0) alpha d_y (alpha^-1 d_y)

i.e. x^2 Delta_h plus the first-order term (x^2/h0)(d_y log alpha) d_y.
The d_x log sqrt(h) term of the general normal form is identically zero here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.signal import hilbert

from .errors import ConfigError, DegenerateFit, ResonanceError
from .geometry import (AlphaProfile, SigmaExtension, SpectralPoint,
                       indicial_root_derivatives)

__all__ = [
    "Tangential",
    "PhgTerm",
    "PhgExpansion",
    "apply_operator",
    "solve_away",
    "residual_expansion",
    "fit_exponent",
    "ExponentFit",
    "halfstep_probe",
    "expansion_rows",
]

# d_x log sqrt(h) for the model metric; kept for reference, always zero here
GAMMA = 0.0


@dataclass(frozen=True)
class Tangential:
    """Boundary calculus: grid, alpha, and d/dy acting on coefficient vectors.

    With ``mode`` (a wavenumber k) the boundary is a single Fourier mode
    e^{iky}: vectors have length 1, d/dy is multiplication by ik and alpha
    must be constant.
    """

    profile: AlphaProfile
    y: np.ndarray
    mode: float | None = None
    h0: float = 1.0

    @classmethod
    def on_grid(cls, profile: AlphaProfile, n_y: int | None = None, h0: float = 1.0):
        return cls(profile, profile.grid(n_y), None, h0)

    @classmethod
    def for_mode(cls, profile: AlphaProfile, k: float, h0: float = 1.0):
        if not profile.is_constant:
            raise ConfigError("per-mode calculus needs a constant alpha profile")
        return cls(profile, np.zeros(1), float(k), h0)

    @property
    def size(self) -> int:
        return len(self.y)

    @property
    def alpha(self):
        return self.profile(self.y)

    @property
    def dlog_alpha(self):
        if self.mode is not None:
            return np.zeros(1)
        return self.profile(self.y, 1) / self.profile(self.y)

    def _wavenumbers(self):
        L = self.profile.circumference
        return 2 * np.pi * np.fft.fftfreq(self.size, d=L / self.size)

    def d(self, a, order: int = 1):
        a = np.asarray(a, dtype=complex)
        if self.mode is not None:
            return (1j * self.mode) ** order * a
        kk = self._wavenumbers()
        # 2/3-rule filter: roundoff in the top modes would otherwise grow like
        # |k|^order through the recursion
        m = np.abs(np.fft.fftfreq(self.size, d=1.0 / self.size))
        keep = m <= self.size / 3
        return np.fft.ifft(np.where(keep, (1j * kk) ** order, 0) * np.fft.fft(a))


# ---------------------------------------------------------------------------
# expansions


@dataclass(frozen=True)
class PhgTerm:
    step: Fraction
    logpow: int
    coeff: np.ndarray

    def __post_init__(self):
        import math
        object.__setattr__(self, "step", Fraction(self.step))
        if self.logpow < 0 or self.logpow > math.ceil(self.step):
            raise ValueError(f"log power {self.logpow} not allowed at step {self.step}")
        if not np.all(np.isfinite(self.coeff)):
            raise ValueError("non-finite coefficient")


@dataclass(frozen=True)
class PhgExpansion:
    """x^{e(y)} sum x^k (log x)^l a_{k,l}(y), terms sorted by (step, -logpow)."""

    exponent: np.ndarray
    terms: tuple
    order: int
    spectral: SpectralPoint
    calculus: Tangential
    branch: str = "numeric"

    def __post_init__(self):
        terms = tuple(sorted(self.terms, key=lambda t: (t.step, -t.logpow)))
        keys = [(t.step, t.logpow) for t in terms]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (step, logpow) terms")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "exponent", np.asarray(self.exponent, dtype=complex))

    def coefficient(self, step, logpow=0):
        for t in self.terms:
            if t.step == Fraction(step) and t.logpow == logpow:
                return t.coeff
        return np.zeros(self.calculus.size, dtype=complex)

    def as_dict(self):
        return {(t.step, t.logpow): t.coeff for t in self.terms}

    @property
    def max_logpow(self) -> int:
        return max((t.logpow for t in self.terms), default=0)

    def truncate(self, below) -> "PhgExpansion":
        keep = tuple(t for t in self.terms if t.step < below)
        return PhgExpansion(self.exponent, keep, self.order, self.spectral, self.calculus, self.branch)

    def leading_step(self, tol=0.0):
        for t in self.terms:
            if np.max(np.abs(t.coeff), initial=0.0) > tol:
                return t.step
        return None

    def evaluate(self, x, dt: int = 0, shift: float = 0.0):
        """Values (or the ``dt``-th derivative in t = log x, dt <= 2) on
        x (1-d) times the boundary grid: shape (len(x), n_y).

        ``shift`` returns x^{-shift} times the values (dt = 0 only), which
        keeps very deep samples representable.
        """
        if shift and dt:
            raise ValueError("shift only applies to values")
        x = np.asarray(x, dtype=float)
        t = np.log(x)[:, None]
        e = self.exponent[None, :] - shift
        out = np.zeros((len(x), self.calculus.size), dtype=complex)
        for term in self.terms:
            s = e + float(term.step)
            l = term.logpow
            base = np.exp(s * t)
            # d_t^j [e^{st} t^l] expanded
            tl = t**l
            if dt == 0:
                f = tl
            elif dt == 1:
                f = s * tl + (l * t ** (l - 1) if l >= 1 else 0)
            elif dt == 2:
                f = s * s * tl
                if l >= 1:
                    f = f + 2 * s * l * t ** (l - 1)
                if l >= 2:
                    f = f + l * (l - 1) * t ** (l - 2)
            else:
                raise ValueError("dt must be 0, 1 or 2")
            out += base * f * term.coeff[None, :]
        return out

    def __add__(self, other: "PhgExpansion") -> "PhgExpansion":
        if not np.array_equal(self.exponent, other.exponent):
            raise ValueError("expansions with different exponents")
        acc = self.as_dict()
        for k, v in other.as_dict().items():
            acc[k] = acc.get(k, 0) + v
        terms = tuple(PhgTerm(s, l, c) for (s, l), c in acc.items())
        return PhgExpansion(self.exponent, terms, max(self.order, other.order), self.spectral,
                            self.calculus, self.branch)

    def scale(self, c) -> "PhgExpansion":
        terms = tuple(PhgTerm(t.step, t.logpow, c * t.coeff) for t in self.terms)
        return PhgExpansion(self.exponent, terms, self.order, self.spectral, self.calculus, self.branch)


def _exponent(spectral, calc: Tangential, branch, lam=None):
    """e(y), e'(y), e''(y) for the requested branch."""
    n = spectral.n
    if isinstance(branch, str):
        if calc.mode is not None:
            s = np.full(1, complex(_mode_sigma(spectral, calc, lam)))
            z = np.zeros(1, dtype=complex)
            s1 = s2 = z
        else:
            s, s1, s2 = indicial_root_derivatives(spectral, calc.profile, calc.y, lam)
        if branch == "sigma":
            return s, s1, s2
        if branch == "n_minus_sigma":
            return n - s, -s1, -s2
        raise ConfigError(f"unknown branch {branch!r}")
    e = np.asarray(branch, dtype=complex)
    if e.shape != (calc.size,):
        raise ConfigError("numeric exponent must live on the boundary grid")
    if calc.mode is not None:
        return e, np.zeros_like(e), np.zeros_like(e)
    return e, calc.d(e, 1), calc.d(e, 2)


def _mode_sigma(spectral, calc, lam=None):
    from .geometry import indicial_root
    return indicial_root(spectral, calc.profile(np.zeros(1)), lam=lam)[0]


def _operator_terms(exp_triple, terms: dict, spectral: SpectralPoint, calc: Tangential,
                    mask=None) -> dict:
    """(Delta - lambda) applied to x^e sum x^k L^l a_kl, as {(k, l): coeff}."""
    e, e1, e2 = exp_triple
    n = spectral.n
    lam = spectral.lam
    a2 = calc.alpha**2
    dla = calc.dlog_alpha
    h0 = calc.h0
    out = {}

    def acc(key, v):
        if key[1] < 0:
            return
        out[key] = out.get(key, 0) + v

    for (k, l), a in terms.items():
        s = e + float(k)
        # radial part: (x d_x) acts on x^s L^l as s + (lower the log)
        acc((k, l), (a2 * s * (n - s) - lam) * a)
        if l >= 1:
            acc((k, l - 1), -a2 * (2 * s - n) * l * a)
        if l >= 2:
            acc((k, l - 2), -a2 * l * (l - 1) * a)
        # tangential part, raises the step by 2
        ay = calc.d(a, 1)
        ayy = calc.d(a, 2)
        if mask is not None:
            ay = np.where(mask, ay, 0)
            ayy = np.where(mask, ayy, 0)
        k2 = k + 2
        acc((k2, l + 2), -(e1 * e1) * a / h0)
        acc((k2, l + 1), (-e2 * a - 2 * e1 * ay + dla * e1 * a) / h0)
        acc((k2, l), (-ayy + dla * ay) / h0)
    return out


def apply_operator(u: PhgExpansion, spectral: SpectralPoint | None = None,
                   profile: AlphaProfile | None = None, order: int | None = None) -> PhgExpansion:
    """(Delta - lambda) u as a finite expansion with the same exponent.

    All output terms are exact (tangential derivatives are spectral).  With
    ``order`` only steps < order are kept.
    """
    spectral = u.spectral if spectral is None else spectral
    calc = u.calculus
    if profile is not None and profile != calc.profile:
        raise ConfigError("profile does not match the expansion's boundary calculus")
    e = u.exponent
    e1 = np.zeros_like(e) if calc.mode is not None else None
    if u.branch in ("sigma", "n_minus_sigma"):
        trip = _exponent(spectral, calc, u.branch)
        trip = (e, trip[1], trip[2])
    elif calc.mode is not None:
        trip = (e, e1, e1)
    else:
        trip = (e, calc.d(e, 1), calc.d(e, 2))
    raw = _operator_terms(trip, u.as_dict(), spectral, calc)
    terms = []
    for (k, l), c in raw.items():
        if order is not None and k >= order:
            continue
        if not np.any(c):
            continue
        terms.append(PhgTerm(k, l, np.asarray(c, dtype=complex) * np.ones(calc.size)))
    return PhgExpansion(e, tuple(terms), u.order if order is None else order, spectral, calc, u.branch)


def residual_expansion(u: PhgExpansion, rtol: float = 1e-10) -> PhgExpansion:
    """(Delta - lambda) u with the cancelled orders (steps < u.order) removed.

    Below the truncation order the coefficients vanish identically; in
    floating point they are roundoff, which would dominate x^{e+N} deep in
    the boundary layer.  They are checked against ``rtol`` (relative to the
    largest input coefficient) and dropped.
    """
    r = apply_operator(u)
    scale = max((np.max(np.abs(t.coeff)) for t in u.terms), default=0.0)
    keep = []
    for t in r.terms:
        if t.step < u.order:
            bad = np.max(np.abs(t.coeff))
            if bad > rtol * max(scale, 1.0):
                raise ArithmeticError(f"step {t.step} residual {bad:.3e} did not cancel")
            continue
        keep.append(t)
    return PhgExpansion(r.exponent, tuple(keep), r.order, r.spectral, r.calculus, r.branch)


def solve_away(f, spectral: SpectralPoint, calculus: Tangential, branch="n_minus_sigma",
               N: int = 6, tol: float = 1e-6) -> PhgExpansion:
    """Expansion u = x^{e}(f + ...) with (Delta - lambda) u = O(x^{e+N}).

    At step k the new coefficients solve
        alpha^2 [k(n-2e-k) a_kl - (2s-n)(l+1) a_k,l+1 - (l+1)(l+2) a_k,l+2] = -g_kl
    (s = e + k, g the error inherited from lower steps), from the top log
    power down.  Raises ResonanceError when |n - 2e - k| < tol on supp f.
    """
    calc = calculus
    f = np.asarray(f, dtype=complex) * np.ones(calc.size)
    n = spectral.n
    trip = _exponent(spectral, calc, branch)
    e, e1, e2 = trip
    supp = np.abs(f) > 0
    for k in range(1, N):
        gap = np.abs(n - 2 * e - k)
        bad = supp & (gap < tol)
        if np.any(bad):
            ys = calc.y[bad]
            raise ResonanceError(
                f"n - 2e(y) - {k} vanishes on supp f at y = {np.round(ys, 6).tolist()}",
                ys, k)
    a2 = calc.alpha**2
    terms = {(Fraction(0), 0): f}
    for k in range(1, N):
        kf = Fraction(k)
        # error at step k generated by the coefficients found so far
        lower = {key: v for key, v in terms.items() if key[0] < kf}
        err = {key: v for key, v in _operator_terms(trip, lower, spectral, calc).items()
               if key[0] == kf}
        if not err:
            continue
        lmax = max(l for (_, l) in err)
        s = e + k
        # resonant points lie off supp f (checked above); their coefficients are set to 0
        ok = np.abs(n - 2 * e - k) >= tol
        denom = np.where(ok, k * (n - 2 * e - k), 1.0)
        new = {}
        for l in range(lmax, -1, -1):
            rhs = -err.get((kf, l), 0) / a2
            rhs = rhs + (2 * s - n) * (l + 1) * new.get(l + 1, 0) + (l + 1) * (l + 2) * new.get(l + 2, 0)
            new[l] = np.where(ok, rhs / denom, 0) * np.ones(calc.size)
        for l, c in new.items():
            if np.any(c != 0):
                terms[(kf, l)] = c
    out = tuple(PhgTerm(s_, l, np.asarray(c, dtype=complex)) for (s_, l), c in terms.items())
    label = branch if isinstance(branch, str) else "numeric"
    return PhgExpansion(e, out, N, spectral, calc, label)


def expansion_rows(u: PhgExpansion):
    """Rows (step, logpow, y_index, re, im) of the expansion dump format."""
    rows = []
    for t in u.terms:
        for j, c in enumerate(t.coeff):
            rows.append((float(t.step), t.logpow, j, float(c.real), float(c.imag)))
    return rows


# ---------------------------------------------------------------------------
# exponent fitting


@dataclass(frozen=True)
class ExponentFit:
    p: np.ndarray
    q: np.ndarray
    logc: np.ndarray
    residual: np.ndarray
    m: np.ndarray | None = None  # fitted log-power when requested


def _lstsq_columns(A, Y):
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    res = Y - A @ coef
    return coef, np.sqrt(np.mean(res**2, axis=0))


def fit_exponent(x, u, window=None, log_power: bool = False, min_points: int = 8) -> ExponentFit:
    """Fit |u| ~ C x^p (|log x|^m) and arg u ~ q log x per column.

    ``u`` has shape (len(x),) or (len(x), n_cols).  Complex input: q from the
    unwrapped phase.  Real input with sign changes: the analytic signal (in
    t = log x, after removing the power trend) supplies the envelope and
    phase.  Raises DegenerateFit if the window holds fewer than
    ``min_points`` samples or spans less than one decade in x.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u)
    squeeze = u.ndim == 1
    if squeeze:
        u = u[:, None]
    sel = np.ones(len(x), bool) if window is None else (x >= window[0]) & (x <= window[1])
    xs, us = x[sel], u[sel]
    if xs.size < min_points:
        raise DegenerateFit(f"only {xs.size} samples in the fit window")
    if np.log10(xs.max() / xs.min()) < 1.0:
        raise DegenerateFit("fit window spans less than one decade")
    order = np.argsort(xs)
    xs, us = xs[order], us[order]
    t = np.log(xs)
    cols = [np.ones_like(t), t]
    if log_power:
        cols.append(np.log(np.abs(t)))
    A = np.stack(cols, axis=1)
    absu = np.abs(us)
    if np.any(absu <= np.finfo(float).tiny):
        raise DegenerateFit("field vanishes (underflow) in the fit window")

    if np.iscomplexobj(us):
        coef, res = _lstsq_columns(A, np.log(absu))
        ph = np.unwrap(np.angle(us), axis=0)
        qc, _ = _lstsq_columns(A[:, :2], ph)
        q = qc[1]
    else:
        ncols = us.shape[1]
        coef = np.zeros((A.shape[1], ncols))
        res = np.zeros(ncols)
        q = np.zeros(ncols)
        for j in range(ncols):
            col = us[:, j].real
            if np.all(col > 0) or np.all(col < 0):
                c, r = _lstsq_columns(A, np.log(np.abs(col))[:, None])
                coef[:, j], res[j] = c[:, 0], r[0]
                continue
            c, r, q[j] = _analytic_fit(t, col, A)
            coef[:, j], res[j] = c, r
    return _pack(coef, q, res, log_power, squeeze)


def _analytic_fit(t, col, A):
    """Fit exp(c + p t) cos(q t + phi) to a real oscillating column.

    The analytic signal (after removing the power trend) gives the starting
    envelope and phase; a nonlinear least-squares pass refines all four
    parameters.  ``A`` supplies the design columns (with an optional log
    power column that is fitted to the envelope only).
    """
    from scipy.optimize import least_squares

    if not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-6, atol=1e-12):
        raise DegenerateFit("analytic-signal fit needs a geometric x ladder")
    edge = max(1, len(t) // 10)
    mid = slice(edge, len(t) - edge)
    p = np.polyfit(t, np.log(np.abs(col) + 1e-300), 1)[0]
    for _ in range(6):
        z = hilbert(col * np.exp(-p * t))
        dp = np.polyfit(t[mid], np.log(np.abs(z[mid])), 1)[0]
        p += dp
        if abs(dp) < 1e-10:
            break
    z = hilbert(col * np.exp(-p * t))
    ph = np.unwrap(np.angle(z[mid]))
    q, phi = np.polyfit(t[mid], ph, 1)
    c = np.mean(np.log(np.abs(z[mid])))
    t0 = t.mean()
    w = np.exp(-p * (t - t0))

    def resid(v):
        cc, pp, qq, ff = v
        return (np.exp(cc + pp * (t - t0)) * np.cos(qq * t + ff) - col * np.exp(-c)) * w

    sol = least_squares(resid, [0.0, p, q, phi], x_scale="jac")
    cc, pp, qq, _ = sol.x
    logc = cc + c - pp * t0
    # envelope coefficients in the caller's design (log-power column if any)
    env = logc + pp * t
    coef, res = _lstsq_columns(A, env[:, None])
    coef[1, 0] = pp
    coef[0, 0] = logc
    r = np.sqrt(np.mean(sol.fun**2))
    return coef[:, 0], r, qq


def _pack(coef, q, res, log_power, squeeze):
    p = coef[1]
    logc = coef[0]
    m = coef[2] if log_power else None
    if squeeze:
        return ExponentFit(p[0], q[0], logc[0], res[0], None if m is None else m[0])
    return ExponentFit(p, q, logc, res, m)


# ---------------------------------------------------------------------------
# half-step probe near the crossover


def halfstep_probe(ext: SigmaExtension, y0: float, angle: float = 0.0,
                   x=None, max_terms: int = 3):
    """Fitted step sequence of sigma~ - sigma~(0, .) along a ray.

    If ``y0`` is a crossover point the ray is y_n = x tan(angle) in the
    blown-up corner (y_n = lambda/alpha^2 - n^2/4); otherwise it is the
    straight line y = y0 + x tan(angle).  Returns ``(steps, coeffs)``:
    raw fitted exponents of successive terms and their coefficients.
    """
    from scipy.optimize import brentq, minimize_scalar

    x = np.geomspace(1e-10, 1e-2, 200) if x is None else np.asarray(x, float)
    c = np.tan(angle)
    on_lambda = len(ext.crossover_points) and np.min(
        np.abs(np.asarray(ext.crossover_points) - y0)) < 1e-9
    if on_lambda:
        yn = lambda s: float(ext.normal_coordinate(np.array(s)))
        slope = (yn(y0 + 1e-6) - yn(y0 - 1e-6)) / 2e-6
        ys = []
        for xi in x:
            guess = y0 + c * xi / slope
            h = 10 * abs(c * xi / slope) + 1e-12
            ys.append(brentq(lambda s: yn(s) - c * xi, guess - h, guess + h, xtol=1e-15, rtol=1e-15))
        ys = np.array(ys)
        base = ext.spectral.n / 2
    else:
        ys = y0 + c * x
        base = ext(0.0, np.array(y0))
        slope = 0.0
    vals = np.asarray(ext(x, ys), dtype=complex)
    g = vals - base
    # roundoff in sigma~ itself, plus the y-position error amplified by
    # d sigma~/dy (which grows like x^{-1/2} at Lambda)
    eps = np.finfo(float).eps
    floor = 1e3 * eps * np.abs(vals)
    if on_lambda:
        floor = floor + 1e3 * eps * abs(y0) * abs(slope) / (2 * np.abs(g) + eps)
    steps, rounded = [], []
    wts = 1.0 / floor

    def project(exps):
        B = x[:, None] ** np.asarray(exps)[None, :]
        c = np.linalg.lstsq(B * wts[:, None], g * wts, rcond=None)[0]
        return c, np.linalg.norm((g - B @ c) * wts)

    coeffs, misfit = np.zeros(0, complex), np.linalg.norm(g * wts)
    for _ in range(max_terms):
        if misfit <= np.sqrt(len(x)):
            break  # everything left is at the noise level
        lo = rounded[-1] + 0.25 if rounded else 0.0
        # next exponent by variable projection: coefficients of all terms are
        # linear, only the new exponent is searched
        res = minimize_scalar(lambda p: project(rounded + [p])[1], bounds=(lo, lo + 3.0),
                              method="bounded", options={"xatol": 1e-10})
        step = np.round(2 * res.x) / 2
        if rounded and step <= rounded[-1]:
            break
        steps.append(float(res.x))
        rounded.append(step)
        coeffs, misfit = project(rounded)
    return steps, list(coeffs)
