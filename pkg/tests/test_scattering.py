import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccscatter.errors import PoleError
from ccscatter.geometry import AlphaProfile, SpectralPoint, build_indicial_field
from ccscatter.scattering import (bessel_coefficient, decay_exponent_map, estimate_normalization,
                                  extract_outgoing, mode_scattering, principal_symbol)
from ccscatter.solver import (Grid, ModelMetric, PoissonResult, limiting_absorption_sweep,
                              poisson_solve, richardson)

ONE = AlphaProfile.constant(1.0)
COS = AlphaProfile([(0, 1.0), (1, 0.3)])


def frobenius_ratio(nu, k):
    """x^{1/2+nu} / x^{1/2-nu} coefficient ratio of x^{1/2} K_nu(kx), from K = pi/(2 sin) (I_{-nu} - I_nu)."""
    nu, k = mp.mpc(nu), mp.mpf(k)
    c_plus = -(k / 2) ** nu / mp.gamma(1 + nu)
    c_minus = (k / 2) ** (-nu) / mp.gamma(1 - nu)
    return complex(c_plus / c_minus)


# -- symbol -----------------------------------------------------------------

def test_symbol_example():
    ref = complex(mp.power(2, -0.5) * mp.gamma(-0.25) / mp.gamma(0.25))
    assert principal_symbol(SpectralPoint(0.75), 1.0, 1.0) == pytest.approx(ref, rel=1e-13)
    assert abs(ref + 0.9561) < 5e-4  # quoted to four digits; exact value -0.95598


@settings(max_examples=40, deadline=None)
@given(st.floats(0.55, 3.0).filter(lambda r: abs(r - round(r - 0.5) - 0.5) > 1e-3),
       st.floats(-2, 2), st.floats(0.1, 20))
def test_symbol_homogeneity(re, im, xi):
    sp = SpectralPoint(complex(re, im))
    a = principal_symbol(sp, 1.0, 2 * xi)
    b = principal_symbol(sp, 1.0, xi)
    s = sp.zeta
    assert a / b == pytest.approx(2 ** (2 * s - 1), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.55, 2.9).filter(lambda r: abs(r - round(r - 0.5) - 0.5) > 1e-3),
       st.floats(-2, 2), st.floats(0.1, 20))
def test_symbol_matches_frobenius_identically(re, im, k):
    sp = SpectralPoint(complex(re, im))
    nu = sp.zeta - 0.5
    ref = frobenius_ratio(nu, k)
    assert principal_symbol(sp, 1.0, k) == pytest.approx(ref, rel=1e-10)
    assert bessel_coefficient(nu, k) == pytest.approx(ref, rel=1e-10)


def test_symbol_branch_pairing():
    # pairing the two indicial branches at |xi| = 1
    for nu in (0.25, 0.3 + 0.4j, 1.7 - 0.2j):
        assert bessel_coefficient(nu, 2.0) * bessel_coefficient(-nu, 2.0) == pytest.approx(1, rel=1e-13)


def test_symbol_poles():
    with pytest.raises(PoleError):
        principal_symbol(SpectralPoint(1.5), 1.0, 1.0)
    with pytest.raises(PoleError):
        principal_symbol(SpectralPoint(0.5 + 1e-9), 1.0, 1.0)
    principal_symbol(SpectralPoint(1.5 + 1e-4), 1.0, 1.0)


# -- per-mode scattering ----------------------------------------------------

def test_mode_scattering_matches_bessel():
    sp = SpectralPoint(0.75)
    S = mode_scattering(1, sp)
    assert S == pytest.approx((0.5) ** 0.5 * complex(mp.gamma(-0.25) / mp.gamma(0.25)), rel=1e-6)


def test_mode_scattering_symmetric_in_m():
    sp = SpectralPoint(0.8)
    assert mode_scattering(-3, sp, n_t=4097) == mode_scattering(3, sp, n_t=4097)


def test_mode_scattering_circumference():
    sp = SpectralPoint(0.9)
    S = mode_scattering(2, sp, circumference=3.0, n_t=8193)
    assert S == pytest.approx(principal_symbol(sp, 1.0, 2 * np.pi * 2 / 3.0), rel=1e-6)


def test_mode_zero_flagged():
    with pytest.warns(UserWarning, match="not universal"):
        S = mode_scattering(0, SpectralPoint(0.75), n_t=4097)
    assert np.isfinite(S)


def test_conjugation_on_critical_line():
    a = mode_scattering(2, SpectralPoint(0.5 + 0.7j), n_t=4097)
    b = mode_scattering(2, SpectralPoint(0.5 - 0.7j), n_t=4097)
    assert b == pytest.approx(np.conj(a), rel=1e-12)
    assert a == pytest.approx(principal_symbol(SpectralPoint(0.5 + 0.7j), 1.0, 2.0), rel=1e-4)


# -- extraction -------------------------------------------------------------

def mode_result(f, zeta=0.75, n_t=4097):
    g = Grid(1e-6, 40.0, n_t, 1, mode=1.0)
    sp = SpectralPoint(zeta)
    r = [poisson_solve(f, sp, ModelMetric(ONE), gg) for gg in (g, g.refined())]
    return PoissonResult(richardson(r[0].field, r[1].field), r[0].leading, r[0].correction, r[0].chi)


def test_extract_mode_ratio_and_zero():
    d = extract_outgoing(mode_result(1.0))
    assert d.ratio[0] == pytest.approx(principal_symbol(SpectralPoint(0.75), 1.0, 1.0), rel=1e-6)
    z = extract_outgoing(mode_result(0.0))
    assert z.f_out[0] == 0


def test_extract_linear():
    a = extract_outgoing(mode_result(1.0)).f_out[0]
    b = extract_outgoing(mode_result(2.5 - 1j)).f_out[0]
    assert b == pytest.approx((2.5 - 1j) * a, rel=1e-9)


def test_extract_two_dimensional_modes():
    # 2-D solve: the 3-point y stencil has modified wavenumber 2 sin(k dy/2)/dy
    g = Grid(1e-6, 40.0, 1025, 32)
    y = g.y
    f = np.cos(y) + 0.5 * np.sin(2 * y)
    sp = SpectralPoint(0.75)
    r = [poisson_solve(f, sp, ModelMetric(ONE), gg) for gg in (g, g.refined())]
    d = extract_outgoing(PoissonResult(richardson(r[0].field, r[1].field), r[0].leading,
                                       r[0].correction, r[0].chi))
    keff = lambda k: 2 * np.sin(k * g.dy / 2) / g.dy
    ref = (principal_symbol(sp, 1.0, keff(1)) * np.cos(y)
           + 0.5 * principal_symbol(sp, 1.0, keff(2)) * np.sin(2 * y))
    assert np.max(np.abs(d.f_out - ref)) < 1e-3


# -- normalization ----------------------------------------------------------

def test_normalization_universal():
    sp = SpectralPoint(0.75)
    mean, spread, vals = estimate_normalization(sp)
    assert spread < 1e-3
    assert len(vals) == 6
    other, _, _ = estimate_normalization(sp, circumference=3.0)
    assert abs(other - mean) / abs(mean) < 1e-3
    # matches 1/(2 sigma - n) from the I/K Wronskian
    assert mean == pytest.approx(1 / (2 * 0.75 - 1), rel=1e-6)


# -- decay exponents --------------------------------------------------------

def interior_rhs(g):
    t = g.t
    s = np.where(np.abs(t) < 1, t, 0.0)
    return np.where(np.abs(t) < 1, np.exp(-1 / (1 - s * s)), 0.0)[:, None] * np.ones(g.n_y)[None, :]


def test_decay_map_constant_alpha_above_threshold():
    g = Grid(1e-6, 12.0, 512, 16)
    sp = SpectralPoint(0.5 + 0.6j)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lap = limiting_absorption_sweep(ModelMetric(ONE), g, sp, interior_rhs(g), 0.1 * 0.5 ** np.arange(6))
    m = decay_exponent_map(lap.final, build_indicial_field(sp, ONE, g.y))
    assert np.all(m.verdict == "oscillatory")
    assert np.allclose(m.q, 0.6, atol=0.02)


def test_decay_map_resolvent_set():
    g = Grid(1e-6, 12.0, 512, 16)
    sp = SpectralPoint.for_profile(0.9, COS)
    from ccscatter.solver import build_system, solve
    u = solve(build_system(ModelMetric(COS), g, sp, 0.0, interior_rhs(g)))
    m = decay_exponent_map(u, build_indicial_field(sp, COS, g.y))
    assert np.all(m.verdict == "decaying")
    assert np.all(m.sigma.real > 0.5)


def test_decay_map_crossover_small_grid(tmp_path):
    g = Grid(1e-6, 12.0, 512, 64)
    sp = SpectralPoint.for_profile(0.5 + 0.6j, COS)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lap = limiting_absorption_sweep(ModelMetric(COS), g, sp, interior_rhs(g), 0.1 * 0.5 ** np.arange(6))
    m = decay_exponent_map(lap.final, build_indicial_field(sp, COS, g.y))
    live = m.verdict != "masked"
    assert np.all(m.verdict[live & m.in_w] == "oscillatory")
    assert np.all(m.verdict[live & ~m.in_w] == "decaying")
    p = tmp_path / "map.csv"
    m.save_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "y,in_W,p,q,re_sigma,im_sigma,verdict" and len(lines) == 65
