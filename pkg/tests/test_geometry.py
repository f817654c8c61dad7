import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccscatter.errors import ConfigError
from ccscatter.geometry import (AlphaProfile, SpectralPoint, build_indicial_field,
                                crossover_regular_check, gamma_set_test, indicial_root,
                                indicial_root_derivatives, lambda_of_zeta,
                                scattering_regions, sigma_extension, sigma_extension_eval)

COS = AlphaProfile([(0, 1.0), (1, 0.3)])


def test_lambda_examples():
    assert lambda_of_zeta(0.5, 1, 1.0) == pytest.approx(0.25)
    assert lambda_of_zeta(0.75, 1, 1.0) == pytest.approx(0.1875)
    assert lambda_of_zeta(0.5 + 1.0j, 1, 1.0) == pytest.approx(1.25)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.integers(1, 4), st.floats(0.1, 3.0))
def test_spectral_point_lambda(z, n, a0):
    sp = SpectralPoint(z, n, a0)
    assert sp.lam == pytest.approx(a0**2 * z * (n - z), rel=1e-14, abs=1e-14)


def test_critical_line_flag():
    assert SpectralPoint(0.5 + 2j).on_critical_line
    assert not SpectralPoint(0.5001 + 2j).on_critical_line
    assert SpectralPoint(1.0 + 1j, n=2).on_critical_line


def test_invalid_spectral_point():
    with pytest.raises(ConfigError):
        SpectralPoint(1.0, n=0)
    with pytest.raises(ConfigError):
        SpectralPoint(1.0, alpha0=-1)


def test_indicial_examples():
    assert indicial_root(SpectralPoint(0.9), 1.0) == pytest.approx(0.9, abs=1e-15)
    assert indicial_root(SpectralPoint(0.5 + 1j), 2.0) == pytest.approx(0.5 + 0.25j, abs=1e-15)
    ref = complex(0.5 + mp.sqrt(mp.mpf("0.25") - mp.mpf("0.09") / 2))
    assert indicial_root(SpectralPoint(0.9), np.sqrt(2.0)) == pytest.approx(ref, abs=1e-14)
    assert abs(ref - 0.95277) < 1e-5


def test_conjugate_branch():
    # below the real axis the limit is the complex conjugate
    s = indicial_root(SpectralPoint(0.5 - 1j), 2.0)
    assert s == pytest.approx(0.5 - 0.25j)


def test_constant_profile_degeneracy():
    rng = np.random.default_rng(0)
    prof = AlphaProfile.constant(1.0)
    y = prof.grid()
    zetas = 0.5 + rng.uniform(1e-3, 3, 50) + 1j * rng.uniform(-3, 3, 50)
    err = max(np.max(np.abs(indicial_root(SpectralPoint(z), prof(y)) - z)) for z in zetas)
    assert err < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.0, 0.45))
def test_indicial_identity(re, im, amp):
    prof = AlphaProfile([(0, 1.0), (1, amp), (-2, amp / 3)])
    sp = SpectralPoint.for_profile(complex(0.5 + re, im), prof)
    f = build_indicial_field(sp, prof)
    if abs(sp.lam) > 1e-6:
        assert np.max(f.indicial_defect()) < 1e-10
    if re >= 0:
        assert np.all(f.sigma.real >= 0.5 - 1e-12)


def test_indicial_field_examples():
    f = build_indicial_field(SpectralPoint(0.75), AlphaProfile.constant(1.0))
    assert np.allclose(f.sigma, 0.75, atol=1e-15)
    sp = SpectralPoint.for_profile(0.5 + 0.6j, COS)
    f = build_indicial_field(sp, COS)
    inside = COS(f.y) ** 2 < 4 * sp.lam.real
    assert np.all(np.abs(f.sigma[inside].imag) > 0)
    assert np.all(f.sigma[~inside].imag == 0)
    sp = SpectralPoint.for_profile(0.9, COS)
    f = build_indicial_field(sp, COS)
    assert np.all(f.sigma.real > 0.5)
    assert scattering_regions(sp.lam.real, COS).empty


def test_profile_extrema():
    assert COS.alpha_min == pytest.approx(0.7, abs=1e-12)
    assert COS.alpha_max == pytest.approx(1.3, abs=1e-12)
    c = AlphaProfile.constant(2.0)
    assert c.alpha_min == c.alpha_max == 2.0
    with pytest.raises(ConfigError):
        AlphaProfile([(0, 1.0), (1, 1.5)])


def test_profile_derivatives_fd():
    prof = AlphaProfile([(0, 1.0), (1, 0.2), (-3, 0.05)], circumference=5.0)
    y = np.linspace(0, 5, 17)
    h = 1e-5
    fd = (prof(y + h) - prof(y - h)) / (2 * h)
    assert np.allclose(prof(y, 1), fd, atol=1e-9)
    fd2 = (prof(y + h, 1) - prof(y - h, 1)) / (2 * h)
    assert np.allclose(prof(y, 2), fd2, atol=1e-8)


def test_sigma_derivatives_fd():
    sp = SpectralPoint.for_profile(1.1 + 0.3j, COS)
    y = np.linspace(0.1, 6, 9)
    s, s1, s2 = indicial_root_derivatives(sp, COS, y)
    h = 1e-5
    fd = (indicial_root(sp, COS(y + h)) - indicial_root(sp, COS(y - h))) / (2 * h)
    assert np.allclose(s1, fd, atol=1e-8)
    fd2 = (indicial_root(sp, COS(y + h)) - 2 * s + indicial_root(sp, COS(y - h))) / h**2
    assert np.allclose(s2, fd2, atol=1e-4)


def test_gamma_set_examples():
    const = AlphaProfile.constant(1.0)
    hit, wit = gamma_set_test(SpectralPoint(0.5), const)
    assert hit and all(k == 0 for _, k in wit)
    assert not gamma_set_test(SpectralPoint(0.75), const)[0]


@pytest.mark.parametrize("zeta", [0.8, 0.5 + 0.3j, 0.2, 0.0, -0.45, 1.3])
def test_gamma_set_fine_scan(zeta):
    sp = SpectralPoint.for_profile(zeta, COS)
    hit, _ = gamma_set_test(sp, COS)
    # brute force on a 10x finer grid: does sigma cross or touch (1-k)/2?
    y = np.linspace(0, 2 * np.pi, 10 * COS.n_samples, endpoint=False)
    s = indicial_root(sp, COS(y))
    brute = False
    for k in range(0, 12):
        v = (1 - k) / 2
        d = s - v
        if np.min(np.abs(d)) < 1e-8:
            brute = True
        real = np.abs(d.imag) < 1e-12
        if np.any(real) and np.ptp(np.sign(d.real[real])) > 0:
            brute = True
    assert hit == brute


def test_scattering_regions_examples():
    sp = SpectralPoint.for_profile(0.5 + 0.6j, COS)
    assert sp.lam.real == pytest.approx(0.2989, abs=1e-12)
    reg = scattering_regions(0.2989, COS)
    assert len(reg.scattering_arcs) == 1 and len(reg.crossover_points) == 2
    c = (2 * np.sqrt(0.2989) - 1) / 0.3
    assert c == pytest.approx(0.3114, abs=1e-4)
    for p in reg.crossover_points:
        assert np.cos(p) == pytest.approx(c, abs=1e-10)
        assert abs(COS(p) ** 2 - 4 * 0.2989) < 1e-9
    y = COS.grid(512)
    assert np.array_equal(reg.contains(y), np.cos(y) < c)
    assert scattering_regions(0.1, COS).empty
    whole = scattering_regions(0.5, COS)
    assert whole.whole and not whole.crossover_points


@settings(max_examples=30, deadline=None)
@given(st.floats(0.11, 0.45), st.floats(0.0, 0.2))
def test_region_nesting(l1, dl):
    y = COS.grid(256)
    a = scattering_regions(l1, COS).contains(y)
    b = scattering_regions(l1 + dl, COS).contains(y)
    assert np.all(b[a])


def test_crossover_regular_check():
    assert crossover_regular_check(0.2989, COS)
    assert not crossover_regular_check(1.3**2 / 4, COS)
    assert crossover_regular_check(0.05, COS)


def test_branch_continuity():
    y = COS.grid(64)
    for s in (0.6, -0.6):
        ts = np.geomspace(1e-6, 1, 300)
        vals = np.array([indicial_root(SpectralPoint.for_profile(0.5 + t + 1j * s, COS), COS(y))
                         for t in ts])
        jumps = np.abs(np.diff(vals, axis=0))
        secant = np.abs(vals[2:] - vals[:-2]) / 2
        assert np.all(jumps[1:] <= 10 * secant + 1e-9)
        lim = indicial_root(SpectralPoint.for_profile(0.5 + 1j * s, COS), COS(y))
        assert np.allclose(vals[0], lim, atol=1e-3)
        inside = scattering_regions(SpectralPoint.for_profile(0.5 + 1j * s, COS).lam.real, COS).contains(y)
        assert np.all(np.sign(lim[inside].imag) == np.sign(s))


def test_sigma_extension_boundary_and_ray():
    sp = SpectralPoint.for_profile(0.5 + 0.6j, COS)
    ext = sigma_extension(sp, COS)
    y = COS.grid()
    assert np.allclose(sigma_extension_eval(ext, 0.0, y), indicial_root(sp, COS(y)), atol=1e-15)
    y0 = ext.crossover_points[0]
    for x in (1e-6, 1e-3, 1e-1):
        v = sigma_extension_eval(ext, x, y0)
        assert v == pytest.approx(0.5 + np.sqrt(x) * np.exp(1j * np.pi / 4), abs=1e-9)


def test_sigma_extension_properties():
    sp = SpectralPoint.for_profile(0.5 + 0.6j, COS)
    ext = sigma_extension(sp, COS)
    y = COS.grid(512)
    # property (2): indicial defect is O(x)
    for x in (1e-2, 1e-3, 1e-4):
        s = ext(x, y)
        defect = np.abs(COS(y) ** 2 * s * (1 - s) - sp.lam)
        assert np.max(defect) <= 2.0 * x
    # property (3): metric gradient scales like x^{1/2} at Lambda
    y0 = ext.crossover_points[0]
    xs = np.array([1e-2, 1e-3, 1e-4])
    grads = []
    for x in xs:
        h = 1e-4 * x
        sx = (ext(x + h, y0) - ext(x - h, y0)) / (2 * h)
        sy = (ext(x, y0 + h) - ext(x, y0 - h)) / (2 * h)
        grads.append(np.sqrt(COS(y0) ** 2 * x**2 * abs(sx) ** 2 + x**2 * abs(sy) ** 2))
    slope = np.polyfit(np.log(xs), np.log(grads), 1)[0]
    assert abs(slope - 0.5) < 0.1


def test_profile_token_roundtrip():
    prof = AlphaProfile([(0, 1.0), (2, -0.1), (-1, 0.05)], circumference=3.0, n_samples=64)
    assert "0:" in prof.token()
