import math

import mpmath
import numpy as np
import pytest
from scipy.special import spherical_jn

from wmcg3d.bessel import L_MAX, bessel_boundary_roots, spherical_bessel
from wmcg3d.errors import InvalidArgument, UnsupportedDegree
from wmcg3d.harmonics import real_spherical_harmonic
from wmcg3d.quadrature import adaptive_integrate, sphere_rule


def series_oracle(l, x, dps=60):
    """j_l(x) from its power series in 60-digit arithmetic."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        total = mpmath.mpf(0)
        for k in range(200):
            total += (-x * x / 2) ** k / (mpmath.factorial(k) * mpmath.fac2(2 * l + 2 * k + 1))
        return float(x ** l * total)


class TestSphericalBessel:
    def test_j0_at_zero(self):
        assert spherical_bessel(0, 0.0) == 1.0

    @pytest.mark.parametrize("l", range(1, L_MAX + 1))
    def test_jl_at_zero(self, l):
        assert spherical_bessel(l, 0.0) == 0.0

    def test_j1_at_pi(self):
        assert spherical_bessel(1, math.pi) == pytest.approx(1 / math.pi, rel=1e-14)

    def test_series_oracle_small_x(self):
        assert spherical_bessel(3, 0.1) == pytest.approx(series_oracle(3, 0.1), rel=1e-13)

    @pytest.mark.parametrize("l", range(L_MAX + 1))
    def test_matches_scipy(self, l):
        x = np.linspace(0.0, 40.0, 4001)
        np.testing.assert_allclose(spherical_bessel(l, x), spherical_jn(l, x), rtol=0, atol=2e-14)

    @pytest.mark.parametrize("l", [2, 5, 8])
    def test_small_x_against_series(self, l):
        for x in (1e-6, 0.01, 0.5, l - 0.1, l + 0.49):
            ref = series_oracle(l, x)
            assert spherical_bessel(l, x) == pytest.approx(ref, rel=1e-12)

    def test_extension_minus_one(self):
        assert spherical_bessel(-1, 2.0) == pytest.approx(math.cos(2.0) / 2.0, rel=1e-15)

    def test_unsupported_degree(self):
        with pytest.raises(UnsupportedDegree):
            spherical_bessel(9, 1.0)

    def test_non_finite(self):
        with pytest.raises(InvalidArgument):
            spherical_bessel(1, math.inf)


def scan_roots(f, count, hi, step=1e-3):
    """Dense sign-change scan plus bisection, independent of brentq."""
    xs = np.arange(step, hi, step)
    vals = f(xs)
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[:count]:
        a, b = xs[i], xs[i + 1]
        fa = f(np.array([a]))[0]
        for _ in range(80):
            m = 0.5 * (a + b)
            fm = f(np.array([m]))[0]
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
        out.append(0.5 * (a + b))
    return np.array(out)


class TestBoundaryRoots:
    def test_l1_multiples_of_pi(self):
        np.testing.assert_allclose(bessel_boundary_roots(1, 1.0, 3), [math.pi, 2 * math.pi, 3 * math.pi], rtol=1e-15)

    def test_l0_half_odd_multiples(self):
        np.testing.assert_allclose(bessel_boundary_roots(0, 1.0, 2), [math.pi / 2, 1.5 * math.pi], rtol=1e-15)

    def test_l2_first_root(self):
        ref = scan_roots(lambda x: spherical_jn(1, x), 1, 10.0)[0]
        assert bessel_boundary_roots(2, 1.0, 1)[0] == pytest.approx(ref, abs=1e-12)
        assert ref == pytest.approx(4.493409457909064, abs=1e-12)

    @pytest.mark.parametrize("l", range(1, L_MAX + 1))
    def test_no_root_skipped(self, l):
        k = bessel_boundary_roots(l, 1.0, 16)
        ref = scan_roots(lambda x: spherical_jn(l - 1, x), 16, 80.0)
        np.testing.assert_allclose(k, ref, atol=1e-10)
        assert np.all(np.diff(k) > 0)

    @pytest.mark.parametrize("R", [1.0, 2.5, 3.5])
    def test_residual(self, R):
        for l in range(L_MAX + 1):
            k = bessel_boundary_roots(l, R, 16)
            assert np.max(np.abs(spherical_bessel(l - 1, k * R))) < 1e-10

    def test_bad_count(self):
        with pytest.raises(InvalidArgument):
            bessel_boundary_roots(1, 1.0, 0)

    def test_bad_radius(self):
        with pytest.raises(InvalidArgument):
            bessel_boundary_roots(1, -1.0, 2)


class TestRealHarmonics:
    def test_y00(self):
        assert real_spherical_harmonic(0, 0, 1.2, 3.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-15)

    def test_y10_pole(self):
        # oracle: normalize cos(theta) by quadrature of its square
        norm2, _ = adaptive_integrate(lambda t: 2 * math.pi * np.cos(t) ** 2 * np.sin(t), 0, math.pi, min_nodes=2000)
        assert real_spherical_harmonic(1, 0, 0.0, 0.0) == pytest.approx(1 / math.sqrt(norm2), rel=1e-12)
        assert real_spherical_harmonic(1, 0, 0.0, 0.0) == pytest.approx(math.sqrt(3 / (4 * math.pi)), rel=1e-15)

    def test_gram_identity(self):
        theta, phi, w = sphere_rule(12, 24)
        lm = [(l, m) for l in range(5) for m in range(-l, l + 1)]
        Y = np.stack([real_spherical_harmonic(l, m, theta, phi) for l, m in lm])
        G = (Y * w) @ Y.T
        np.testing.assert_allclose(G, np.eye(len(lm)), atol=1e-8)

    def test_gram_identity_high_degree(self):
        theta, phi, w = sphere_rule(20, 40)
        lm = [(l, m) for l in range(L_MAX + 1) for m in range(-l, l + 1)]
        Y = np.stack([real_spherical_harmonic(l, m, theta, phi) for l, m in lm])
        np.testing.assert_allclose((Y * w) @ Y.T, np.eye(len(lm)), atol=1e-12)

    def test_span_matches_complex_harmonics(self):
        # each real harmonic is a unit-norm combination of complex ones of the same degree
        from scipy.special import sph_harm_y

        theta, phi, w = sphere_rule(12, 24)
        for l in range(4):
            C = np.stack([sph_harm_y(l, m, theta, phi) for m in range(-l, l + 1)])
            for m in range(-l, l + 1):
                y = real_spherical_harmonic(l, m, theta, phi)
                coef = (C.conj() * w) @ y
                assert np.sum(np.abs(coef) ** 2) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("l,m", [(1, 2), (-1, 0), (2, -3)])
    def test_invalid(self, l, m):
        with pytest.raises(InvalidArgument):
            real_spherical_harmonic(l, m, 0.1, 0.2)
