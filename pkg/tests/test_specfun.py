import cmath

import numpy as np
import pytest

from coldscatter.specfun import (
    BesselKind,
    RangeError,
    riccati_derivative,
    sph_bessel,
)


def series_spherical_j(order, z, terms=80):
    """Independent ascending-power-series evaluation of j_n(z).

    j_n(z) = z^n sum_k (-z^2/2)^k / (k! (2n+2k+1)!!)
    """
    double_fact = 1.0
    for m in range(1, 2 * order + 2, 2):
        double_fact *= m
    total = 0.0 + 0.0j
    term = 1.0 / double_fact
    for k in range(terms):
        if k > 0:
            term *= (-z * z / 2.0) / (k * (2 * order + 2 * k + 1))
        total += term
        if abs(term) < 1e-18 * max(abs(total), 1e-30):
            break
    return z**order * total


class TestClosedForms:
    @pytest.mark.parametrize("z", [0.7, 2.5 - 1.1j, -3.0 + 0.4j, 17.0 + 2.0j])
    def test_j0(self, z):
        assert sph_bessel(BesselKind.J, 0, z) == pytest.approx(cmath.sin(z) / z, rel=1e-13)

    @pytest.mark.parametrize("z", [0.7, 2.5 - 1.1j, -3.0 + 0.4j])
    def test_h1_0(self, z):
        expected = -1j * cmath.exp(1j * z) / z
        assert sph_bessel(BesselKind.H1, 0, z) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("z", [0.7, 2.5 - 1.1j, 9.0])
    def test_riccati_j0_is_cos(self, z):
        assert riccati_derivative(BesselKind.J, 0, z) == pytest.approx(cmath.cos(z), rel=1e-12)

    @pytest.mark.parametrize("z", [0.7, 2.5 - 1.1j, 9.0])
    def test_riccati_h1_0(self, z):
        assert riccati_derivative(BesselKind.H1, 0, z) == pytest.approx(
            cmath.exp(1j * z), rel=1e-12
        )


class TestSeriesOracle:
    @pytest.mark.parametrize(
        "order,z",
        [
            (5, 2.0 + 1.0j),
            (3, 0.3 - 0.2j),
            (12, 5.0 + 2.5j),
            (1, 1e-3 + 1e-3j),
            (25, 9.0 - 1.0j),
        ],
    )
    def test_regular_matches_series(self, order, z):
        got = sph_bessel(BesselKind.J, order, z)
        want = series_spherical_j(order, z)
        assert got == pytest.approx(want, rel=1e-12)


class TestFiniteDifference:
    @pytest.mark.parametrize("kind", [BesselKind.J, BesselKind.H1, BesselKind.H2])
    def test_riccati_derivative(self, kind):
        order, z, h = 3, 1.7 - 0.4j, 1e-6

        def zf(w):
            return w * sph_bessel(kind, order, w)

        fd = (zf(z + h) - zf(z - h)) / (2 * h)
        assert riccati_derivative(kind, order, z) == pytest.approx(fd, rel=1e-6)


class TestInvariants:
    zs = [0.4 + 0.1j, 2.0 + 1.0j, 11.0 - 3.0j, 45.0 + 0.5j, 150.0 + 1.0j]

    @pytest.mark.parametrize("z", zs)
    @pytest.mark.parametrize("order", [0, 1, 4, 15, 40])
    def test_wronskian(self, order, z):
        j = sph_bessel(BesselKind.J, order, z)
        h = sph_bessel(BesselKind.H1, order, z)
        dj = riccati_derivative(BesselKind.J, order, z)
        dh = riccati_derivative(BesselKind.H1, order, z)
        assert j * dh - h * dj == pytest.approx(1j / z, rel=1e-10)

    @pytest.mark.parametrize("z", zs)
    def test_regular_conjugation(self, z):
        for order in (0, 2, 9):
            assert sph_bessel(BesselKind.J, order, np.conj(z)) == pytest.approx(
                np.conj(sph_bessel(BesselKind.J, order, z)), rel=1e-12
            )

    @pytest.mark.parametrize("x", [0.8, 3.7, 26.0, 120.0])
    def test_h2_conjugate_of_h1_on_real_axis(self, x):
        for order in (0, 1, 6, 20):
            h1 = sph_bessel(BesselKind.H1, order, x)
            h2 = sph_bessel(BesselKind.H2, order, x)
            assert h2 == pytest.approx(np.conj(h1), rel=1e-11)

    def test_three_term_recurrence(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            order = int(rng.integers(1, 40))
            z = complex(rng.uniform(0.5, 60), rng.uniform(-5, 5))
            for kind in (BesselKind.J, BesselKind.H1):
                fm = sph_bessel(kind, order - 1, z)
                f0 = sph_bessel(kind, order, z)
                fp = sph_bessel(kind, order + 1, z)
                resid = fm + fp - (2 * order + 1) / z * f0
                scale = max(abs(fm), abs(fp), abs(f0))
                assert abs(resid) / scale < 1e-9


class TestRangeHandling:
    def test_order_cap(self):
        with pytest.raises(RangeError):
            sph_bessel(BesselKind.J, 513, 1.0)

    def test_argument_cap(self):
        with pytest.raises(RangeError):
            sph_bessel(BesselKind.J, 1, 300.0)

    def test_hankel_singular_origin(self):
        with pytest.raises(RangeError):
            sph_bessel(BesselKind.H1, 0, 0.0)

    def test_hankel_overflow_reported(self):
        # tiny argument at high order overflows h; must raise, not return inf
        with pytest.raises(RangeError):
            sph_bessel(BesselKind.H1, 400, 1e-3)

    def test_regular_finite_at_small_argument(self):
        assert sph_bessel(BesselKind.J, 0, 0.0) == 1.0
        assert sph_bessel(BesselKind.J, 3, 0.0) == 0.0
        assert abs(sph_bessel(BesselKind.J, 8, 1e-4 + 0j)) < 1e-30
