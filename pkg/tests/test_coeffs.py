from fractions import Fraction as F

import mpmath
import pytest

from brentmcmillan import coeffs as cf
from brentmcmillan.errors import UnsupportedOrderError
from brentmcmillan.kernel import PowerSeries, log1p_series, ps_compose, ps_mul

# Tabulated polynomials for 6**(2k) G_{2k,j} in gamma_j, lowest degree first.
GHAT_TABULATED = [
    (F(1), [F(2, 3), -1]),
    (F(1, 15), [46, -225, 270, -90]),
    (F(1, 70), [230, -3969, 11340, -11760, 5040, -756]),
    (F(1, 350), [-3626, -17781, 183330, -397530, 370440, -170100, 37800, -3240]),
    (
        F(1, 231000),
        [-4032746, 43924815, 88280280, -743046480, 1353607200, -1160830440, 541870560, -141134400, 19245600, -1069200],
    ),
]


def poly(prefactor, cs, g):
    return prefactor * sum(F(c) * F(g) ** i for i, c in enumerate(cs))


def test_gamma_ratio_series():
    assert cf.gamma_ratio_series(6).coeffs == (
        1, F(-1, 8), F(1, 128), F(5, 1024), F(-21, 32768), F(-399, 262144)
    )


def test_a2_series():
    assert cf.a2_series(6).coeffs == (1, F(-1, 4), F(1, 32), F(1, 128), F(-5, 2048), F(-23, 8192))


def test_c_coefficients():
    assert cf.c_coeffs(6) == [1, F(1, 2), F(5, 8), F(21, 16), F(507, 128), F(4035, 256)]


def test_c_reproduce_a2_through_triangular_relations():
    c = cf.c_coeffs(6)
    a = cf.a2_series(6)
    # a_k 2**k written through the c_j, as in the expansion of 1/(1-2s)_j in 1/s
    assert a[1] * 2 == -c[1]
    assert a[2] * 4 == c[2] - c[1]
    assert a[3] * 8 == -c[1] + 3 * c[2] - c[3]
    assert a[4] * 16 == -c[1] + 7 * c[2] - 6 * c[3] + c[4]
    assert a[5] * 32 == -c[1] + 15 * c[2] - 25 * c[3] + 10 * c[4] - c[5]


@pytest.mark.parametrize("s", [40, 120])
def test_gamma_ratio_series_matches_numerics(s):
    with mpmath.workdps(40):
        exact = mpmath.gamma(s + mpmath.mpf(1) / 2) / mpmath.gamma(s) / mpmath.sqrt(s)
        approx = sum(mpmath.mpf(c.numerator) / c.denominator / mpmath.mpf(s) ** k
                     for k, c in enumerate(cf.gamma_ratio_series(8)))
        assert abs(exact - approx) < mpmath.mpf(s) ** -7


def test_tau_reversion():
    tau = cf.tau_of_w(7)
    assert tau.coeffs[:6] == (0, 1, F(1, 3), F(1, 36), F(-1, 270), F(1, 4320))
    assert tau[6] == F(1, 17010)


def test_saddle_map_residual_vanishes():
    order = 12
    u = cf.tau_of_w(order)
    log_tau = ps_compose(log1p_series(order), u)
    w2 = ps_mul(PowerSeries.variable(order), PowerSeries.variable(order))
    residual = u - log_tau - w2 * F(1, 2)
    assert residual == PowerSeries.constant(0, order)


@pytest.mark.parametrize("j", range(5))
def test_ghat_polynomials(j):
    want = [poly(pf, cs, -j) for pf, cs in GHAT_TABULATED]
    assert cf.ghat_coeffs(j, 4) == want


def test_g_laurent_pole():
    series = cf.g_laurent(0, 6)
    assert series.principal == -1


@pytest.mark.parametrize("k", range(5))
@pytest.mark.parametrize("j", range(5))
def test_a_coefficients_are_tabulated_polynomials(k, j):
    pf, cs = cf.A_POLYNOMIALS[k]
    assert cf.a_coeff(k, j) == poly(pf, cs, -j)


def test_a_low_orders_by_hand():
    assert cf.a_coeff(0, 3) == 1
    assert cf.a_coeff(1, 0) == F(1, 3)
    assert cf.a_coeff(2, 0) == F(-11, 288)


def test_d_coefficient_definition():
    for k in range(5):
        for j in range(5):
            g = cf.g_coeffs(2 * k, j)[2 * k]
            assert cf.d_coeff(k, j) == cf.a_coeff(k, j) + 2 ** (k + 1) * cf.pochhammer(F(1, 2), k) * g


def test_b_coefficients():
    b = cf.b_coeffs(5)
    assert b[0] == F(7, 3)
    assert b[1] == F(-449, 270)
    assert b[2] == F(55949, 30240)
    assert b[3] == F(-87499, 17010)
    assert b[4] == F(137885143760267, 7067908108800)


@pytest.mark.xfail(strict=True, reason="tabulated B_2 = 55949/3024 contradicts the tabulated remainder bracket 55949/282240")
def test_b2_equals_tabulated_value():
    assert cf.b_coeffs(3)[2] == F(55949, 3024)


def test_b2_consistent_with_remainder_bracket():
    # bracket term j is B_j / (B_0 2**j); the tabulated bracket fixes B_2
    assert F(55949, 282240) * F(7, 3) * 4 == F(55949, 30240)


def test_remainder_bracket():
    assert cf.remainder_coeffs(5).terms == (
        1, F(-449, 1260), F(55949, 282240), F(-87499, 317520), F(137885143760267, 263868569395200)
    )


def test_r2n_bracket():
    assert cf.r2n_coeffs(5).terms == (
        1, F(-449, 2520), F(55949, 1128960), F(-87499, 2540160), F(137885143760267, 4221897110323200)
    )


def test_i0_squared_bracket():
    assert cf.i0sq_coeffs(5).terms == (1, F(1, 8), F(5, 128), F(21, 1024), F(507, 32768))


def test_i0_squared_matches_hankel_square():
    h = cf.hankel_i0_series(6)
    sq = ps_mul(h, h)
    # (I_0(y))**2 ~ e**2y/(2 pi y) * sq(1/y); at y = 2x the k-th term picks up 2**-k
    assert tuple(t / 2**k for k, t in enumerate(sq.coeffs[:5])) == cf.i0sq_coeffs(5).terms


def test_ratio_bracket():
    assert cf.ratio_error_coeffs(5).terms == (
        1, F(-191, 630), F(18211, 376320), F(-799201, 16257024), F(116774621369177, 4221897110323200)
    )


def test_stirling_series():
    assert cf.stirling_series(5).coeffs == (1, F(1, 12), F(1, 288), F(-139, 51840), F(-571, 2488320))


def test_central_term_bracket():
    assert cf.central_term_coeffs(4).terms == (1, F(-5, 24), F(25, 1152), F(3551, 414720))


def test_delta_bracket():
    assert cf.delta_coeffs(4).terms == (1, F(-1, 1800), F(-45449, 806400), F(294911, 5806080))


def test_order_caps():
    with pytest.raises(UnsupportedOrderError):
        cf.b_coeffs(6)
    with pytest.raises(UnsupportedOrderError):
        cf.a_coeff(5, 0)
    with pytest.raises(UnsupportedOrderError):
        cf.delta_coeffs(5)
    with pytest.raises(ValueError):
        cf.c_coeffs(0)


def test_coeff_tables_bundle():
    t = cf.coeff_tables()
    assert t.B == tuple(cf.b_coeffs(5))
    assert t.c[5] == F(4035, 256)
    assert t.Ghat[(8, 1)] == cf.ghat_coeffs(1, 4)[4]
    assert t.D[(2, 3)] == cf.d_coeff(2, 3)
