"""Exact generation of the coefficient families of the optimal-truncation error term.

Everything here is exact rational arithmetic. ``gamma_j`` (the offset in the
terminant order) is specialised to ``-j`` before any series work, which is
the case needed for the remainder at ``N = x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import UnsupportedOrderError
from .kernel import (
    LaurentSeries,
    PowerSeries,
    bernoulli,
    pochhammer,
    ps_exp,
    ps_inv,
    ps_mul,
    ps_pow,
    ps_reverse,
)

#: Highest k for which the saddle-point polynomials A_{k,j} are available.
MAX_A_ORDER = 4
#: B_0 .. B_{MAX_B_TERMS-1} can be formed from the available A_{k,j}.
MAX_B_TERMS = MAX_A_ORDER + 1

# Saddle-point coefficients of T_{mu-j}(x) as polynomials in gamma_j,
# lowest degree first, each with its overall rational prefactor.
A_POLYNOMIALS: dict[int, tuple[Fraction, tuple[int, ...]]] = {
    0: (Fraction(1), (1,)),
    1: (Fraction(1, 6), (2, -6, 3)),
    2: (Fraction(1, 288), (-11, -120, 300, -192, 36)),
    3: (Fraction(2, 51840), (-587, 3510, 9765, -26280, 18900, -5400, 540)),
    4: (
        Fraction(1, 2448320),
        (120341, -44592, -521736, -722880, 2336040, -1826496, 635040, -103680, 6480),
    ),
}


def _poly(prefactor: Fraction, coeffs: tuple[int, ...], g: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * g + c
    return prefactor * acc


def _order_check(name: str, J: int, cap: int | None = None) -> None:
    if J < 1:
        raise ValueError(f"{name}: order must be at least 1, got {J}")
    if cap is not None and J > cap:
        raise UnsupportedOrderError(f"{name}: order {J} exceeds the supported cap of {cap}")


# ---------------------------------------------------------------------------
# Gamma-function quotients and the inverse factorial expansion
# ---------------------------------------------------------------------------


def bernoulli_poly(k: int, h: Fraction) -> Fraction:
    return sum((math.comb(k, i) * bernoulli(i) * h ** (k - i) for i in range(k + 1)), Fraction(0))


def log_gamma_shift_series(h: Fraction, J: int) -> PowerSeries:
    """``log(Gamma(s+h) / (Gamma(s) s**h))`` in powers of ``1/s``, order ``J-1``.

    Uses ``sum_{k>=2} (-1)**k (B_k(h) - B_k) / (k(k-1) s**(k-1))``.
    """
    h = Fraction(h)
    out = [Fraction(0)]
    for n in range(1, J):
        k = n + 1
        out.append(Fraction((-1) ** k) * (bernoulli_poly(k, h) - bernoulli(k)) / (k * (k - 1)))
    return PowerSeries(out)


def gamma_ratio_series(J: int) -> PowerSeries:
    """Coefficients of ``s**-k`` (k < J) in ``s**(-1/2) Gamma(s+1/2)/Gamma(s)``."""
    _order_check("gamma_ratio_series", J)
    return ps_exp(log_gamma_shift_series(Fraction(1, 2), J))


def a2_series(J: int) -> PowerSeries:
    """``(1/s) (Gamma(s+1/2)/Gamma(s))**2`` in powers of ``1/s``."""
    _order_check("a2_series", J)
    g = gamma_ratio_series(J)
    return ps_mul(g, g)


def inverse_factorial_series(j: int, order: int) -> PowerSeries:
    """``1/(1-2s)_j`` in powers of ``t = 1/s``.

    ``1/(i+1-2s) = (-t/2) / (1 - (i+1) t/2)``.
    """
    out = PowerSeries.constant(1, order)
    for i in range(j):
        factor = PowerSeries([0, Fraction(-1, 2)], order) * ps_inv(
            PowerSeries([1, Fraction(-(i + 1), 2)], order)
        )
        out = ps_mul(out, factor)
    return out


@lru_cache(maxsize=None)
def _c_coeffs(J: int) -> tuple[Fraction, ...]:
    target = a2_series(J)
    order = J - 1
    basis = [inverse_factorial_series(j, order) for j in range(J)]
    c: list[Fraction] = []
    for j in range(J):
        known = sum((c[i] * basis[i][j] for i in range(j)), Fraction(0))
        c.append((target[j] - known) / basis[j][j])
    return tuple(c)


def c_coeffs(J: int) -> list[Fraction]:
    """``c_0 .. c_{J-1}`` of the inverse factorial expansion.

    Solves the triangular system obtained by matching ``a2_series`` against
    ``sum_j c_j / (1-2s)_j`` power by power in ``1/s``.
    """
    _order_check("c_coeffs", J)
    return list(_c_coeffs(J))


# ---------------------------------------------------------------------------
# Saddle-point and terminant coefficients
# ---------------------------------------------------------------------------


def a_coeff(k: int, j: int) -> Fraction:
    """``A_{k,j}`` at ``gamma_j = -j``."""
    if k < 0 or j < 0:
        raise ValueError("a_coeff: k and j must be non-negative")
    if k > MAX_A_ORDER:
        raise UnsupportedOrderError(f"A_{{k,j}} is only available for k <= {MAX_A_ORDER}, got k={k}")
    pref, poly = A_POLYNOMIALS[k]
    return _poly(pref, poly, Fraction(-j))


def saddle_map_series(order: int) -> PowerSeries:
    """``w`` as a series in ``u = tau - 1`` on the branch ``w ~ u``.

    From ``w**2/2 = u - log(1+u)``.
    """
    # 2(u - log(1+u))/u**2 = sum_{n>=0} 2(-1)**n u**n / (n+2)
    inner = PowerSeries([Fraction(2 * (-1) ** n, n + 2) for n in range(order)])
    root = ps_pow(inner, Fraction(1, 2))
    return PowerSeries([0, *root.coeffs])


def tau_of_w(order: int) -> PowerSeries:
    """``tau(w) - 1`` by reverting the saddle map."""
    return ps_reverse(saddle_map_series(order))


def g_laurent(j: int, order: int) -> LaurentSeries:
    """``tau**(gamma_j - 1)/(1 - tau) * dtau/dw`` with ``gamma_j = -j``."""
    u = tau_of_w(order)
    du = u.derivative()  # order - 1
    n = order - 1
    u_over_w = PowerSeries(u.coeffs[1:])  # order - 1
    power = ps_pow(PowerSeries.constant(1, n) + u.truncate(n), Fraction(-j - 1))
    numerator = -ps_mul(ps_mul(power, du), ps_inv(u_over_w))
    return LaurentSeries.divide_by_t(numerator)


@lru_cache(maxsize=None)
def _g_coeffs(kmax: int, j: int) -> tuple[Fraction, ...]:
    order = kmax + 4
    series = g_laurent(j, order)
    regular = (series - LaurentSeries(Fraction(-1), PowerSeries.constant(0, series.regular.order))).regular
    return tuple(regular.coeffs[: kmax + 1])


def g_coeffs(kmax: int, j: int) -> list[Fraction]:
    """``G_{k,j}`` for ``k = 0..kmax`` at ``gamma_j = -j``.

    Regular part of the Laurent expansion after removing the ``-1/w`` pole.
    """
    if kmax < 0 or j < 0:
        raise ValueError("g_coeffs: kmax and j must be non-negative")
    return list(_g_coeffs(kmax, j))


def d_coeff(k: int, j: int) -> Fraction:
    """``D_{k,j} = A_{k,j} + 2**(k+1) (1/2)_k G_{2k,j}``."""
    a = a_coeff(k, j)
    g = g_coeffs(2 * k, j)[2 * k]
    return a + 2 ** (k + 1) * pochhammer(Fraction(1, 2), k) * g


def b_coeffs(J: int) -> list[Fraction]:
    """``B_0 .. B_{J-1}`` of the remainder expansion at ``N = x``.

    ``B_j = sum_{k=0}^{j} (-1)**k c_k D_{j-k,k}``.
    """
    _order_check("b_coeffs", J, MAX_B_TERMS)
    c = c_coeffs(J)
    return [sum(((-1) ** k * c[k] * d_coeff(j - k, k) for k in range(j + 1)), Fraction(0)) for j in range(J)]


# ---------------------------------------------------------------------------
# Stirling series and the 1/x expansions built from the families above
# ---------------------------------------------------------------------------


def stirling_series(J: int) -> PowerSeries:
    """Braced factor of ``Gamma(z) = sqrt(2 pi) z**(z-1/2) e**-z {...}`` in powers of ``1/z``."""
    _order_check("stirling_series", J)
    logs = [Fraction(0)] * J
    for k in range(1, J):
        if k % 2 == 1:
            n = k + 1
            logs[k] = bernoulli(n) / (n * (n - 1))
    return ps_exp(PowerSeries(logs))


@dataclass(frozen=True)
class ExpansionCoeffs:
    """Bracketed series ``prefactor * {terms[0] + terms[1]/x + ...}``.

    ``prefactor`` is a fixed symbolic tag naming the closed-form factor in
    front of the bracket.
    """

    prefactor: str
    terms: tuple[Fraction, ...]

    def __getitem__(self, j: int) -> Fraction:
        return self.terms[j]

    def __len__(self) -> int:
        return len(self.terms)

    def series(self) -> PowerSeries:
        return PowerSeries(self.terms)


REMAINDER_PREFACTOR = "7*exp(-2x)/(12*sqrt(pi)*x^(3/2))"
R2N_PREFACTOR = "7*exp(-4x)/(24*sqrt(2*pi)*x^(3/2))"
I0SQ_PREFACTOR = "exp(4x)/(4*pi*x)"
RATIO_PREFACTOR = "7*sqrt(2*pi)*exp(-8x)/(12*x^(1/2))"
DELTA_PREFACTOR = "-5*exp(-4x)/(24*sqrt(2*pi)*x^(3/2))"
CENTRAL_PREFACTOR = "exp(-2s)/(sqrt(pi)*s^(3/2))"


def central_term_coeffs(J: int) -> ExpansionCoeffs:
    """Bracket of ``(1/2s) ((2s)!)**3 / ((s!)**4 (8s)**(2s))`` in powers of ``1/s``.

    ``Gamma(2s)/(pi s (2s)**(2s))`` contributes the Stirling series at ``2s``,
    the remaining factor is ``a2_series``.
    """
    _order_check("central_term_coeffs", J, 4)
    product = ps_mul(stirling_series(J).scale(Fraction(1, 2)), a2_series(J))
    return ExpansionCoeffs(CENTRAL_PREFACTOR, product.coeffs)


def i0sq_coeffs(J: int) -> ExpansionCoeffs:
    """Bracket of ``(I_0(2x))**2`` with the exponentially small part dropped: ``c_k / 4**k``."""
    _order_check("i0sq_coeffs", J, 5)
    return ExpansionCoeffs(I0SQ_PREFACTOR, tuple(ck / 4**k for k, ck in enumerate(c_coeffs(J))))


def hankel_i0_series(J: int) -> PowerSeries:
    """``sqrt(2 pi y) e**-y I_0(y)`` in powers of ``1/y``, exponentially small part dropped."""
    half = Fraction(1, 2)
    return PowerSeries(
        pochhammer(half, k) ** 2 / (math.factorial(k) * 2**k) for k in range(J)
    )


def remainder_coeffs(J: int) -> ExpansionCoeffs:
    """Bracket of the ``R_N(x)`` expansion at ``N = x``: ``B_j / (B_0 2**j)``."""
    b = b_coeffs(J)
    return ExpansionCoeffs(REMAINDER_PREFACTOR, tuple(bj / (b[0] * 2**j) for j, bj in enumerate(b)))


def r2n_coeffs(J: int) -> ExpansionCoeffs:
    """Bracket of ``R_{2N}(2x)``: the remainder expansion at argument ``2x``."""
    b = b_coeffs(J)
    return ExpansionCoeffs(R2N_PREFACTOR, tuple(bj / (b[0] * 4**j) for j, bj in enumerate(b)))


def ratio_error_coeffs(J: int) -> ExpansionCoeffs:
    """Bracket of ``R_{2N}(2x) / (I_0(2x))**2``, by series division."""
    _order_check("ratio_error_coeffs", J, MAX_B_TERMS)
    quotient = ps_mul(r2n_coeffs(J).series(), ps_inv(i0sq_coeffs(J).series()))
    return ExpansionCoeffs(RATIO_PREFACTOR, quotient.coeffs)


def delta_coeffs(J: int) -> ExpansionCoeffs:
    """Bracket of Demailly's remainder ``Delta(x)``.

    ``Delta = R_{2N}(2x) - central term at s = 2x``; over the common scale
    ``e**-4x / (24 sqrt(2 pi) x**(3/2))`` this is ``7 {R} - 12 {central}``,
    renormalised by the leading ``-5``.
    """
    _order_check("delta_coeffs", J, 4)
    r2n = r2n_coeffs(J).series()
    central = central_term_coeffs(J).series().scale(Fraction(1, 2))
    combined = 7 * r2n - 12 * central
    lead = combined[0]
    return ExpansionCoeffs(DELTA_PREFACTOR, tuple(t / lead for t in combined.coeffs))


def ghat_coeffs(j: int, kmax: int = 4) -> list[Fraction]:
    """``6**(2k) G_{2k,j}`` for ``k = 0..kmax``."""
    g = g_coeffs(2 * kmax, j)
    return [6 ** (2 * k) * g[2 * k] for k in range(kmax + 1)]


@dataclass(frozen=True)
class CoeffTables:
    """All coefficient families up to ``max_order`` terms (read-only once built)."""

    c: tuple[Fraction, ...]
    A: dict
    Ghat: dict
    D: dict
    B: tuple[Fraction, ...]
    max_order: int


@lru_cache(maxsize=None)
def coeff_tables(max_order: int = MAX_B_TERMS) -> CoeffTables:
    _order_check("coeff_tables", max_order, MAX_B_TERMS)
    ks = range(max_order)
    A = {(k, j): a_coeff(k, j) for k in ks for j in ks}
    Ghat = {(2 * k, j): ghat_coeffs(j, max_order - 1)[k] for k in ks for j in ks}
    D = {(k, j): d_coeff(k, j) for k in ks for j in ks}
    return CoeffTables(
        c=tuple(c_coeffs(max_order + 1)),
        A=A,
        Ghat=Ghat,
        D=D,
        B=tuple(b_coeffs(max_order)),
        max_order=max_order,
    )
