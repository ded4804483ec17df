"""Numerical evaluation of the asymptotic error expansions, and the terminant oracle.

Expansion evaluators return plain estimates. The only rigorous bound used
for certification elsewhere is :func:`bj_bound_upper`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
from gmpy2 import mpfr

from . import coeffs
from .bessel import (
    _i0k0_fixed,
    asym_partial_sum_exact,
    euler_gamma_fixed,
    exact_remainder,
    product_term,
    required_remainder_bits,
    truncation_bound,
)
from .errors import PrecisionError, UnsupportedOrderError
from .kernel import Fixed, Real, local, real_to_fraction

DEMAILLY_CONSTANT = Fraction(863, 1000)


def _check_m(M: int, cap: int = coeffs.MAX_B_TERMS) -> None:
    if M < 1:
        raise ValueError(f"M must be at least 1, got {M}")
    if M > cap:
        raise UnsupportedOrderError(f"M={M} exceeds the supported cap of {cap}")


def _bracket(terms: Sequence[Fraction], inv_var: Fraction, M: int) -> mpfr:
    """``sum_{j<M} terms[j] * inv_var**j``, evaluated exactly then rounded by the caller."""
    acc = Fraction(0)
    for t in reversed(terms[:M]):
        acc = acc * inv_var + t
    return mpfr(gmpy2.mpq(acc.numerator, acc.denominator))


def r_expansion_eval(x: int, M: int, p: int = 128) -> Real:
    """``e**-2x / (4 sqrt(pi) x**(3/2)) * sum_{j<M} B_j (2x)**-j``."""
    _check_m(M)
    b = coeffs.b_coeffs(M)
    with local(p + 32) as ctx:
        s = _bracket(b, Fraction(1, 2 * x), M)
        pref = gmpy2.exp(mpfr(-2 * x)) / (4 * gmpy2.sqrt(ctx.const_pi()) * mpfr(x) ** mpfr(1.5))
        v = pref * s
    with local(p):
        return mpfr(v)


def r2n_eval(x: int, M: int, p: int = 128) -> Real:
    """``7 e**-4x / (24 sqrt(2 pi) x**(3/2)) {1 - 449/(2520 x) + ...}`` to ``M`` terms."""
    _check_m(M)
    terms = coeffs.r2n_coeffs(M).terms
    with local(p + 32) as ctx:
        s = _bracket(terms, Fraction(1, x), M)
        pref = 7 * gmpy2.exp(mpfr(-4 * x)) / (24 * gmpy2.sqrt(2 * ctx.const_pi()) * mpfr(x) ** mpfr(1.5))
        v = pref * s
    with local(p):
        return mpfr(v)


def ratio_error_eval(x: int, M: int, p: int = 128) -> Real:
    """``7 sqrt(2 pi) e**-8x / (12 x**(1/2)) {1 - 191/(630 x) + ...}`` to ``M`` terms."""
    _check_m(M)
    terms = coeffs.ratio_error_coeffs(M).terms
    with local(p + 32) as ctx:
        s = _bracket(terms, Fraction(1, x), M)
        pref = 7 * gmpy2.sqrt(2 * ctx.const_pi()) * gmpy2.exp(mpfr(-8 * x)) / (12 * gmpy2.sqrt(mpfr(x)))
        v = pref * s
    with local(p):
        return mpfr(v)


def i0sq_eval(x: int, M: int, p: int = 128) -> Real:
    """``e**4x / (4 pi x) {1 + 1/(8x) + ...}`` to ``M`` terms."""
    _check_m(M)
    terms = coeffs.i0sq_coeffs(M).terms
    with local(p + 32) as ctx:
        s = _bracket(terms, Fraction(1, x), M)
        v = gmpy2.exp(mpfr(4 * x)) / (4 * ctx.const_pi() * x) * s
    with local(p):
        return mpfr(v)


def delta_expansion_eval(x: int, M: int, p: int = 128) -> Real:
    """``-5 e**-4x / (24 sqrt(2 pi) x**(3/2)) {1 - 1/(1800 x) - ...}`` to ``M <= 4`` terms."""
    _check_m(M, 4)
    terms = coeffs.delta_coeffs(M).terms
    with local(p + 32) as ctx:
        s = _bracket(terms, Fraction(1, x), M)
        pref = -5 * gmpy2.exp(mpfr(-4 * x)) / (24 * gmpy2.sqrt(2 * ctx.const_pi()) * mpfr(x) ** mpfr(1.5))
        v = pref * s
    with local(p):
        return mpfr(v)


def central_term_exact(x: int) -> Fraction:
    """``(1/4x) ((4x)!)**3 / (((2x)!)**4 (16x)**(4x))``: the term ``k = 2x`` at argument ``2x``."""
    return product_term(2 * x, 2 * x) / (4 * x)


def delta_exact(x: int, p: int | None = None) -> Real:
    """Demailly's ``Delta(x) = R_{2N}(2x) - central term`` from the convergent-series oracle.

    ``p`` defaults to (and must not be below) the exact-remainder policy at ``2x``.
    """
    need = required_remainder_bits(2 * x)
    p = need if p is None else p
    if p < need:
        raise PrecisionError(f"delta_exact at x={x} needs p >= {need}, got {p}")
    bits = p + 64
    product = _i0k0_fixed(Fraction(2 * x), bits)
    partial = asym_partial_sum_exact(2 * x, 2 * x) + central_term_exact(x)
    return (product - Fixed.from_fraction(partial, bits)).to_real(p)


def demailly_epsilon(x: int, p: int | None = None) -> Real:
    """``eps(x) = -Delta(x) e**4x - 5 x**(-3/2) / (24 sqrt(2 pi))``."""
    d = delta_exact(x, p)
    prec = d.precision
    with local(prec) as ctx:
        lead = 5 / (24 * gmpy2.sqrt(2 * ctx.const_pi()) * mpfr(x) ** mpfr(1.5))
        return -d * gmpy2.exp(mpfr(4 * x)) - lead


@dataclass(frozen=True)
class DemaillyRow:
    x: int
    delta: Real
    epsilon: Real
    bound: Fraction
    passed: bool


def demailly_check(x: int, p: int | None = None) -> DemaillyRow:
    """Evaluate ``Delta``, ``eps`` and the bound ``|eps(x)| < 0.863/x**2`` at one ``x``."""
    d = delta_exact(x, p)
    eps = demailly_epsilon(x, p)
    bound = DEMAILLY_CONSTANT / x**2
    return DemaillyRow(x, d, eps, bound, abs(real_to_fraction(eps)) < bound)


def bj_bound(x: int, p: int = 64) -> Real:
    """``24 e**-8x``: rigorous bound on the optimal-truncation error of the K_0/I_0 term."""
    with local(p + 16):
        v = 24 * gmpy2.exp(mpfr(-8 * x))
    with local(p):
        return mpfr(v)


def bj_bound_upper(x: int) -> Fraction:
    """Rational upper bound on ``24 e**-8x`` (for certification)."""
    return truncation_bound(x)


# ---------------------------------------------------------------------------
# Terminant function
# ---------------------------------------------------------------------------


def terminant_working_bits(nu: int, x: int, p: int) -> int:
    return p + math.ceil(2 * x / math.log(2)) + nu + 64


def exp_integral_e1(x: int, wp: int) -> mpfr:
    """``E_1(x) = -gamma - log x + sum_{k>=1} (-1)**(k+1) x**k / (k k!)`` at ``wp`` bits.

    The alternating series peaks near ``e**x`` so the caller supplies the
    cancellation headroom in ``wp``.
    """
    g = euler_gamma_fixed(wp + 8).to_real(wp + 8)
    with local(wp):
        xr = mpfr(x)
        eps = gmpy2.mul_2exp(mpfr(1), -wp - 8)
        term = mpfr(1)
        total = mpfr(0)
        k = 0
        while True:
            k += 1
            term = term * xr / k
            contrib = term / k
            total = total + contrib if k % 2 else total - contrib
            if k > x and contrib < eps:
                break
        return total - g - gmpy2.log(xr)


def upper_gamma_nonpositive(a: int, x: int, wp: int) -> mpfr:
    """``Gamma(a, x)`` for integer ``a <= 0`` by downward recurrence from ``E_1(x)``.

    ``Gamma(a-1, x) = (Gamma(a, x) - x**(a-1) e**-x) / (a-1)``.
    """
    if a > 0:
        raise ValueError("upper_gamma_nonpositive needs a <= 0")
    g = exp_integral_e1(x, wp)
    with local(wp):
        xr = mpfr(x)
        ex = gmpy2.exp(-xr)
        power = mpfr(1)  # x**a for the current a, starting at a = 0
        for cur in range(0, a, -1):
            power = power / xr  # x**(cur-1)
            g = (g - power * ex) / (cur - 1)
        return g


def terminant_oracle(nu: int, x: int, p: int) -> Real:
    """``T_nu(x) = Gamma(nu) Gamma(1-nu, x) / (2 pi)`` for integer ``nu >= 1``."""
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    need = math.ceil(1.5 * x) + 64
    if p < need:
        raise PrecisionError(f"terminant_oracle at x={x} needs p >= {need}, got {p}")
    wp = terminant_working_bits(nu, x, p)
    g = upper_gamma_nonpositive(1 - nu, x, wp)
    with local(wp) as ctx:
        v = mpfr(math.factorial(nu - 1)) * g / (2 * ctx.const_pi())
    with local(p):
        return mpfr(v)


def terminant_expansion_eval(mu: int, j: int, x: int, K: int, p: int = 128) -> Real:
    """Saddle-point expansion of ``T_{mu-j}(2x)`` at ``mu = 2x`` (so ``gamma_j = -j``).

    ``e**-4x / (2 sqrt(4 pi x)) sum_{k<K} A_{k,j} (2x)**-k``.
    """
    if mu != 2 * x:
        raise ValueError(f"expansion is specialised to mu = 2x = {2 * x}, got mu={mu}")
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > coeffs.MAX_A_ORDER + 1:
        raise UnsupportedOrderError(f"K={K} exceeds the available A_(k,j), k <= {coeffs.MAX_A_ORDER}")
    big = 2 * x
    a = [coeffs.a_coeff(k, j) for k in range(K)]
    with local(p + 32) as ctx:
        s = _bracket(a, Fraction(1, big), K)
        v = gmpy2.exp(mpfr(-2 * big)) / (2 * gmpy2.sqrt(2 * ctx.const_pi() * big)) * s
    with local(p):
        return mpfr(v)


def terminant_residuals(x: int, j: int, Kmax: int = 4, p: int | None = None) -> list[float]:
    """Relative residuals ``|oracle - expansion(K)| / oracle`` for ``K = 1..Kmax``."""
    big = 2 * x
    p = p if p is not None else math.ceil(1.5 * big) + 64
    exact = terminant_oracle(big - j, big, p)
    out = []
    for K in range(1, Kmax + 1):
        est = terminant_expansion_eval(big, j, x, K, p)
        with local(p):
            out.append(float(abs(est - exact) / exact))
    return out


def fit_a_coefficient(k: int, j: int, arguments: Sequence[int] = (100, 200, 400, 800)) -> float:
    """Estimate ``A_{k,j}`` from the terminant oracle by Richardson extrapolation.

    With argument ``X`` doubling along ``arguments`` and the lower coefficients
    removed, ``(T X-normalised - sum_{i<k} A_{i,j} X**-i) X**k = A_{k,j} + O(1/X)``.
    """
    if k < 1 or k > coeffs.MAX_A_ORDER:
        raise UnsupportedOrderError(f"fit_a_coefficient: k must be in 1..{coeffs.MAX_A_ORDER}")
    lower = [coeffs.a_coeff(i, j) for i in range(k)]
    rows = []
    for big in arguments:
        p = math.ceil(1.5 * big) + 64
        t = terminant_oracle(big - j, big, p)
        with local(p) as ctx:
            norm = t * 2 * gmpy2.sqrt(2 * ctx.const_pi() * big) * gmpy2.exp(mpfr(2 * big))
            partial = _bracket(lower, Fraction(1, big), k)
            rows.append((norm - partial) * mpfr(big) ** k)
    level = 1
    with local(128):
        while len(rows) > 1:
            factor = 2**level
            rows = [(factor * b - a) / (factor - 1) for a, b in zip(rows, rows[1:])]
            level += 1
        return float(rows[0])


@dataclass(frozen=True)
class PrefactorCheck:
    k: int
    j: int
    tabulated: Fraction
    fitted: float
    ratio: float
    consistent: bool


def a_prefactor_check(k: int, j: int = 0, rtol: float = 1e-6) -> PrefactorCheck:
    """Compare the tabulated ``A_{k,j}`` with the value fitted from the terminant oracle.

    The tabulated coefficients stay on the computation path; this only reports.
    """
    tabulated = coeffs.a_coeff(k, j)
    fitted = fit_a_coefficient(k, j)
    ratio = fitted / float(tabulated)
    return PrefactorCheck(k, j, tabulated, fitted, ratio, abs(ratio - 1) < rtol)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorReport:
    x: int
    M: int
    estimate: Real
    rel_error_vs_exact: float | None
    bounds_applied: tuple[str, ...] = field(default_factory=tuple)


def remainder_report(x: int, M: int, p: int | None = None) -> ErrorReport:
    """Compare the ``M``-term expansion of ``R_x(x)`` with the exact remainder."""
    p = p if p is not None else required_remainder_bits(x)
    est = r_expansion_eval(x, M, p)
    exact = exact_remainder(x, x, p).remainder
    with local(p):
        rel = float(abs(est - exact) / abs(exact))
    return ErrorReport(x, M, est, rel, ("exact-remainder oracle",))


TABLE1_X = (50, 100, 150)
TABLE1_M = (1, 2, 3, 4, 5)


def table1(xs: Sequence[int] = TABLE1_X, Ms: Sequence[int] = TABLE1_M) -> list[ErrorReport]:
    """Relative error of the remainder expansion for each ``(M, x)``; rows ordered by M then x."""
    out = []
    exacts = {x: exact_remainder(x, x, required_remainder_bits(x)).remainder for x in xs}
    for M in Ms:
        for x in xs:
            p = required_remainder_bits(x)
            est = r_expansion_eval(x, M, p)
            with local(p):
                rel = float(abs(est - exacts[x]) / abs(exacts[x]))
            out.append(ErrorReport(x, M, est, rel, ("exact-remainder oracle",)))
    return out


def format_sig4(v: float) -> str:
    """``7.100e-03`` style: four significant figures."""
    return f"{v:.3e}"
