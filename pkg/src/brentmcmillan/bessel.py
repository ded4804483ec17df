"""Convergent series for S_0, I_0, K_0 and the exact remainder of the product expansion.

All sums run in fixed point over Python integers, so every rounding step is
counted; tails of the convergent series are bounded geometrically once the
term ratio has dropped below 1/4.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .errors import PrecisionError
from .kernel import Fixed, Real, ln_fixed, real_to_fraction, to_real

LOG2E = 1 / math.log(2)
GAMMA_REF_ENV = "GAMMA_REF_PATH"


# ---------------------------------------------------------------------------
# Reference value of Euler's constant
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _read_reference(path: str | None) -> str:
    if path:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    else:
        text = resources.files("brentmcmillan.data").joinpath("gamma_ref.txt").read_text("ascii")
    text = text.strip()
    if not text.startswith("0.") or not text[2:].isdigit():
        raise ValueError(f"malformed gamma reference file: {path or 'bundled fixture'}")
    return text


def gamma_reference_digits() -> str:
    """Decimal expansion of Euler's constant from ``$GAMMA_REF_PATH`` or the bundled file."""
    return _read_reference(os.environ.get(GAMMA_REF_ENV) or None)


def gamma_reference_fixed(bits: int) -> Fixed:
    """Reference constant at scale ``2**-bits``; raises if the file is too short."""
    digits = gamma_reference_digits()[2:]
    if len(digits) * math.log2(10) < bits + 4:
        raise PrecisionError(
            f"gamma reference has {len(digits)} digits, {math.ceil((bits + 4) / math.log2(10))} needed"
        )
    scale = 10 ** len(digits)
    v = (int(digits) << bits) // scale
    # truncated decimal: true value lies in [d, d + 10**-D)
    return Fixed(v, 2 + ((1 << bits) // scale), bits)


def gamma_reference(p: int) -> Real:
    return gamma_reference_fixed(p + 8).to_real(p)


# ---------------------------------------------------------------------------
# Convergent series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesValue:
    """A convergent-series value with its neglected-tail and rounding budgets."""

    value: Real
    tail_bound: Fraction
    rounding_bound: Fraction
    terms_used: int

    @property
    def total_error(self) -> Fraction:
        return self.tail_bound + self.rounding_bound


@dataclass(frozen=True)
class _Sums:
    i0: Fixed
    s0: Fixed
    i0_tail: Fraction
    s0_tail: Fraction
    terms: int


def _half_square(z: Fraction) -> Fraction:
    return (Fraction(z) / 2) ** 2


def bessel_sums(z, bits: int) -> _Sums:
    """``I_0(z)`` and ``S_0(z)`` in fixed point at scale ``2**-bits``.

    ``t_n = q**n/(n!)**2`` and ``u_n = H_n t_n`` with ``q = (z/2)**2`` are
    advanced by ``t_n = t_{n-1} q/n**2`` and ``u_n = u_{n-1} q/n**2 + t_n/n``.
    The returned errors already include the tail bounds.
    """
    z = Fraction(z)
    if z <= 0:
        raise ValueError(f"argument must be positive, got {z}")
    q = _half_square(z)
    a, b = q.numerator, q.denominator
    one = 1 << bits
    t, te = one, 0  # term and its error, in units
    u, ue = 0, 0
    it, ite = one, 0
    st, ste = 0, 0
    n = 0
    while True:
        n += 1
        d = b * n * n
        t = (t * a) // d
        te = _cdiv(te * a, d) + 1
        u = (u * a) // d + t // n
        ue = _cdiv(ue * a, d) + _cdiv(te, n) + 2
        it += t
        ite += te
        st += u
        ste += ue
        # ratio of the next term q/(n+1)^2 must be <= 1/4 for the tail bound
        if 4 * a <= b * (n + 1) ** 2 and t <= 1 and u <= 1:
            break
    r = Fraction(a, b * (n + 1) ** 2)
    i_tail = Fraction(t + te, one) * r / (1 - r)
    r_s = r * Fraction(n + 2, n + 1)
    s_tail = Fraction(u + ue, one) * r_s / (1 - r_s)
    i_fixed = Fixed(it, ite + _cdiv_frac(i_tail * one), bits)
    s_fixed = Fixed(st, ste + _cdiv_frac(s_tail * one), bits)
    return _Sums(i_fixed, s_fixed, i_tail, s_tail, n + 1)


def _cdiv(a: int, b: int) -> int:
    return -((-a) // b)


def _cdiv_frac(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def bessel_sums_exact(z, terms: int) -> tuple[Fraction, Fraction]:
    """Exact partial sums ``(sum_{n<terms} t_n, sum_{n<terms} H_n t_n)`` by binary splitting.

    The step ``n`` maps ``(t, u, T, U)`` to the next state by a lower-triangular
    matrix with denominator ``n**3``; products of such matrices over a range are
    formed recursively on integers.
    """
    q = _half_square(Fraction(z))
    a, b = q.numerator, q.denominator
    if terms < 1:
        raise ValueError("terms must be at least 1")

    def step(n: int):
        # scaled by b n^3:  t' = a n t ; u' = a n u + a t ; T' = T + a n t ; U' = U + a n u + a t
        an = a * n
        return (
            (an, 0, 0, 0),
            (a, an, 0, 0),
            (an, 0, b * n**3, 0),
            (a, an, 0, b * n**3),
        ), b * n**3

    def matmul(x, y):
        return tuple(
            tuple(sum(x[i][k] * y[k][j] for k in range(4)) for j in range(4)) for i in range(4)
        )

    def product(lo: int, hi: int):
        if hi - lo == 1:
            return step(lo)
        mid = (lo + hi) // 2
        left, dl = product(lo, mid)
        right, dr = product(mid, hi)
        return matmul(right, left), dl * dr

    if terms == 1:
        return Fraction(1), Fraction(0)
    m, den = product(1, terms)
    start = (1, 0, 1, 0)
    state = [sum(m[i][k] * start[k] for k in range(4)) for i in range(4)]
    return Fraction(state[2], den), Fraction(state[3], den)


def _series_bits(z: Fraction, p: int) -> int:
    # S_0 behaves like (z/2)^2 for small z; give it extra bits for relative accuracy
    q = _half_square(z)
    small = max(0, q.denominator.bit_length() - q.numerator.bit_length())
    return p + 64 + 2 * small


def _series_value(value: Fixed, tail: Fraction, terms: int, p: int) -> SeriesValue:
    rounding = value.error_bound() - tail
    return SeriesValue(value.to_real(p), tail, max(rounding, Fraction(0)), terms)


def s0(x, p: int) -> SeriesValue:
    """``S_0(x) = sum_n H_n (x/2)**(2n) / (n!)**2`` rounded to ``p`` bits."""
    x = Fraction(x)
    sums = bessel_sums(x, _series_bits(x, p))
    return _series_value(sums.s0, sums.s0_tail, sums.terms, p)


def i0(x, p: int) -> SeriesValue:
    """``I_0(x) = sum_n (x/2)**(2n) / (n!)**2`` rounded to ``p`` bits."""
    x = Fraction(x)
    if x == 0:
        return SeriesValue(to_real(1, p), Fraction(0), Fraction(0), 1)
    sums = bessel_sums(x, _series_bits(x, p))
    return _series_value(sums.i0, sums.i0_tail, sums.terms, p)


def cancellation_bits(x) -> int:
    """Bits lost to the ``e**x``-scale cancellation in ``S_0 - (gamma + log(x/2)) I_0``."""
    return math.ceil(float(x) * LOG2E)


def k0_from_identity(x, p: int, gamma_ref: Real) -> Real:
    """``K_0(x) = S_0(x) - (gamma + log(x/2)) I_0(x)``.

    ``gamma_ref`` must carry ``p + 2*ceil(x log2 e) + 64`` bits; the working
    scale is ``p + ceil(x log2 e) + 64`` bits below the binary point.
    """
    x = Fraction(x)
    c = cancellation_bits(x)
    need = p + 2 * c + 64
    if gamma_ref.precision < need:
        raise PrecisionError(f"gamma reference carries {gamma_ref.precision} bits, {need} needed")
    bits = p + c + 64 + 16
    sums = bessel_sums(x, bits)
    g = Fixed.from_fraction(real_to_fraction(gamma_ref), bits)
    g = Fixed(g.value, g.err + _cdiv(1 << bits, 1 << gamma_ref.precision) + 1, bits)
    k0 = sums.s0 - (g + ln_fixed(x / 2, bits)) * sums.i0
    return k0.to_real(p)


def _i0k0_fixed(x: Fraction, bits: int) -> Fixed:
    """``I_0(x) K_0(x)`` at scale ``2**-bits`` (absolute), from the reference constant."""
    c = cancellation_bits(x)
    work = bits + 2 * c + 64 + max(1, int(x)).bit_length()
    sums = bessel_sums(x, work)
    g = gamma_reference_fixed(work)
    k0 = sums.s0 - (g + ln_fixed(x / 2, work)) * sums.i0
    product = (sums.i0 * k0).rescale(bits)
    if product.err > 4:
        raise PrecisionError(f"I0*K0 error budget {product.err} units exceeds 4 at scale 2^-{bits}")
    return product


def i0k0_oracle(x, p: int) -> Real:
    """``I_0(x) K_0(x)`` to ``p`` bits, with the cancellation absorbed by extra working bits."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("x must be positive")
    # I0*K0 ~ 1/(2x), so absolute bits p + log2(2x) + 8 give relative precision p
    bits = p + max(1, int(2 * x)).bit_length() + 8
    return _i0k0_fixed(x, bits).to_real(p)


# ---------------------------------------------------------------------------
# The divergent product expansion and its remainder
# ---------------------------------------------------------------------------


def product_term(x, k: int) -> Fraction:
    """``((2k)!)**3 / ((k!)**4 (8x)**(2k))``, the k-th term of the product expansion."""
    x = Fraction(x)
    return Fraction(math.comb(2 * k, k) ** 2 * math.factorial(2 * k)) / (8 * x) ** (2 * k)


def asym_partial_sum_exact(x, N: int) -> Fraction:
    """``(1/2x) sum_{k<N} ((2k)!)**3 / ((k!)**4 (8x)**(2k))`` exactly.

    Uses ``((2k)!)**3/(k!)**4 = C(2k,k)**2 (2k)!`` and the term ratio
    ``(2k+1)**3 / (8 (k+1) x**2)``, accumulated over a common denominator.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    x = Fraction(x)
    step = Fraction(1, 8) / (x * x)
    term = Fraction(1)
    total = Fraction(0)
    for k in range(N):
        total += term
        term *= (2 * k + 1) ** 3 * step / (k + 1)
    return total / (2 * x)


def asym_partial_sum(x, N: int, p: int) -> Real:
    return to_real(asym_partial_sum_exact(x, N), p)


def optimal_index(x: int) -> int:
    """Least-term truncation index of the product expansion at argument ``x``: ``N = x``."""
    if x < 1:
        raise ValueError("x must be a positive integer")
    return int(x)


def term_scan_argmin(x, kmax: int | None = None) -> int:
    """Index of the smallest term ``|t_k|`` found by direct scan of the term ratios."""
    x = Fraction(x)
    kmax = kmax if kmax is not None else 4 * math.ceil(x) + 8
    best_k, best = 0, Fraction(1)
    term = Fraction(1)
    for k in range(1, kmax + 1):
        term *= Fraction((2 * k - 1) ** 3, 8 * k) / (x * x)
        if term < best:
            best_k, best = k, term
    return best_k


def required_remainder_bits(x) -> int:
    """Precision policy for the exact remainder: ``ceil(5.8 x) + 128``."""
    return math.ceil(Fraction(58, 10) * Fraction(x)) + 128


@dataclass(frozen=True)
class RemainderRecord:
    x: int
    N: int
    partial_sum: Real
    product_exact: Real
    remainder: Real
    remainder_error: Fraction


def exact_remainder(x: int, N: int, p: int) -> RemainderRecord:
    """``R_N(x) = I_0(x) K_0(x) - partial sum``, with the product from the convergent series."""
    need = required_remainder_bits(x)
    if p < need:
        raise PrecisionError(f"exact_remainder at x={x} needs p >= {need}, got {p}")
    xf = Fraction(x)
    bits = p + 64
    product = _i0k0_fixed(xf, bits)
    partial = asym_partial_sum_exact(xf, N)
    rem = product - Fixed.from_fraction(partial, bits)
    return RemainderRecord(
        x=x,
        N=N,
        partial_sum=to_real(partial, p),
        product_exact=product.to_real(p),
        remainder=rem.to_real(p),
        remainder_error=rem.error_bound(),
    )


# ---------------------------------------------------------------------------
# Euler's constant from the optimally truncated product expansion
# ---------------------------------------------------------------------------

# e**-8 < 335462628 / 10**12
_EXP_MINUS_8_UPPER = Fraction(335462628, 10**12)


def truncation_bound(x: int) -> Fraction:
    """Rational upper bound on ``24 e**-8x``, the optimal-truncation error of ``K_0(2x)/I_0(2x)``."""
    return 24 * _EXP_MINUS_8_UPPER**x


def brent_mcmillan_fixed(x: int, bits: int, binary_splitting: bool = False) -> Fixed:
    """``gamma = S_0(2x)/I_0(2x) - log x - P/I_0(2x)**2`` at scale ``2**-bits``.

    ``P`` is the product expansion at argument ``2x`` truncated after ``2x``
    terms. The error budget covers rounding, the convergent tails and the
    truncation bound ``24 e**-8x``.
    """
    if x < 1:
        raise ValueError("x must be a positive integer")
    z = 2 * x
    if binary_splitting:
        terms = _terms_for(z, bits)
        i_exact, s_exact = bessel_sums_exact(z, terms)
        tail = _exact_tail_bound(z, terms)
        i0v = Fixed.from_fraction(i_exact, bits)
        s0v = Fixed.from_fraction(s_exact, bits)
        slack = _cdiv_frac(tail * (1 << bits)) + 1
        i0v = Fixed(i0v.value, i0v.err + slack, bits)
        s0v = Fixed(s0v.value, s0v.err + slack, bits)
    else:
        sums = bessel_sums(z, bits)
        i0v, s0v = sums.i0, sums.s0
    partial = Fixed.from_fraction(asym_partial_sum_exact(z, z), bits)
    g = s0v / i0v - ln_fixed(x, bits) - partial / (i0v * i0v)
    trunc = _cdiv_frac(truncation_bound(x) * (1 << bits)) + 1
    return Fixed(g.value, g.err + trunc, bits)


def _terms_for(z: int, bits: int) -> int:
    """Number of terms after which ``H_n (z/2)**(2n)/(n!)**2`` stays below ``2**-bits``."""
    q = Fraction(z, 2) ** 2
    n, t, h = 0, Fraction(1), Fraction(0)
    limit = Fraction(1, 1 << (bits + 2))
    while True:
        n += 1
        t = t * q / (n * n)
        h += Fraction(1, n)
        if 4 * q <= (n + 1) ** 2 and t * max(h, Fraction(1)) < limit:
            return n + 1


def _exact_tail_bound(z: int, terms: int) -> Fraction:
    """Bound on both neglected tails after ``terms`` terms (ratio <= 1/2 from there on)."""
    q = Fraction(z, 2) ** 2
    n = terms - 1
    t = Fraction(1)
    h = Fraction(0)
    for k in range(1, n + 1):
        t = t * q / (k * k)
        h += Fraction(1, k)
    r = q / (n + 1) ** 2 * Fraction(n + 2, n + 1)
    return t * max(h, Fraction(1)) * r / (1 - r)


def parameters_for_bits(bits: int) -> int:
    """Smallest ``x`` whose truncation bound is below ``2**-(bits+2)``."""
    target = Fraction(1, 1 << (bits + 2))
    x = max(1, math.floor(bits * math.log(2) / 8))
    while truncation_bound(x) >= target:
        x += 1
    while x > 1 and truncation_bound(x - 1) < target:
        x -= 1
    return x


@lru_cache(maxsize=16)
def euler_gamma_fixed(bits: int) -> Fixed:
    """Euler's constant at scale ``2**-bits``: the reference file when long enough, else computed."""
    try:
        return gamma_reference_fixed(bits)
    except PrecisionError:
        pass
    work = bits + 32
    g = brent_mcmillan_fixed(parameters_for_bits(work), work)
    return g.rescale(bits)
