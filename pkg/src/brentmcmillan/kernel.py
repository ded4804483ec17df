"""Arithmetic kernel: exact rational power series and precision-explicit reals.

Reals are ``gmpy2.mpfr`` values. Every routine that produces one takes the
precision in bits as an argument and evaluates inside a scoped context
(``with local(p):``), so nothing depends on the ambient context.
Rationals are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import SeriesOrderError, SingularSeriesError

Rational = Fraction
Real = type(mpfr(0))
RationalLike = Union[int, Fraction]


# ---------------------------------------------------------------------------
# Reals
# ---------------------------------------------------------------------------


def context(p: int) -> gmpy2.context:
    """Fresh round-to-nearest context at ``p`` bits."""
    if p < 2:
        raise ValueError(f"precision must be at least 2 bits, got {p}")
    return gmpy2.context(precision=p, round=gmpy2.RoundToNearest)


def local(p: int):
    """Scoped evaluation context at ``p`` bits (use as ``with local(p):``)."""
    return context(p)


def to_real(q: RationalLike, p: int) -> Real:
    """Correctly rounded conversion of an exact rational to ``p`` bits."""
    q = Fraction(q)
    with local(p):
        return mpfr(mpq(q.numerator, q.denominator))


def fixed_to_real(n: int, shift: int, p: int) -> Real:
    """Round the fixed-point value ``n * 2**-shift`` to ``p`` bits."""
    with local(p):
        return gmpy2.mul_2exp(mpfr(mpz(n)), -shift)


def real_to_fraction(v: Real) -> Fraction:
    m, e = v.as_integer_ratio()
    return Fraction(int(m), int(e))


def _atanh_fixed(a: int, b: int, bits: int) -> int:
    """``2**bits * atanh(a/b)`` truncated, for ``|a/b| <= 1/2``.

    Every product is truncated once, so with contraction ``(a/b)**2 <= 1/4``
    the accumulated error stays below ``2*terms`` units.
    """
    if a < 0:
        return -_atanh_fixed(-a, b, bits)
    power = (a << bits) // b
    a2, b2 = a * a, b * b
    total = 0
    k = 0
    while power != 0:
        total += power // (2 * k + 1)
        power = (power * a2) // b2
        k += 1
        if k > 4 * bits + 8:
            break
    return total


@lru_cache(maxsize=64)
def _ln2_fixed(bits: int) -> int:
    return 2 * _atanh_fixed(1, 3, bits)


def _reduce(q: Fraction) -> tuple[int, int, int]:
    """Split ``q = m * 2**e`` with ``m = (b+a)/(b-a)`` in ``[2/3, 4/3]``; returns ``(a, b, e)``."""
    num, den = q.numerator, q.denominator
    e = num.bit_length() - den.bit_length()
    if e >= 0:
        mn, md = num, den << e
    else:
        mn, md = num << -e, den
    if 3 * mn > 4 * md:
        e += 1
        md <<= 1
    elif 3 * mn < 2 * md:
        e -= 1
        mn <<= 1
    return mn - md, mn + md, e


def _ln_scaled(q: Fraction, bits: int) -> int:
    a, b, e = _reduce(q)
    return 2 * _atanh_fixed(a, b, bits) + e * _ln2_fixed(bits)


def ln_rational(q: RationalLike, p: int) -> Real:
    """Natural logarithm of a positive rational, rounded to ``p`` bits.

    Argument reduction ``q = m * 2**e`` with ``m`` in ``[2/3, 4/3]``, then
    ``log m = 2 atanh((m-1)/(m+1))`` in fixed point with guard bits.
    """
    q = Fraction(q)
    if q <= 0:
        raise ValueError(f"ln_rational: argument must be positive, got {q}")
    if q == 1:
        return to_real(0, p)
    a, b, e = _reduce(q)
    # relative accuracy near q = 1 needs extra bits: |log q| ~ 2|a|/b there
    small = 0 if (e != 0 or a == 0) else max(0, b.bit_length() - abs(a).bit_length() + 2)
    guard = 2 * max(p, 8).bit_length() + 16
    bits = p + guard + small + max(abs(e), 1).bit_length()
    return fixed_to_real(_ln_scaled(q, bits), bits, p)


def sqrt_pi(p: int) -> Real:
    with local(p + 8) as ctx:
        v = gmpy2.sqrt(ctx.const_pi())
    with local(p):
        return mpfr(v)


# ---------------------------------------------------------------------------
# Bernoulli numbers
# ---------------------------------------------------------------------------

_BERNOULLI: list[Fraction] = [Fraction(1)]


def bernoulli(n: int) -> Fraction:
    """Bernoulli number ``B_n`` with ``B_1 = -1/2``.

    Built from ``sum_{k=0}^{n} C(n+1, k) B_k = 0`` and memoised; the table
    only ever grows by appending, so concurrent readers see a valid prefix.
    """
    if n < 0:
        raise ValueError(f"bernoulli: n must be non-negative, got {n}")
    table = _BERNOULLI
    while len(table) <= n:
        m = len(table)
        if m > 1 and m % 2 == 1:
            table.append(Fraction(0))
            continue
        acc = sum(math.comb(m + 1, k) * table[k] for k in range(m))
        table.append(-acc / (m + 1))
    return table[n]


# ---------------------------------------------------------------------------
# Power series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerSeries:
    """Truncated series ``sum_{k=0}^{order} coeffs[k] * t**k`` over the rationals.

    Arithmetic between two series requires equal ``order``; nothing is ever
    silently promoted.
    """

    coeffs: tuple[Fraction, ...]

    def __init__(self, coeffs: Iterable[RationalLike], order: int | None = None):
        cs = [Fraction(c) for c in coeffs]
        if order is not None:
            if order < 0:
                raise SeriesOrderError(f"negative order {order}")
            cs = (cs + [Fraction(0)] * (order + 1))[: order + 1]
        if not cs:
            raise SeriesOrderError("a power series needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, c: RationalLike, order: int) -> PowerSeries:
        return cls([c], order)

    @classmethod
    def variable(cls, order: int) -> PowerSeries:
        return cls([0, 1], order)

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __repr__(self) -> str:
        terms = ", ".join(str(c) for c in self.coeffs)
        return f"PowerSeries([{terms}])"

    def _check(self, other: PowerSeries) -> None:
        if self.order != other.order:
            raise SeriesOrderError(f"order mismatch: {self.order} vs {other.order}")

    def _coerce(self, other) -> PowerSeries:
        if isinstance(other, PowerSeries):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return PowerSeries.constant(other, self.order)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PowerSeries(a + b for a, b in zip(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(-a for a in self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PowerSeries(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return PowerSeries(a * other for a in self.coeffs)
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return ps_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return PowerSeries(a / Fraction(other) for a in self.coeffs)
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return ps_mul(self, ps_inv(other))

    def __pow__(self, n: int) -> PowerSeries:
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return ps_inv(self) ** (-n)
        result = PowerSeries.constant(1, self.order)
        base = self
        while n:
            if n & 1:
                result = ps_mul(result, base)
            base = ps_mul(base, base)
            n >>= 1
        return result

    def __call__(self, inner: PowerSeries) -> PowerSeries:
        return ps_compose(self, inner)

    def truncate(self, order: int) -> PowerSeries:
        """Drop (or zero-pad) to ``order``; the only way to change order."""
        return PowerSeries(self.coeffs, order)

    def derivative(self) -> PowerSeries:
        """Term-wise derivative; the top coefficient becomes unknown and is dropped."""
        d = [k * c for k, c in enumerate(self.coeffs)][1:]
        return PowerSeries(d or [0])

    def scale(self, factor: RationalLike) -> PowerSeries:
        """Substitute ``t -> factor * t``."""
        f = Fraction(factor)
        return PowerSeries(c * f**k for k, c in enumerate(self.coeffs))

    def evaluate(self, t: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc


def ps_mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Cauchy product truncated at the common order."""
    a._check(b)
    n = a.order
    out = []
    for k in range(n + 1):
        out.append(sum((a.coeffs[i] * b.coeffs[k - i] for i in range(k + 1)), Fraction(0)))
    return PowerSeries(out)


def ps_inv(a: PowerSeries) -> PowerSeries:
    """Multiplicative inverse; needs a nonzero constant term."""
    a0 = a.coeffs[0]
    if a0 == 0:
        raise SingularSeriesError("series with zero constant term has no inverse")
    out = [1 / a0]
    for k in range(1, a.order + 1):
        s = sum((a.coeffs[i] * out[k - i] for i in range(1, k + 1)), Fraction(0))
        out.append(-s / a0)
    return PowerSeries(out)


def ps_compose(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """``a(b(t))`` by Horner's rule; ``b`` must vanish at 0."""
    a._check(b)
    if b.coeffs[0] != 0:
        raise SeriesOrderError("inner series of a composition must have zero constant term")
    acc = PowerSeries.constant(a.coeffs[-1], a.order)
    for c in reversed(a.coeffs[:-1]):
        acc = ps_mul(acc, b) + c
    return acc


def ps_reverse(a: PowerSeries) -> PowerSeries:
    """Compositional inverse of ``a = a1*t + a2*t**2 + ...`` (``a1 != 0``).

    The series is normalised to unit linear coefficient, reverted by
    correcting one coefficient per pass, then rescaled.
    """
    if a.coeffs[0] != 0:
        raise SeriesOrderError("series to revert must have zero constant term")
    if a.order < 1 or a.coeffs[1] == 0:
        raise SingularSeriesError("series to revert must have a nonzero linear term")
    n = a.order
    a1 = a.coeffs[1]
    unit = PowerSeries(c / a1 for c in a.coeffs)  # unit(t) = a(t)/a1
    inv = PowerSeries.variable(n)
    for k in range(2, n + 1):
        err = ps_compose(unit, inv).coeffs[k]
        cs = list(inv.coeffs)
        cs[k] -= err
        inv = PowerSeries(cs)
    # a(t) = a1*unit(t)  =>  a^{-1}(s) = unit^{-1}(s/a1)
    return inv.scale(1 / a1)


def ps_exp(a: PowerSeries) -> PowerSeries:
    """``exp(a)`` for ``a`` with zero constant term."""
    if a.coeffs[0] != 0:
        raise SeriesOrderError("ps_exp needs a series with zero constant term")
    out = [Fraction(1)]
    for n in range(1, a.order + 1):
        s = sum((k * a.coeffs[k] * out[n - k] for k in range(1, n + 1)), Fraction(0))
        out.append(s / n)
    return PowerSeries(out)


def ps_log(a: PowerSeries) -> PowerSeries:
    """``log(a)`` for ``a`` with constant term 1."""
    if a.coeffs[0] != 1:
        raise SeriesOrderError("ps_log needs a series with constant term 1")
    out = [Fraction(0)]
    for n in range(1, a.order + 1):
        s = sum((k * out[k] * a.coeffs[n - k] for k in range(1, n)), Fraction(0))
        out.append(a.coeffs[n] - s / n)
    return PowerSeries(out)


def ps_pow(a: PowerSeries, r: RationalLike) -> PowerSeries:
    """``a**r`` for rational ``r`` and ``a`` with constant term 1 (principal branch)."""
    if a.coeffs[0] != 1:
        raise SeriesOrderError("ps_pow needs a series with constant term 1")
    r = Fraction(r)
    out = [Fraction(1)]
    for n in range(1, a.order + 1):
        s = sum(((r + 1) * k - n) * a.coeffs[k] * out[n - k] for k in range(1, n + 1))
        out.append(Fraction(s) / n)
    return PowerSeries(out)


def log1p_series(order: int) -> PowerSeries:
    """``log(1 + t)``."""
    return PowerSeries([0] + [Fraction((-1) ** (k + 1), k) for k in range(1, order + 1)])


def expm1_series(order: int) -> PowerSeries:
    """``exp(t) - 1``."""
    return PowerSeries([0] + [Fraction(1, math.factorial(k)) for k in range(1, order + 1)])


@dataclass(frozen=True)
class LaurentSeries:
    """``principal / t + regular(t)``: a single simple pole at the origin."""

    principal: Fraction
    regular: PowerSeries

    @classmethod
    def divide_by_t(cls, numerator: PowerSeries) -> LaurentSeries:
        """``numerator(t) / t``; the result keeps one fewer regular coefficient."""
        cs = numerator.coeffs
        return cls(cs[0], PowerSeries(cs[1:] or [0]))

    def __sub__(self, other: LaurentSeries) -> LaurentSeries:
        if self.regular.order != other.regular.order:
            raise SeriesOrderError("order mismatch in Laurent subtraction")
        return LaurentSeries(self.principal - other.principal, self.regular - other.regular)


def pochhammer(a: RationalLike, k: int) -> Fraction:
    """Rising factorial ``(a)_k``."""
    out = Fraction(1)
    a = Fraction(a)
    for i in range(k):
        out *= a + i
    return out


# ---------------------------------------------------------------------------
# Fixed point with an explicit error budget
# ---------------------------------------------------------------------------


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


@dataclass(frozen=True)
class Fixed:
    """``value * 2**-bits`` known to within ``err * 2**-bits`` of the true quantity.

    Operations propagate the budget with one extra unit per truncation. This is
    bookkeeping for a single chain of operations, not interval arithmetic.
    """

    value: int
    err: int
    bits: int

    @classmethod
    def from_fraction(cls, q: RationalLike, bits: int) -> Fixed:
        q = Fraction(q)
        v = (q.numerator << bits) // q.denominator
        exact = v * q.denominator == q.numerator << bits
        return cls(v, 0 if exact else 1, bits)

    @classmethod
    def from_int(cls, n: int, bits: int) -> Fixed:
        return cls(n << bits, 0, bits)

    def _same(self, other: Fixed) -> None:
        if self.bits != other.bits:
            raise ValueError(f"fixed-point scale mismatch: {self.bits} vs {other.bits}")

    def __add__(self, other: Fixed) -> Fixed:
        self._same(other)
        return Fixed(self.value + other.value, self.err + other.err, self.bits)

    def __sub__(self, other: Fixed) -> Fixed:
        self._same(other)
        return Fixed(self.value - other.value, self.err + other.err, self.bits)

    def __neg__(self) -> Fixed:
        return Fixed(-self.value, self.err, self.bits)

    def __mul__(self, other: Fixed) -> Fixed:
        self._same(other)
        b = self.bits
        raw = abs(self.value) * other.err + abs(other.value) * self.err + self.err * other.err
        return Fixed((self.value * other.value) >> b, _ceil_div(raw, 1 << b) + 1, b)

    def __truediv__(self, other: Fixed) -> Fixed:
        self._same(other)
        b = self.bits
        den = abs(other.value)
        if den <= other.err:
            raise ZeroDivisionError("divisor is not bounded away from zero")
        v = (self.value << b) // other.value
        raw = (self.err * den + abs(self.value) * other.err) << b
        return Fixed(v, _ceil_div(raw, den * (den - other.err)) + 1, b)

    def mul_int(self, n: int) -> Fixed:
        return Fixed(self.value * n, self.err * abs(n), self.bits)

    def error_bound(self) -> Fraction:
        return Fraction(self.err, 1 << self.bits)

    def to_fraction(self) -> Fraction:
        return Fraction(self.value, 1 << self.bits)

    def to_real(self, p: int) -> Real:
        return fixed_to_real(self.value, self.bits, p)

    def rescale(self, bits: int) -> Fixed:
        """Move to a coarser scale (``bits <= self.bits``)."""
        if bits > self.bits:
            return Fixed(self.value << (bits - self.bits), self.err << (bits - self.bits), bits)
        shift = self.bits - bits
        return Fixed(self.value >> shift, _ceil_div(self.err, 1 << shift) + 1, bits)


def ln_fixed(q: RationalLike, bits: int) -> Fixed:
    """``log q`` as a :class:`Fixed` at scale ``2**-bits``."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError(f"ln_fixed: argument must be positive, got {q}")
    guard = 2 * max(bits, 8).bit_length() + 8
    work = bits + guard
    approx = _ln_scaled(q, work)
    # each atanh term costs at most 3 units; ln 2 is scaled by |e|
    budget = 3 * (work + 4) * (1 + abs(q.numerator.bit_length() - q.denominator.bit_length()) + 1)
    return Fixed(approx, budget, work).rescale(bits)
