"""Certified computation of Euler's constant to a requested number of decimals."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .bessel import brent_mcmillan_fixed, truncation_bound
from .errormodel import ratio_error_eval
from .errors import CertificationError

#: Margin on the truncation bound when choosing ``x`` (covers the I_0**2 and S_0/I_0 budgets).
SAFETY_FACTOR = 2
LOG2_10 = math.log2(10)


@dataclass(frozen=True)
class RunConfig:
    guard_bits: int = 96
    emit_format: str = "text"
    override_x: int | None = None
    binary_splitting: bool = False

    def __post_init__(self):
        if self.guard_bits < 32:
            raise ValueError(f"guard_bits must be at least 32, got {self.guard_bits}")
        if self.emit_format not in ("text", "json", "csv"):
            raise ValueError(f"unknown emit format {self.emit_format!r}")
        if self.override_x is not None and self.override_x < 1:
            raise ValueError("override_x must be a positive integer")


@dataclass(frozen=True)
class GammaResult:
    digits_requested: int
    x: int
    precision_bits: int
    value: str
    certified_abs_error: mpfr
    wall_time: float
    truncation_estimate: mpfr
    retried: bool = False


def _term_count(x: int, bits: int) -> int:
    """Terms until ``x**(2n)/(n!)**2`` falls below ``2**-bits`` (float estimate)."""
    target = -bits * math.log(2)
    n = max(1, 2 * x)
    while 2 * n * math.log(x) - 2 * math.lgamma(n + 1) > target:
        n += 1
    return n


def select_parameters(d: int, guard_bits: int = 96) -> tuple[int, int]:
    """``(x, precision_bits)`` for ``d`` correct decimals.

    ``x`` is the smallest integer with ``24 e**-8x * SAFETY_FACTOR < 10**-d / 4``.
    """
    if d < 1:
        raise ValueError("digits must be at least 1")
    target = Fraction(1, 4 * 10**d)
    x = max(1, math.floor(d * math.log(10) / 8))
    while truncation_bound(x) * SAFETY_FACTOR >= target:
        x += 1
    while x > 1 and truncation_bound(x - 1) * SAFETY_FACTOR < target:
        x -= 1
    data_bits = math.ceil(d * LOG2_10)
    terms = _term_count(x, data_bits)
    bits = data_bits + math.ceil(math.log2(terms)) + guard_bits
    return x, bits


def _decimal(n: int, d: int) -> str:
    sign = "-" if n < 0 else ""
    n = abs(n)
    whole, frac = divmod(n, 10**d)
    return f"{sign}{whole}.{frac:0{d}d}"


def _round_interval(lo: Fraction, hi: Fraction, d: int) -> int | None:
    scale = 10**d
    a, b = round(lo * scale), round(hi * scale)  # round() on Fraction is half-even
    return a if a == b else None


def _upper_real(q: Fraction) -> mpfr:
    with gmpy2.context(precision=53, round=gmpy2.RoundUp):
        return mpfr(gmpy2.mpq(q.numerator, q.denominator))


def compute_gamma(d: int, cfg: RunConfig | None = None) -> GammaResult:
    """Euler's constant correctly rounded to ``d`` decimals, with a certified error bound.

    The certified bound covers the optimal-truncation bound ``24 e**-8x``,
    the convergent-series tails, all fixed-point rounding and the final
    decimal rounding. If the certified interval straddles a rounding
    boundary the computation is repeated once with more digits.
    """
    cfg = cfg or RunConfig()
    start = time.perf_counter()
    retried = False
    extra = 0
    while True:
        x, bits = select_parameters(d + extra, cfg.guard_bits)
        if cfg.override_x is not None:
            x = cfg.override_x
        g = brent_mcmillan_fixed(x, bits, cfg.binary_splitting)
        err = g.error_bound()
        if err >= Fraction(1, 2 * 10**d):
            raise CertificationError(
                f"error budget {float(err):.3e} at x={x} cannot certify {d} decimals"
            )
        v = g.to_fraction()
        lo, hi = v - err, v + err
        n = _round_interval(lo, hi, d)
        if n is not None:
            break
        if retried:
            raise CertificationError(f"certified interval still straddles a rounding boundary at {d} decimals")
        retried = True
        extra = 8
    r = Fraction(n, 10**d)
    certified = max(abs(r - lo), abs(hi - r))
    if certified >= Fraction(1, 10**d):
        raise CertificationError("certified error is not below 10**-d")
    return GammaResult(
        digits_requested=d,
        x=x,
        precision_bits=bits,
        value=_decimal(n, d),
        certified_abs_error=_upper_real(certified),
        wall_time=time.perf_counter() - start,
        truncation_estimate=ratio_error_eval(x, 5, 64),
        retried=retried,
    )


@dataclass(frozen=True)
class BootstrapCheck:
    digits: int
    x_values: tuple[int, int]
    values: tuple[str, str]
    difference: Fraction
    allowance: Fraction
    agrees: bool


def bootstrap_check(d: int, offset: int = 10, guard_bits: int = 96) -> BootstrapCheck:
    """Compute at two truncation points ``x`` and ``x + offset`` and compare the certified intervals.

    Needs no reference digits.
    """
    x, bits = select_parameters(d, guard_bits)
    a = brent_mcmillan_fixed(x, bits)
    b = brent_mcmillan_fixed(x + offset, bits)
    diff = abs(a.to_fraction() - b.to_fraction())
    allowance = a.error_bound() + b.error_bound()
    scale = 10**d
    va = _decimal(round(a.to_fraction() * scale), d)
    vb = _decimal(round(b.to_fraction() * scale), d)
    return BootstrapCheck(d, (x, x + offset), (va, vb), diff, allowance, diff <= allowance)
