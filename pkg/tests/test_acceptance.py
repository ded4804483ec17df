"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction as F

import pytest

from brentmcmillan import coeffs as cf
from brentmcmillan.bessel import brent_mcmillan_fixed, gamma_reference_digits, term_scan_argmin
from brentmcmillan.errormodel import (
    DEMAILLY_CONSTANT,
    demailly_check,
    format_sig4,
    table1,
    terminant_residuals,
)
from brentmcmillan.gamma import RunConfig, bootstrap_check, compute_gamma
from brentmcmillan.kernel import PowerSeries, ps_compose, ps_inv, ps_mul, ps_reverse, real_to_fraction

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

TABULATED_B = [F(7, 3), F(-449, 270), F(55949, 3024), F(-87499, 17010), F(137885143760267, 7067908108800)]

TABLE1_TABULATED = {
    (1, 50): "7.100e-03", (1, 100): "3.557e-03", (1, 150): "2.373e-03",
    (2, 50): "7.772e-05", (2, 100): "1.962e-05", (2, 150): "8.750e-06",
    (3, 50): "2.140e-06", (3, 100): "2.714e-07", (3, 150): "8.082e-08",
    (4, 50): "8.065e-08", (4, 100): "5.130e-09", (4, 150): "1.020e-09",
    (5, 50): "3.555e-09", (5, 100): "1.137e-10", (5, 150): "1.510e-11",
}


def _poly(prefactor, cs, g):
    return prefactor * sum(F(c) * F(g) ** i for i, c in enumerate(cs))


def report(n, passed, detail, seconds):
    line = f"CRITERION {n}: {'PASS' if passed else 'FAIL'} ({seconds:.2f}s) {detail}"
    print(line)
    return line


# -- criteria ---------------------------------------------------------------


def coefficient_checks() -> dict[str, bool]:
    checks = {}
    checks["c0..c5"] = cf.c_coeffs(6) == [1, F(1, 2), F(5, 8), F(21, 16), F(507, 128), F(4035, 256)]
    b = cf.b_coeffs(5)
    for j in range(5):
        checks[f"B{j} tabulated"] = b[j] == TABULATED_B[j]
    for j in range(5):
        want = [_poly(pf, cs, -j) for pf, cs in GHAT_TABULATED]
        got = cf.ghat_coeffs(j, 4)
        for k in range(5):
            checks[f"Ghat_{2 * k},{j}"] = got[k] == want[k]
    checks["remainder bracket"] = cf.remainder_coeffs(5).terms[1:] == (
        F(-449, 1260), F(55949, 282240), F(-87499, 317520), F(137885143760267, 263868569395200)
    )
    checks["R_2N(2x) bracket"] = cf.r2n_coeffs(5).terms[1:] == (
        F(-449, 2520), F(55949, 1128960), F(-87499, 2540160), F(137885143760267, 4221897110323200)
    )
    checks["ratio bracket"] = cf.ratio_error_coeffs(5).terms[1:] == (
        F(-191, 630), F(18211, 376320), F(-799201, 16257024), F(116774621369177, 4221897110323200)
    )
    checks["delta bracket"] = cf.delta_coeffs(4).terms[1:] == (F(-1, 1800), F(-45449, 806400), F(294911, 5806080))
    checks["central bracket"] = cf.central_term_coeffs(4).terms[1:] == (F(-5, 24), F(25, 1152), F(3551, 414720))
    checks["I0^2 bracket"] = cf.i0sq_coeffs(5).terms[1:] == (F(1, 8), F(5, 128), F(21, 1024), F(507, 32768))
    return checks


def criterion_1():
    t = time.perf_counter()
    checks = coefficient_checks()
    dt = time.perf_counter() - t
    failed = [k for k, ok in checks.items() if not ok]
    ok = not failed and dt < 10
    detail = f"{len(checks) - len(failed)}/{len(checks)} exact matches"
    if failed:
        detail += f"; mismatched: {', '.join(failed)}"
        if failed == ["B2 tabulated"]:
            detail += (
                f" (regenerated {cf.b_coeffs(3)[2]}; the tabulated brackets require it, "
                "the tabulated 55949/3024 is inconsistent with them)"
            )
    return ok, detail, dt


def criterion_2():
    t = time.perf_counter()
    got = {(r.M, r.x): format_sig4(r.rel_error_vs_exact) for r in table1()}
    dt = time.perf_counter() - t
    bad = [f"M={M},x={x}: {got[(M, x)]} vs {v}" for (M, x), v in TABLE1_TABULATED.items() if got[(M, x)] != v]
    return not bad and dt < 300, f"{15 - len(bad)}/15 entries match" + (f"; {bad}" if bad else ""), dt


def criterion_3():
    t = time.perf_counter()
    res = compute_gamma(100, RunConfig())
    ref = gamma_reference_digits()
    n = round(F(int(ref.replace(".", "")), 10 ** (len(ref) - 2)) * 10**100)
    want = f"0.{n:0100d}"
    err = real_to_fraction(res.certified_abs_error)
    boot = bootstrap_check(100)
    dt = time.perf_counter() - t
    ok = res.value == want and err < F(1, 10**100) and boot.agrees and dt < 30
    detail = (
        f"100 digits {'match' if res.value == want else 'DIFFER'}, certified error {float(err):.3e}, "
        f"x={res.x}, bootstrap x={boot.x_values} {'agrees' if boot.agrees else 'DISAGREES'}"
    )
    return ok, detail, dt


def criterion_4():
    t = time.perf_counter()
    rows = [demailly_check(x) for x in range(10, 51)]
    dt = time.perf_counter() - t
    failing = [r.x for r in rows if not r.passed]
    scaled50 = abs(float(rows[-1].epsilon)) * 50**2
    far_below = scaled50 < float(DEMAILLY_CONSTANT) / 10
    ok = not failing and far_below and dt < 300
    detail = f"{len(rows) - len(failing)}/41 rows pass; |eps(50)|*50^2 = {scaled50:.3e} vs 0.863"
    return ok, detail, dt


def criterion_5():
    t = time.perf_counter()
    notes = []
    ok = True
    for x in (50, 100):
        for j in (0, 1, 2):
            res = terminant_residuals(x, j, 4)
            decreasing = all(a > b for a, b in zip(res, res[1:]))
            scale = 10 * abs(float(cf.a_coeff(4, j))) * x**-4
            good = decreasing and res[3] < scale
            ok &= good
            notes.append(f"x={x},j={j}:K4={res[3]:.2e}<{scale:.1e}" if good else f"x={x},j={j}:FAILED {res}")
    return ok, "; ".join(notes), time.perf_counter() - t


def criterion_6():
    t = time.perf_counter()
    got = {x: term_scan_argmin(x) for x in (10, 25, 50, 100)}
    ok = all(abs(k - x) <= 1 for x, k in got.items())
    return ok, f"argmin {got}", time.perf_counter() - t


def criterion_7():
    t = time.perf_counter()
    rng = random.Random(20240607)
    algebra_ok = True
    for _ in range(25):
        cs = [F(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(7)]
        cs[0] = cs[0] or F(1)
        a = PowerSeries(cs)
        algebra_ok &= ps_mul(a, ps_inv(a)) == PowerSeries.constant(1, 6)
        r = PowerSeries([0, cs[1] or 1, *cs[2:]])
        algebra_ok &= ps_compose(r, ps_reverse(r)) == PowerSeries.variable(6)
    # doubling the working bits must shrink the budget and keep both values inside it
    a, b = brent_mcmillan_fixed(40, 300), brent_mcmillan_fixed(40, 600)
    overlap = abs(a.to_fraction() - b.to_fraction()) <= a.error_bound() + b.error_bound()
    doubling_ok = b.error_bound() < a.error_bound() and overlap
    r1, r2 = compute_gamma(80), compute_gamma(80)
    determinism_ok = (r1.value, r1.certified_abs_error) == (r2.value, r2.certified_abs_error)
    ok = algebra_ok and doubling_ok and determinism_ok
    detail = f"algebra round-trips {algebra_ok}, budget doubling {doubling_ok}, determinism {determinism_ok}"
    return ok, detail, time.perf_counter() - t


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
}


def _run(n, capsys):
    ok, detail, dt = CRITERIA[n]()
    with capsys.disabled():
        print()
        report(n, ok, detail, dt)
    return ok, detail


@pytest.mark.xfail(
    strict=True,
    reason="criterion demands the tabulated B_2 = 55949/3024, which contradicts the tabulated brackets; "
    "the regenerated value is 55949/30240",
)
def test_criterion_1_coefficients(capsys):
    ok, detail = _run(1, capsys)
    assert ok, detail


def test_criterion_1_all_but_tabulated_b2():
    checks = coefficient_checks()
    failed = [k for k, v in checks.items() if not v]
    assert failed == ["B2 tabulated"]
    assert cf.b_coeffs(3)[2] == F(55949, 30240)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
def test_criterion(n, capsys):
    ok, detail = _run(n, capsys)
    assert ok, detail


if __name__ == "__main__":
    for n, fn in CRITERIA.items():
        report(n, *fn())
