"""Command-line interface.

Every command produces ``(command, params, rows)``; the emitters render
that triple as ``key=value`` text lines, JSON or CSV, so all three formats
carry identical payload strings.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from fractions import Fraction

import click
import gmpy2

from . import coeffs as cf
from .bessel import exact_remainder, required_remainder_bits
from .errormodel import (
    demailly_check,
    format_sig4,
    r_expansion_eval,
    table1,
)
from .errors import BrentMcMillanError, UnsupportedOrderError
from .gamma import RunConfig, compute_gamma
from .kernel import local

BOUND_CHECK_RANGE = (5, 60)


def rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def sci(v, digits: int = 6) -> str:
    """Scientific notation of an mpfr; avoids float underflow for tiny values."""
    with local(max(64, 4 * digits)):
        v = gmpy2.mpfr(v)
    if v == 0:
        return f"{0:.{digits}e}"
    mant, exp, _ = v.digits(10, digits + 1)
    sign = "-" if mant.startswith("-") else ""
    mant = mant.lstrip("-")
    body = mant[0] + ("." + mant[1:] if digits else "")
    return f"{sign}{body}e{exp - 1:+03d}"


def emit(command: str, params: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"command": command, "params": params, "rows": rows}, indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        return buf.getvalue().rstrip("\n")
    lines = [f"# {command} " + " ".join(f"{k}={v}" for k, v in params.items())]
    lines += [" ".join(f"{k}={v}" for k, v in row.items()) for row in rows]
    return "\n".join(lines)


def _fmt(json_flag: bool, csv_flag: bool) -> str:
    if json_flag and csv_flag:
        raise click.UsageError("--json and --csv are mutually exclusive")
    return "json" if json_flag else "csv" if csv_flag else "text"


format_options = [
    click.option("--json", "json_flag", is_flag=True, help="Emit JSON."),
    click.option("--csv", "csv_flag", is_flag=True, help="Emit CSV."),
]


def with_format(f):
    for opt in reversed(format_options):
        f = opt(f)
    return f


# ---------------------------------------------------------------------------
# Row builders (also used by the tests)
# ---------------------------------------------------------------------------


def gamma_rows(digits: int, cfg: RunConfig) -> tuple[dict, list[dict]]:
    res = compute_gamma(digits, cfg)
    params = {"digits": digits, "guard": cfg.guard_bits, "x": cfg.override_x, "binary_splitting": cfg.binary_splitting}
    row = {
        "digits": res.digits_requested,
        "x": res.x,
        "precision_bits": res.precision_bits,
        "value": res.value,
        "certified_abs_error": sci(res.certified_abs_error, 3),
        "truncation_estimate": sci(res.truncation_estimate, 3),
        "wall_time_s": f"{res.wall_time:.3f}",
    }
    return params, [row]


def table1_rows() -> list[dict]:
    return [
        {"M": r.M, "x": r.x, "rel_error": format_sig4(r.rel_error_vs_exact)}
        for r in table1()
    ]


COEFF_FAMILIES = ("c", "a", "g", "d", "b", "ratio", "delta", "central", "i0sq", "remainder", "r2n", "stirling")
_CAPS = {"b": 5, "a": 5, "d": 5, "ratio": 5, "i0sq": 5, "remainder": 5, "r2n": 5, "delta": 4, "central": 4}


def coeff_rows(which: str, max_order: int) -> list[dict]:
    """Exact rationals of one coefficient family, rendered as ``p/q`` strings."""
    if max_order < 1:
        raise click.BadParameter("--max must be at least 1")
    cap = _CAPS.get(which)
    if cap is not None and max_order > cap:
        raise UnsupportedOrderError(f"coeffs --which {which}: --max {max_order} exceeds the cap of {cap}")
    n = max_order
    if which == "c":
        return [{"j": j, "value": rational(v)} for j, v in enumerate(cf.c_coeffs(n))]
    if which == "b":
        return [{"j": j, "value": rational(v)} for j, v in enumerate(cf.b_coeffs(n))]
    if which == "stirling":
        return [{"k": k, "value": rational(v)} for k, v in enumerate(cf.stirling_series(n))]
    if which == "a":
        return [{"k": k, "j": j, "value": rational(cf.a_coeff(k, j))} for k in range(n) for j in range(n)]
    if which == "d":
        return [{"k": k, "j": j, "value": rational(cf.d_coeff(k, j))} for k in range(n) for j in range(n)]
    if which == "g":
        rows = []
        for j in range(n):
            for k, v in enumerate(cf.ghat_coeffs(j, n - 1)):
                rows.append({"2k": 2 * k, "j": j, "value": rational(v)})
        return sorted(rows, key=lambda r: (r["2k"], r["j"]))
    builders = {
        "ratio": cf.ratio_error_coeffs,
        "delta": cf.delta_coeffs,
        "central": cf.central_term_coeffs,
        "i0sq": cf.i0sq_coeffs,
        "remainder": cf.remainder_coeffs,
        "r2n": cf.r2n_coeffs,
    }
    exp = builders[which](n)
    return [{"j": j, "value": rational(v), "prefactor": exp.prefactor} for j, v in enumerate(exp.terms)]


def bound_check_rows(x_from: int, x_to: int) -> list[dict]:
    lo, hi = BOUND_CHECK_RANGE
    if not (lo <= x_from <= x_to <= hi):
        raise click.BadParameter(f"need {lo} <= from <= to <= {hi}")
    rows = []
    for x in range(x_from, x_to + 1):
        r = demailly_check(x)
        rows.append(
            {
                "x": x,
                "delta": sci(r.delta),
                "epsilon": sci(r.epsilon),
                "bound": sci(gmpy2.mpfr(gmpy2.mpq(r.bound.numerator, r.bound.denominator))),
                "pass": "yes" if r.passed else "no",
            }
        )
    return rows


def remainder_rows(x: int, M: int) -> list[dict]:
    p = required_remainder_bits(x)
    rec = exact_remainder(x, x, p)
    est = r_expansion_eval(x, M, p)
    with local(p):
        rel = abs(est - rec.remainder) / abs(rec.remainder)
    return [
        {
            "x": x,
            "N": x,
            "M": M,
            "exact": sci(rec.remainder, 12),
            "expansion": sci(est, 12),
            "rel_error": format_sig4(float(rel)),
        }
    ]


# ---------------------------------------------------------------------------
# click commands
# ---------------------------------------------------------------------------


@click.group()
def cli():
    """Euler's constant by the Brent-McMillan algorithm, and its error expansion."""


@cli.command("gamma")
@click.option("-d", "--digits", type=int, required=True, help="Decimal digits after the point.")
@click.option("--x", "x", type=int, default=None, help="Override the truncation parameter x.")
@click.option("--guard", type=int, default=96, show_default=True, help="Guard bits.")
@click.option("--binary-splitting", is_flag=True, help="Sum S0/I0 exactly by binary splitting.")
@with_format
def gamma_cmd(digits, x, guard, binary_splitting, json_flag, csv_flag):
    """Compute gamma to DIGITS decimals with a certified error bound."""
    fmt = _fmt(json_flag, csv_flag)
    if digits < 1:
        raise click.BadParameter("--digits must be at least 1")
    try:
        cfg = RunConfig(guard_bits=guard, emit_format=fmt, override_x=x, binary_splitting=binary_splitting)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc
    params, rows = gamma_rows(digits, cfg)
    click.echo(emit("gamma", params, rows, fmt))


@cli.command("table1")
@with_format
def table1_cmd(json_flag, csv_flag):
    """Relative error of the remainder expansion for M = 1..5 at x = 50, 100, 150."""
    click.echo(emit("table1", {}, table1_rows(), _fmt(json_flag, csv_flag)))


@cli.command("coeffs")
@click.option("--which", type=click.Choice(COEFF_FAMILIES), required=True)
@click.option("--max", "max_order", type=int, required=True, help="Number of orders to emit.")
@with_format
def coeffs_cmd(which, max_order, json_flag, csv_flag):
    """Exact coefficient families."""
    rows = coeff_rows(which, max_order)
    click.echo(emit("coeffs", {"which": which, "max": max_order}, rows, _fmt(json_flag, csv_flag)))


@cli.command("bound-check")
@click.option("--from", "x_from", type=int, required=True)
@click.option("--to", "x_to", type=int, required=True)
@with_format
def bound_check_cmd(x_from, x_to, json_flag, csv_flag):
    """Check |eps(x)| < 0.863/x^2 for each integer x in [FROM, TO]."""
    rows = bound_check_rows(x_from, x_to)
    click.echo(emit("bound-check", {"from": x_from, "to": x_to}, rows, _fmt(json_flag, csv_flag)))
    if any(r["pass"] != "yes" for r in rows):
        sys.exit(2)


@cli.command("remainder")
@click.option("--x", "x", type=int, required=True)
@click.option("--M", "M", type=int, required=True)
@with_format
def remainder_cmd(x, M, json_flag, csv_flag):
    """Exact R_x(x) against the M-term expansion."""
    if x < 1:
        raise click.BadParameter("--x must be a positive integer")
    click.echo(emit("remainder", {"x": x, "M": M}, remainder_rows(x, M), _fmt(json_flag, csv_flag)))


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except BrentMcMillanError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
