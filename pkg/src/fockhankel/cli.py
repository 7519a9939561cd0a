"""Command-line front end.

Usage::

    fockhankel ml eval --a 0.5 --b 1 --lam 3.7
    fockhankel ml check
    fockhankel kernel eval --ell 2 --n 1 --z 1 --w 1
    fockhankel kernel check --ell 2 --n 2
    fockhankel decomp verify --ell 2 --n 2 --alpha 1 --beta 2 --gamma 1 --grid 20
    fockhankel decomp norms --ell 2 --p 2
    fockhankel phi norms --ell 2 --c 0.5
    fockhankel lp check --ell 2 --n 1 --p inf
    fockhankel hankel schatten --symbol sym.json --alpha 1 --rho 0 --p 2 --trunc 40
    fockhankel hankel rank1 --ell 2 --w0 1.2
    fockhankel hankel represent --symbol sym.json --ell 2
    fockhankel suite all --ell 1

Exit status: 0 when every asserted invariant holds, 1 when one fails,
2 on a parameter error and 3 when a series or quadrature does not converge.
Reports are deterministic JSON (or CSV) and embed the resolved
configuration and the library version.  Nothing is written on exit 2 or 3.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bergman import (
    dilation_identity_residual,
    hermitian_residual,
    kernel_eval,
    kernel_series_oracle,
    oracle_degree,
    reproducing_residual,
)
from .decomposition import DecompParams, identity_residual, factor_norm_report, remainder_eval
from .errors import ConvergenceError, FockHankelError, ParameterError
from .fock_core import (
    MultiIndexPoly,
    SpaceParams,
    format_p,
    monomial_norm_sq,
    multi_indices,
    pairing_poly,
    parse_p,
    random_poly,
)
from .hankel import (
    default_truncation,
    rank_one_check,
    representation_sweep,
    schatten_from_singular_values,
    schatten_vs_symbol,
    truncation_stability,
)
from .lp_calculus import family_bands, reconstruction_defect
from .mittag_leffler import MLParams, ml_deriv, overlap_check
from .quadrature import phi_norm_report, unit_ball_volume
from .scaled import ScaledComplex

FLATNESS_SLOPE = 1e-3
FLATNESS_SPREAD = 100.0
LP_BAND = 50.0
OVERLAP_PAIRS = ((1.0, 1.0), (0.5, 0.5), (0.5, 0.75), (1.0 / 3.0, 1.0 / 3.0))


class Report:
    """Named checks plus a free-form result payload."""

    def __init__(self) -> None:
        self.checks: list = []
        self.result: dict = {}

    def check(self, name: str, value: float, tolerance: float, passed: bool | None = None) -> bool:
        if passed is None:
            passed = bool(value <= tolerance)
        self.checks.append({"name": name, "value": _plain(value), "tolerance": tolerance, "passed": bool(passed)})
        return passed

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


# ---------------------------------------------------------------------------
# parsing helpers


def _complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ParameterError(f"cannot read a complex number from {text!r}") from exc


def _point(text: str | None, n: int, name: str) -> np.ndarray:
    if text is None:
        raise ParameterError(f"--{name} is required")
    values = [_complex(part) for part in str(text).split(",")]
    if len(values) != n:
        raise ParameterError(f"--{name} needs {n} comma-separated coordinates, got {len(values)}")
    return np.array(values, dtype=complex)


def _load_symbol(path: str | None, n: int | None = None) -> MultiIndexPoly:
    if path is None:
        raise ParameterError("--symbol is required")
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParameterError(f"symbol: cannot read {path!r} ({exc.strerror})") from exc
    symbol = MultiIndexPoly.from_json(text)
    if n is not None and symbol.n != n:
        raise ParameterError(f"symbol: field 'n' is {symbol.n} but --n is {n}")
    return symbol


def _plain(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": _plain(value.real), "im": _plain(value.imag)}
    return value


def _scaled(value: ScaledComplex) -> dict:
    out = {"log_mag": float(value.log_mag), "phase": float(value.phase)}
    if value.log_mag < 700:
        decoded = complex(value.decode())
        out["value"] = {"re": decoded.real, "im": decoded.imag}
    return out


def _radii(args, default_count: int, lo: float = 1.0, default_max: float = 5.0) -> list:
    count = default_count if args.grid is None else args.grid
    top = default_max if args.rmax is None else args.rmax
    if count < 2 or not top > lo:
        raise ParameterError(f"radial grid needs at least 2 points on [{lo}, rmax] with rmax > {lo}")
    return [float(v) for v in np.linspace(lo, top, count)]


def _tol(args, default: float) -> float:
    value = default if args.tol is None else args.tol
    if not value > 0:
        raise ParameterError(f"--tol must be positive, got {value}")
    return value


def _space(args) -> SpaceParams:
    return SpaceParams(args.n, args.ell, args.alpha, args.rho, args.p)


def _decomp(args) -> DecompParams:
    return DecompParams(args.ell, args.gamma, args.alpha, args.beta, args.n, args.theta)


def _random_points(rng: np.random.Generator, n: int, count: int, radius: float) -> np.ndarray:
    raw = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return raw * radius * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / (2 * n))


def _flatness(report: Report, name: str, ratio_report, assert_it: bool = True) -> None:
    stats = ratio_report.stats()
    report.result.setdefault("reports", {})[name] = ratio_report.to_json_obj()
    if assert_it:
        report.check(f"{name}.slope_r2l", abs(stats["slope_r2l"]), FLATNESS_SLOPE)
        report.check(f"{name}.spread", ratio_report.spread(), FLATNESS_SPREAD)


# ---------------------------------------------------------------------------
# commands


def cmd_ml_eval(args, report: Report) -> None:
    params = MLParams(args.a, args.b, args.m)
    lam = _complex(args.lam if args.lam is not None else "0")
    report.result = {"lam": lam, **_scaled(ml_deriv(params, lam, _tol(args, 1e-12)))}


def cmd_ml_check(args, report: Report) -> None:
    tol = _tol(args, 1e-6)
    pairs = OVERLAP_PAIRS if args.a is None else ((args.a, args.b),)
    orders = (0, 1, 2) if args.m is None else (args.m,)
    rows = []
    for a, b in pairs:
        for m in orders:
            row = overlap_check(a, b, m)
            rows.append(row)
            report.check(f"overlap(a={a:.6g},b={b:.6g},m={m})", row["worst"], tol)
    report.result = {"overlap": rows}


def cmd_kernel_eval(args, report: Report) -> None:
    z = _point(args.z, args.n, "z")
    w = _point(args.w, args.n, "w")
    report.result = _scaled(kernel_eval(args.gamma, args.n, args.ell, z, w))


def cmd_kernel_check(args, report: Report) -> None:
    tol = _tol(args, 1e-8)
    rng = np.random.default_rng(args.seed)
    count = 20 if args.grid is None else args.grid
    radius = 2.0 if args.rmax is None else args.rmax
    zs = _random_points(rng, args.n, count, radius)
    ws = _random_points(rng, args.n, count, radius)
    herm, dil, series, closed = 0.0, 0.0, 0.0, 0.0
    for z, w in zip(zs, ws):
        herm = max(herm, hermitian_residual(args.gamma, args.n, args.ell, z, w))
        dil = max(dil, dilation_identity_residual(args.gamma, 1.3, args.n, args.ell, z, w))
        value = kernel_eval(args.gamma, args.n, args.ell, z, w)
        degree = oracle_degree(args.gamma, args.n, args.ell, z, w)
        series = max(series, value.relative_difference(
            kernel_series_oracle(args.gamma, args.n, args.ell, z, w, degree)))
        if args.ell == 1:
            exact = ScaledComplex.from_complex(args.gamma ** args.n / math.factorial(args.n)
                                               * np.exp(args.gamma * np.sum(z * np.conj(w))))
            closed = max(closed, value.relative_difference(exact))
    report.check("hermitian", herm, 1e-10)
    report.check("dilation", dil, tol)
    report.check("series_oracle", series, tol)
    if args.ell == 1:
        report.check("closed_form", closed, 1e-10)
    report.result = {"points": count, "radius": radius}


def cmd_decomp_verify(args, report: Report) -> None:
    tol = _tol(args, 1e-6)
    params = _decomp(args)
    rng = np.random.default_rng(args.seed)
    count = 200 if args.grid is None else args.grid
    reach = 15.0 if args.rmax is None else args.rmax
    residuals = []
    for _ in range(count):
        z, w = _random_points(rng, params.n, 2, 1.0)
        product = abs(complex(np.sum(w * np.conj(z))))
        scale = math.sqrt(reach * rng.uniform() / product) if product > 0 else 1.0
        residuals.append(identity_residual(params, z * scale, w * scale))
    report.check("identity_residual.max", max(residuals), tol)
    report.result = {"params": params.as_dict(), "points": count, "max_abs_lambda": reach,
                     "residual_max": max(residuals), "residual_median": float(np.median(residuals))}


def cmd_decomp_norms(args, report: Report) -> None:
    params = _decomp(args)
    reports = factor_norm_report(params, args.p, args.rho, args.eta, _radii(args, 9))
    for name, ratio_report in reports.items():
        _flatness(report, name, ratio_report, assert_it=name != "R_sharp")


def cmd_phi_norms(args, report: Report) -> None:
    ratio_report = phi_norm_report(_space(args), args.c, _radii(args, 9))
    _flatness(report, f"phi(c={args.c})", ratio_report)


def cmd_lp_check(args, report: Report) -> None:
    params = _space(args)
    orders = (1, 2) if args.k is None else (args.k,)
    bands = family_bands(params, orders)
    for k, entry in bands.items():
        report.check(f"band(k={k})", entry["band"], LP_BAND)
    rng = np.random.default_rng(args.seed)
    defects = [len(reconstruction_defect(random_poly(params.n, 6, rng))) for _ in range(3)]
    report.check("reconstruction_defect", float(sum(defects)), 0.0)
    report.result = {"bands": {str(k): v for k, v in bands.items()}}


def cmd_hankel_schatten(args, report: Report) -> None:
    symbol = _load_symbol(args.symbol)
    N = default_truncation(symbol.n) if args.trunc is None else args.trunc
    record = schatten_vs_symbol(symbol, args.alpha, args.rho, args.p, N, args.ell)
    if not symbol.is_zero():
        stability = truncation_stability(symbol, args.alpha, args.rho, args.p, N, args.ell)
        record["flags"] = sorted(set(record["flags"]) | set(stability["flags"]))
        record["truncation_change"] = stability["change"]
    report.result = record


def cmd_hankel_rank1(args, report: Report) -> None:
    if args.alpha != 1:
        raise ParameterError("rank-one check is normalised to alpha = 1")
    w0 = _point(args.w0 if args.w0 is not None else ",".join(["1"] * args.n), args.n, "w0")
    record = rank_one_check(w0, args.ell, args.rho, args.trunc)
    report.check("numerical_rank", float(record["numerical_rank"]), 1.0, record["numerical_rank"] == 1)
    report.check("s1_relative_error", record["relative_error"], _tol(args, 1e-4))
    report.result = record


def cmd_hankel_represent(args, report: Report) -> None:
    symbol = _load_symbol(args.symbol, args.n)
    params = DecompParams(args.ell, 1.0, 1.0, 1.0, args.n, args.theta)
    if args.gamma != 1 or args.alpha != 1 or args.beta != 1:
        raise ParameterError("the representation check runs at gamma = alpha = beta = 1")
    N = 40 if args.trunc is None else args.trunc
    tol = _tol(args, 1e-6)
    count = 10 if args.grid is None else args.grid
    top = 2.0 if args.rmax is None else args.rmax
    direction = np.ones(args.n) / math.sqrt(args.n)
    sweeps = []
    for t in np.linspace(0.0, top, count):
        sweep = representation_sweep(symbol, t * direction, params, list(range(N + 1)))
        sweeps.append({"radius": float(t), **sweep})
    report.check("residual_at_N", max(s["residuals"][-1] for s in sweeps), tol)
    report.check("monotone_in_N", 0.0, 0.0, all(s["monotone"] for s in sweeps))
    report.result = {"N": N, "sweeps": sweeps}


def closed_form_suite(report: Report, n: int, gamma: float, alpha: float, seed: int) -> None:
    """The ``l = 1`` oracles: exponential kernel, factorial norms, zero remainder, rank one."""
    rng = np.random.default_rng(seed)
    points = _random_points(rng, n, 24, 2.0)
    kernel = 0.0
    for z, w in zip(points[:12], points[12:]):
        exact = ScaledComplex.from_complex(gamma ** n / math.factorial(n) * np.exp(gamma * np.sum(z * np.conj(w))))
        kernel = max(kernel, kernel_eval(gamma, n, 1.0, z, w).relative_difference(exact))
    report.check("l1.kernel_closed_form", kernel, 1e-10)
    norms = 0.0
    for nu in multi_indices(n, 8):
        exact = math.factorial(n) * math.prod(math.factorial(v) for v in nu) / alpha ** (sum(nu) + n)
        norms = max(norms, abs(monomial_norm_sq(n, 1.0, alpha, nu) - exact) / exact)
    report.check("l1.monomial_norms", norms, 1e-12)
    remainder = 0.0
    for lam in (0.5, 3.0 + 4.0j, -7.0, 20.0 - 5.0j, 60.0):
        value = remainder_eval(1.0, 0.4, lam)
        remainder = max(remainder, math.exp(value.log_mag - max(0.0, lam.real)) if math.isfinite(value.log_mag) else 0.0)
    report.check("l1.remainder_zero", remainder, 1e-12)
    params = DecompParams(1.0, gamma, alpha, 2.0 * alpha, n)
    residual = 0.0
    for z, w in zip(points[:12], points[12:]):
        residual = max(residual, identity_residual(params, z, w))
    report.check("l1.decomposition_residual", residual, 1e-12)
    rank = rank_one_check([1.0 + 0.5j], 1.0, 0.0, 30)
    predicted = 0.5 * math.exp(abs(1.0 + 0.5j) ** 2 / 4.0)
    report.check("l1.rank_one_s1", abs(rank["s1"] - predicted) / predicted, 1e-4)


def structural_suite(report: Report, ell: float, seed: int) -> None:
    """Volume normalisation, pairing dilation, Hermitian symmetry, reproduction, S_p monotonicity."""
    rng = np.random.default_rng(seed)
    report.check("unit_ball_volume", max(abs(unit_ball_volume(n) - 1.0) for n in (1, 2, 3)), 1e-8)
    dilation = 0.0
    for n in (1, 2):
        f, g = random_poly(n, 6, rng), random_poly(n, 6, rng)
        lhs = pairing_poly(f, g, 1.0, ell)
        rhs = 1.3 ** (2 * n) * pairing_poly(f, g.dilate(1.3 ** 2), 1.3 ** (2 * ell), ell)
        dilation = max(dilation, abs(lhs - rhs) / abs(lhs))
    report.check("pairing_dilation", dilation, 1e-10)
    hermitian = 0.0
    for n in (1, 2):
        for z, w in zip(_random_points(rng, n, 8, 2.0), _random_points(rng, n, 8, 2.0)):
            hermitian = max(hermitian, hermitian_residual(1.0, n, ell, z, w))
    report.check("hermitian_symmetry", hermitian, 1e-10)
    reproduce = 0.0
    for n in (1, 2):
        f = random_poly(n, 8, rng)
        z = _random_points(rng, n, 1, 1.0)[0]
        reproduce = max(reproduce, reproducing_residual(f, 1.0, ell, z))
    report.check("reproducing_property", reproduce, 1e-6)
    singular = np.sort(rng.uniform(0.0, 2.0, 12))[::-1]
    exponents = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0, math.inf)
    values = [schatten_from_singular_values(singular, q) for q in exponents]
    monotone = all(later <= earlier for earlier, later in zip(values, values[1:]))
    report.check("schatten_monotone", 0.0, 0.0, monotone)


def cmd_suite_all(args, report: Report) -> None:
    if args.ell == 1:
        closed_form_suite(report, args.n, args.gamma, args.alpha, args.seed)
    structural_suite(report, args.ell, args.seed)


COMMANDS: dict[tuple[str, str], Callable] = {
    ("ml", "eval"): cmd_ml_eval,
    ("ml", "check"): cmd_ml_check,
    ("kernel", "eval"): cmd_kernel_eval,
    ("kernel", "check"): cmd_kernel_check,
    ("decomp", "verify"): cmd_decomp_verify,
    ("decomp", "norms"): cmd_decomp_norms,
    ("phi", "norms"): cmd_phi_norms,
    ("lp", "check"): cmd_lp_check,
    ("hankel", "schatten"): cmd_hankel_schatten,
    ("hankel", "rank1"): cmd_hankel_rank1,
    ("hankel", "represent"): cmd_hankel_represent,
    ("suite", "all"): cmd_suite_all,
}


# ---------------------------------------------------------------------------
# output


def _csv_text(payload: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    reports = payload["result"].get("reports")
    if reports:
        writer.writerow(["series", "grid", "value", "envelope", "log_ratio"])
        for name in sorted(reports):
            entry = reports[name]
            for t, v, e in zip(entry["grid"], entry["value"], entry["envelope"]):
                writer.writerow([name, repr(t), repr(v), repr(e), repr(float(v) - float(e))])
        return buffer.getvalue()
    writer.writerow(["key", "value"])
    for key, value in _flatten(payload):
        writer.writerow([key, value])
    return buffer.getvalue()


def _flatten(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for key in sorted(obj):
            yield from _flatten(obj[key], f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(obj, list):
        for i, value in enumerate(obj):
            yield from _flatten(value, f"{prefix}[{i}]")
    else:
        yield prefix, json.dumps(obj) if not isinstance(obj, str) else obj


def render(payload: dict, fmt: str) -> str:
    if fmt == "csv":
        return _csv_text(payload)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ell", type=float, default=1.0, help="exponent l >= 1 of the weight")
    common.add_argument("--n", type=int, default=1, help="complex dimension")
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("--beta", type=float, default=1.0)
    common.add_argument("--gamma", type=float, default=1.0)
    common.add_argument("--rho", type=float, default=0.0)
    common.add_argument("--eta", type=float, default=0.0)
    common.add_argument("--p", type=parse_p, default=2.0, help="exponent in [1, inf]; 'inf' for the sup norm")
    common.add_argument("--theta", type=float, default=None, help="split point; default alpha/(alpha+beta)")
    common.add_argument("--trunc", type=int, default=None, help="truncation degree N")
    common.add_argument("--grid", type=int, default=None, help="number of grid or random points")
    common.add_argument("--rmax", type=float, default=None, help="largest radius of the grid")
    common.add_argument("--tol", type=float, default=None, help="override the asserted tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="-", help="report path; '-' for stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--a", type=float, default=None, help="Mittag-Leffler order a")
    common.add_argument("--b", type=float, default=None, help="Mittag-Leffler parameter b")
    common.add_argument("--m", type=int, default=None, help="derivative order")
    common.add_argument("--lam", default=None, help="complex argument, e.g. 1+2j")
    common.add_argument("--z", default=None, help="point of C^n, comma-separated")
    common.add_argument("--w", default=None, help="point of C^n, comma-separated")
    common.add_argument("--w0", default=None, help="kernel anchor for the rank-one check")
    common.add_argument("--c", type=float, default=0.5, help="rate of phi_c")
    common.add_argument("--k", type=int, default=None, help="Littlewood-Paley order")
    common.add_argument("--symbol", default=None, help="symbol polynomial as JSON")

    parser = argparse.ArgumentParser(prog="fockhankel", description="Numerics for Hankel forms on Fock-Sobolev spaces.")
    parser.add_argument("--version", action="version", version=f"fockhankel {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    actions: dict = {}
    for group, action in COMMANDS:
        actions.setdefault(group, []).append(action)
    for group, names in actions.items():
        sub = groups.add_parser(group).add_subparsers(dest="action", required=True)
        for name in names:
            sub.add_parser(name, parents=[common])
    return parser


def _config(args) -> dict:
    config = {key: value for key, value in sorted(vars(args).items())}
    config["p"] = format_p(args.p)
    config["command"] = f"{args.group} {args.action}"
    return _plain(config)


def _validate(args) -> None:
    if args.ml_needed:
        if args.a is None or args.b is None:
            raise ParameterError("--a and --b are required")
    if args.grid is not None and args.grid < 1:
        raise ParameterError(f"--grid must be positive, got {args.grid}")
    if args.trunc is not None and args.trunc < 0:
        raise ParameterError(f"--trunc must be non-negative, got {args.trunc}")
    if args.n < 1:
        raise ParameterError(f"--n must be positive, got {args.n}")
    if not args.p > 0:
        raise ParameterError(f"--p must be positive, got {args.p}")
    if args.tol is not None and not args.tol > 0:
        raise ParameterError(f"--tol must be positive, got {args.tol}")


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run one command and write its report; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        args.ml_needed = (args.group, args.action) == ("ml", "eval")
        _validate(args)
        if args.m is None and args.ml_needed:
            args.m = 0
        if (args.group, args.action) == ("ml", "check") and (args.a is None) != (args.b is None):
            raise ParameterError("--a and --b go together")
        del args.ml_needed
        report = Report()
        COMMANDS[(args.group, args.action)](args, report)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=stderr)
        return 3
    except FockHankelError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    payload = {
        "command": f"{args.group} {args.action}",
        "config": _config(args),
        "version": __version__,
        "passed": report.passed,
        "checks": report.checks,
        "result": _plain(report.result),
    }
    text = render(payload, args.format)
    if args.out == "-":
        stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    failed = [c["name"] for c in report.checks if not c["passed"]]
    if failed:
        print("failed: " + ", ".join(failed), file=stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


__all__ = ["build_parser", "closed_form_suite", "main", "render", "run", "structural_suite"]
