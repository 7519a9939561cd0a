"""Two-parameter Mittag-Leffler functions and their derivatives.

``E_{a,b}(x) = sum_k x^k / Gamma(a k + b)`` for ``0 < a <= 1`` and ``b > 0``.

Two regimes are used, split on ``r = |x|^(1/a)``:

* ``r <= SERIES_RADIUS``: the Taylor series.  The scalar entry points sum it
  in double precision and switch to extended precision (mpmath) when the
  terms cancel by more than the requested tolerance allows.
* ``r > SERIES_RADIUS``: the large-argument expansion
  ``(1/a) x^((1-b)/a) exp(x^(1/a)) - sum_k x^(-k) / Gamma(b - a k)``.
  Derivatives differentiate both pieces exactly; the algebraic tail is cut at
  its smallest term.  Scalar evaluations add the exact value of the discarded
  tail terms, which removes the exponentially small error that otherwise
  dominates near the edge of the sector.

All values are returned as :class:`~fockhankel.scaled.ScaledComplex`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import ConvergenceError, ParameterError
from .scaled import ScaledComplex

SERIES_RADIUS = 25.0
EXP_SECTOR = 7.0 * math.pi / 8.0
DERIV_SECTOR = 3.0 * math.pi / 4.0
TERM_CAP = 100_000
TAIL_CAP = 600
IMPROVE_RADIUS = 45.0
DEFAULT_TOL = 1e-12
# half-width, in arg(lam^(1/a)), of the wedge around the Stokes line left to the series
STOKES_GAP = 0.15
_EPS = np.finfo(float).eps
_CHUNK = 4096


@dataclass(frozen=True)
class MLParams:
    """Order ``a``, parameter ``b`` and derivative order ``m``."""

    a: float
    b: float
    m: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.a <= 1.0):
            raise ParameterError(f"a must lie in (0, 1], got {self.a}")
        if not self.b > 0.0:
            raise ParameterError(f"b must be positive, got {self.b}")
        if int(self.m) != self.m or self.m < 0:
            raise ParameterError(f"m must be a non-negative integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))


# ---------------------------------------------------------------------------
# coefficients


def _log_series_coef(a: float, b: float, m: int, k: int) -> float:
    """log of (k+1)(k+2)...(k+m) / Gamma(a(k+m)+b)."""
    return math.lgamma(k + m + 1) - math.lgamma(k + 1) - math.lgamma(a * (k + m) + b)


_COEF_CACHE: dict = {}


def _series_coefs(a: float, b: float, m: int, count: int) -> np.ndarray:
    key = (a, b, m)
    have = _COEF_CACHE.get(key)
    if have is None or have.size < count:
        size = max(count, 64 if have is None else 2 * have.size)
        have = np.array([_log_series_coef(a, b, m, k) for k in range(size)])
        _COEF_CACHE[key] = have
    return have[:count]


def _series_length(a: float, b: float, m: int, radius: float) -> int:
    """Number of terms after which every term at ``|x| = radius`` is below
    ``exp(-45)`` times the largest one."""
    if radius <= 0.0:
        return 1
    log_r = math.log(radius)
    count = 64
    while True:
        coefs = _series_coefs(a, b, m, count)
        logs = np.arange(count) * log_r + coefs
        peak = int(np.argmax(logs))
        below = np.nonzero(logs[peak:] < logs[peak] - 45.0)[0]
        if below.size:
            return max(peak + int(below[0]) + 1, 3)
        if count >= TERM_CAP:
            raise ConvergenceError(f"series needs more than {TERM_CAP} terms at |x|={radius}")
        count *= 2


def _inverse_gamma_log(x: float) -> tuple[float, float]:
    """Return ``(log|1/Gamma(x)|, sign)``; sign 0 marks a pole of Gamma."""
    if x > 0:
        return -math.lgamma(x), 1.0
    nearest = round(x)
    if abs(x - nearest) < 1e-12:
        return -math.inf, 0.0
    s = math.sin(math.pi * x)
    return math.log(abs(s)) + math.lgamma(1.0 - x) - math.log(math.pi), math.copysign(1.0, s)


@lru_cache(maxsize=256)
def _tail_table(a: float, b: float, m: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Log-magnitude and sign of the derivative-tail coefficients.

    Term ``k`` (1-based) of ``d^m/dx^m x^(-k)/Gamma(b-ak)`` has magnitude
    ``|1/Gamma(b-ak)| * k(k+1)...(k+m-1)`` times ``|x|^(-k-m)``.
    """
    logs = np.empty(count)
    signs = np.empty(count)
    for idx in range(count):
        k = idx + 1
        lg, sg = _inverse_gamma_log(b - a * k)
        logs[idx] = lg + math.lgamma(k + m) - math.lgamma(k)
        signs[idx] = sg
    return logs, signs


@lru_cache(maxsize=256)
def _exponential_terms(a: float, b: float, m: int) -> tuple[tuple[float, float], ...]:
    """Exact m-th derivative of ``(1/a) x^s exp(x^q)`` as ``exp(x^q) * sum c x^e``.

    Returned as pairs ``(c, e)`` with ``s = (1-b)/a`` and ``q = 1/a``.
    """
    s = (1.0 - b) / a
    q = 1.0 / a
    terms = {(0, 0): 1.0 / a}
    for _ in range(m):
        nxt: dict = {}
        for (i, j), c in terms.items():
            e = s + i * q - j
            if e != 0.0:
                nxt[(i, j + 1)] = nxt.get((i, j + 1), 0.0) + c * e
            nxt[(i + 1, j + 1)] = nxt.get((i + 1, j + 1), 0.0) + c * q
        terms = nxt
    return tuple((c, s + i * q - j) for (i, j), c in sorted(terms.items()) if c != 0.0)


# ---------------------------------------------------------------------------
# vectorised double-precision evaluation


def _series_array(a: float, b: float, m: int, lam: np.ndarray) -> ScaledComplex:
    """Horner evaluation of the Taylor series in double precision.

    Only used for ``|x|^(1/a) <= SERIES_RADIUS``, where the terms stay far
    from the overflow threshold.
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    radius = np.abs(lam)
    count = _series_length(a, b, m, float(radius.max()) if radius.size else 0.0)
    with np.errstate(under="ignore"):
        coefs = np.exp(_series_coefs(a, b, m, count))
    total = np.full(lam.shape, coefs[-1], dtype=complex)
    for c in coefs[-2::-1]:
        total *= lam
        total += c
    return ScaledComplex.from_complex(total)


def _exp_part_array(a: float, b: float, m: int, loglam: np.ndarray) -> ScaledComplex:
    """``d^m/dx^m [(1/a) x^((1-b)/a) exp(x^(1/a))]`` on principal branches."""
    lamq = np.exp(loglam / a)
    poly = np.zeros(loglam.shape, dtype=complex)
    for c, e in _exponential_terms(a, b, m):
        poly += c * np.exp(e * loglam)
    return ScaledComplex.from_parts(lamq.real, poly * np.exp(1j * lamq.imag))


def _tail_array(a: float, b: float, m: int, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Derivative of ``-sum_k x^(-k)/Gamma(b-ak)`` cut at its smallest term.

    Returns the truncated sum, the number of terms kept and the log-modulus
    of the smallest term at each point.  Terms below ``exp(-45)`` times the
    leading term are dropped as well, which leaves the sum accurate to
    rounding and keeps the cost independent of ``|x|``.
    """
    out = np.zeros(lam.shape, dtype=complex)
    kept = np.zeros(lam.shape, dtype=int)
    floor = np.full(lam.shape, -np.inf)
    if lam.size == 0:
        return out, kept, floor
    radius = np.abs(lam)
    for start in range(0, lam.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        sub = lam[sl]
        r_min = float(np.min(radius[sl])) ** (1.0 / a)
        count = int(min(math.ceil(r_min / a) + m + 5, TAIL_CAP))
        logs, signs = _tail_table(a, b, m, count)
        if not np.any(signs):
            kept[sl] = count
            continue
        # terms past this point are below exp(-45) times the leading one everywhere in the chunk
        reach = logs - np.arange(1 + m, count + 1 + m) * math.log(float(np.min(radius[sl])))
        lead = int(np.argmax(signs != 0))
        small = np.nonzero((reach[lead:] < reach[lead] - 45.0) & (signs[lead:] != 0))[0]
        if small.size:
            count = lead + int(small[0]) + 1
            logs, signs = logs[:count], signs[:count]
        kk = np.arange(1, count + 1)
        loglam = np.log(sub)
        term_log = logs[None, :] - (kk + m)[None, :] * np.log(np.abs(sub))[:, None]
        ranked = np.where(signs[None, :] != 0, term_log, np.inf)
        stop = np.argmin(ranked, axis=1)
        keep = (kk[None, :] - 1) <= stop[:, None]
        keep &= signs[None, :] != 0
        vals = signs[None, :] * np.exp(np.where(keep, logs[None, :] - (kk + m)[None, :] * loglam[:, None], -np.inf))
        out[sl] = -((-1.0) ** m) * np.sum(vals, axis=1)
        kept[sl] = stop + 1
        floor[sl] = np.min(ranked, axis=1)
    return out, kept, floor


_PANELS = 12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _tail_remainder(a: float, b: float, m: int, lam: np.ndarray, kept: int) -> np.ndarray:
    """Exact value of the tail terms beyond ``kept`` at each point of ``lam``.

    With ``1/Gamma(b-ak) = sin(pi(b-ak)) Gamma(1-b+ak)/pi`` and Euler's
    integral for the Gamma factor, the discarded terms form two geometric
    series in ``x = exp(-/+ i pi a) t^a / lam`` under one Laplace integral.
    The integrand has poles only where ``|arg lam^(1/a)| = pi``; across that
    line the integral jumps by the exponential term of the expansion.
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    peak = max(a * (kept + m + 1) - b, 1.0)
    upper = peak + 40.0 * math.sqrt(peak) + 60.0
    edges = np.linspace(0.0, upper, _PANELS + 1)
    half = 0.5 * np.diff(edges)
    t = (half[:, None] * _GL_NODES[None, :] + (0.5 * (edges[:-1] + edges[1:]))[:, None]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    loglam = np.log(lam)[:, None]
    log_t = np.log(t)
    w = w * np.exp(-b * log_t - t)
    total = np.zeros(lam.shape, dtype=complex)
    for sign, factor in ((-1.0, cmath.exp(1j * math.pi * b)), (1.0, -cmath.exp(-1j * math.pi * b))):
        logx = a * log_t[None, :] - loglam + sign * 1j * math.pi * a
        x = np.exp(logx)
        inv = 1.0 / (1.0 - x)
        # sum_j c_j x^(K-j) (1-x)^(j-m-1) with K = kept+m+1, by Horner in x^-1 (1-x)
        ratio = (1.0 - x) / x
        acc = np.full(x.shape, float(math.comb(m, m) * math.perm(kept + m, m)), dtype=complex)
        for j in range(m - 1, -1, -1):
            acc = acc * ratio + math.comb(m, j) * math.perm(kept + m, j) * math.factorial(m - j)
        acc *= np.exp((kept + m + 1) * logx) * inv ** (m + 1)
        total += factor * (acc @ w)
    return -((-1.0) ** m) * lam ** (-m) * total / (2j * math.pi)


def near_stokes_line(a: float, lam) -> np.ndarray:
    """Points within ``STOKES_GAP`` of ``|arg lam^(1/a)| = pi`` with ``|lam|^(1/a) < IMPROVE_RADIUS``.

    There the resummed tail of :func:`_tail_remainder` has a pole on its
    contour, so neither it nor the plain expansion is accurate.
    """
    lam = np.asarray(lam, dtype=complex)
    if a == 1.0:
        return np.zeros(lam.shape, dtype=bool)
    turned = np.abs(np.angle(lam)) / a
    return (np.abs(turned - math.pi) < STOKES_GAP) & (np.abs(lam) ** (1.0 / a) < IMPROVE_RADIUS)


def asymptotic_parts(a: float, b: float, m: int, lam, improve: bool = False,
                     skip_below: float = math.inf) -> tuple[ScaledComplex, np.ndarray]:
    """Exponential part and algebraic tail of the large-argument expansion.

    The exponential part is zero outside ``|arg x| <= EXP_SECTOR * a``, except
    for ``a = 1`` where ``x^((1-b)) exp(x)`` is kept in the whole plane (for
    integer ``b`` the tail then terminates and the expansion is exact).

    With ``improve`` the exact value of the discarded tail terms is added
    where ``|x|^(1/a) < IMPROVE_RADIUS``, except near the line of
    :func:`near_stokes_line` and at points where the smallest kept term is
    already ``skip_below`` nats below the tail.  The resummed tail jumps by
    the exponential part across ``|arg x| = pi a``, so at improved points the
    exponential part is kept exactly for ``|arg x| < pi a``.
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    if np.any(lam == 0):
        raise ParameterError("the large-argument expansion is undefined at 0")
    loglam = np.log(lam)
    exp_part = _exp_part_array(a, b, m, loglam)
    angle = np.abs(np.angle(lam))
    if a == 1.0:
        inside = np.ones(lam.shape, dtype=bool)
    else:
        inside = angle <= EXP_SECTOR * a * (1 + 1e-14)
    tail, kept, floor = _tail_array(a, b, m, lam)
    if improve:
        reach = np.abs(lam) ** (1.0 / a)
        resum = reach < IMPROVE_RADIUS
        if a == 1.0:
            # the pole of the resummed tail sits on the negative axis
            resum &= angle <= EXP_SECTOR
        else:
            resum &= ~near_stokes_line(a, lam)
            inside = np.where(resum, angle < math.pi * a, inside)
        if math.isfinite(skip_below):
            with np.errstate(divide="ignore"):
                resum &= floor > np.log(np.abs(tail)) - skip_below
        for count in np.unique(kept[resum]):
            group = np.nonzero(resum & (kept == count))[0]
            for start in range(0, group.size, _CHUNK):
                idx = group[start:start + _CHUNK]
                tail[idx] += _tail_remainder(a, b, m, lam[idx], int(count))
    exp_part = ScaledComplex(np.where(inside, exp_part.log_mag, -np.inf), exp_part.phase)
    return exp_part, tail


def _asymptotic_array(a: float, b: float, m: int, lam: np.ndarray, improve: bool = False) -> ScaledComplex:
    exp_part, tail = asymptotic_parts(a, b, m, lam, improve)
    return exp_part + ScaledComplex.from_complex(tail)


def ml_deriv_array(a: float, b: float, m: int, lam, method: str = "auto") -> ScaledComplex:
    """Vectorised ``E^{(m)}_{a,b}`` in double precision.

    Intended for quadrature grids; the absolute error in the series regime is
    about ``eps * max_k |term_k|``, which is negligible against the dominant
    part of any weighted integral but can be large relative to values in
    sectors where the function is small.  Use :func:`ml_deriv` for accurate
    pointwise values.
    """
    MLParams(a, b, m)
    lam_arr = np.asarray(lam, dtype=complex)
    shape = lam_arr.shape
    flat = lam_arr.ravel()
    if method == "series":
        mask = np.ones(flat.shape, dtype=bool)
    elif method == "asymptotic":
        mask = np.zeros(flat.shape, dtype=bool)
    elif method == "auto":
        mask = np.abs(flat) ** (1.0 / a) <= SERIES_RADIUS
    else:
        raise ParameterError(f"unknown method {method!r}")
    log_mag = np.empty(flat.size)
    phase = np.empty(flat.size)
    if np.any(mask):
        part = _series_array(a, b, m, flat[mask])
        log_mag[mask] = part.log_mag
        phase[mask] = part.phase
    if np.any(~mask):
        part = _asymptotic_array(a, b, m, flat[~mask])
        log_mag[~mask] = part.log_mag
        phase[~mask] = part.phase
    return ScaledComplex(log_mag.reshape(shape), phase.reshape(shape))


# ---------------------------------------------------------------------------
# scalar evaluation with a relative-accuracy contract


def _series_scalar(a: float, b: float, m: int, lam: complex, tol: float) -> ScaledComplex:
    if lam == 0:
        return ScaledComplex(_log_series_coef(a, b, m, 0), 0.0)
    loglam = cmath.log(lam)
    log_r = loglam.real
    # the largest term fixes the frame so nothing overflows
    shift = -math.inf
    k = 0
    while True:
        lt = k * log_r + _log_series_coef(a, b, m, k)
        if lt > shift:
            shift = lt
        elif lt < shift - 50.0:
            break
        k += 1
        if k > TERM_CAP:
            break
    re_terms: list[float] = []
    im_terms: list[float] = []
    total = 0j
    quiet = 0
    worst_phase = 0.0
    for k in range(TERM_CAP):
        expo = k * loglam + _log_series_coef(a, b, m, k) - shift
        term = cmath.exp(expo)
        re_terms.append(term.real)
        im_terms.append(term.imag)
        total += term
        worst_phase = max(worst_phase, abs(expo.imag) + abs(k * log_r))
        if abs(term) <= tol * abs(total):
            quiet += 1
            if quiet == 3:
                break
        else:
            quiet = 0
    else:
        partial = ScaledComplex.from_parts(shift, complex(math.fsum(re_terms), math.fsum(im_terms)))
        raise ConvergenceError(f"Mittag-Leffler series did not converge in {TERM_CAP} terms", partial)
    total = complex(math.fsum(re_terms), math.fsum(im_terms))
    cancellation = 1.0 / abs(total) if total != 0 else math.inf
    error_estimate = _EPS * (1.0 + worst_phase) * cancellation
    if error_estimate > tol:
        return _series_extended(a, b, m, lam, tol, cancellation)
    return ScaledComplex.from_parts(shift, total)


def _series_extended(a: float, b: float, m: int, lam: complex, tol: float, cancellation: float) -> ScaledComplex:
    """Re-sum the series in mpmath with enough digits to absorb the cancellation."""
    digits = 20 + int(math.ceil(-math.log10(tol))) if tol < 1 else 20
    if math.isfinite(cancellation):
        digits += int(math.ceil(math.log10(max(cancellation, 1.0))))
    else:
        digits += 60
    with mpmath.workdps(digits):
        total = ml_deriv_mp(a, b, m, mpmath.mpc(lam.real, lam.imag), tol)
        if total == 0:
            return ScaledComplex(-math.inf, 0.0)
        return ScaledComplex(float(mpmath.log(abs(total))), float(mpmath.arg(total)))


def ml_deriv_mp(a: float, b: float, m: int, x, tol: float = 1e-30):
    """``E^{(m)}_{a,b}(x)`` by the Taylor series at the current mpmath precision.

    The caller sets the working precision (``mpmath.workdps``); the sum stops
    after three consecutive terms below ``tol`` times the partial sum.
    """
    a_mp = mpmath.mpf(a)
    b_mp = mpmath.mpf(b)
    x = mpmath.mpc(x)
    power = mpmath.mpc(1)
    total = mpmath.mpc(0)
    quiet = 0
    for k in range(TERM_CAP):
        term = mpmath.rf(k + 1, m) * mpmath.rgamma(a_mp * (k + m) + b_mp) * power
        total += term
        if abs(term) <= tol * abs(total):
            quiet += 1
            if quiet == 3:
                return total
        else:
            quiet = 0
        power *= x
    raise ConvergenceError(f"extended-precision series did not converge in {TERM_CAP} terms")


def _regime(a: float, lam: complex, method: str) -> str:
    if method in ("series", "asymptotic"):
        return method
    if method != "auto":
        raise ParameterError(f"unknown method {method!r}")
    return "series" if abs(lam) ** (1.0 / a) <= SERIES_RADIUS else "asymptotic"


def _evaluate(params: MLParams, lam, tol: float, method: str) -> ScaledComplex:
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    lam = complex(lam)
    regime = _regime(params.a, lam, method)
    if method == "auto" and regime == "asymptotic" and bool(near_stokes_line(params.a, lam)):
        regime = "series"
    if regime == "series":
        return _series_scalar(params.a, params.b, params.m, lam, tol)
    value = _asymptotic_array(params.a, params.b, params.m, np.array([lam]), improve=True)
    return ScaledComplex(float(value.log_mag[0]), float(value.phase[0]))


def ml_eval(params: MLParams, lam, tol: float = DEFAULT_TOL, method: str = "auto") -> ScaledComplex:
    """Evaluate ``E_{a,b}(lam)``.

    Parameters
    ----------
    params:
        Must have ``m == 0``.
    lam:
        Complex argument.
    tol:
        Relative accuracy target in the series regime.
    method:
        ``"auto"`` picks the regime from ``|lam|^(1/a)``; ``"series"`` and
        ``"asymptotic"`` force one branch (used by the overlap check).
    """
    if params.m != 0:
        raise ParameterError("ml_eval takes m = 0; use ml_deriv for derivatives")
    return _evaluate(params, lam, tol, method)


def ml_deriv(params: MLParams, lam, tol: float = DEFAULT_TOL, method: str = "auto") -> ScaledComplex:
    """Evaluate the derivative ``E^{(m)}_{a,b}(lam)``; ``m = 0`` is :func:`ml_eval`."""
    return _evaluate(params, lam, tol, method)


def mittag_leffler(a: float, b: float, lam, m: int = 0, tol: float = DEFAULT_TOL, method: str = "auto") -> ScaledComplex:
    """Convenience wrapper around :func:`ml_deriv` taking plain numbers."""
    return ml_deriv(MLParams(a, b, m), lam, tol, method)


def log_ml_envelope(ell: float, b: float, m: int, lam) -> object:
    """Logarithm of :func:`ml_envelope`; accepts arrays."""
    from .fock_core import log_phi_c

    if not ell >= 1:
        raise ParameterError(f"ell must be >= 1, got {ell}")
    if not (0.0 < b <= 1.0):
        raise ParameterError(f"b must lie in (0, 1], got {b}")
    lam = np.asarray(lam, dtype=complex)
    power = m * (ell - 1.0) + (1.0 - b) * ell
    out = power * np.log1p(np.abs(lam)) + log_phi_c(1.0, lam, ell)
    return float(out) if out.ndim == 0 else out


def ml_envelope(ell: float, b: float, m: int, lam) -> object:
    """Upper growth envelope ``(1+|x|)^(m(l-1)+(1-b)l) * phi_1(x)`` of ``E^{(m)}_{1/l,b}``."""
    with np.errstate(over="ignore"):
        return np.exp(log_ml_envelope(ell, b, m, lam))


# ---------------------------------------------------------------------------
# regime consistency

OVERLAP_ANNULUS = (20.0, 30.0)


def overlap_check(a: float, b: float, m: int = 0, rays: int = 16, radii: int = 6,
                  sector: float = DERIV_SECTOR, tol: float = DEFAULT_TOL) -> dict:
    """Series against asymptotic evaluation on ``|lam|^(1/a)`` in ``[20, 30]``.

    Rays are equally spaced in ``|arg lam| <= sector * a``.  Returns the worst
    relative difference and where it occurred.
    """
    if int(rays) != rays or rays < 1 or int(radii) != radii or radii < 1:
        raise ParameterError("rays and radii must be positive integers")
    params = MLParams(a, b, m)
    worst, where = 0.0, None
    angles = np.linspace(-sector * a, sector * a, int(rays)) if rays > 1 else np.zeros(1)
    for radius in np.linspace(OVERLAP_ANNULUS[0], OVERLAP_ANNULUS[1], int(radii)):
        for angle in angles:
            lam = radius ** a * cmath.exp(1j * float(angle))
            series = ml_deriv(params, lam, tol, method="series")
            asymptotic = ml_deriv(params, lam, tol, method="asymptotic")
            gap = float(series.relative_difference(asymptotic))
            if gap > worst or where is None:
                worst, where = gap, (float(radius), float(angle))
    return {"a": a, "b": b, "m": m, "rays": int(rays), "radii": int(radii), "worst": worst,
            "worst_at": {"radius": where[0], "arg": where[1]}}
