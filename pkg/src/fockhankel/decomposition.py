"""Splitting ``E_{1/l,1/l}`` into a product of two Mittag-Leffler factors.

For ``0 < theta < 1`` and ``b' = (l+1)/(2l)``::

    E_{1/l,1/l}(x) = c E_{1/l,b'}(theta^(1/l) x) E_{1/l,b'}((1-theta)^(1/l) x) + R(x)

with ``c = (theta(1-theta))^((1-l)/(2l)) / l``.  Differentiating ``n-1``
times and rescaling gives kernel factors ``G_k``, ``H_k`` and a remainder
``R_n`` with ``K_gamma(w, z) = sum_k G_k H_k (w . conj z) + R_n(w . conj z)``.

The exponential parts of the three large-argument expansions cancel exactly
in ``R``, so for large arguments ``R`` is assembled from the algebraic
tails alone instead of as a difference of exponentially large numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .bergman import kernel_profile
from .errors import ParameterError
from .fock_core import INF, SpaceParams, conjugate_exponent, format_p
from .mittag_leffler import (
    EXP_SECTOR,
    SERIES_RADIUS,
    MLParams,
    asymptotic_parts,
    ml_deriv,
    ml_deriv_array,
    ml_deriv_mp,
    near_stokes_line,
)
from .quadrature import RatioReport, SliceFunction, norm_slice
from .scaled import ScaledComplex

CANCELLATION_LIMIT = 1e3
IMPROVED_CROSSOVER = 12.0
# grids skip the tail correction where it is below exp(-25) of the tail
GRID_SKIP = 25.0


def split_parameter(ell: float) -> float:
    """``b' = (l+1)/(2l)``, the parameter of both factors."""
    return (ell + 1.0) / (2.0 * ell)


def split_constant(ell: float, theta: float) -> float:
    """``c = (theta(1-theta))^((1-l)/(2l)) / l``."""
    if not 0.0 < theta < 1.0:
        raise ParameterError(f"theta must lie in (0, 1), got {theta}")
    return (theta * (1.0 - theta)) ** ((1.0 - ell) / (2.0 * ell)) / ell


@dataclass(frozen=True)
class DecompParams:
    """``(l, gamma, alpha, beta, n)`` and the split point ``theta``.

    ``theta`` defaults to ``alpha/(alpha+beta)``.
    """

    ell: float
    gamma: float
    alpha: float
    beta: float
    n: int = 1
    theta: float | None = None

    def __post_init__(self) -> None:
        if not self.ell >= 1:
            raise ParameterError(f"ell must be >= 1, got {self.ell}")
        for name in ("gamma", "alpha", "beta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.theta is None:
            object.__setattr__(self, "theta", self.alpha / (self.alpha + self.beta))
        split_constant(self.ell, self.theta)

    @property
    def c(self) -> float:
        return split_constant(self.ell, self.theta)

    @property
    def log_factor_constant(self) -> float:
        """log of ``l gamma^(n/l) c / n!``."""
        return (math.log(self.ell) + (self.n / self.ell) * math.log(self.gamma)
                + math.log(self.c) - math.lgamma(self.n + 1))

    @property
    def remainder_in_g(self) -> bool:
        """The remainder takes the ``G`` slot when ``alpha >= beta``."""
        return self.alpha >= self.beta

    def as_dict(self) -> dict:
        return {"ell": self.ell, "gamma": self.gamma, "alpha": self.alpha, "beta": self.beta,
                "n": self.n, "theta": self.theta}


# ---------------------------------------------------------------------------
# the remainder


def _leibniz_terms(ell: float, theta: float, m: int):
    """``(j, C(m,j) theta^(j/l) (1-theta)^((m-j)/l))`` for ``j = 0..m``."""
    for j in range(m + 1):
        yield j, math.comb(m, j) * theta ** (j / ell) * (1.0 - theta) ** ((m - j) / ell)


def _direct(ell: float, theta: float, m: int, lam: complex, tol: float) -> tuple[ScaledComplex, float]:
    """``E^{(m)} - c (EE)^{(m)}`` from accurate scalar values, and the cancellation ratio."""
    a = 1.0 / ell
    bp = split_parameter(ell)
    left = ml_deriv(MLParams(a, a, m), lam, tol)
    product = ScaledComplex.zeros()
    for j, weight in _leibniz_terms(ell, theta, m):
        first = ml_deriv(MLParams(a, bp, j), theta ** a * lam, tol)
        second = ml_deriv(MLParams(a, bp, m - j), (1.0 - theta) ** a * lam, tol)
        product = product + first * second * weight
    product = product * split_constant(ell, theta)
    out = left - product
    scale = max(left.log_mag, product.log_mag)
    ratio = math.exp(min(scale - out.log_mag, 700.0)) if math.isfinite(out.log_mag) else math.inf
    return out, ratio


def _extended(ell: float, theta: float, m: int, lam: complex, tol: float) -> ScaledComplex:
    """The same difference with every series summed in mpmath."""
    reach = abs(lam) ** ell
    digits = 30 + int(math.ceil(reach / math.log(10.0))) + int(math.ceil(-math.log10(tol)))
    with mpmath.workdps(digits):
        # a and b' must be exact at this precision or the exponential parts no longer cancel
        ell_mp = mpmath.mpf(ell)
        a = 1 / ell_mp
        bp = (ell_mp + 1) / (2 * ell_mp)
        th = mpmath.mpf(theta)
        x = mpmath.mpc(lam.real, lam.imag)
        inner_tol = mpmath.mpf(10) ** (-digits + 5)
        total = ml_deriv_mp(a, a, m, x, inner_tol)
        c = (th * (1 - th)) ** ((1 - ell_mp) / (2 * ell_mp)) / ell_mp
        for j in range(m + 1):
            weight = mpmath.binomial(m, j) * th ** (j * a) * (1 - th) ** ((m - j) * a)
            first = ml_deriv_mp(a, bp, j, th ** a * x, inner_tol)
            second = ml_deriv_mp(a, bp, m - j, (1 - th) ** a * x, inner_tol)
            total -= c * weight * first * second
        if total == 0:
            return ScaledComplex(-math.inf, 0.0)
        return ScaledComplex(float(mpmath.log(abs(total))), float(mpmath.arg(total)))


def _asymptotic(ell: float, theta: float, m: int, lam, skip_below: float = math.inf) -> ScaledComplex:
    """Cancellation-free large-argument form of ``R^{(m)}``.

    Writing each function as exponential part ``X`` plus tail ``T``, the
    ``X X`` products reproduce the exponential part of ``E_{1/l,1/l}``
    exactly, leaving ``T_E - c sum_j w_j (X T + T X + T T)``.
    """
    a = 1.0 / ell
    bp = split_parameter(ell)
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    _, tail = asymptotic_parts(a, a, m, lam, True, skip_below)
    total = ScaledComplex.from_complex(tail)
    product = ScaledComplex.zeros(lam.shape)
    for j, weight in _leibniz_terms(ell, theta, m):
        x1, t1 = asymptotic_parts(a, bp, j, theta ** a * lam, True, skip_below)
        x2, t2 = asymptotic_parts(a, bp, m - j, (1.0 - theta) ** a * lam, True, skip_below)
        t1 = ScaledComplex.from_complex(t1)
        t2 = ScaledComplex.from_complex(t2)
        product = product + (x1 * t2 + t1 * x2 + t1 * t2) * weight
    return total - product * split_constant(ell, theta)


def _far(ell: float, theta: float, lam) -> np.ndarray:
    """Where the tails-only form is used.

    Inside the sector the improved tails are accurate once every argument
    reaches ``IMPROVED_CROSSOVER``; outside it the plain tails take over at
    the usual series crossover.
    """
    lam = np.asarray(lam, dtype=complex)
    reach = min(theta, 1.0 - theta) * np.abs(lam) ** ell
    inside = np.abs(np.angle(lam)) <= EXP_SECTOR / ell
    return np.where(inside, reach > IMPROVED_CROSSOVER, reach > SERIES_RADIUS)


def remainder_deriv(ell: float, theta: float, m: int, lam, tol: float = 1e-12) -> ScaledComplex:
    """``R^{(m)}(x) = E^{(m)}_{1/l,1/l}(x) - c d^m/dx^m [E(theta^(1/l) x) E((1-theta)^(1/l) x)]``.

    Inside the sector where the exponential terms cancel and every argument
    is past the crossover, the tails-only form is used.  Otherwise the three
    accurate scalar values are differenced, and if they cancel by more than
    ``CANCELLATION_LIMIT`` all series are re-summed in mpmath.
    """
    if int(m) != m or m < 0:
        raise ParameterError(f"m must be a non-negative integer, got {m}")
    split_constant(ell, theta)
    lam = complex(lam)
    if bool(_far(ell, theta, lam)) and not bool(near_stokes_line(1.0 / ell, lam)):
        value = _asymptotic(ell, theta, int(m), lam)
        return ScaledComplex(float(value.log_mag[0]), float(value.phase[0]))
    value, ratio = _direct(ell, theta, int(m), lam, tol)
    if ratio > CANCELLATION_LIMIT and ell != 1.0:
        return _extended(ell, theta, int(m), lam, tol)
    return value


def remainder_eval(ell: float, theta: float, lam, tol: float = 1e-12) -> ScaledComplex:
    """``R_{l,theta}(x)``; see :func:`remainder_deriv`."""
    return remainder_deriv(ell, theta, 0, lam, tol)


def remainder_array(ell: float, theta: float, m: int, lam) -> ScaledComplex:
    """Vectorised ``R^{(m)}`` in double precision for quadrature grids.

    In the direct regime the absolute error is at rounding level against
    ``|E_{1/l,1/l}|``, at most ``exp(IMPROVED_CROSSOVER)`` times ``|R|``
    inside the sector.
    """
    lam = np.asarray(lam, dtype=complex)
    shape = lam.shape
    flat = lam.ravel()
    a = 1.0 / ell
    bp = split_parameter(ell)
    far = _far(ell, theta, flat)
    log_mag = np.empty(flat.size)
    phase = np.empty(flat.size)
    if np.any(far):
        part = _asymptotic(ell, theta, m, flat[far], GRID_SKIP)
        log_mag[far] = part.log_mag
        phase[far] = part.phase
    near = ~far
    if np.any(near):
        sub = flat[near]
        left = ml_deriv_array(a, a, m, sub)
        product = ScaledComplex.zeros(sub.shape)
        for j, weight in _leibniz_terms(ell, theta, m):
            product = product + (ml_deriv_array(a, bp, j, theta ** a * sub)
                                 * ml_deriv_array(a, bp, m - j, (1.0 - theta) ** a * sub)) * weight
        part = left - product * split_constant(ell, theta)
        log_mag[near] = part.log_mag
        phase[near] = part.phase
    return ScaledComplex(log_mag.reshape(shape), phase.reshape(shape))


# ---------------------------------------------------------------------------
# kernel factors


def _check_index(kind: str, k: int, params: DecompParams) -> None:
    if kind not in ("G", "H", "R"):
        raise ParameterError(f"kind must be G, H or R, got {kind!r}")
    if kind == "R":
        return
    if int(k) != k or not 0 <= k <= params.n:
        raise ParameterError(f"factor index {k} outside 0..{params.n}")


def _factor_pieces(kind: str, k: int, params: DecompParams):
    """``(log constant, b, derivative order, argument scale)`` of a G or H factor."""
    ell, theta, n = params.ell, params.theta, params.n
    a = 1.0 / ell
    bp = split_parameter(ell)
    if kind == "G":
        const = math.log(math.comb(n - 1, k)) + (k / ell) * math.log(theta) + params.log_factor_constant
        return const, bp, k, (theta * params.gamma) ** a
    const = ((n - 1 - k) / ell) * math.log(1.0 - theta)
    return const, bp, n - 1 - k, ((1.0 - theta) * params.gamma) ** a


def _slot(kind: str, k: int, params: DecompParams) -> str:
    """What the ``(kind, k)`` slot holds: ``"ml"``, ``"remainder"`` or ``"one"``."""
    if kind == "R":
        return "remainder"
    if k < params.n:
        return "ml"
    holds_remainder = params.remainder_in_g if kind == "G" else not params.remainder_in_g
    return "remainder" if holds_remainder else "one"


def _log_remainder_constant(params: DecompParams) -> float:
    return math.log(params.ell) + (params.n / params.ell) * math.log(params.gamma) - math.lgamma(params.n + 1)


def factor_eval(kind: str, k: int, params: DecompParams, lam, tol: float = 1e-12) -> ScaledComplex:
    """``G_k``, ``H_k`` (``k = 0..n``) or ``R_n`` at a complex point.

    Slot ``k = n`` holds ``R_n`` in ``G`` and 1 in ``H`` when
    ``alpha >= beta``, and the other way round otherwise.
    """
    _check_index(kind, k, params)
    slot = _slot(kind, k, params)
    lam = complex(lam)
    if slot == "one":
        return ScaledComplex(0.0, 0.0)
    if slot == "remainder":
        value = remainder_deriv(params.ell, params.theta, params.n - 1, params.gamma ** (1.0 / params.ell) * lam, tol)
        return ScaledComplex(value.log_mag + _log_remainder_constant(params), value.phase)
    const, bp, order, scale = _factor_pieces(kind, k, params)
    value = ml_deriv(MLParams(1.0 / params.ell, bp, order), scale * lam, tol)
    return ScaledComplex(value.log_mag + const, value.phase)


def factor_array(kind: str, k: int, params: DecompParams, lam) -> ScaledComplex:
    """Vectorised :func:`factor_eval` for quadrature grids."""
    _check_index(kind, k, params)
    slot = _slot(kind, k, params)
    lam = np.asarray(lam, dtype=complex)
    if slot == "one":
        return ScaledComplex(np.zeros(lam.shape), np.zeros(lam.shape))
    if slot == "remainder":
        value = remainder_array(params.ell, params.theta, params.n - 1, params.gamma ** (1.0 / params.ell) * lam)
        return ScaledComplex(np.asarray(value.log_mag) + _log_remainder_constant(params), value.phase)
    const, bp, order, scale = _factor_pieces(kind, k, params)
    value = ml_deriv_array(1.0 / params.ell, bp, order, scale * lam)
    return ScaledComplex(np.asarray(value.log_mag) + const, value.phase)


def factor_slice(kind: str, k: int, params: DecompParams, z) -> SliceFunction:
    """``w -> factor(w . conj z)`` as a slice function."""
    _check_index(kind, k, params)
    return SliceFunction(lambda lam: factor_array(kind, k, params, lam), tuple(complex(v) for v in np.ravel(z)))


def decomposition_terms(params: DecompParams, lam, tol: float = 1e-12) -> tuple[ScaledComplex, list]:
    """``K_gamma`` at ``lam`` and the list ``[G_0 H_0, ..., G_{n-1} H_{n-1}, R_n]``."""
    kernel = kernel_profile(params.gamma, params.n, params.ell, lam, tol)
    terms = [factor_eval("G", k, params, lam, tol) * factor_eval("H", k, params, lam, tol) for k in range(params.n)]
    terms.append(factor_eval("R", params.n, params, lam, tol))
    return kernel, terms


def identity_residual(params: DecompParams, z, w, tol: float = 1e-12) -> float:
    """Relative residual of ``K_gamma(w, z) = sum_k G_k H_k + R_n`` at ``w . conj z``.

    The denominator is the largest of ``|K|`` and the moduli of the summands,
    i.e. the scale at which rounding enters; near a zero of ``K`` a relative
    residual against ``|K|`` alone would only measure cancellation.
    """
    z = np.asarray(z, dtype=complex).ravel()
    w = np.asarray(w, dtype=complex).ravel()
    if z.size != params.n or w.size != params.n:
        raise ParameterError(f"points must lie in C^{params.n}")
    lam = complex(np.sum(w * np.conj(z)))
    kernel, terms = decomposition_terms(params, lam, tol)
    total = ScaledComplex.zeros()
    for term in terms:
        total = total + term
    diff = kernel - total
    scale = max([kernel.log_mag] + [t.log_mag for t in terms])
    if not math.isfinite(scale):
        return 0.0
    return math.exp(diff.log_mag - scale) if math.isfinite(diff.log_mag) else 0.0


# ---------------------------------------------------------------------------
# norm envelopes


def _radial_power_and_rate(kind: str, k: int, params: DecompParams, p: float, rho: float, eta: float):
    """Exponent of ``(1+|z|)``, rate of ``|z|^(2l)`` and the space of a factor's norm.

    Returns ``(power, log_rates, alpha, rho, p)`` where ``log_rates`` lists
    the exponential rates whose sum of exponentials forms the envelope.
    """
    ell, n, theta, gamma = params.ell, params.n, params.theta, params.gamma
    q = conjugate_exponent(p)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    slot = _slot(kind, k, params)
    in_g = kind == "G" or (kind == "R" and params.remainder_in_g)
    if slot == "remainder":
        if in_g:
            power = rho + (ell - 1.0) * (2 * n * inv_q - 1.0)
            rates = [theta ** 2 * gamma ** 2 / (2 * params.alpha), (1 - theta) ** 2 * gamma ** 2 / (2 * params.alpha)]
            return power, rates, params.alpha, rho, p
        power = eta + (ell - 1.0) * (2 * n * inv_p - 1.0)
        rates = [theta ** 2 * gamma ** 2 / (2 * params.beta), (1 - theta) ** 2 * gamma ** 2 / (2 * params.beta)]
        return power, rates, params.beta, eta, q
    if slot == "one":
        if kind == "G":
            return rho, [0.0], params.alpha, rho, p
        return eta, [0.0], params.beta, eta, q
    if kind == "G":
        power = rho + (ell - 1.0) * (2 * k + 1 - 2 * n * inv_p)
        return power, [theta ** 2 * gamma ** 2 / (2 * params.alpha)], params.alpha, rho, p
    power = eta + (ell - 1.0) * (2 * (n - 1 - k) + 1 - 2 * n * inv_q)
    return power, [(1 - theta) ** 2 * gamma ** 2 / (2 * params.beta)], params.beta, eta, q


SHARP_REMAINDER_SHIFT = -2.0


def log_factor_envelope(kind: str, k: int, params: DecompParams, p: float, rho: float, eta: float, radius: float,
                        sharp_remainder: bool = False) -> float:
    """log of the growth envelope of a factor norm at ``|z| = radius``.

    With ``sharp_remainder`` the ``R_n`` envelope gains ``(1+|z|)^-2``: the
    remainder is one power of ``|w . conj(z)|`` smaller than the leading
    Mittag-Leffler asymptotics, and that product has size ``|z|^2`` where
    the weight concentrates.
    """
    power, rates, _, _, _ = _radial_power_and_rate(kind, k, params, p, rho, eta)
    if sharp_remainder and _slot(kind, k, params) == "remainder":
        power += SHARP_REMAINDER_SHIFT
    r2l = radius ** (2 * params.ell)
    exps = [rate * r2l for rate in rates]
    top = max(exps)
    return power * math.log1p(radius) + top + math.log(sum(math.exp(e - top) for e in exps))


def factor_norm(kind: str, k: int, params: DecompParams, p: float, rho: float, eta: float, z,
                rtol: float = 1e-6) -> float:
    """log-norm of a factor in its space: ``F^p_{alpha,rho}`` for G, ``F^{p'}_{beta,eta}`` for H.

    The remainder vanishes identically when ``ell == 1``; its log-norm is ``-inf``.
    """
    if params.ell == 1 and _slot(kind, k, params) == "remainder":
        return -math.inf
    _, _, alpha, weight_rho, exponent = _radial_power_and_rate(kind, k, params, p, rho, eta)
    space = SpaceParams(params.n, params.ell, alpha, weight_rho, exponent)
    return norm_slice(factor_slice(kind, k, params, z), space, rtol)


def factor_norm_report(params: DecompParams, p: float, rho: float, eta: float, radii: Sequence[float],
                       direction=None, rtol: float = 1e-6) -> dict:
    """RatioReports for every factor and for the two-sided product check.

    Keys are ``"G0"``, ``"H0"``, ..., ``"G{n}"``/``"H{n}"`` for the slot
    holding ``R_n`` (with ``"R_sharp"`` repeating it against the sharpened
    envelope of :func:`log_factor_envelope`), and ``"product"`` for
    ``sum_k ||G_k|| ||H_k||`` against ``(1+|z|)^(rho+eta) exp(gamma^2/(2(alpha+beta)) |z|^(2l))``.
    """
    if direction is None:
        direction = np.ones(params.n) / math.sqrt(params.n)
    direction = np.asarray(direction, dtype=complex)
    direction = direction / np.linalg.norm(direction)
    record = dict(params.as_dict(), p=format_p(p), rho=rho, eta=eta)
    reports = {}
    logs = {}
    for k in range(params.n + 1):
        for kind in ("G", "H"):
            values, envelopes = [], []
            for t in radii:
                values.append(factor_norm(kind, k, params, p, rho, eta, t * direction, rtol))
                envelopes.append(log_factor_envelope(kind, k, params, p, rho, eta, t))
            logs[(kind, k)] = values
            if _slot(kind, k, params) != "one":
                reports[f"{kind}{k}"] = RatioReport(dict(record, factor=f"{kind}{k}"), list(map(float, radii)),
                                                    values, envelopes, params.ell)
            if _slot(kind, k, params) == "remainder":
                sharp = [log_factor_envelope(kind, k, params, p, rho, eta, t, True) for t in radii]
                reports["R_sharp"] = RatioReport(dict(record, factor=f"{kind}{k}", envelope="sharp"),
                                                 list(map(float, radii)), values, sharp, params.ell)
    products, envelopes = [], []
    rate = params.gamma ** 2 / (2 * (params.alpha + params.beta))
    for i, t in enumerate(radii):
        parts = [logs[("G", k)][i] + logs[("H", k)][i] for k in range(params.n + 1)]
        top = max(parts)
        products.append(top + math.log(sum(math.exp(v - top) for v in parts)))
        envelopes.append((rho + eta) * math.log1p(t) + rate * t ** (2 * params.ell))
    reports["product"] = RatioReport(dict(record, factor="product"), list(map(float, radii)), products, envelopes,
                                     params.ell)
    return reports


def psi(theta, alpha: float, beta: float):
    """``theta^2/alpha + (1-theta)^2/beta``."""
    theta = np.asarray(theta, dtype=float)
    return theta ** 2 / alpha + (1.0 - theta) ** 2 / beta


def psi_minimiser(alpha: float, beta: float, points: int = 100_001) -> tuple[float, float]:
    """Grid minimiser of :func:`psi` over ``(0, 1)`` and the minimum value."""
    grid = np.linspace(0.0, 1.0, points)[1:-1]
    values = psi(grid, alpha, beta)
    idx = int(np.argmin(values))
    return float(grid[idx]), float(values[idx])


__all__ = [
    "DecompParams",
    "INF",
    "SHARP_REMAINDER_SHIFT",
    "decomposition_terms",
    "factor_array",
    "factor_eval",
    "factor_norm",
    "factor_norm_report",
    "identity_residual",
    "log_factor_envelope",
    "psi",
    "psi_minimiser",
    "remainder_array",
    "remainder_deriv",
    "remainder_eval",
    "split_constant",
    "split_parameter",
]
