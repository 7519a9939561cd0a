"""The reproducing kernel of ``F^2_gamma`` and its growth envelopes.

``K_gamma(z, w) = (l gamma^(n/l) / n!) E^{(n-1)}_{1/l,1/l}(gamma^(1/l) z . conj(w))``.
"""

from __future__ import annotations

import math
from typing import Sequence

import mpmath
import numpy as np

from .errors import ParameterError
from .fock_core import (
    MultiIndexPoly,
    SpaceParams,
    conjugate_exponent,
    log_monomial_norm_sq,
    log_phi_c,
    multi_indices,
)
from .mittag_leffler import MLParams, ml_deriv, ml_deriv_array
from .quadrature import RatioReport, SliceFunction, norm_slice, params_record, sphere_rule
from .scaled import ScaledComplex


# Sum-of-moduli over modulus beyond which the oracle resums in mpmath.
ORACLE_CANCELLATION = 1e3


def _check(gamma: float, n: int, ell: float) -> None:
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    if not ell >= 1:
        raise ParameterError(f"ell must be >= 1, got {ell}")


def inner(z, w) -> complex:
    """``z . conj(w) = sum_j z_j conj(w_j)``."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if z.shape != w.shape:
        raise ParameterError(f"points of shapes {z.shape} and {w.shape}")
    return complex(np.sum(z * np.conj(w)))


def log_kernel_constant(gamma: float, n: int, ell: float) -> float:
    """log of ``l gamma^(n/l) / n!``."""
    return math.log(ell) + (n / ell) * math.log(gamma) - math.lgamma(n + 1)


def kernel_profile(gamma: float, n: int, ell: float, lam, tol: float = 1e-12) -> ScaledComplex:
    """``K_gamma`` as a function of ``lam = z . conj(w)`` (scalar, accurate)."""
    _check(gamma, n, ell)
    value = ml_deriv(MLParams(1.0 / ell, 1.0 / ell, n - 1), gamma ** (1.0 / ell) * complex(lam), tol)
    return ScaledComplex(value.log_mag + log_kernel_constant(gamma, n, ell), value.phase)


def kernel_profile_array(gamma: float, n: int, ell: float, lam) -> ScaledComplex:
    """Vectorised :func:`kernel_profile` for quadrature grids."""
    _check(gamma, n, ell)
    value = ml_deriv_array(1.0 / ell, 1.0 / ell, n - 1, gamma ** (1.0 / ell) * np.asarray(lam, dtype=complex))
    return ScaledComplex(np.asarray(value.log_mag) + log_kernel_constant(gamma, n, ell), value.phase)


def kernel_eval(gamma: float, n: int, ell: float, z, w, tol: float = 1e-12) -> ScaledComplex:
    """``K_gamma(z, w)`` for points of C^n."""
    z = np.asarray(z, dtype=complex).ravel()
    if z.size != n:
        raise ParameterError(f"point dimension {z.size} != n={n}")
    return kernel_profile(gamma, n, ell, inner(z, w), tol)


def kernel_series_oracle(gamma: float, n: int, ell: float, z, w, degree: int) -> ScaledComplex:
    """Truncated monomial expansion ``sum_{|nu| <= N} z^nu conj(w)^nu / ||w^nu||^2``.

    An independent check of :func:`kernel_eval`: it never touches the
    Mittag-Leffler code and sums over multi-indices rather than degrees.
    """
    _check(gamma, n, ell)
    if degree < 0:
        raise ParameterError(f"degree must be non-negative, got {degree}")
    z = np.asarray(z, dtype=complex).ravel()
    w = np.asarray(w, dtype=complex).ravel()
    products = z * np.conj(w)
    logs, phases, indices = [], [], []
    for nu in multi_indices(n, degree):
        term_log = -log_monomial_norm_sq(n, ell, gamma, nu)
        term_phase = 0.0
        zero = False
        for value, power in zip(products, nu):
            if power == 0:
                continue
            if value == 0:
                zero = True
                break
            term_log += power * math.log(abs(value))
            term_phase += power * math.atan2(value.imag, value.real)
        if not zero:
            logs.append(term_log)
            phases.append(term_phase)
            indices.append(nu)
    peak = max(logs)
    re = math.fsum(math.exp(v - peak) * math.cos(t) for v, t in zip(logs, phases))
    im = math.fsum(math.exp(v - peak) * math.sin(t) for v, t in zip(logs, phases))
    magnitude = abs(complex(re, im))
    mass = math.fsum(math.exp(v - peak) for v in logs)
    if magnitude > 0 and mass / magnitude < ORACLE_CANCELLATION:
        return ScaledComplex.from_parts(peak, complex(re, im))
    # Cancellation: each double-precision term carries ~1e-16 of the peak,
    # so resum exactly from the closed-form coefficients.
    digits = 25 + int(math.log10(mass / magnitude)) if magnitude > 0 else 60
    with mpmath.workdps(digits):
        mp_products = [mpmath.mpc(v.real, v.imag) for v in products]
        log_fact = [mpmath.loggamma(k + 1) for k in range(degree + n + 1)]
        base = -mpmath.log(ell) + log_fact[n]
        log_scale = mpmath.log(gamma)
        by_size = {}
        for size in range(degree + 1):
            s = mpmath.mpf(size + n) / ell
            by_size[size] = base - s * log_scale + mpmath.loggamma(s) - log_fact[n + size - 1]
        powers = [[mpmath.mpc(1)] for _ in products]
        for row, value in zip(powers, mp_products):
            for _ in range(degree):
                row.append(row[-1] * value)
        total = mpmath.mpc(0)
        for nu in indices:
            term = mpmath.exp(-(by_size[sum(nu)] + mpmath.fsum(log_fact[v] for v in nu)))
            for row, power in zip(powers, nu):
                term *= row[power]
            total += term
        if total == 0:
            return ScaledComplex.from_parts(peak, 0j)
        log_abs = float(mpmath.log(abs(total)))
        unit = complex(total / abs(total))
    return ScaledComplex.from_parts(log_abs, unit)


def oracle_degree(gamma: float, n: int, ell: float, z, w, drop: float = 40.0, max_degree: int = 2000) -> int:
    """Smallest degree past which the monomial terms are below ``exp(-drop)`` times ``min(1, peak)``.

    The absolute floor matters where the sum cancels down to a value far
    below its largest term.  Uses the degree-``d`` bound ``C(d+n-1, n-1) (|z||w|)^d / min_{|nu|=d} ||w^nu||^2``,
    where the minimum sits at the balanced multi-index.
    """
    product = float(np.linalg.norm(np.asarray(z, dtype=complex))) * float(np.linalg.norm(np.asarray(w, dtype=complex)))
    if product == 0:
        return 0
    peak = -math.inf
    for d in range(max_degree + 1):
        balanced = tuple(d // n + (1 if j < d % n else 0) for j in range(n))
        value = (math.lgamma(d + n) - math.lgamma(d + 1) - math.lgamma(n) + d * math.log(product)
                 - log_monomial_norm_sq(n, ell, gamma, balanced))
        peak = max(peak, value)
        if value < min(peak, 0.0) - drop and d > 4:
            return d
    raise ParameterError(f"series oracle needs more than {max_degree} degrees")


def dilation_identity_residual(gamma: float, delta: float, n: int, ell: float, z, w) -> float:
    """Largest relative gap among ``K(z, dw)``, ``K(dz, w)`` and ``d^-n K_{gamma d^l}(z, w)``."""
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    first = kernel_eval(gamma, n, ell, z, delta * w)
    second = kernel_eval(gamma, n, ell, delta * z, w)
    third = kernel_eval(gamma * delta ** ell, n, ell, z, w)
    third = ScaledComplex(third.log_mag - n * math.log(delta), third.phase)
    return max(first.relative_difference(second), first.relative_difference(third),
               second.relative_difference(third))


def hermitian_residual(gamma: float, n: int, ell: float, z, w) -> float:
    """Relative gap between ``K(z, w)`` and ``conj(K(w, z))``."""
    return kernel_eval(gamma, n, ell, z, w).relative_difference(kernel_eval(gamma, n, ell, w, z).conj())


def log_kernel_norm_envelope(p: float, alpha: float, rho: float, gamma: float, n: int, ell: float, radius) -> object:
    """log of ``(1+|z|)^(rho + 2n(l-1)/p') exp(gamma^2/(2 alpha) |z|^(2l))``."""
    _check(gamma, n, ell)
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    radius = np.asarray(radius, dtype=float)
    dual = conjugate_exponent(p)
    power = rho + (0.0 if math.isinf(dual) else 2.0 * n * (ell - 1.0) / dual)
    out = power * np.log1p(radius) + gamma ** 2 / (2.0 * alpha) * radius ** (2 * ell)
    return float(out) if out.ndim == 0 else out


def kernel_norm_envelope(p: float, alpha: float, rho: float, gamma: float, n: int, ell: float, z) -> float:
    """Growth envelope of ``||K_gamma(., z)||_{F^p_{alpha,rho}}``."""
    radius = float(np.linalg.norm(np.asarray(z, dtype=complex)))
    return math.exp(log_kernel_norm_envelope(p, alpha, rho, gamma, n, ell, radius))


def kernel_slice(gamma: float, n: int, ell: float, z) -> SliceFunction:
    """``w -> K_gamma(w, z)`` as a slice function."""
    _check(gamma, n, ell)
    return SliceFunction(lambda lam: kernel_profile_array(gamma, n, ell, lam), tuple(complex(v) for v in np.ravel(z)))


def kernel_norm(params: SpaceParams, gamma: float, z, rtol: float = 1e-6) -> float:
    """log of ``||K_gamma(., z)||_{F^p_{alpha,rho}}`` by slice quadrature."""
    return norm_slice(kernel_slice(gamma, params.n, params.ell, z), params, rtol)


def kernel_norm_report(params: SpaceParams, gamma: float, radii: Sequence[float],
                       direction=None) -> RatioReport:
    """Kernel norms over ``z = t * direction`` against :func:`kernel_norm_envelope`."""
    direction = _unit(params.n, direction)
    values, envelopes = [], []
    for t in radii:
        values.append(kernel_norm(params, gamma, t * direction))
        envelopes.append(log_kernel_norm_envelope(params.p, params.alpha, params.rho, gamma, params.n, params.ell, t))
    return RatioReport(params_record(params, gamma=gamma), list(map(float, radii)), values, envelopes, params.ell)


def _unit(n: int, direction) -> np.ndarray:
    if direction is None:
        direction = np.ones(n) / math.sqrt(n)
    direction = np.asarray(direction, dtype=complex)
    return direction / np.linalg.norm(direction)


def log_pointwise_envelope(alpha: float, n: int, ell: float, z, w) -> float:
    """log of ``(1+|z|)^(n(l-1)) (1+|w|)^(n(l-1)) phi_alpha(z . conj(w))``."""
    rz = float(np.linalg.norm(np.asarray(z, dtype=complex)))
    rw = float(np.linalg.norm(np.asarray(w, dtype=complex)))
    power = n * (ell - 1.0)
    return power * (math.log1p(rz) + math.log1p(rw)) + float(log_phi_c(alpha, inner(z, w), ell))


def pointwise_envelope_check(alpha: float, n: int, ell: float, pairs) -> RatioReport:
    """``|K_alpha(z, w)|`` against its pointwise envelope on ``(z, w)`` pairs.

    The grid coordinate is ``|z . conj(w)|``.
    """
    grid, values, envelopes = [], [], []
    for z, w in pairs:
        grid.append(abs(inner(z, w)))
        values.append(kernel_eval(alpha, n, ell, z, w).log_mag)
        envelopes.append(log_pointwise_envelope(alpha, n, ell, z, w))
    record = {"alpha": alpha, "n": n, "ell": ell}
    return RatioReport(record, grid, values, envelopes, ell / 2.0)


def _reproducing_radius(gamma: float, n: int, ell: float, degree: int, radius_z: float, drop: float) -> float:
    """Radius beyond which the pairing integrand bound is ``exp(-drop)`` below its peak."""
    upper = 4.0 + 4.0 * radius_z
    for _ in range(40):
        r = np.linspace(1e-6, upper, 4001)
        bound = ((degree + 2 * n) * np.log(r) + gamma * (r * radius_z) ** ell
                 + n * (ell - 1.0) * np.log1p(r * radius_z) - gamma * r ** (2 * ell))
        peak = int(np.argmax(bound))
        beyond = np.nonzero(bound[peak:] < bound[peak] - drop)[0]
        if beyond.size:
            return float(r[peak + beyond[0]])
        upper *= 1.5
    raise ParameterError("no cut-off radius found for the reproducing check")


def reproducing_value(f: MultiIndexPoly, gamma: float, ell: float, z, radial_nodes: int = 96,
                      angular: int | None = None, drop: float = 40.0) -> complex:
    """``<f, K_gamma(., z)>_gamma`` by polar quadrature (``n <= 2``).

    ``dV = 2n r^(2n-1) dr dsigma`` with ``sigma`` the normalised sphere
    measure; the radius is cut where the integrand bound has dropped by
    ``exp(-drop)``.
    """
    _check(gamma, f.n, ell)
    n = f.n
    z = np.asarray(z, dtype=complex).ravel()
    if z.size != n:
        raise ParameterError(f"point dimension {z.size} != n={n}")
    radius = _reproducing_radius(gamma, n, ell, f.degree, float(np.linalg.norm(z)), drop)
    x, wx = np.polynomial.legendre.leggauss(radial_nodes)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * wx * 2 * n * r ** (2 * n - 1) * np.exp(-gamma * r ** (2 * ell))
    if angular is None:
        angular = 128 if n == 1 else 48
    zeta, ws = sphere_rule(n, angular)
    total = 0j
    for start in range(0, radial_nodes, 16):
        chunk = slice(start, start + 16)
        points = r[chunk, None, None] * zeta[None, :, :]
        lam = np.sum(points * np.conj(z), axis=-1)
        kernel = kernel_profile_array(gamma, n, ell, lam).decode()
        total += complex(np.sum(wr[chunk, None] * ws[None, :] * f(points) * np.conj(kernel)))
    return total


def reproducing_residual(f: MultiIndexPoly, gamma: float, ell: float, z, **options) -> float:
    """Relative gap between :func:`reproducing_value` and ``f(z)``."""
    target = complex(f(np.asarray(z, dtype=complex).ravel()))
    value = reproducing_value(f, gamma, ell, z, **options)
    return abs(value - target) / abs(target)
