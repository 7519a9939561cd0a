"""Derivatives of coefficient polynomials and the gradient norm equivalence.

The equivalence compared here is

    ||f||_{F^p_{alpha,rho}}  ~  sum_{m<k} |grad^m f(0)| + ||grad^k f||_{L^p_{alpha, rho-k(2l-1)}}

with ``|grad^m f| = sum_{|nu|=m} |d^nu f|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .fock_core import (
    MultiIndexPoly,
    SpaceParams,
    format_p,
    indices_of_degree,
    log_monomial_norm_sq,
    multi_indices,
)
from .mittag_leffler import ml_deriv_array
from .quadrature import PolySum, RatioReport, SliceFunction, norm_modulus, norm_poly, norm_slice

FAMILY_VERSION = "1"
FAMILY_DEGREE = 12
FAMILY_RADII = (0.5, 1.0, 1.5, 2.0, 2.5)
FAMILY_DILATIONS = (0.5, 2.0)


def _check_axis(f: MultiIndexPoly, axis: int) -> int:
    if int(axis) != axis or not 1 <= axis <= f.n:
        raise ParameterError(f"axis must lie in 1..{f.n}, got {axis}")
    return int(axis) - 1


def partial_derivative(f: MultiIndexPoly, axis: int) -> MultiIndexPoly:
    """``d f / d w_axis`` (axes are 1-based)."""
    j = _check_axis(f, axis)
    terms = {}
    for nu, c in f.terms.items():
        if nu[j] == 0:
            continue
        mu = nu[:j] + (nu[j] - 1,) + nu[j + 1:]
        terms[mu] = c * nu[j]
    return MultiIndexPoly(f.n, terms)


def derivative(f: MultiIndexPoly, nu: Sequence[int]) -> MultiIndexPoly:
    """``d^nu f``."""
    if len(nu) != f.n or min(nu) < 0:
        raise ParameterError(f"bad multi-index {tuple(nu)} for n={f.n}")
    out = f
    for axis, order in enumerate(nu, start=1):
        for _ in range(order):
            out = partial_derivative(out, axis)
    return out


def sj_apply(g: MultiIndexPoly, axis: int) -> MultiIndexPoly:
    """``S_j g(z) = z_j int_0^1 g(tz) dt``, i.e. ``g_nu / (|nu|+1)`` moved to ``nu + e_j``."""
    j = _check_axis(g, axis)
    terms = {}
    for nu, c in g.terms.items():
        mu = nu[:j] + (nu[j] + 1,) + nu[j + 1:]
        terms[mu] = c / (sum(nu) + 1)
    return MultiIndexPoly(g.n, terms)


def _exact(value: complex) -> tuple[Fraction, Fraction]:
    return Fraction(value.real), Fraction(value.imag)


def reconstruction_defect(f: MultiIndexPoly) -> list:
    """Multi-indices where ``f(0) + sum_j S_j(d_j f)`` differs from ``f``.

    Every coefficient is carried as an exact rational (floats convert
    exactly), so an empty list certifies the identity coefficient by
    coefficient.
    """
    target = {nu: _exact(c) for nu, c in f.terms.items()}
    rebuilt: dict = {}
    zero = (0,) * f.n
    if zero in target:
        rebuilt[zero] = target[zero]
    for j in range(f.n):
        for nu, (re, im) in target.items():
            if nu[j] == 0:
                continue
            # d_j moves nu to nu - e_j with factor nu_j; S_j moves it back dividing by |nu|
            factor = Fraction(nu[j], sum(nu))
            old = rebuilt.get(nu, (Fraction(0), Fraction(0)))
            rebuilt[nu] = (old[0] + factor * re, old[1] + factor * im)
    keys = set(target) | set(rebuilt)
    zero_pair = (Fraction(0), Fraction(0))
    return sorted(nu for nu in keys if target.get(nu, zero_pair) != rebuilt.get(nu, zero_pair))


def reconstruct(f: MultiIndexPoly) -> MultiIndexPoly:
    """``f(0) + sum_j S_j(d_j f)`` in floating point."""
    out = MultiIndexPoly.constant(f.n, f.coefficient((0,) * f.n))
    for axis in range(1, f.n + 1):
        out = out + sj_apply(partial_derivative(f, axis), axis)
    return out


@dataclass(frozen=True)
class GradientLayer:
    """All derivatives ``d^nu f`` with ``|nu| = order``."""

    order: int
    derivatives: dict

    @classmethod
    def of(cls, f: MultiIndexPoly, order: int) -> "GradientLayer":
        if int(order) != order or order < 0:
            raise ParameterError(f"order must be a non-negative integer, got {order}")
        return cls(int(order), {nu: derivative(f, nu) for nu in indices_of_degree(f.n, int(order))})

    @property
    def size(self) -> int:
        return len(self.derivatives)

    def at_origin(self) -> float:
        """``|grad^m f(0)| = sum_nu |d^nu f(0)|``."""
        return math.fsum(abs(g.coefficient((0,) * g.n)) for g in self.derivatives.values())

    def is_zero(self) -> bool:
        return all(g.is_zero() for g in self.derivatives.values())

    def modulus(self) -> PolySum:
        return PolySum(list(self.derivatives.values()))


def _default_rtol(params: SpaceParams) -> float:
    # cubature on C^2 settles near 1e-4 for kinked moduli; bands need far less
    return 1e-4 if params.n == 2 else 1e-6


def log_gradient_norm(f: MultiIndexPoly, k: int, params: SpaceParams, rtol: float | None = None) -> float:
    """log of ``||grad^k f||_{L^p_{alpha, rho - k(2l-1)}}``; ``-inf`` when the layer vanishes."""
    layer = GradientLayer.of(f, k)
    if layer.is_zero():
        return -math.inf
    shifted = params.with_(rho=params.rho - k * (2 * params.ell - 1))
    rtol = _default_rtol(params) if rtol is None else rtol
    return norm_modulus(layer.modulus(), shifted, rtol=rtol)


def lp_parts(f: MultiIndexPoly, k: int, params: SpaceParams, rtol: float | None = None) -> dict:
    """The pieces of :func:`lp_ratio`: origin terms, gradient norm and ``||f||`` (logs for norms)."""
    if f.n != params.n:
        raise ParameterError(f"polynomial on C^{f.n}, params on C^{params.n}")
    if f.is_zero():
        raise ParameterError("lp_ratio is undefined for the zero polynomial")
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    return _lp_parts(f, k, params, rtol, None)


def _lp_parts(f: MultiIndexPoly, k: int, params: SpaceParams, rtol: float | None,
              log_norm: float | None) -> dict:
    rtol = _default_rtol(params) if rtol is None else rtol
    origin = math.fsum(GradientLayer.of(f, m).at_origin() for m in range(int(k)))
    return {
        "origin": origin,
        "log_gradient_norm": log_gradient_norm(f, int(k), params, rtol),
        "log_norm": norm_poly(f, params, rtol) if log_norm is None else log_norm,
    }


def lp_ratio(f: MultiIndexPoly, k: int, params: SpaceParams, rtol: float | None = None,
             log_norm: float | None = None) -> float:
    """``(sum_{m<k} |grad^m f(0)| + ||grad^k f||_{L^p_{alpha,rho-k(2l-1)}}) / ||f||_{F^p_{alpha,rho}}``.

    ``log_norm`` may pass a precomputed ``log ||f||`` to skip that integral.
    """
    if log_norm is None:
        parts = lp_parts(f, k, params, rtol)
    else:
        parts = _lp_parts(f, k, params, rtol, log_norm)
    if not math.isfinite(parts["log_norm"]):
        raise ParameterError("||f|| underflows")
    gradient = math.exp(parts["log_gradient_norm"] - parts["log_norm"])
    return parts["origin"] * math.exp(-parts["log_norm"]) + gradient


# ---------------------------------------------------------------------------
# the versioned test family


def kernel_truncation(n: int, ell: float, alpha: float, anchor, degree: int) -> MultiIndexPoly:
    """``sum_{|nu| <= degree} w^nu conj(anchor)^nu / ||w^nu||^2_{F^2_alpha}``."""
    anchor = np.asarray(anchor, dtype=complex).ravel()
    if anchor.size != n:
        raise ParameterError(f"anchor must lie in C^{n}")
    terms = {}
    for nu in multi_indices(n, degree):
        power = complex(np.prod(np.conj(anchor) ** np.asarray(nu)))
        if power != 0:
            terms[nu] = power * math.exp(-log_monomial_norm_sq(n, ell, alpha, nu))
    return MultiIndexPoly(n, terms)


def _family_direction(n: int) -> np.ndarray:
    if n == 1:
        return np.array([1.0 + 0j])
    if n == 2:
        return np.array([0.6, 0.8j])
    raise ParameterError("the test family is defined for n <= 2")


def family_members(n: int, ell: float, alpha: float) -> list:
    """Version-1 family: ``(label, polynomial)`` pairs.

    * monomials of degree 0..12 (for ``n = 2``: ``(j, 0)`` and the balanced
      ``(j//2, j - j//2)``);
    * degree-12 truncations of ``K_alpha(., t u)`` at ``t`` in ``FAMILY_RADII``;
    * those truncations at ``t = 1`` dilated by ``FAMILY_DILATIONS``.
    """
    members = []
    for j in range(FAMILY_DEGREE + 1):
        if n == 1:
            members.append((f"w^{j}", MultiIndexPoly.monomial((j,))))
        elif n == 2:
            members.append((f"w^({j},0)", MultiIndexPoly.monomial((j, 0))))
            if j >= 2:
                nu = (j // 2, j - j // 2)
                members.append((f"w^({nu[0]},{nu[1]})", MultiIndexPoly.monomial(nu)))
        else:
            raise ParameterError("the test family is defined for n <= 2")
    direction = _family_direction(n)
    for t in FAMILY_RADII:
        members.append((f"K_trunc(t={t})", kernel_truncation(n, ell, alpha, t * direction, FAMILY_DEGREE)))
    base = kernel_truncation(n, ell, alpha, direction, FAMILY_DEGREE)
    for delta in FAMILY_DILATIONS:
        members.append((f"K_trunc(t=1)(delta={delta} w)", base.dilate(delta)))
    return members


def family_band(params: SpaceParams, k: int, members=None) -> dict:
    """``lp_ratio`` over the family with its band ``max/min``."""
    return family_bands(params, (k,), members)[k]


def family_bands(params: SpaceParams, orders: Sequence[int], members=None) -> dict:
    """:func:`family_band` for several ``k``, computing each ``||f||`` once."""
    if members is None:
        members = family_members(params.n, params.ell, params.alpha)
    rtol = _default_rtol(params)
    norms = {label: norm_poly(f, params, rtol) for label, f in members}
    out = {}
    for k in orders:
        ratios = {label: lp_ratio(f, k, params, rtol, norms[label]) for label, f in members}
        values = list(ratios.values())
        out[k] = {
            "params": dict(params.as_dict(), p=format_p(params.p), k=k, family_version=FAMILY_VERSION),
            "ratios": ratios,
            "min": min(values),
            "max": max(values),
            "band": max(values) / min(values),
        }
    return out


# ---------------------------------------------------------------------------
# derivatives of E_{1/l,(l+1)/(2l)} along slices


def _split_profile(ell: float, order: int):
    a = 1.0 / ell
    b = (ell + 1.0) / (2.0 * ell)
    return lambda lam: ml_deriv_array(a, b, order, lam)


def derivative_decay_report(params: SpaceParams, k: int, radii: Sequence[float], direction=None,
                            rtol: float = 1e-6) -> RatioReport:
    """``||F^(k)(. conj z)||_{F^p_{alpha,rho-k(2l-1)}} (1+|z|)^k`` against ``||F(. conj z)||_{F^p_{alpha,rho}}``.

    ``F = E_{1/l,(l+1)/(2l)}``.  Each ``d/dw`` brings down a factor of size
    ``|z|^(...)`` that the weight shift absorbs, leaving the ratio bounded
    above for ``|z| >= 1``.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    if direction is None:
        direction = np.ones(params.n) / math.sqrt(params.n)
    direction = np.asarray(direction, dtype=complex)
    direction = direction / np.linalg.norm(direction)
    shifted = params.with_(rho=params.rho - k * (2 * params.ell - 1))
    values, envelopes = [], []
    for t in radii:
        z = tuple(t * direction)
        top = norm_slice(SliceFunction(_split_profile(params.ell, int(k)), z), shifted, rtol)
        values.append(top + k * math.log1p(t))
        envelopes.append(norm_slice(SliceFunction(_split_profile(params.ell, 0), z), params, rtol))
    record = dict(params.as_dict(), p=format_p(params.p), k=int(k))
    return RatioReport(record, list(map(float, radii)), values, envelopes, params.ell)


__all__ = [
    "FAMILY_VERSION",
    "GradientLayer",
    "derivative",
    "derivative_decay_report",
    "family_band",
    "family_bands",
    "kernel_truncation",
    "log_gradient_norm",
    "lp_parts",
    "lp_ratio",
    "partial_derivative",
    "reconstruct",
    "reconstruction_defect",
    "sj_apply",
    "family_members",
]
