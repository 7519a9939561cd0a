"""Small Hankel operators on ``F^2_{alpha,rho}`` in the monomial basis.

The operator is ``h_b f = conj(P_alpha(conj(f) b))``.  In the orthonormal
basis ``e_nu = w^nu / ||w^nu||_{F^2_{alpha,rho}}`` its matrix has entries

    h[nu, mu] = conj(b_{mu+nu}) ||w^{mu+nu}||^2_alpha ||w^nu||_{alpha,rho}
                / (||w^nu||^2_alpha ||w^mu||_{alpha,rho})

which for ``rho = 0`` reduces to the symmetric
``conj(b_{mu+nu}) ||w^{mu+nu}||^2 / (||w^mu|| ||w^nu||)``.  A polynomial
symbol of degree ``d`` gives a finite-rank operator supported on
``|mu|, |nu| <= d``, so truncations with ``N >= d`` are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .bergman import kernel_profile
from .decomposition import (
    DecompParams,
    _factor_pieces,
    _log_remainder_constant,
    _slot,
    factor_norm,
    log_factor_envelope,
    split_parameter,
)
from .errors import ParameterError
from .fock_core import (
    INF,
    MultiIndexPoly,
    SpaceParams,
    format_p,
    log_monomial_norm_sq,
    log_sphere_factor,
    multi_indices,
    pairing_poly,
)
from .lp_calculus import kernel_truncation
from .quadrature import RatioReport, log_radial_moment, norm_poly

RANK_THRESHOLD = 1e-8
STABILITY_TOLERANCE = 5e-3
STABILITY_STEP = 10


def default_truncation(n: int) -> int:
    """40 for ``n = 1``, 16 for ``n = 2`` and smaller for higher ``n``."""
    return {1: 40, 2: 16}.get(n, 8)


# ---------------------------------------------------------------------------
# monomial norms


@lru_cache(maxsize=None)
def _log_radial(degree: int, n: int, alpha: float, ell: float, rho: float) -> float:
    return log_radial_moment(2 * degree + 2 * n - 1, alpha, ell, 2.0 * rho)


def log_weighted_monomial_norm_sq(nu, alpha: float, ell: float, rho: float) -> float:
    """log of ``||w^nu||^2_{F^2_{alpha,rho}}`` (a radial integral times the sphere factor)."""
    nu = tuple(nu)
    if rho == 0:
        return log_monomial_norm_sq(len(nu), ell, alpha, nu)
    return log_sphere_factor(nu) + _log_radial(sum(nu), len(nu), float(alpha), float(ell), float(rho))


# ---------------------------------------------------------------------------
# the matrix


@dataclass
class HankelMatrix:
    """Truncated matrix of ``h_b`` on ``span{w^nu : |nu| <= N}``.

    Rows are indexed by ``nu`` (output), columns by ``mu`` (input), both in
    the graded order of ``basis``.
    """

    N: int
    basis: tuple
    matrix: np.ndarray
    params: dict
    flags: list = field(default_factory=list)
    _singular: np.ndarray | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def singular_values(self) -> np.ndarray:
        """Descending singular values (cached)."""
        if self._singular is None:
            if not np.all(np.isfinite(self.matrix)):
                raise ParameterError("matrix has non-finite entries")
            if not np.any(self.matrix):
                self._singular = np.zeros(self.dimension)
            else:
                self._singular = np.linalg.svd(self.matrix, compute_uv=False)
        return self._singular


def hankel_matrix(b: MultiIndexPoly, alpha: float, rho: float = 0.0, N: int | None = None,
                  ell: float = 1.0) -> HankelMatrix:
    """Matrix of ``h_b`` on ``F^2_{alpha,rho}`` truncated to degree ``N``.

    Flags ``truncation_below_symbol_degree`` when ``N < deg b`` and
    ``symbol_terms_dropped`` when terms of degree above ``2N`` cannot reach
    the truncated block.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if not ell >= 1:
        raise ParameterError(f"ell must be >= 1, got {ell}")
    if not math.isfinite(rho):
        raise ParameterError(f"rho must be finite, got {rho}")
    n = b.n
    N = default_truncation(n) if N is None else N
    if int(N) != N or N < 0:
        raise ParameterError(f"truncation degree must be a non-negative integer, got {N}")
    N = int(N)
    basis = multi_indices(n, N)
    position = {nu: i for i, nu in enumerate(basis)}
    matrix = np.zeros((len(basis), len(basis)), dtype=complex)
    flags = []
    if not b.is_zero() and b.degree > N:
        flags.append("truncation_below_symbol_degree")

    def half_rho(nu):
        return 0.5 * log_weighted_monomial_norm_sq(nu, alpha, ell, rho)

    dropped = False
    for kappa, coef in b.terms.items():
        if sum(kappa) > 2 * N:
            dropped = True
            continue
        log_top = log_monomial_norm_sq(n, ell, alpha, kappa)
        for mu in multi_indices(n, min(sum(kappa), N)):
            nu = tuple(k - m for k, m in zip(kappa, mu))
            if min(nu) < 0 or sum(nu) > N:
                continue
            log_entry = (log_top + half_rho(nu) - log_monomial_norm_sq(n, ell, alpha, nu) - half_rho(mu))
            matrix[position[nu], position[mu]] = coef.conjugate() * math.exp(log_entry)
    if dropped:
        flags.append("symbol_terms_dropped")
    record = {"n": n, "ell": ell, "alpha": alpha, "rho": rho}
    return HankelMatrix(N, basis, matrix, record, flags)


def structure_defect(M: HankelMatrix, b: MultiIndexPoly) -> float:
    """Largest relative spread of ``entry * ||w^mu|| ||w^nu|| / ||w^(mu+nu)||^2`` over ``mu + nu = kappa``.

    Zero when the matrix depends on ``(mu, nu)`` only through ``mu + nu``
    after normalisation (``rho = 0``).
    """
    n, ell, alpha = M.params["n"], M.params["ell"], M.params["alpha"]
    groups: dict = {}
    for i, nu in enumerate(M.basis):
        for j, mu in enumerate(M.basis):
            kappa = tuple(a + c for a, c in zip(mu, nu))
            scale = math.exp(0.5 * (log_monomial_norm_sq(n, ell, alpha, mu) + log_monomial_norm_sq(n, ell, alpha, nu))
                             - log_monomial_norm_sq(n, ell, alpha, kappa))
            groups.setdefault(kappa, []).append(M.matrix[i, j] * scale)
    worst = 0.0
    for kappa, values in groups.items():
        values = np.asarray(values)
        target = b.coefficient(kappa).conjugate()
        size = max(abs(target), np.max(np.abs(values)))
        if size > 0:
            worst = max(worst, float(np.max(np.abs(values - target))) / size)
    return worst


# ---------------------------------------------------------------------------
# Schatten norms


def schatten_from_singular_values(singular, p: float) -> float:
    """``(sum s_k^p)^(1/p)``, or ``max s_k`` for ``p = inf``; ``p`` in ``(0, inf]``."""
    if not p > 0:
        raise ParameterError(f"p must be positive, got {p}")
    s = np.abs(np.asarray(singular, dtype=float))
    if s.size == 0:
        return 0.0
    top = float(np.max(s))
    if top == 0 or math.isinf(p):
        return top
    return top * float(np.sum((s / top) ** p)) ** (1.0 / p)


def schatten_norm(M: HankelMatrix, p: float) -> float:
    """Schatten ``p``-norm of the truncated operator."""
    return schatten_from_singular_values(M.singular_values(), p)


def symbol_space(n: int, ell: float, alpha: float, p: float) -> SpaceParams:
    """``F^p_{alpha/2, 2n(l-1)/p}``, which is ``F^inf_{alpha/2}`` for ``p = inf``."""
    rho = 0.0 if math.isinf(p) else 2.0 * n * (ell - 1.0) / p
    return SpaceParams(n, ell, alpha / 2.0, rho, p)


def schatten_vs_symbol(b: MultiIndexPoly, alpha: float, rho: float, p: float, N: int | None = None,
                       ell: float = 1.0) -> dict:
    """``||h_b||_{S_p}``, ``||b||`` in the symbol space and their ratio.

    The zero symbol gives ratio 1 with the flag ``degenerate_symbol``.
    """
    if not 1 <= p:
        raise ParameterError(f"the symbol comparison needs p in [1, inf], got {p}")
    M = hankel_matrix(b, alpha, rho, N, ell)
    flags = list(M.flags)
    schatten = schatten_norm(M, p)
    if b.is_zero():
        symbol_norm, ratio = 0.0, 1.0
        flags.append("degenerate_symbol")
    else:
        symbol_norm = math.exp(norm_poly(b, symbol_space(b.n, ell, alpha, p)))
        ratio = schatten / symbol_norm
    return {
        "params": {"n": b.n, "ell": ell, "alpha": alpha, "rho": rho, "p": format_p(p), "N": M.N},
        "singular_values": [float(v) for v in M.singular_values()],
        "schatten": schatten,
        "symbol_norm": symbol_norm,
        "ratio": ratio,
        "flags": flags,
    }


def band(ratios: Sequence[float]) -> float:
    """``max / min`` of positive ratios."""
    values = [float(v) for v in ratios]
    if not values or min(values) <= 0:
        raise ParameterError("band needs positive ratios")
    return max(values) / min(values)


def truncation_stability(b: MultiIndexPoly, alpha: float, rho: float, p: float, N: int | None = None,
                         ell: float = 1.0, step: int = STABILITY_STEP) -> dict:
    """Relative change of ``||h_b||_{S_p}`` from ``N`` to ``N + step``; flagged above 0.5%."""
    N = default_truncation(b.n) if N is None else N
    low = schatten_norm(hankel_matrix(b, alpha, rho, N, ell), p)
    high = schatten_norm(hankel_matrix(b, alpha, rho, N + step, ell), p)
    change = abs(high - low) / high if high > 0 else 0.0
    return {"N": N, "step": step, "low": low, "high": high, "change": change,
            "flags": [] if change <= STABILITY_TOLERANCE else ["truncation_unstable"]}


def dilation_covariance(b: MultiIndexPoly, alpha: float, p: float, N: int | None = None, ell: float = 1.0,
                        rho: float = 0.0) -> float:
    """Relative gap between ``||h_b||_{S_p}`` at ``alpha`` and ``||h_{Psi(b)}||_{S_p}`` at 1.

    ``Psi(b)(z) = b(alpha^(-1/(2l)) z)``.  Exact for ``rho = 0``; for other
    ``rho`` the weights ``(1+|z|)^rho`` do not dilate and the gap is only bounded.
    """
    left = schatten_norm(hankel_matrix(b, alpha, rho, N, ell), p)
    right = schatten_norm(hankel_matrix(b.dilate(alpha ** (-1.0 / (2.0 * ell))), 1.0, rho, N, ell), p)
    if left == right:
        return 0.0
    return abs(left - right) / max(abs(left), abs(right))


# ---------------------------------------------------------------------------
# rank one


def _kernel_profile_series(n: int, ell: float, rho: float, radius_sq: float, weight_power: float) -> float:
    """``sum_d |w0|^(2d) (n-1+d)!/(2 n! d!) * M_rho(d)^x / M_0(d)^y`` by degree.

    ``weight_power`` selects the pair: ``0`` gives ``sum |w0^nu|^2 / ||w^nu||^2_rho``
    and ``1`` gives ``sum |w0^nu|^2 ||w^nu||^2_rho / ||w^nu||^4_1``.
    """
    logs = []
    peak = -math.inf
    for d in range(20001):
        log_multi = math.lgamma(n + d) - math.lgamma(d + 1) - math.log(2.0) - math.lgamma(n + 1)
        log_rho = _log_radial(d, n, 1.0, float(ell), float(rho))
        if weight_power == 0:
            log_moment = -log_rho
        else:
            log_moment = log_rho - 2.0 * _log_radial(d, n, 1.0, float(ell), 0.0)
        value = log_multi + log_moment + d * math.log(radius_sq)
        logs.append(value)
        peak = max(peak, value)
        if d > 8 and value < peak - 45.0:
            break
    else:
        raise ParameterError("rank-one series did not settle")
    return math.exp(peak) * math.fsum(math.exp(v - peak) for v in logs)


def rank_one_check(w0, ell: float = 1.0, rho: float = 0.0, N: int | None = None) -> dict:
    """Singular values of ``h_b`` for ``b`` the degree-``N`` truncation of ``K_{1/2}(., w0)`` (alpha = 1).

    The full operator has rank one with
    ``s_1 = 2^(-n/l) ||u|| ||v||``, ``u_nu = w0'^nu ||w^nu||_rho / ||w^nu||^2_1``
    and ``v_mu = w0'^mu / ||w^mu||_rho`` where ``w0' = 2^(-1/l) w0``.  For
    ``rho = 0`` this is ``2^(-n/l) K_1(w0', w0')``.
    """
    w0 = np.asarray(w0, dtype=complex).ravel()
    n = w0.size
    N = default_truncation(n) if N is None else N
    symbol = kernel_truncation(n, ell, 0.5, w0, N)
    if symbol.is_zero():
        raise ParameterError("empty symbol")
    M = hankel_matrix(symbol, 1.0, rho, N, ell)
    s = M.singular_values()
    shifted = 2.0 ** (-1.0 / ell) * w0
    radius_sq = float(np.sum(np.abs(shifted) ** 2))
    if rho == 0 or radius_sq == 0:
        predicted = 2.0 ** (-n / ell) * math.exp(kernel_profile(1.0, n, ell, radius_sq).log_mag)
    else:
        u_sq = _kernel_profile_series(n, ell, rho, radius_sq, 1)
        v_sq = _kernel_profile_series(n, ell, rho, radius_sq, 0)
        predicted = 2.0 ** (-n / ell) * math.sqrt(u_sq * v_sq)
    s1 = float(s[0])
    return {
        "params": {"n": n, "ell": ell, "rho": rho, "N": N, "w0": [[v.real, v.imag] for v in w0]},
        "numerical_rank": int(np.sum(s > RANK_THRESHOLD * s1)),
        "s1": s1,
        "predicted_s1": predicted,
        "relative_error": abs(s1 - predicted) / predicted,
        "s2_over_s1": float(s[1] / s1) if s.size > 1 else 0.0,
        "flags": list(M.flags),
    }


# ---------------------------------------------------------------------------
# the representation formula


def _check_representation_params(params: DecompParams) -> None:
    if not (params.gamma == 1 and params.alpha == 1 and params.beta == 1):
        raise ParameterError("the representation formula is set up for gamma = alpha = beta = 1")


def factor_taylor(kind: str, k: int, params: DecompParams, degree: int) -> np.ndarray:
    """Taylor coefficients of a decomposition factor in ``lam = w . conj z`` up to ``degree``.

    ``G_k``/``H_k`` are derivatives of ``E_{1/l,b'}`` at a scaled argument;
    the ``R_n`` slot uses the coefficientwise difference
    ``1/Gamma(a j + a) - c sum_i theta^(a i) (1-theta)^(a (j-i)) / (Gamma(a i + b') Gamma(a (j-i) + b'))``
    of the two series, differentiated ``n-1`` times.
    """
    if int(degree) != degree or degree < 0:
        raise ParameterError(f"degree must be a non-negative integer, got {degree}")
    degree = int(degree)
    slot = _slot(kind, k, params)
    ell = params.ell
    a = 1.0 / ell
    out = np.zeros(degree + 1)
    if slot == "one":
        out[0] = 1.0
        return out
    if slot == "ml":
        const, bp, order, scale = _factor_pieces(kind, k, params)
        for j in range(degree + 1):
            out[j] = math.exp(const + j * math.log(scale) + math.lgamma(j + order + 1) - math.lgamma(j + 1)
                              - math.lgamma(a * (j + order) + bp))
        return out
    m = params.n - 1
    bp = split_parameter(ell)
    theta = params.theta
    c = params.c
    const = _log_remainder_constant(params)
    for j in range(degree + 1):
        top = j + m
        cross = math.fsum(
            math.exp(a * i * math.log(theta) + a * (top - i) * math.log(1.0 - theta)
                     - math.lgamma(a * i + bp) - math.lgamma(a * (top - i) + bp))
            for i in range(top + 1)
        )
        coefficient = math.exp(-math.lgamma(a * top + a)) - c * cross
        out[j] = coefficient * math.exp(const + math.lgamma(top + 1) - math.lgamma(j + 1)
                                        + j * a * math.log(params.gamma))
    return out


def project_conj_product(g: MultiIndexPoly, b: MultiIndexPoly, alpha: float, ell: float) -> MultiIndexPoly:
    """``P_alpha(conj(g) b)`` on coefficients.

    ``P(conj(w^mu) w^kappa) = ||w^kappa||^2 / ||w^(kappa-mu)||^2 w^(kappa-mu)`` for
    ``kappa >= mu`` and 0 otherwise.
    """
    n = b.n
    terms: dict = {}
    for kappa, bk in b.terms.items():
        log_top = log_monomial_norm_sq(n, ell, alpha, kappa)
        for mu in multi_indices(n, sum(kappa)):
            rest = tuple(x - y for x, y in zip(kappa, mu))
            if min(rest) < 0:
                continue
            gm = g.terms.get(mu)
            if gm is None:
                continue
            value = gm.conjugate() * bk * math.exp(log_top - log_monomial_norm_sq(n, ell, alpha, rest))
            terms[rest] = terms.get(rest, 0j) + value
    return MultiIndexPoly(n, terms)


def representation_value(b: MultiIndexPoly, z, params: DecompParams, N: int) -> complex:
    """``sum_k <H_k(. conj z), conj(h_b(G_k(. conj z)))>`` with factors truncated at degree ``N``."""
    _check_representation_params(params)
    z = np.asarray(z, dtype=complex).ravel()
    if z.size != b.n or params.n != b.n:
        raise ParameterError(f"symbol on C^{b.n}, point in C^{z.size}, params for n={params.n}")
    parts = []
    for k in range(params.n + 1):
        g = MultiIndexPoly.from_profile(factor_taylor("G", k, params, N), z)
        h = MultiIndexPoly.from_profile(factor_taylor("H", k, params, N), z)
        parts.append(pairing_poly(h, project_conj_product(g, b, 1.0, params.ell), 1.0, params.ell))
    return complex(math.fsum(v.real for v in parts), math.fsum(v.imag for v in parts))


def representation_residual(b: MultiIndexPoly, z, params: DecompParams, N: int) -> float:
    """Deviation of :func:`representation_value` from ``conj(b(z))``.

    Relative to ``max(|b(z)|, sum |b_kappa z^kappa|)`` so that a zero of
    ``b`` does not turn rounding into a large relative error.
    """
    target = complex(b(np.asarray(z, dtype=complex).ravel())).conjugate()
    value = representation_value(b, z, params, N)
    z = np.asarray(z, dtype=complex).ravel()
    scale = max(abs(target), math.fsum(abs(c) * float(np.prod(np.abs(z) ** np.asarray(nu)))
                                       for nu, c in b.terms.items()))
    if scale == 0:
        return abs(value - target)
    return abs(value - target) / scale


def representation_sweep(b: MultiIndexPoly, z, params: DecompParams, degrees: Sequence[int]) -> dict:
    """:func:`representation_residual` over truncation degrees, with a monotonicity verdict."""
    residuals = [representation_residual(b, z, params, N) for N in degrees]
    monotone = all(later <= earlier for earlier, later in zip(residuals, residuals[1:]))
    return {"degrees": list(degrees), "residuals": residuals, "monotone": monotone}


# ---------------------------------------------------------------------------
# boundedness probe


def boundedness_probe(b: MultiIndexPoly, rho: float, p: float, radii: Sequence[float], direction=None,
                      ell: float = 1.0, N: int | None = None, rtol: float = 1e-6) -> RatioReport:
    """``exp(-|z|^(2l)/4) |b(z)|`` against ``s_1 sum_k ||G~_k|| ||H~_k||`` (alpha = 1).

    The normalized factors divide ``G_k(. conj z)`` and ``H_k(. conj z)`` by
    their growth envelopes (split at ``theta = 1/2``) so that
    ``sum_k G~_k H~_k = exp(-|z|^(2l)/4) K(., z)``.  ``G~`` is measured in
    ``F^p_{1,rho}`` and ``H~`` in ``F^{p'}_{1,-rho}``; the norms are kept in
    ``extra`` to check they stay bounded.  For ``p = 2`` the value never
    exceeds the envelope.
    """
    n = b.n
    if direction is None:
        direction = np.ones(n) / math.sqrt(n)
    direction = np.asarray(direction, dtype=complex)
    direction = direction / np.linalg.norm(direction)
    params = DecompParams(ell, 1.0, 1.0, 1.0, n)
    s1 = schatten_norm(hankel_matrix(b, 1.0, rho, N, ell), INF)
    values, envelopes = [], []
    g_norms = {k: [] for k in range(n + 1)}
    h_norms = {k: [] for k in range(n + 1)}
    for t in radii:
        z = t * direction
        modulus = abs(complex(b(z)))
        values.append(-t ** (2 * ell) / 4.0 + math.log(modulus) if modulus > 0 else -math.inf)
        logs = []
        for k in range(n + 1):
            log_g_env = log_factor_envelope("G", k, params, p, rho, -rho, t)
            log_g = factor_norm("G", k, params, p, rho, -rho, z, rtol) - log_g_env
            log_h = factor_norm("H", k, params, p, rho, -rho, z, rtol) + log_g_env - t ** (2 * ell) / 4.0
            g_norms[k].append(math.exp(log_g))
            h_norms[k].append(math.exp(log_h))
            logs.append(log_g + log_h)
        top = max(logs)
        envelopes.append(math.log(s1) + top + math.log(math.fsum(math.exp(v - top) for v in logs)))
    record = {"n": n, "ell": ell, "rho": rho, "p": format_p(p), "s1": s1}
    extra = {"G_normalized": {str(k): v for k, v in g_norms.items()},
             "H_normalized": {str(k): v for k, v in h_norms.items()}}
    return RatioReport(record, list(map(float, radii)), values, envelopes, ell, extra)


# ---------------------------------------------------------------------------
# test families


KERNEL_FAMILY_RADII = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
KERNEL_FAMILY_DEGREE = 30
MONOMIAL_FAMILY_DEGREE = 10


def symbol_family(n: int, ell: float) -> list:
    """``(label, symbol)``: monomials ``w_1^j`` (``j <= 10``) and degree-30 truncations of ``K_{1/2}(., t e_1)``."""
    members = []
    for j in range(MONOMIAL_FAMILY_DEGREE + 1):
        members.append((f"w^{j}", MultiIndexPoly.monomial((j,) + (0,) * (n - 1))))
    unit = np.zeros(n, dtype=complex)
    unit[0] = 1.0
    for t in KERNEL_FAMILY_RADII:
        members.append((f"K_trunc(t={t})", kernel_truncation(n, ell, 0.5, t * unit, KERNEL_FAMILY_DEGREE)))
    return members


def family_ratios(n: int, ell: float, p: float, rho: float = 0.0, alpha: float = 1.0, N: int | None = None,
                  members=None) -> dict:
    """:func:`schatten_vs_symbol` ratios over :func:`symbol_family` with the band."""
    if members is None:
        members = symbol_family(n, ell)
    ratios = {}
    for label, symbol in members:
        truncation = max(symbol.degree, KERNEL_FAMILY_DEGREE) if N is None else N
        ratios[label] = schatten_vs_symbol(symbol, alpha, rho, p, truncation, ell)["ratio"]
    return {"params": {"n": n, "ell": ell, "p": format_p(p), "rho": rho, "alpha": alpha},
            "ratios": ratios, "band": band(list(ratios.values()))}


__all__ = [
    "HankelMatrix",
    "band",
    "boundedness_probe",
    "default_truncation",
    "dilation_covariance",
    "factor_taylor",
    "family_ratios",
    "hankel_matrix",
    "log_weighted_monomial_norm_sq",
    "project_conj_product",
    "rank_one_check",
    "representation_residual",
    "representation_sweep",
    "representation_value",
    "schatten_from_singular_values",
    "schatten_norm",
    "schatten_vs_symbol",
    "structure_defect",
    "symbol_family",
    "symbol_space",
    "truncation_stability",
]
