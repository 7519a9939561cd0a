"""Weighted norms on C^n.

Two function classes are supported:

* slice functions ``w -> F(w . conj(z))``.  A unitary change of variables
  sending ``z`` to ``|z| e_1`` turns the 2n-dimensional integral into a
  planar integral over ``v_1`` times a one-dimensional integral over
  ``|v'|``, which is folded into a radial weight ``W``;
* pointwise moduli on C^n for ``n <= 2`` (polynomials and sums of moduli of
  polynomials), integrated in polar coordinates.

Radial integrals use composite tanh-sinh rules, angular integrals the
trapezoid rule or Gauss-Legendre panels between known kinks.  Every norm is
recomputed on a refined grid and :class:`ConvergenceError` is raised when
the two values disagree by more than ``rtol`` after the last refinement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, ParameterError
from .fock_core import INF, MultiIndexPoly, SpaceParams, format_p, log_phi_c, log_sphere_factor
from .scaled import ScaledComplex

DROP = 50.0
_T_MAX = 3.2
_MAX_REFINE = 6
_POINT_BUDGET = 40_000_000


# ---------------------------------------------------------------------------
# one-dimensional rules


@lru_cache(maxsize=32)
def tanh_sinh_rule(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the tanh-sinh rule on (-1, 1) with step ``2^-level``."""
    step = 2.0 ** (-level)
    count = int(math.ceil(_T_MAX / step))
    t = step * np.arange(-count, count + 1)
    inner = 0.5 * math.pi * np.sinh(t)
    nodes = np.tanh(inner)
    weights = step * 0.5 * math.pi * np.cosh(t) / np.cosh(inner) ** 2
    keep = np.abs(nodes) < 1.0
    return nodes[keep], weights[keep]


def composite_rule(lo: float, hi: float, panels: int, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Tanh-sinh rule on each of ``panels`` equal sub-intervals of ``[lo, hi]``."""
    if not hi > lo:
        return np.array([0.5 * (lo + hi)]), np.array([0.0])
    x, w = tanh_sinh_rule(level)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def angular_rule(count: int, breakpoints: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ``(1/2pi) int_{-pi}^{pi} g(t) dt``.

    Without breakpoints this is the trapezoid rule; otherwise Gauss-Legendre
    panels between consecutive breakpoints so that kinks sit on panel edges.
    """
    if not breakpoints:
        nodes = -math.pi + 2.0 * math.pi * (np.arange(count) + 0.5) / count
        return nodes, np.full(count, 1.0 / count)
    cuts = sorted({float(math.remainder(b, 2.0 * math.pi)) for b in breakpoints})
    edges = cuts + [cuts[0] + 2.0 * math.pi]
    per = max(8, int(math.ceil(count / len(cuts))))
    x, w = np.polynomial.legendre.leggauss(per)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * x)
        weights.append(half * w / (2.0 * math.pi))
    return np.concatenate(nodes), np.concatenate(weights)


def _logsumexp(values: np.ndarray, weights: np.ndarray, axis=None) -> np.ndarray:
    """``log sum w exp(v)`` for non-negative weights."""
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    total = values + logw
    peak = np.max(total, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    out = np.log(np.sum(np.exp(total - peak), axis=axis)) + np.squeeze(peak, axis=axis)
    return out


# ---------------------------------------------------------------------------
# radial weights


def log_radial_factor(radius, params: SpaceParams, power: float | None = None) -> np.ndarray:
    """log of ``h(r) = (1+r)^(rho q) exp(-(alpha q/2) r^(2l))`` with ``q = power or p``."""
    q = params.p if power is None else power
    radius = np.asarray(radius, dtype=float)
    return params.rho * q * np.log1p(radius) - 0.5 * params.alpha * q * radius ** (2 * params.ell)


def _peak_radius(params: SpaceParams) -> float:
    """Maximiser of ``(1+r)^rho exp(-(alpha/2) r^(2l))`` over ``r >= 0``."""
    if params.rho <= 0:
        return 0.0
    # derivative: rho/(1+r) = alpha l r^(2l-1)
    lo, hi = 0.0, 1.0
    while params.rho / (1 + hi) > params.alpha * params.ell * hi ** (2 * params.ell - 1):
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if params.rho / (1 + mid) > params.alpha * params.ell * mid ** (2 * params.ell - 1):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def log_sup_weight(radius, params: SpaceParams) -> np.ndarray:
    """log of ``max_{r >= s} (1+r)^rho exp(-(alpha/2) r^(2l))`` at ``s = radius``."""
    top = _peak_radius(params)
    return log_radial_factor(np.maximum(np.asarray(radius, dtype=float), top), params, 1.0)


def _tail_extent(s: np.ndarray, params: SpaceParams, budget: float) -> np.ndarray:
    """Length ``u`` after which ``h(s+u)/h(s)`` is below ``exp(-budget)``."""
    q = params.p
    c = 0.5 * params.alpha * q
    two_l = 2.0 * params.ell
    guess = (s ** two_l + budget / c) ** (1.0 / two_l) - s
    extra = max(params.rho * q, 0.0) + 2.0 * params.n
    for _ in range(3):
        guess = (s ** two_l + (budget + extra * np.log1p(s + guess + 1.0)) / c) ** (1.0 / two_l) - s
    return guess


def log_slice_weight(s, params: SpaceParams, level: int = 5) -> np.ndarray:
    """log of the folded weight ``W(s)`` of the slice reduction.

    ``W = h`` for ``n = 1``; for ``n >= 2`` it is
    ``int_s^inf (r^2 - s^2)^(n-2) r h(r) dr``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    base = log_radial_factor(s, params)
    if params.n == 1:
        return base
    span = _tail_extent(s, params, 70.0)
    x, w = composite_rule(0.0, 1.0, 4, level)
    u = span[:, None] * x[None, :]
    r = s[:, None] + u
    with np.errstate(divide="ignore"):
        logs = (params.n - 2) * (np.log(2 * s[:, None] + u) + np.log(u)) + np.log(r)
    logs = logs + log_radial_factor(r, params) - base[:, None]
    inner = _logsumexp(logs, w[None, :] * span[:, None], axis=1)
    return base + inner


def slice_constant(n: int) -> float:
    """Normalising constant ``C_n`` of the slice reduction under ``dV``."""
    if n == 1:
        return 1.0 / math.pi
    return 2.0 * n * (n - 1) / math.pi


# ---------------------------------------------------------------------------
# slice functions


@dataclass(frozen=True)
class SliceFunction:
    """The function ``w -> profile(w . conj(anchor))`` on C^n.

    Parameters
    ----------
    profile:
        Vectorised map from complex arrays to :class:`ScaledComplex`.
    anchor:
        The point ``z``.
    breakpoints:
        Arguments of the profile variable at which ``|profile|`` may have a
        kink, e.g. the edges of the sector of :func:`~fockhankel.fock_core.phi_c`.
    """

    profile: Callable[[np.ndarray], ScaledComplex]
    anchor: tuple
    breakpoints: tuple = ()

    @property
    def n(self) -> int:
        return len(self.anchor)

    @property
    def scale(self) -> float:
        return float(np.linalg.norm(np.asarray(self.anchor, dtype=complex)))

    def log_abs_on(self, s: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """``log |profile(|z| s e^{i theta})|`` on the outer product grid."""
        lam = self.scale * s[:, None] * np.exp(1j * theta)[None, :]
        return np.asarray(self.profile(lam).log_mag, dtype=float).reshape(lam.shape)

    def __call__(self, w) -> ScaledComplex:
        w = np.asarray(w, dtype=complex)
        lam = np.sum(w * np.conj(np.asarray(self.anchor, dtype=complex)), axis=-1)
        return self.profile(lam)


def _window(log_integrand: Callable[[np.ndarray], np.ndarray], start: float) -> tuple[float, float]:
    """Interval outside of which ``log_integrand`` stays ``DROP`` below its peak."""
    upper = max(start, 1.0)
    for _ in range(60):
        grid = np.linspace(0.0, upper, 401)
        values = log_integrand(grid)
        peak = float(np.max(values))
        tail = values[-40:]
        if np.all(tail < peak - DROP) and tail[-1] <= tail[0]:
            break
        upper *= 1.5
    else:
        raise ConvergenceError("could not bracket the integrand")
    alive = np.nonzero(values >= peak - DROP)[0]
    lo = grid[max(alive[0] - 1, 0)]
    hi = grid[min(alive[-1] + 2, grid.size - 1)]
    return float(lo), float(hi)


def _slice_integral(F: SliceFunction, params: SpaceParams, lo: float, hi: float,
                    level: int, count: int) -> float:
    """log of ``C_n int s W(s) int |F|^p dtheta ds`` with ``dtheta`` over a full turn."""
    s, ws = composite_rule(lo, hi, 4, level)
    theta, wt = angular_rule(count, F.breakpoints)
    log_f = F.log_abs_on(s, theta)
    with np.errstate(divide="ignore"):
        radial = np.log(s) + log_slice_weight(s, params)
    inner = _logsumexp(params.p * log_f, wt[None, :], axis=1)
    total = _logsumexp(radial + inner, ws)
    return float(total + math.log(2.0 * math.pi * slice_constant(params.n)))


def norm_slice(F: SliceFunction, params: SpaceParams, rtol: float = 1e-6) -> float:
    """log of ``||F(. conj z)||_{L^p_{alpha,rho}}``.

    The value is returned as a natural logarithm so that kernel norms of
    size ``exp(|z|^(2l))`` stay representable.
    """
    params.require_holomorphic()
    if F.n != params.n:
        raise ParameterError(f"slice function lives on C^{F.n}, params on C^{params.n}")
    if math.isinf(params.p):
        return _sup_slice(F, params)
    scan_theta = angular_rule(64, F.breakpoints)[0]

    def log_integrand(s):
        with np.errstate(divide="ignore"):
            return (np.log(s) + log_slice_weight(s, params, level=3)
                    + params.p * np.max(F.log_abs_on(s, scan_theta), axis=1))

    lo, hi = _window(log_integrand, 4.0)
    level, count = 3, 64
    current = _slice_integral(F, params, lo, hi, level, count)
    for _ in range(_MAX_REFINE):
        finer_theta = _slice_integral(F, params, lo, hi, level, 2 * count)
        if abs(math.expm1(finer_theta - current)) > rtol:
            count *= 2
            current = finer_theta
            continue
        finer_radial = _slice_integral(F, params, lo, hi, level + 1, count)
        if abs(math.expm1(finer_radial - current)) > rtol:
            level += 1
            current = finer_radial
            continue
        return finer_radial / params.p
    raise ConvergenceError("slice quadrature did not settle", partial=current / params.p)


def _sup_slice(F: SliceFunction, params: SpaceParams) -> float:
    """log of ``sup_v |F(|z| v_1)| sup_{|v| >= |v_1|} weight``."""
    theta = angular_rule(256, F.breakpoints)[0]

    def objective(s, t):
        return F.log_abs_on(np.atleast_1d(s), np.atleast_1d(t)) + log_sup_weight(np.atleast_1d(s), params)[:, None]

    upper = 4.0
    for _ in range(60):
        s = np.linspace(0.0, upper, 257)
        values = objective(s, theta)
        row = np.max(values, axis=1)
        if np.argmax(row) < 200 and row[-1] < np.max(row) - 5.0:
            break
        upper *= 1.5
    best = np.unravel_index(np.argmax(values), values.shape)
    start = np.array([s[best[0]], theta[best[1]]])

    def negated(x):
        return -float(objective(abs(x[0]), x[1])[0, 0])

    result = minimize(negated, start, method="Nelder-Mead",
                      options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
    return max(-float(result.fun), float(values[best]))


# ---------------------------------------------------------------------------
# pointwise moduli on C^n, n <= 2


def sphere_rule(n: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Points on the unit sphere of C^n and weights of the normalised surface measure.

    ``n = 2`` uses ``zeta = (sin(phi) e^{i t1}, cos(phi) e^{i t2})`` with
    Gauss-Legendre nodes in ``phi`` and trapezoid nodes in both angles.
    """
    theta = 2.0 * math.pi * np.arange(count) / count
    wt = np.full(count, 1.0 / count)
    if n == 1:
        return np.exp(1j * theta)[:, None], wt
    if n == 2:
        phi, wphi = _polar_rule(count)
        a = np.sin(phi)[:, None, None] * np.exp(1j * theta)[None, :, None]
        b = np.cos(phi)[:, None, None] * np.exp(1j * theta)[None, None, :]
        a, b = np.broadcast_arrays(a, b)
        points = np.stack([a.ravel(), b.ravel()], axis=-1)
        weights = (wphi[:, None, None] * wt[None, :, None] * wt[None, None, :]).ravel()
        return points, weights
    raise ParameterError(f"pointwise cubature supports n <= 2, got n={n}")


def _polar_rule(count: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule in ``phi`` on ``[0, pi/2]`` against ``2 sin(phi) cos(phi)``."""
    x, w = np.polynomial.legendre.leggauss(max(count // 2, 8))
    phi = 0.25 * math.pi * (x + 1.0)
    return phi, 0.25 * math.pi * w * 2.0 * np.sin(phi) * np.cos(phi)


class PolySum:
    """The modulus ``sum_i |f_i|`` of finitely many polynomials on C^n."""

    def __init__(self, polys: Sequence[MultiIndexPoly]) -> None:
        polys = [f for f in polys if not f.is_zero()]
        if not polys:
            raise ParameterError("PolySum needs at least one non-zero polynomial")
        self.polys = polys
        self.n = polys[0].n
        if any(f.n != self.n for f in polys):
            raise ParameterError("polynomials of different dimensions")
        self.degree = max(f.degree for f in polys)
        self._dense = [self._dense_coefficients(f) for f in polys]

    def _dense_coefficients(self, f: MultiIndexPoly) -> np.ndarray:
        shape = (self.degree + 1,) * self.n
        out = np.zeros(shape, dtype=complex)
        for nu, c in f.terms.items():
            out[nu] = c
        return out

    def __call__(self, points) -> np.ndarray:
        if self.n > 2:
            return sum(np.abs(f(points)) for f in self.polys)
        points = np.asarray(points, dtype=complex)
        if self.n == 1 and (points.ndim == 0 or points.shape[-1] != 1):
            points = points[..., None]
        powers = np.arange(self.degree + 1)
        flat = points.reshape(-1, self.n)
        vander = [flat[:, j, None] ** powers[None, :] for j in range(self.n)]
        dense = np.stack(self._dense)
        if self.n == 1:
            values = np.einsum("pa,ma->mp", vander[0], dense)
        else:
            values = np.einsum("pa,mab,pb->mp", vander[0], dense, vander[1])
        return np.sum(np.abs(values), axis=0).reshape(points.shape[:-1])

    def root_breaks(self) -> tuple[tuple, tuple]:
        """Moduli and arguments of the zeros (``n = 1``), where ``|f|`` has kinks."""
        moduli, args = set(), set()
        for dense in self._dense:
            coefs = np.trim_zeros(dense[::-1], "f")
            if coefs.size > 1:
                for root in np.roots(coefs):
                    if abs(root) > 1e-12:
                        moduli.add(float(abs(root)))
                        args.add(float(np.angle(root)))
        return tuple(sorted(moduli)), tuple(sorted(args))

    def log_growth(self, r) -> np.ndarray:
        """``log sum_i sum_nu |c_nu| r^|nu|``, a bound for ``log max_{|w|=r}``."""
        degrees, mags = [], []
        for f in self.polys:
            for nu, c in f.terms.items():
                degrees.append(sum(nu))
                mags.append(abs(c))
        degrees = np.array(degrees, dtype=float)
        mags = np.array(mags, dtype=float)
        r = np.atleast_1d(np.asarray(r, dtype=float))
        with np.errstate(divide="ignore"):
            logs = np.log(mags)[None, :] + degrees[None, :] * np.log(np.maximum(r, 1e-300))[:, None]
        peak = np.max(logs, axis=1)
        return peak + np.log(np.sum(np.exp(logs - peak[:, None]), axis=1))

    def on_spheres(self, r: np.ndarray, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Values on the :func:`sphere_rule` grid of every radius, via FFT.

        On a sphere of radius ``r`` each polynomial is a trigonometric
        polynomial in the angles, so one inverse FFT per radius (and polar
        node) evaluates it on the whole equispaced torus.
        """
        if count <= self.degree:
            raise ParameterError(f"angular count {count} cannot resolve degree {self.degree}")
        powers = np.arange(self.degree + 1)
        rpow = np.asarray(r, dtype=float)[:, None] ** powers[None, :]
        if self.n == 1:
            total = np.zeros((rpow.shape[0], count))
            for dense in self._dense:
                padded = np.zeros((rpow.shape[0], count), dtype=complex)
                padded[:, : self.degree + 1] = dense[None, :] * rpow
                total += np.abs(np.fft.ifft(padded, axis=1) * count)
            return total, np.full(count, 1.0 / count)
        phi, wphi = _polar_rule(count)
        sin_pow = np.sin(phi)[:, None] ** powers[None, :]
        cos_pow = np.cos(phi)[:, None] ** powers[None, :]
        total = np.zeros((rpow.shape[0], phi.size, count, count))
        for dense in self._dense:
            scaled = (dense[None, None, :, :]
                      * (rpow[:, None, :, None] * sin_pow[None, :, :, None])
                      * (rpow[:, None, None, :] * cos_pow[None, :, None, :]))
            # r^(a+b) = r^a r^b
            padded = np.zeros(scaled.shape[:2] + (count, count), dtype=complex)
            padded[:, :, : self.degree + 1, : self.degree + 1] = scaled
            total += np.abs(np.fft.ifft2(padded, axes=(2, 3)) * count * count)
        weights = (wphi[:, None, None] * np.full((count, count), 1.0 / count ** 2)[None, :, :]).ravel()
        return total.reshape(rpow.shape[0], -1), weights


def composite_rule_with_breaks(lo: float, hi: float, breaks: Sequence[float], panels: int,
                               level: int) -> tuple[np.ndarray, np.ndarray]:
    """:func:`composite_rule` on each piece of ``[lo, hi]`` cut at ``breaks``."""
    edges = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    parts = [composite_rule(a, b, panels, level) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    return np.concatenate([x for x, _ in parts]), np.concatenate([w for _, w in parts])


def _cubature(modulus, params: SpaceParams, hi: float, level: int, count: int) -> float:
    """log of ``2n int r^(2n-1) h(r) avg_S g(r zeta)^p dr`` on ``[0, hi]``."""
    radial_breaks, angular_breaks = (), ()
    if isinstance(modulus, PolySum) and params.n == 1:
        radial_breaks, angular_breaks = modulus.root_breaks()
    r, wr = composite_rule_with_breaks(0.0, hi, radial_breaks, 2, level)
    per_sphere = count if params.n == 1 else max(count // 2, 8) * count * count
    if per_sphere * r.size > _POINT_BUDGET:
        raise _BudgetExceeded
    chunk = max(1, int(2_000_000 // per_sphere))
    logs = np.empty(r.size)
    for start in range(0, r.size, chunk):
        rr = r[start:start + chunk]
        if isinstance(modulus, PolySum) and params.n == 2:
            values, wz = modulus.on_spheres(rr, count)
        elif params.n == 1:
            theta, wz = angular_rule(count, angular_breaks)
            values = modulus(rr[:, None, None] * np.exp(1j * theta)[None, :, None])
        else:
            zeta, wz = sphere_rule(params.n, count)
            values = modulus(rr[:, None, None] * zeta[None, :, :])
        with np.errstate(divide="ignore"):
            logs[start:start + chunk] = _logsumexp(params.p * np.log(values), wz[None, :], axis=1)
    with np.errstate(divide="ignore"):
        radial = (2 * params.n - 1) * np.log(r) + log_radial_factor(r, params)
    return float(_logsumexp(radial + logs, wr) + math.log(2 * params.n))


class _BudgetExceeded(Exception):
    pass


def _next_pow2(value: int) -> int:
    return 1 << max(int(value) - 1, 1).bit_length()


def norm_modulus(modulus, params: SpaceParams, log_growth: Callable | None = None,
                 angular_degree: int = 0, rtol: float = 1e-6) -> float:
    """log of ``||g||_{L^p_{alpha,rho}}`` for a non-negative function ``g`` on C^n.

    Parameters
    ----------
    modulus:
        A :class:`PolySum` (evaluated by FFT on spheres) or a callable mapping
        points with trailing axis ``n`` to ``g >= 0``.
    log_growth:
        Upper bound for ``log max_{|w|=r} g(w)``; fixes the truncation radius.
        Taken from the :class:`PolySum` when omitted.
    angular_degree:
        Trigonometric degree of ``g^p`` in each angle when known (0 otherwise);
        sets the starting angular resolution.
    rtol:
        Agreement required between a grid and its refinement.
    """
    params.require_holomorphic()
    if log_growth is None:
        log_growth = modulus.log_growth
    if math.isinf(params.p):
        return _sup_modulus(modulus, log_growth, params)

    def log_integrand(r):
        with np.errstate(divide="ignore"):
            return (2 * params.n - 1) * np.log(r) + log_radial_factor(r, params) + params.p * log_growth(r)

    _, hi = _window(log_integrand, 4.0)
    floor = modulus.degree + 1 if isinstance(modulus, PolySum) else 1
    count = _next_pow2(max(16 if params.n == 2 else 64, angular_degree + 2, floor))
    level = 3
    current = _cubature(modulus, params, hi, level, count)
    try:
        for _ in range(2 * _MAX_REFINE):
            finer = _cubature(modulus, params, hi, level, 2 * count)
            if abs(math.expm1(finer - current)) > rtol:
                count *= 2
                current = finer
                continue
            finer = _cubature(modulus, params, hi, level + 1, count)
            if abs(math.expm1(finer - current)) > rtol:
                level += 1
                current = finer
                continue
            return finer / params.p
    except _BudgetExceeded:
        pass
    raise ConvergenceError(f"cubature did not settle to rtol={rtol}", partial=current / params.p)


def _sup_modulus(modulus, log_growth, params: SpaceParams) -> float:
    """log of ``sup g(w) (1+|w|)^rho exp(-(alpha/2)|w|^(2l))``: scan, then Nelder-Mead."""

    def log_value(points):
        with np.errstate(divide="ignore"):
            return np.log(modulus(points)) + log_radial_factor(np.linalg.norm(points, axis=-1), params, 1.0)

    upper = 4.0
    for _ in range(60):
        r = np.linspace(0.0, upper, 161)
        bound = log_growth(r) + log_sup_weight(r, params)
        if bound[-1] < np.max(bound) - 30.0:
            break
        upper *= 1.5
    if isinstance(modulus, PolySum):
        count = _next_pow2(max(32 if params.n == 2 else 256, modulus.degree + 1))
        zeta, _ = sphere_rule(params.n, count)
        r = r[::2]
        with np.errstate(divide="ignore"):
            values = np.log(modulus.on_spheres(r, count)[0]) + log_radial_factor(r, params, 1.0)[:, None]
    else:
        zeta, _ = sphere_rule(params.n, 24 if params.n == 2 else 256)
        values = log_value(r[:, None, None] * zeta[None, :, :])
    order = np.argsort(values, axis=None)[::-1][:4]
    best = float(np.max(values))
    for flat in order:
        i, j = np.unravel_index(flat, values.shape)
        start = r[i] * zeta[j]
        x0 = np.concatenate([start.real, start.imag])

        def negated(x):
            point = (x[: params.n] + 1j * x[params.n:])[None, :]
            return -float(log_value(point)[0])

        result = minimize(negated, x0, method="Nelder-Mead",
                          options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 2000})
        best = max(best, -float(result.fun))
    return best


def norm_poly(f: MultiIndexPoly, params: SpaceParams, rtol: float = 1e-6) -> float:
    """log of ``||f||_{F^p_{alpha,rho}}`` for a polynomial ``f``.

    ``p = 2`` uses monomial orthogonality on spheres and needs only radial
    integrals, for every ``n``; other exponents use polar cubature (``n <= 2``).
    """
    params.require_holomorphic()
    if f.n != params.n:
        raise ParameterError(f"polynomial lives on C^{f.n}, params on C^{params.n}")
    if f.is_zero():
        return -math.inf
    if params.p == 2:
        logs = [
            2.0 * math.log(abs(c)) + log_sphere_factor(nu)
            + log_radial_moment(2 * sum(nu) + 2 * params.n - 1, params.alpha, params.ell, 2.0 * params.rho)
            for nu, c in f.terms.items()
        ]
        peak = max(logs)
        return 0.5 * (peak + math.log(math.fsum(math.exp(v - peak) for v in logs)))
    degree = 0 if math.isinf(params.p) else int(math.ceil(params.p * f.degree))
    return norm_modulus(PolySum([f]), params, angular_degree=degree, rtol=rtol)


# ---------------------------------------------------------------------------
# radial moments and the volume check


def log_radial_moment(power: float, alpha: float, ell: float, rho_power: float = 0.0,
                      rtol: float = 1e-12) -> float:
    """log of ``int_0^inf r^power (1+r)^rho_power exp(-alpha r^(2l)) dr``.

    Closed form through the Gamma function when ``rho_power = 0``.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    s = (power + 1.0) / (2.0 * ell)
    if rho_power == 0:
        return math.lgamma(s) - s * math.log(alpha) - math.log(2.0 * ell)

    def log_integrand(r):
        with np.errstate(divide="ignore"):
            return power * np.log(r) + rho_power * np.log1p(r) - alpha * r ** (2 * ell)

    lo, hi = _window(log_integrand, 4.0)
    previous = None
    for level in range(3, 9):
        r, w = composite_rule(lo, hi, 4, level)
        value = float(_logsumexp(log_integrand(r), w))
        if previous is not None and abs(math.expm1(value - previous)) <= rtol:
            return value
        previous = value
    raise ConvergenceError("radial moment did not settle", partial=previous)


def unit_ball_volume(n: int, level: int = 4) -> float:
    """``dV`` measure of the unit ball computed by the polar rules."""
    r, wr = composite_rule(0.0, 1.0, 2, level)
    if n <= 2:
        _, wz = sphere_rule(n, 16)
        sphere = float(np.sum(wz))
    else:
        sphere = 1.0
    return 2 * n * sphere * float(np.sum(wr * r ** (2 * n - 1)))


# ---------------------------------------------------------------------------
# the sector envelope


def phi_slice(c: float, ell: float, z) -> SliceFunction:
    """``w -> phi_c(w . conj z)`` with kinks at ``arg = +-pi/(2l)``."""
    edge = math.pi / (2 * ell)
    return SliceFunction(
        lambda lam: ScaledComplex(np.asarray(log_phi_c(c, lam, ell), dtype=float), np.zeros(np.shape(lam))),
        tuple(complex(v) for v in np.ravel(z)),
        (-edge, edge),
    )


def log_phi_envelope(params: SpaceParams, c: float, radius) -> object:
    """log of ``(1 + c^(1/l)|z|)^(rho - 2n(l-1)/p) exp(c^2/(2 alpha) |z|^(2l))``."""
    radius = np.asarray(radius, dtype=float)
    power = params.rho - (0.0 if math.isinf(params.p) else 2.0 * params.n * (params.ell - 1.0) / params.p)
    out = (power * np.log1p(c ** (1.0 / params.ell) * radius)
           + c ** 2 / (2.0 * params.alpha) * radius ** (2 * params.ell))
    return float(out) if out.ndim == 0 else out


def phi_norm_report(params: SpaceParams, c: float, radii: Sequence[float], direction=None,
                    rtol: float = 1e-6) -> "RatioReport":
    """``||phi_c(. conj z)||_{L^p_{alpha,rho}}`` over ``z = t * direction`` against its envelope."""
    if not c > 0:
        raise ParameterError(f"c must be positive, got {c}")
    if direction is None:
        direction = np.ones(params.n) / math.sqrt(params.n)
    direction = np.asarray(direction, dtype=complex)
    direction = direction / np.linalg.norm(direction)
    values = [norm_slice(phi_slice(c, params.ell, t * direction), params, rtol) for t in radii]
    envelopes = [log_phi_envelope(params, c, t) for t in radii]
    return RatioReport(params_record(params, c=c), list(map(float, radii)), values, envelopes, params.ell)


# ---------------------------------------------------------------------------
# reports


@dataclass
class RatioReport:
    """Values of a quantity against an envelope over a radial grid.

    ``value`` and ``envelope`` are natural logarithms.  ``slope_r2l`` is the
    least-squares slope of the log-ratio against ``|z|^(2l)`` and
    ``slope_log`` against ``log(1+|z|)``.
    """

    params: dict
    grid: list
    value: list
    envelope: list
    ell: float
    extra: dict = field(default_factory=dict)

    @property
    def log_ratio(self) -> np.ndarray:
        return np.asarray(self.value, dtype=float) - np.asarray(self.envelope, dtype=float)

    def stats(self) -> dict:
        ratio = self.log_ratio
        radius = np.asarray(self.grid, dtype=float)
        return {
            "min": float(np.min(ratio)),
            "max": float(np.max(ratio)),
            "geomean": float(math.exp(np.mean(ratio))),
            "slope_r2l": _slope(radius ** (2 * self.ell), ratio),
            "slope_log": _slope(np.log1p(radius), ratio),
        }

    def spread(self) -> float:
        """max ratio / min ratio."""
        ratio = self.log_ratio
        return float(math.exp(np.max(ratio) - np.min(ratio)))

    def to_json_obj(self) -> dict:
        out = {
            "params": self.params,
            "grid": [float(v) for v in self.grid],
            "value": [float(v) for v in self.value],
            "envelope": [float(v) for v in self.envelope],
            "log_ratio": self.stats(),
            "scale": "log",
        }
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2)

    def csv_rows(self) -> list:
        ratio = self.log_ratio
        return [
            {"grid": g, "value": v, "envelope": e, "log_ratio": float(r)}
            for g, v, e, r in zip(self.grid, self.value, self.envelope, ratio)
        ]


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    if x.size < 2 or np.ptp(x) == 0:
        return 0.0
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def params_record(params: SpaceParams, **extra) -> dict:
    out = params.as_dict()
    out.update(extra)
    out["p"] = format_p(params.p)
    return out


__all__ = [
    "INF",
    "RatioReport",
    "SliceFunction",
    "angular_rule",
    "composite_rule",
    "log_radial_moment",
    "log_slice_weight",
    "PolySum",
    "norm_modulus",
    "norm_poly",
    "norm_slice",
    "phi_norm_report",
    "phi_slice",
    "tanh_sinh_rule",
    "unit_ball_volume",
]
