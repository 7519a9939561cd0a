"""Space parameters, weights, monomial norms and polynomial pairings.

Conventions
-----------
* ``dV`` is Lebesgue measure on C^n scaled by ``n!/pi^n`` so the unit ball
  has volume one.
* The weight of ``F^p_{alpha,rho}`` is ``(1+|z|)^rho exp(-(alpha/2)|z|^(2l))``
  and the norm is the ``L^p(dV)`` norm of ``|f| * weight``.
* ``p = math.inf`` denotes the sup norm.
* Multi-indices are tuples of non-negative ints, enumerated in graded order
  (total degree first, then descending in the first component).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import ParameterError

INF = math.inf
MultiIndex = tuple


@dataclass(frozen=True)
class SpaceParams:
    """Parameters ``(n, l, alpha, rho, p)`` of ``F^{p,l}_{alpha,rho}(C^n)``."""

    n: int
    ell: float
    alpha: float
    rho: float = 0.0
    p: float = 2.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.ell >= 1:
            raise ParameterError(f"ell must be >= 1, got {self.ell}")
        if not self.alpha >= 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.p >= 1):
            raise ParameterError(f"p must lie in [1, inf], got {self.p}")
        if not math.isfinite(self.rho):
            raise ParameterError(f"rho must be finite, got {self.rho}")

    @property
    def dual_p(self) -> float:
        """Conjugate exponent ``p' = p/(p-1)``, pairing 1 with inf."""
        return conjugate_exponent(self.p)

    def with_(self, **changes) -> "SpaceParams":
        values = dict(n=self.n, ell=self.ell, alpha=self.alpha, rho=self.rho, p=self.p)
        values.update(changes)
        return SpaceParams(**values)

    def require_holomorphic(self) -> None:
        if not self.alpha > 0:
            raise ParameterError("F-spaces need alpha > 0")

    def as_dict(self) -> dict:
        return {"n": self.n, "ell": self.ell, "alpha": self.alpha, "rho": self.rho, "p": format_p(self.p)}


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return INF
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def format_p(p: float):
    return "inf" if math.isinf(p) else p


def parse_p(text) -> float:
    if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo"):
        return INF
    try:
        value = float(text)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"cannot read p from {text!r}") from exc
    return value


# ---------------------------------------------------------------------------
# weights and the sector envelope


def log_weight(params: SpaceParams, z) -> object:
    """log of ``(1+|z|)^rho exp(-(alpha/2)|z|^(2l))``; ``z`` has trailing axis n."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != params.n:
        raise ParameterError(f"point dimension {z.shape[-1]} != n={params.n}")
    radius = np.sqrt(np.sum(np.abs(z) ** 2, axis=-1))
    out = params.rho * np.log1p(radius) - 0.5 * params.alpha * radius ** (2 * params.ell)
    return float(out) if np.ndim(out) == 0 else out


def weight(params: SpaceParams, z) -> object:
    return np.exp(log_weight(params, z))


def log_radial_weight(radius, alpha: float, rho: float, ell: float):
    radius = np.asarray(radius, dtype=float)
    return rho * np.log1p(radius) - 0.5 * alpha * radius ** (2 * ell)


def log_phi_c(c: float, lam, ell: float) -> object:
    """log of the sector envelope ``phi_c``.

    ``phi_c(x) = exp(c Re x^l)`` when ``|arg x| <= pi/(2l)`` and 1 otherwise.
    """
    if c < 0:
        raise ParameterError(f"c must be non-negative, got {c}")
    lam = np.asarray(lam, dtype=complex)
    angle = np.angle(lam)
    inside = np.abs(angle) <= math.pi / (2 * ell) * (1 + 1e-14)
    growth = c * np.abs(lam) ** ell * np.cos(ell * angle)
    out = np.where(inside, np.maximum(growth, 0.0), 0.0)
    return float(out) if out.ndim == 0 else out


def phi_c(c: float, lam, ell: float = 1.0) -> object:
    with np.errstate(over="ignore"):
        return np.exp(log_phi_c(c, lam, ell))


# ---------------------------------------------------------------------------
# multi-indices and monomial norms


@lru_cache(maxsize=128)
def multi_indices(n: int, max_degree: int) -> tuple:
    """All multi-indices of length ``n`` with ``|nu| <= max_degree`` in graded order."""
    out = []
    for degree in range(max_degree + 1):
        out.extend(indices_of_degree(n, degree))
    return tuple(out)


@lru_cache(maxsize=512)
def indices_of_degree(n: int, degree: int) -> tuple:
    if n == 1:
        return ((degree,),)
    out = []
    for first in range(degree, -1, -1):
        for rest in indices_of_degree(n - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


def log_monomial_norm_sq(n: int, ell: float, alpha: float, nu: Iterable[int]) -> float:
    """log of ``||w^nu||^2`` in ``F^2_alpha`` (rho = 0)."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    nu = tuple(int(v) for v in nu)
    if len(nu) != n or min(nu) < 0:
        raise ParameterError(f"bad multi-index {nu} for n={n}")
    size = sum(nu)
    s = (size + n) / ell
    return (
        -s * math.log(alpha)
        - math.log(ell)
        + math.lgamma(n + 1)
        + sum(math.lgamma(v + 1) for v in nu)
        + math.lgamma(s)
        - math.lgamma(n + size)
    )


def monomial_norm_sq(n: int, ell: float, alpha: float, nu: Iterable[int]) -> float:
    """``||w^nu||^2_{F^2_alpha} = alpha^(-(|nu|+n)/l)/l * n! nu! Gamma((|nu|+n)/l) / (n-1+|nu|)!``."""
    return math.exp(log_monomial_norm_sq(n, ell, alpha, nu))


def log_sphere_factor(nu: Iterable[int]) -> float:
    """log of ``(n!/pi^n) * int_{sphere} |zeta^nu|^2 dsigma = 2 n! nu! / (n-1+|nu|)!``."""
    nu = tuple(nu)
    n = len(nu)
    return math.log(2.0) + math.lgamma(n + 1) + sum(math.lgamma(v + 1) for v in nu) - math.lgamma(n + sum(nu))


# ---------------------------------------------------------------------------
# polynomials


class MultiIndexPoly:
    """A polynomial ``sum_nu c_nu w^nu`` on C^n with finite support.

    Zero coefficients are dropped on construction.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping | None = None) -> None:
        if int(n) != n or n < 1:
            raise ParameterError(f"n must be a positive integer, got {n}")
        self.n = int(n)
        clean: dict = {}
        for nu, coef in (terms or {}).items():
            nu = tuple(int(v) for v in nu)
            if len(nu) != self.n or min(nu) < 0:
                raise ParameterError(f"bad multi-index {nu} for n={self.n}")
            coef = complex(coef)
            if coef != 0:
                clean[nu] = clean.get(nu, 0j) + coef
        self.terms = {nu: c for nu, c in clean.items() if c != 0}

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, n: int, value: complex = 1.0) -> "MultiIndexPoly":
        return cls(n, {(0,) * n: value})

    @classmethod
    def monomial(cls, nu: Iterable[int], coef: complex = 1.0) -> "MultiIndexPoly":
        nu = tuple(nu)
        return cls(len(nu), {nu: coef})

    @classmethod
    def from_profile(cls, coefficients, anchor) -> "MultiIndexPoly":
        """Expand ``w -> sum_j c_j (w . conj(anchor))^j`` into monomials."""
        anchor = np.asarray(anchor, dtype=complex).ravel()
        n = anchor.size
        conj_anchor = np.conj(anchor)
        terms: dict = {}
        for j, cj in enumerate(coefficients):
            if cj == 0:
                continue
            for nu in indices_of_degree(n, j):
                multinomial = math.exp(math.lgamma(j + 1) - sum(math.lgamma(v + 1) for v in nu))
                power = complex(np.prod(conj_anchor ** np.asarray(nu)))
                terms[nu] = terms.get(nu, 0j) + cj * multinomial * power
        return cls(n, terms)

    # basic structure --------------------------------------------------
    @property
    def degree(self) -> int:
        return max((sum(nu) for nu in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, nu) -> complex:
        return self.terms.get(tuple(nu), 0j)

    def __repr__(self) -> str:
        return f"MultiIndexPoly(n={self.n}, terms={self.terms!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndexPoly) and self.n == other.n and self.terms == other.terms

    def _check(self, other: "MultiIndexPoly") -> None:
        if not isinstance(other, MultiIndexPoly):
            raise ParameterError("expected a MultiIndexPoly")
        if other.n != self.n:
            raise ParameterError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other: "MultiIndexPoly") -> "MultiIndexPoly":
        self._check(other)
        terms = dict(self.terms)
        for nu, c in other.terms.items():
            terms[nu] = terms.get(nu, 0j) + c
        return MultiIndexPoly(self.n, terms)

    def __sub__(self, other: "MultiIndexPoly") -> "MultiIndexPoly":
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> "MultiIndexPoly":
        return MultiIndexPoly(self.n, {nu: c * factor for nu, c in self.terms.items()})

    def __mul__(self, other: "MultiIndexPoly") -> "MultiIndexPoly":
        self._check(other)
        terms: dict = {}
        for mu, a in self.terms.items():
            for nu, b in other.terms.items():
                key = tuple(x + y for x, y in zip(mu, nu))
                terms[key] = terms.get(key, 0j) + a * b
        return MultiIndexPoly(self.n, terms)

    def conj_coefficients(self) -> "MultiIndexPoly":
        return MultiIndexPoly(self.n, {nu: c.conjugate() for nu, c in self.terms.items()})

    def dilate(self, factor: float) -> "MultiIndexPoly":
        """Return ``w -> f(factor * w)``."""
        return MultiIndexPoly(self.n, {nu: c * factor ** sum(nu) for nu, c in self.terms.items()})

    def truncate(self, max_degree: int) -> "MultiIndexPoly":
        return MultiIndexPoly(self.n, {nu: c for nu, c in self.terms.items() if sum(nu) <= max_degree})

    # evaluation -------------------------------------------------------
    def __call__(self, z) -> object:
        """Evaluate at points with trailing axis ``n`` (or a scalar when n=1)."""
        z = np.asarray(z, dtype=complex)
        if self.n == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        if z.shape[-1] != self.n:
            raise ParameterError(f"point dimension {z.shape[-1]} != n={self.n}")
        out = np.zeros(z.shape[:-1], dtype=complex)
        if not self.terms:
            return out if out.ndim else complex(out)
        top = self.degree
        powers = [np.ones(z.shape[:-1] + (top + 1,), dtype=complex) for _ in range(self.n)]
        for j in range(self.n):
            for d in range(1, top + 1):
                powers[j][..., d] = powers[j][..., d - 1] * z[..., j]
        for nu, c in self.terms.items():
            term = np.full(z.shape[:-1], c, dtype=complex)
            for j, v in enumerate(nu):
                if v:
                    term = term * powers[j][..., v]
            out = out + term
        return out if out.ndim else complex(out)

    def coefficient_array(self) -> np.ndarray:
        """Dense coefficient tensor of shape ``(deg+1,)*n``."""
        size = self.degree + 1
        arr = np.zeros((size,) * self.n, dtype=complex)
        for nu, c in self.terms.items():
            arr[nu] = c
        return arr

    # serialisation ----------------------------------------------------
    def to_json_obj(self) -> dict:
        ordered = sorted(self.terms.items(), key=lambda item: (sum(item[0]), tuple(-v for v in item[0])))
        return {
            "n": self.n,
            "terms": [{"nu": list(nu), "re": c.real, "im": c.imag} for nu, c in ordered],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj) -> "MultiIndexPoly":
        if not isinstance(obj, dict):
            raise ParameterError("symbol: top level must be an object")
        if "n" not in obj:
            raise ParameterError("symbol: missing field 'n'")
        n = obj["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ParameterError("symbol: field 'n' must be a positive integer")
        if "terms" not in obj:
            raise ParameterError("symbol: missing field 'terms'")
        if not isinstance(obj["terms"], list):
            raise ParameterError("symbol: field 'terms' must be a list")
        terms: dict = {}
        for idx, entry in enumerate(obj["terms"]):
            where = f"terms[{idx}]"
            if not isinstance(entry, dict):
                raise ParameterError(f"symbol: field '{where}' must be an object")
            nu = entry.get("nu")
            if not isinstance(nu, list) or len(nu) != n or not all(
                isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in nu
            ):
                raise ParameterError(f"symbol: field '{where}.nu' must list {n} non-negative integers")
            parts = []
            for key in ("re", "im"):
                value = entry.get(key, 0.0 if key == "im" else None)
                if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                    raise ParameterError(f"symbol: field '{where}.{key}' must be a finite number")
                parts.append(float(value))
            key = tuple(nu)
            terms[key] = terms.get(key, 0j) + complex(parts[0], parts[1])
        return cls(n, terms)

    @classmethod
    def from_json(cls, text: str) -> "MultiIndexPoly":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"symbol: invalid JSON ({exc.msg})") from exc
        return cls.from_json_obj(obj)


# ---------------------------------------------------------------------------
# pairings


def pairing_poly(f: MultiIndexPoly, g: MultiIndexPoly, alpha: float, ell: float) -> complex:
    """``<f, g>_alpha = sum_nu f_nu conj(g_nu) ||w^nu||^2``, exact by orthogonality."""
    if f.n != g.n:
        raise ParameterError(f"dimension mismatch: {f.n} vs {g.n}")
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    parts = []
    for nu, fc in f.terms.items():
        gc = g.terms.get(nu)
        if gc is None:
            continue
        parts.append(fc * gc.conjugate() * monomial_norm_sq(f.n, ell, alpha, nu))
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def dilation_pairing_check(f: MultiIndexPoly, g: MultiIndexPoly, alpha: float, delta: float, ell: float) -> float:
    """``|<f,g>_alpha - delta^(2n) <f, g(delta^2 .)>_(delta^(2l) alpha)|``."""
    if not (alpha > 0 and delta > 0):
        raise ParameterError("alpha and delta must be positive")
    lhs = pairing_poly(f, g, alpha, ell)
    rhs = delta ** (2 * f.n) * pairing_poly(f, g.dilate(delta ** 2), delta ** (2 * ell) * alpha, ell)
    return abs(lhs - rhs)


def random_poly(n: int, degree: int, rng: np.random.Generator, scale: float = 1.0) -> MultiIndexPoly:
    """Polynomial with independent complex Gaussian coefficients up to ``degree``."""
    terms = {}
    for nu in multi_indices(n, degree):
        terms[nu] = complex(rng.normal(), rng.normal()) * scale
    return MultiIndexPoly(n, terms)
