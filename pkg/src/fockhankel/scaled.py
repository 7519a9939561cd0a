"""Complex numbers stored as ``(log|z|, arg z)``.

Kernel values grow like ``exp(|z|^(2l))`` and leave the double range long
before the quantities we compare (ratios, residuals) do.  Keeping the
logarithm of the modulus lets products, quotients and sums of such values be
formed without overflow.  Fields may be scalars or numpy arrays of a common
shape; every operation broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

Number = Union[int, float, complex]


def _wrap_phase(phase):
    """Map angles into the principal range (-pi, pi]."""
    wrapped = np.remainder(np.asarray(phase, dtype=float) + np.pi, 2 * np.pi) - np.pi
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def _safe_log_abs(values):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


@dataclass(frozen=True)
class ScaledComplex:
    """A complex value ``exp(log_mag) * exp(1j * phase)``.

    ``log_mag = -inf`` encodes zero.  ``phase`` is kept in (-pi, pi].
    """

    log_mag: object
    phase: object

    def __post_init__(self) -> None:
        log_mag = np.asarray(self.log_mag, dtype=float)
        phase = np.where(np.isneginf(log_mag), 0.0, np.asarray(self.phase, dtype=float))
        if log_mag.ndim == 0:
            object.__setattr__(self, "log_mag", float(log_mag))
        else:
            object.__setattr__(self, "log_mag", log_mag)
        object.__setattr__(self, "phase", _wrap_phase(phase))

    # construction -----------------------------------------------------
    @classmethod
    def from_complex(cls, value) -> "ScaledComplex":
        value = np.asarray(value, dtype=complex)
        return cls(_safe_log_abs(value), np.angle(value))

    @classmethod
    def from_parts(cls, log_scale, mantissa) -> "ScaledComplex":
        """Build ``exp(log_scale) * mantissa`` with complex ``mantissa``."""
        mantissa = np.asarray(mantissa, dtype=complex)
        return cls(np.asarray(log_scale, dtype=float) + _safe_log_abs(mantissa), np.angle(mantissa))

    @classmethod
    def zeros(cls, shape=()) -> "ScaledComplex":
        return cls(np.full(shape, -np.inf), np.zeros(shape))

    # access -------------------------------------------------------------
    @property
    def shape(self):
        return np.shape(self.log_mag)

    def decode(self):
        """Return the native complex value; may overflow to ``inf``."""
        with np.errstate(over="ignore"):
            out = np.exp(np.asarray(self.log_mag) + 1j * np.asarray(self.phase))
        out = np.where(np.isneginf(self.log_mag), 0.0, out)
        if np.ndim(out) == 0:
            return complex(out)
        return out

    def mantissa(self, log_ref):
        """Return ``self * exp(-log_ref)`` as a native complex value."""
        shifted = np.asarray(self.log_mag) - np.asarray(log_ref)
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.exp(shifted + 1j * np.asarray(self.phase))
        return np.where(np.isneginf(self.log_mag), 0.0, out)

    def __abs__(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_mag)

    def __getitem__(self, index) -> "ScaledComplex":
        return ScaledComplex(np.asarray(self.log_mag)[index], np.asarray(self.phase)[index])

    # arithmetic ---------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "ScaledComplex":
        if isinstance(other, ScaledComplex):
            return other
        return ScaledComplex.from_complex(other)

    def __mul__(self, other) -> "ScaledComplex":
        other = self._coerce(other)
        return ScaledComplex(np.add(self.log_mag, other.log_mag), np.add(self.phase, other.phase))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScaledComplex":
        other = self._coerce(other)
        if np.any(np.isneginf(other.log_mag)):
            raise ZeroDivisionError("division by a zero ScaledComplex")
        return ScaledComplex(np.subtract(self.log_mag, other.log_mag), np.subtract(self.phase, other.phase))

    def __neg__(self) -> "ScaledComplex":
        return ScaledComplex(self.log_mag, np.add(self.phase, np.pi))

    def conj(self) -> "ScaledComplex":
        return ScaledComplex(self.log_mag, np.negative(self.phase))

    def __add__(self, other) -> "ScaledComplex":
        other = self._coerce(other)
        frame = np.maximum(self.log_mag, other.log_mag)
        finite = np.isfinite(frame)
        ref = np.where(finite, frame, 0.0)
        total = self.mantissa(ref) + other.mantissa(ref)
        result = ScaledComplex.from_parts(ref, total)
        if np.all(finite):
            return result
        return ScaledComplex(np.where(finite, result.log_mag, -np.inf), np.where(finite, result.phase, 0.0))

    __radd__ = __add__

    def __sub__(self, other) -> "ScaledComplex":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "ScaledComplex":
        return self._coerce(other) - self

    def power_real(self, exponent: float) -> "ScaledComplex":
        """Principal-branch real power."""
        return ScaledComplex(np.multiply(self.log_mag, exponent), np.multiply(self.phase, exponent))

    def relative_difference(self, other) -> object:
        """``|self - other| / max(|self|, |other|)`` evaluated in log space."""
        other = self._coerce(other)
        diff = self - other
        frame = np.maximum(self.log_mag, other.log_mag)
        with np.errstate(invalid="ignore"):
            out = np.exp(np.asarray(diff.log_mag) - frame)
        out = np.where(np.isneginf(frame), 0.0, out)
        if np.ndim(out) == 0:
            return float(out)
        return out


def stack(values) -> ScaledComplex:
    """Stack scalar or array ScaledComplex values along a new first axis."""
    return ScaledComplex(
        np.stack([np.asarray(v.log_mag, dtype=float) for v in values]),
        np.stack([np.asarray(v.phase, dtype=float) for v in values]),
    )


def scaled_sum(values: ScaledComplex, axis: int = 0) -> ScaledComplex:
    """Sum an array-valued ScaledComplex along ``axis`` in a common frame."""
    log_mag = np.asarray(values.log_mag)
    frame = np.max(log_mag, axis=axis, keepdims=True)
    ref = np.where(np.isfinite(frame), frame, 0.0)
    with np.errstate(invalid="ignore"):
        parts = np.exp(log_mag - ref + 1j * np.asarray(values.phase))
    parts = np.where(np.isneginf(log_mag), 0.0, parts)
    total = np.sum(parts, axis=axis)
    out = ScaledComplex.from_parts(np.squeeze(ref, axis=axis), total)
    dead = np.squeeze(~np.isfinite(frame), axis=axis)
    if np.any(dead):
        out = ScaledComplex(np.where(dead, -np.inf, out.log_mag), np.where(dead, 0.0, out.phase))
    return out
