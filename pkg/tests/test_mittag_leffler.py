import cmath
import math

import mpmath
import numpy as np
import pytest

from fockhankel.errors import ParameterError
from fockhankel.mittag_leffler import (
    DERIV_SECTOR,
    OVERLAP_ANNULUS,
    MLParams,
    log_ml_envelope,
    ml_deriv,
    ml_deriv_array,
    ml_eval,
    mittag_leffler,
    overlap_check,
)
from fockhankel.scaled import ScaledComplex
from oracles import ml_series


def half_order_oracle(lam, b, m=0):
    """``E_{1/2,b}`` for ``b in {1, 1/2}`` from ``exp(x^2) erfc(-x)``, at 40 digits."""
    with mpmath.workdps(40):
        x = mpmath.mpc(lam)

        def one(t):
            return mpmath.exp(t * t) * mpmath.erfc(-t)

        def shifted(t):
            return 1 / mpmath.sqrt(mpmath.pi) + t * one(t)

        base = one if b == 1 else shifted
        value = base(x) if m == 0 else mpmath.diff(base, x, m)
        return mpmath.log(abs(value)), mpmath.arg(value)


def as_scaled(log_mag, phase):
    return ScaledComplex(float(log_mag), float(phase))


@pytest.mark.parametrize("lam", [0.0, 1 + 2j, -3.5, 40.0, 300 - 10j, -60 + 1j])
def test_exponential_case(lam):
    lam = complex(lam)
    value = mittag_leffler(1.0, 1.0, lam)
    assert value.relative_difference(ScaledComplex(lam.real, lam.imag)) < 1e-12


@pytest.mark.parametrize("m", [1, 2, 3])
def test_exponential_derivatives(m):
    for lam in (0.7 - 1j, 35.0, -8.0 + 2j):
        lam = complex(lam)
        value = mittag_leffler(1.0, 1.0, lam, m=m)
        assert value.relative_difference(ScaledComplex(lam.real, lam.imag)) < 1e-11


def test_first_order_shifted_parameter():
    lam = 2.3 - 0.4j
    expected = (cmath.exp(lam) - 1) / lam
    assert abs(mittag_leffler(1.0, 2.0, lam).decode() - expected) < 1e-13 * abs(expected)


@pytest.mark.parametrize("b", [1.0, 0.5])
@pytest.mark.parametrize("lam", [3.7, 1.2 - 2j, -4.0, 5.5j, 7.0 * cmath.exp(0.6j), 9.0 * cmath.exp(2.5j), 30.0])
def test_half_order_against_error_function(b, lam):
    value = mittag_leffler(0.5, b, lam)
    log_mag, phase = half_order_oracle(lam, b)
    assert value.relative_difference(as_scaled(log_mag, phase)) < 1e-10


@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("lam", [1.5 + 0.5j, -3.0, 6.0 * cmath.exp(0.3j)])
def test_half_order_derivatives(m, lam):
    value = mittag_leffler(0.5, 1.0, lam, m=m)
    log_mag, phase = half_order_oracle(lam, 1.0, m)
    assert value.relative_difference(as_scaled(log_mag, phase)) < 1e-9


def test_reference_value_quoted_for_the_series():
    expected = ml_series(0.5, 1.0, 0, 3.7, dps=50)
    assert mittag_leffler(0.5, 1.0, 3.7).relative_difference(expected) < 1e-12


@pytest.mark.parametrize("a,b,m", [(1 / 3, 1 / 3, 0), (1 / 3, 1 / 3, 1), (1 / 2, 3 / 4, 2), (0.8, 0.9, 1)])
@pytest.mark.parametrize("lam", [0.5 + 0.5j, -2.0, 2.5j, 2.8 * cmath.exp(0.8j)])
def test_general_parameters_against_direct_series(a, b, m, lam):
    value = mittag_leffler(a, b, lam, m=m)
    assert value.relative_difference(ml_series(a, b, m, lam)) < 1e-11


def test_finite_difference_of_first_derivative():
    lam, h = 1.1 + 0.3j, 1e-5
    forward = mittag_leffler(1 / 3, 1 / 3, lam + h, m=1).decode()
    backward = mittag_leffler(1 / 3, 1 / 3, lam - h, m=1).decode()
    second = mittag_leffler(1 / 3, 1 / 3, lam, m=2).decode()
    assert abs((forward - backward) / (2 * h) - second) < 1e-7 * abs(second)


def test_positive_real_axis_is_positive_and_increasing():
    xs = np.linspace(0.0, 40.0, 81)
    values = ml_deriv_array(0.5, 0.75, 0, xs)
    assert np.all(np.abs(values.phase) < 1e-12)
    assert np.all(np.diff(values.log_mag) > 0)


def test_decay_on_the_negative_axis():
    # outside the growth sector E_{1/2,1}(x) ~ -1/(Gamma(1/2) x)
    for x in (-40.0, -200.0):
        value = mittag_leffler(0.5, 1.0, x).decode()
        assert value == pytest.approx(-1.0 / (math.sqrt(math.pi) * x), rel=5e-3)


def test_array_matches_scalar():
    lam = np.array([0.3, 4 - 2j, -30.0, 12j, 80.0 * cmath.exp(0.2j)])
    array = ml_deriv_array(0.5, 0.5, 1, lam)
    for j, x in enumerate(lam):
        assert array[j].relative_difference(mittag_leffler(0.5, 0.5, x, m=1)) < 1e-9


def test_envelope_bounds_the_function_on_rays():
    for arg in np.linspace(-math.pi, math.pi, 9):
        for radius in (1.0, 5.0, 20.0, 60.0):
            lam = radius * cmath.exp(1j * arg)
            value = mittag_leffler(0.5, 0.75, lam, m=1)
            excess = value.log_mag - log_ml_envelope(2.0, 0.75, 1, lam)
            assert excess < math.log(10.0)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.5, 0.5), (1 / 3, 1 / 3)])
def test_regimes_agree_on_the_crossover_annulus(a, b):
    row = overlap_check(a, b, m=1)
    assert row["worst"] <= 1e-6
    assert OVERLAP_ANNULUS[0] <= row["worst_at"]["radius"] <= OVERLAP_ANNULUS[1]
    assert abs(row["worst_at"]["arg"]) <= DERIV_SECTOR * a + 1e-12


def test_forced_methods_and_parameter_checks():
    lam = 5.2 * cmath.exp(0.4j)
    series = ml_eval(MLParams(0.5, 1.0), lam, method="series")
    asymptotic = ml_eval(MLParams(0.5, 1.0), lam, method="asymptotic")
    assert series.relative_difference(asymptotic) < 1e-6
    with pytest.raises(ParameterError):
        MLParams(2.0, 1.0)
    with pytest.raises(ParameterError):
        MLParams(0.5, 0.0)
    with pytest.raises(ParameterError):
        ml_eval(MLParams(0.5, 1.0, 1), 1.0)
    with pytest.raises(ParameterError):
        ml_deriv(MLParams(0.5, 1.0), 1.0, method="bogus")
