import cmath
import math

import mpmath
import numpy as np
import pytest

from fockhankel.bergman import kernel_eval
from fockhankel.decomposition import (
    SHARP_REMAINDER_SHIFT,
    DecompParams,
    decomposition_terms,
    factor_array,
    factor_eval,
    factor_norm_report,
    identity_residual,
    log_factor_envelope,
    psi,
    psi_minimiser,
    remainder_array,
    remainder_deriv,
    remainder_eval,
    split_constant,
    split_parameter,
)
from fockhankel.errors import ParameterError
from oracles import ml_series_mp, random_points


def remainder_oracle(ell, theta, m, x, dps):
    """``d^m/dx^m [E_{1/l,1/l}(x) - c E_{1/l,b'}(theta^(1/l) x) E_{1/l,b'}((1-theta)^(1/l) x)]`` in mpmath."""
    a = 1.0 / ell
    bp = (ell + 1) / (2 * ell)
    with mpmath.workdps(dps):
        c = (mpmath.mpf(theta) * (1 - mpmath.mpf(theta))) ** (mpmath.mpf(1 - ell) / (2 * ell)) / ell
        s = mpmath.mpf(theta) ** (mpmath.mpf(1) / ell)
        t = (1 - mpmath.mpf(theta)) ** (mpmath.mpf(1) / ell)
        x = mpmath.mpc(x)
        total = ml_series_mp(a, a, m, x, dps)
        for j in range(m + 1):
            total -= (c * mpmath.binomial(m, j) * s ** j * t ** (m - j)
                      * ml_series_mp(a, bp, j, s * x, dps) * ml_series_mp(a, bp, m - j, t * x, dps))
        return complex(total)


def test_split_parameter_and_constant():
    assert split_parameter(1.0) == 1.0
    assert split_parameter(2.0) == 0.75
    assert split_constant(1.0, 0.3) == 1.0
    assert split_constant(2.0, 0.5) == pytest.approx(0.25 ** -0.25 / 2)
    with pytest.raises(ParameterError):
        split_constant(2.0, 1.0)


def test_first_order_remainder_vanishes():
    for lam in (0.5, 3 + 4j, -7.0, 20 - 5j, 60.0, -50 + 1j):
        value = remainder_eval(1.0, 0.4, lam)
        assert abs(value) <= 1e-12 * max(1.0, math.exp(complex(lam).real))


@pytest.mark.parametrize("ell,theta", [(2.0, 0.5), (3.0, 0.25), (1.5, 0.6)])
@pytest.mark.parametrize("m", [0, 1])
@pytest.mark.parametrize("lam", [0.8 + 0.3j, -2.5, 3.0j, 4.0 * cmath.exp(0.4j)])
def test_remainder_against_extended_precision(ell, theta, m, lam):
    oracle = remainder_oracle(ell, theta, m, lam, 60)
    value = remainder_deriv(ell, theta, m, lam).decode()
    assert abs(value - oracle) <= 1e-9 * abs(oracle)


@pytest.mark.parametrize("lam", [12.0, 12.0 * cmath.exp(0.5j), 9.0 * cmath.exp(1.2j)])
def test_remainder_where_the_exponentials_cancel(lam):
    # |E| ~ exp(|x|^2) here, so the remainder sits ~60 digits below the summands
    oracle = remainder_oracle(2.0, 0.5, 1, lam, 120)
    value = remainder_deriv(2.0, 0.5, 1, lam).decode()
    assert abs(value - oracle) <= 1e-8 * abs(oracle)


def test_remainder_array_matches_scalar():
    lam = np.array([0.5, 3 - 1j, 12.0, 30 * cmath.exp(0.3j), -20.0])
    array = remainder_array(2.0, 0.5, 1, lam)
    for j, x in enumerate(lam):
        assert array[j].relative_difference(remainder_deriv(2.0, 0.5, 1, x)) < 1e-7


@pytest.mark.parametrize("ell,n", [(2.0, 1), (2.0, 2), (3.0, 1), (1.5, 1), (1.0, 2)])
@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (1.0, 2.0), (3.0, 1.0)])
def test_identity_on_random_points(ell, n, alpha, beta):
    params = DecompParams(ell, 1.0, alpha, beta, n)
    rng = np.random.default_rng(17)
    for z, w in zip(random_points(rng, n, 15, 3.5), random_points(rng, n, 15, 3.5)):
        assert identity_residual(params, z, w) <= 1e-9


def test_terms_sum_to_the_kernel():
    params = DecompParams(2.0, 1.5, 1.0, 2.0, 2)
    z, w = np.array([0.4 + 0.2j, -0.7]), np.array([1.1j, 0.3 - 0.5j])
    lam = complex(np.sum(w * np.conj(z)))
    kernel, terms = decomposition_terms(params, lam)
    assert len(terms) == params.n + 1
    total = sum(t.decode() for t in terms)
    assert total == pytest.approx(kernel.decode(), rel=1e-11)
    assert kernel.relative_difference(kernel_eval(1.5, 2, 2.0, w, z)) < 1e-12


def test_remainder_slot_follows_the_larger_weight():
    heavy_g = DecompParams(2.0, 1.0, 2.0, 1.0, 1)
    heavy_h = DecompParams(2.0, 1.0, 1.0, 2.0, 1)
    lam = 1.3 - 0.2j
    remainder = factor_eval("R", 1, heavy_g, lam)
    assert factor_eval("G", 1, heavy_g, lam).relative_difference(remainder) < 1e-15
    assert factor_eval("H", 1, heavy_g, lam).decode() == 1.0
    assert factor_eval("G", 1, heavy_h, lam).decode() == 1.0
    assert heavy_g.theta == pytest.approx(2 / 3)
    values = factor_array("H", 0, heavy_h, np.array([lam, 2 * lam]))
    assert values[0].relative_difference(factor_eval("H", 0, heavy_h, lam)) < 1e-12


def test_psi_minimiser():
    for alpha, beta in ((1.0, 1.0), (1.0, 2.0), (3.0, 1.0)):
        theta, value = psi_minimiser(alpha, beta)
        assert theta == pytest.approx(alpha / (alpha + beta), abs=1e-5)
        assert value == pytest.approx(1 / (alpha + beta), rel=1e-9)
        assert float(psi(theta, alpha, beta)) == pytest.approx(value)


def test_product_norm_is_flat():
    params = DecompParams(2.0, 1.0, 1.0, 1.0, 1)
    reports = factor_norm_report(params, 2.0, 0.0, 0.0, np.linspace(1.0, 5.0, 9))
    assert {"G0", "H0", "G1", "R_sharp", "product"} <= set(reports)
    product = reports["product"]
    assert abs(product.stats()["slope_r2l"]) <= 1e-3
    assert product.spread() <= 100
    for name in ("G0", "H0"):
        assert abs(reports[name].stats()["slope_r2l"]) <= 1e-3


def test_sharp_envelope_shift():
    params = DecompParams(2.0, 1.0, 1.0, 1.0, 1)
    plain = log_factor_envelope("G", 1, params, 2.0, 0.0, 0.0, 3.0)
    sharp = log_factor_envelope("G", 1, params, 2.0, 0.0, 0.0, 3.0, True)
    assert sharp - plain == pytest.approx(SHARP_REMAINDER_SHIFT * math.log1p(3.0))


def test_parameter_errors():
    with pytest.raises(ParameterError):
        DecompParams(0.5, 1.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        DecompParams(2.0, 1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        factor_eval("G", 3, DecompParams(2.0, 1.0, 1.0, 1.0, 1), 1.0)
    with pytest.raises(ParameterError):
        factor_eval("X", 0, DecompParams(2.0, 1.0, 1.0, 1.0, 1), 1.0)
    with pytest.raises(ParameterError):
        identity_residual(DecompParams(2.0, 1.0, 1.0, 1.0, 2), [1.0], [1.0])
