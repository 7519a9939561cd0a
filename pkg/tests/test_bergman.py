import math

import numpy as np
import pytest
from scipy import integrate

from fockhankel.bergman import (
    dilation_identity_residual,
    hermitian_residual,
    inner,
    kernel_eval,
    kernel_norm,
    kernel_norm_report,
    kernel_series_oracle,
    log_kernel_norm_envelope,
    oracle_degree,
    pointwise_envelope_check,
    reproducing_residual,
)
from fockhankel.errors import ParameterError
from fockhankel.fock_core import INF, MultiIndexPoly, SpaceParams, random_poly
from fockhankel.scaled import ScaledComplex
from oracles import random_points


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("gamma", [1.0, 2.5])
def test_first_order_closed_form(n, gamma):
    rng = np.random.default_rng(n)
    for z, w in zip(random_points(rng, n, 10, 3.0), random_points(rng, n, 10, 3.0)):
        exact = ScaledComplex.from_complex(gamma ** n / math.factorial(n) * np.exp(gamma * inner(z, w)))
        assert kernel_eval(gamma, n, 1.0, z, w).relative_difference(exact) < 1e-12


@pytest.mark.parametrize("n,ell,gamma", [(1, 2.0, 1.0), (2, 2.0, 0.5), (1, 3.0, 2.0), (3, 1.5, 1.0)])
def test_value_at_origin_is_reciprocal_mass(n, ell, gamma):
    mass, _ = integrate.quad(lambda r: 2 * n * r ** (2 * n - 1) * math.exp(-gamma * r ** (2 * ell)), 0, np.inf,
                             epsabs=0, epsrel=1e-13)
    z = np.linspace(0.3, 0.9, n) * (1 + 1j)
    assert kernel_eval(gamma, n, ell, z, np.zeros(n)).decode() == pytest.approx(1 / mass, rel=1e-11)


@pytest.mark.parametrize("n,ell", [(1, 2.0), (2, 2.0), (1, 1.5), (1, 3.0), (2, 1.5)])
def test_series_oracle(n, ell):
    rng = np.random.default_rng(11)
    points = list(zip(random_points(rng, n, 6, 2.0), random_points(rng, n, 6, 2.0)))
    # products on the negative real axis cancel heavily in the monomial sum
    points.append((np.full(n, 1.4 / math.sqrt(n)), np.full(n, -1.4 / math.sqrt(n))))
    for z, w in points:
        degree = oracle_degree(1.0, n, ell, z, w)
        oracle = kernel_series_oracle(1.0, n, ell, z, w, degree)
        assert kernel_eval(1.0, n, ell, z, w).relative_difference(oracle) < 1e-8


def test_oracle_degree_edge_cases():
    assert oracle_degree(1.0, 1, 2.0, [0.0], [1.0]) == 0
    with pytest.raises(ParameterError):
        oracle_degree(1.0, 1, 2.0, [100.0], [100.0], max_degree=10)
    with pytest.raises(ParameterError):
        kernel_series_oracle(1.0, 1, 2.0, [1.0], [1.0], -1)


@pytest.mark.parametrize("n,ell", [(1, 2.0), (2, 2.0), (2, 3.0)])
def test_dilation_and_hermitian_symmetry(n, ell):
    rng = np.random.default_rng(5)
    for z, w in zip(random_points(rng, n, 8, 2.5), random_points(rng, n, 8, 2.5)):
        assert dilation_identity_residual(1.0, 1.3, n, ell, z, w) < 1e-10
        assert hermitian_residual(1.0, n, ell, z, w) < 1e-10
    with pytest.raises(ParameterError):
        dilation_identity_residual(1.0, -1.0, n, ell, z, w)


@pytest.mark.parametrize("n,ell", [(1, 1.0), (1, 2.0), (1, 3.0), (1, 1.5), (2, 2.0)])
def test_reproducing_property(n, ell):
    rng = np.random.default_rng(2)
    f = random_poly(n, 8, rng)
    z = random_points(rng, n, 1, 1.0)[0]
    assert reproducing_residual(f, 1.0, ell, z) < 1e-6


@pytest.mark.parametrize("n,ell", [(1, 2.0), (2, 2.0), (1, 1.5)])
def test_hilbert_norm_equals_diagonal(n, ell):
    # ||K(., z)||^2 = K(z, z) in F^2_gamma
    params = SpaceParams(n, ell, 1.0, 0.0, 2.0)
    for t in (0.0, 1.0, 2.5):
        z = t * np.ones(n) / math.sqrt(n)
        diagonal = kernel_eval(1.0, n, ell, z, z).log_mag
        assert kernel_norm(params, 1.0, z) == pytest.approx(0.5 * diagonal, abs=1e-6)


def test_first_order_sup_norm():
    params = SpaceParams(1, 1.0, 1.0, 0.0, INF)
    for t in (0.5, 2.0, 4.0):
        assert kernel_norm(params, 1.0, [t]) == pytest.approx(0.5 * t * t, abs=1e-8)


def test_norm_report_is_flat_for_l2():
    params = SpaceParams(1, 2.0, 1.0, 0.0, 2.0)
    report = kernel_norm_report(params, 1.0, np.linspace(1.0, 5.0, 9))
    stats = report.stats()
    assert abs(stats["slope_r2l"]) <= 1e-3
    assert report.spread() <= 100
    assert report.envelope[0] == pytest.approx(log_kernel_norm_envelope(2.0, 1.0, 0.0, 1.0, 1, 2.0, 1.0))


def test_pointwise_envelope_is_an_equivalence():
    rng = np.random.default_rng(9)
    pairs = list(zip(random_points(rng, 1, 60, 4.0), random_points(rng, 1, 60, 4.0)))
    report = pointwise_envelope_check(1.0, 1, 2.0, pairs)
    assert report.stats()["max"] < math.log(10.0)
    on_axis = [(np.array([t]), np.array([t])) for t in (1.0, 2.0, 3.0, 4.0)]
    assert pointwise_envelope_check(1.0, 1, 2.0, on_axis).spread() < 10.0


def test_parameter_errors():
    with pytest.raises(ParameterError):
        kernel_eval(0.0, 1, 1.0, [1.0], [1.0])
    with pytest.raises(ParameterError):
        kernel_eval(1.0, 1, 0.5, [1.0], [1.0])
    with pytest.raises(ParameterError):
        kernel_eval(1.0, 0, 1.0, [1.0], [1.0])
