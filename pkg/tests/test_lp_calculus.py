import math

import numpy as np
import pytest
from scipy import integrate

from fockhankel.bergman import kernel_eval
from fockhankel.errors import ParameterError
from fockhankel.fock_core import INF, MultiIndexPoly, SpaceParams, random_poly
from fockhankel.lp_calculus import (
    FAMILY_VERSION,
    GradientLayer,
    derivative,
    derivative_decay_report,
    family_band,
    family_bands,
    family_members,
    kernel_truncation,
    lp_parts,
    lp_ratio,
    partial_derivative,
    reconstruct,
    reconstruction_defect,
    sj_apply,
)


def test_partial_derivatives():
    f = MultiIndexPoly(2, {(3, 1): 2.0, (0, 2): 1j, (1, 0): -1.0})
    assert partial_derivative(f, 1) == MultiIndexPoly(2, {(2, 1): 6.0, (0, 0): -1.0})
    assert partial_derivative(f, 2) == MultiIndexPoly(2, {(3, 0): 2.0, (0, 1): 2j})
    assert derivative(f, (2, 1)) == MultiIndexPoly(2, {(1, 0): 12.0})
    with pytest.raises(ParameterError):
        partial_derivative(f, 3)


def test_sj_examples():
    one = MultiIndexPoly.constant(1)
    assert sj_apply(one, 1) == MultiIndexPoly.monomial((1,))
    assert sj_apply(MultiIndexPoly.monomial((2,)), 1) == MultiIndexPoly.monomial((3,), 1 / 3)


def test_sj_against_line_integral():
    rng = np.random.default_rng(4)
    g = random_poly(2, 4, rng)
    z = np.array([0.7 - 0.2j, 0.4j])
    for axis in (1, 2):
        re = integrate.quad(lambda t: g(t * z).real, 0, 1)[0]
        im = integrate.quad(lambda t: g(t * z).imag, 0, 1)[0]
        assert sj_apply(g, axis)(z) == pytest.approx(z[axis - 1] * complex(re, im), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_reconstruction_is_exact(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        f = random_poly(n, 7, rng)
        assert reconstruction_defect(f) == []
        rebuilt = reconstruct(f)
        assert all(abs(rebuilt.coefficient(nu) - c) <= 1e-14 * abs(c) for nu, c in f.terms.items())


def test_gradient_layer():
    f = MultiIndexPoly(2, {(1, 1): 1.0, (0, 0): 3.0, (1, 0): -2.0})
    layer = GradientLayer.of(f, 1)
    assert layer.size == 2
    assert layer.at_origin() == pytest.approx(2.0)
    assert GradientLayer.of(f, 0).at_origin() == pytest.approx(3.0)
    assert GradientLayer.of(f, 3).is_zero()


def test_ratio_of_monomial_against_radial_quadrature():
    # f = w^j on C with l = 1, p = 2, rho = 0; gradient weight (1+|z|)^-1
    j = 3
    params = SpaceParams(1, 1.0, 1.0, 0.0, 2.0)
    grad = integrate.quad(lambda r: 2 * r * (j * r ** (j - 1)) ** 2 * (1 + r) ** -2 * math.exp(-r * r), 0, np.inf,
                          epsabs=0, epsrel=1e-12)[0]
    expected = math.sqrt(grad / math.factorial(j))
    assert lp_ratio(MultiIndexPoly.monomial((j,)), 1, params) == pytest.approx(expected, rel=1e-6)


def test_ratio_includes_origin_terms():
    params = SpaceParams(1, 2.0, 1.0, 0.0, 2.0)
    f = MultiIndexPoly(1, {(0,): 2.0, (1,): 1.0})
    parts = lp_parts(f, 2, params)
    assert parts["origin"] == pytest.approx(3.0)
    assert parts["log_gradient_norm"] == -math.inf
    assert lp_ratio(f, 2, params) == pytest.approx(3.0 * math.exp(-parts["log_norm"]))


def test_ratio_errors():
    params = SpaceParams(1, 2.0, 1.0)
    with pytest.raises(ParameterError):
        lp_ratio(MultiIndexPoly(1), 1, params)
    with pytest.raises(ParameterError):
        lp_ratio(MultiIndexPoly.monomial((1,)), 0, params)
    with pytest.raises(ParameterError):
        lp_ratio(MultiIndexPoly.monomial((1, 0)), 1, params)


def test_kernel_truncation_converges_to_the_kernel():
    anchor = np.array([0.5, 0.3j])
    w = np.array([0.4 - 0.1j, 0.9])
    poly = kernel_truncation(2, 2.0, 1.0, anchor, 40)
    assert poly(w) == pytest.approx(kernel_eval(1.0, 2, 2.0, w, anchor).decode(), rel=1e-12)
    with pytest.raises(ParameterError):
        kernel_truncation(2, 2.0, 1.0, [1.0], 4)


def test_family_definition_is_versioned():
    assert FAMILY_VERSION == "1"
    one = family_members(1, 2.0, 1.0)
    two = family_members(2, 2.0, 1.0)
    assert len(one) == 13 + 5 + 2
    assert len(two) == 13 + 11 + 5 + 2
    assert len({label for label, _ in two}) == len(two)
    with pytest.raises(ParameterError):
        family_members(3, 2.0, 1.0)


@pytest.mark.parametrize("p", [1.0, 2.0, INF])
def test_band_on_the_plane(p):
    params = SpaceParams(1, 1.0, 1.0, 0.0, p)
    bands = family_bands(params, (1, 2))
    for k in (1, 2):
        assert bands[k]["band"] <= 50
        assert bands[k]["params"]["k"] == k
    assert family_band(params, 1)["band"] == pytest.approx(bands[1]["band"])


def test_derivative_decay_is_bounded_above():
    params = SpaceParams(1, 2.0, 1.0, 0.0, 2.0)
    report = derivative_decay_report(params, 1, [1.0, 2.0, 3.0, 4.0, 5.0])
    assert report.stats()["max"] <= math.log(10.0)
    with pytest.raises(ParameterError):
        derivative_decay_report(params, 0, [1.0])
