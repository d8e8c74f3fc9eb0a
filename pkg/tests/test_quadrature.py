import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from sgnlame.quadrature import (cauchy_moments, gauss_legendre, legendre_project, legendre_vandermonde,
                                singular_power_coeffs, singular_power_coeffs_exact)

# C_j(t) = 2 Q_j(t), Legendre functions of the second kind evaluated with mpmath (40 digits), j = 0..7
FROZEN_MOMENTS = {
    0.3: [0.61903920840622341, -1.814288237478133, -1.1259493110682715, 0.64655083611795292,
          1.1839011722631289, 0.12206596412772725, -0.9194480299490241, -0.6168918716525082],
    -0.7: [-1.7346010553881062, -0.78577926122832573, 1.6923687519837951, -1.450577369828877,
           0.50768071405252787, 0.5207841961569165, -1.091406980111816, 0.97244262029657517],
    1.5: [1.6094379124341004, 0.41415686865115056, 0.12713399824803858, 0.041730416519329401,
          0.014191844677210745, 0.0049336474130054915, 0.0017409931547561472, 0.00062106886281598876],
    -3.0: [-0.69314718055994531, 0.079441541679835928, -0.010913347279289022, 0.0016057086098878266,
           -0.00024495974244432293, 3.8215721289082535e-5, -6.0533483863514995e-6, 9.6946561903046744e-7],
}

# Legendre coefficients of t^z on [0.5, 1] for z = 0.5445 + 0.3i, by mpmath quadrature (40 digits)
FROZEN_OFFSET_COEFFS = [
    0.8464308406943041 - 0.072762696878006451j, 0.16351296042280031 + 0.071200071972720451j,
    -0.01088045363950331 + 0.001922097698442029j, 0.0010424873408702102 - 0.00041622519571420055j,
    -0.00011899529203289494 + 6.5403579477540632e-5j, 1.4896025867084188e-5 - 9.9723789861204148e-6j,
]
# same for t^0.5445 on [0, 0.25]
FROZEN_CORNER_COEFFS = [0.30436199498514927, 0.1953921473013328, -0.041849401935278646, 0.018764776394216591,
                        -0.010684775799028369, 0.0068952499640744617]


def test_gauss_two_point():
    r = gauss_legendre(2)
    assert np.allclose(np.sort(r.nodes), [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    assert np.allclose(r.weights, 1.0, atol=1e-15)


@pytest.mark.parametrize("p", [1, 3, 8, 16, 33, 64])
def test_gauss_rule_invariants(p):
    r = gauss_legendre(p)
    assert abs(r.weights.sum() - 2.0) <= 1e-14
    assert np.all(r.weights > 0)
    assert np.allclose(np.sort(r.nodes), -np.sort(r.nodes)[::-1], atol=1e-15)
    k = 2 * p - 2 if p > 1 else 0
    assert np.dot(r.weights, r.nodes**k) == pytest.approx(2 / (k + 1), abs=1e-13)


def test_gauss_sixteen_integrates_exponential():
    r = gauss_legendre(16)
    assert abs(np.dot(r.weights, np.exp(r.nodes)) - (np.e - 1 / np.e)) <= 1e-15 * 4
    assert np.dot(r.weights, r.nodes**30) == pytest.approx(2 / 31, abs=1e-13)


@pytest.mark.parametrize("p", [0, 257])
def test_gauss_rejects_degree(p):
    with pytest.raises(ValueError):
        gauss_legendre(p)


def test_legendre_project_exact_cases():
    p = 8
    x = gauss_legendre(p).nodes
    assert np.allclose(legendre_project(np.ones(p)), np.eye(p)[0], atol=1e-15)
    p3 = npleg.legval(x, [0, 0, 0, 1])
    assert np.allclose(legendre_project(p3), np.eye(p)[3], atol=1e-14)
    # x^5 = (8 P5 + 28 P3 + 27 P1) / 63
    assert np.allclose(legendre_project(x**5), [0, 27 / 63, 0, 28 / 63, 0, 8 / 63, 0, 0], atol=1e-14)


def test_legendre_vandermonde_matches_numpy():
    x = np.linspace(-1, 1, 7)
    V = legendre_vandermonde(x, 6)
    assert np.allclose(V, npleg.legvander(x, 5), atol=1e-15)


def test_cauchy_moment_seeds_and_symmetry():
    c = cauchy_moments(0.0, 4).values
    assert np.allclose(c[:3], [0.0, -2.0, 0.0], atol=1e-15)
    assert cauchy_moments(0.5, 2).values[0] == pytest.approx(np.log(3), abs=1e-15)
    flank = cauchy_moments(0.5, 5).flank
    assert np.array_equal(flank, [2.0, 0, 0, 0, 0])
    for t in (0.3, 0.95, 1.5, 3.0):
        a, b = cauchy_moments(t, 32).values, cauchy_moments(-t, 32).values
        j = np.arange(32)
        assert np.allclose(b, (-1.0) ** (j + 1) * a, rtol=0, atol=1e-12)


@pytest.mark.parametrize("t", sorted(FROZEN_MOMENTS))
def test_cauchy_moments_match_second_kind_functions(t):
    assert np.allclose(cauchy_moments(t, 8).values, FROZEN_MOMENTS[t], rtol=0, atol=1e-13)


def test_cauchy_moments_outside_stay_decaying():
    c = cauchy_moments(2.0, 32).values
    assert np.all(np.abs(c[1:]) < np.abs(c[:-1]))
    assert np.all(np.isfinite(c))


@pytest.mark.parametrize("t", [1.0, -1.0, 1 + 1e-10])
def test_cauchy_moments_reject_endpoints(t):
    with pytest.raises(ValueError):
        cauchy_moments(t, 4)


def test_singular_power_linear_case():
    a = singular_power_coeffs(0.0, 1.0, 1.0, 1.0, 6)
    assert np.allclose(a, [0.5, 0.5, 0, 0, 0, 0], atol=1e-14)


def test_singular_power_offset_panel_matches_frozen():
    a = singular_power_coeffs(0.5, 1.0, 0.5445 + 0.3j, 1.0, 6)
    assert np.allclose(a, FROZEN_OFFSET_COEFFS, rtol=0, atol=1e-13)


def test_singular_power_corner_panel_matches_frozen_and_closed_form():
    a = singular_power_coeffs(0.0, 0.25, 0.5445, 1.0, 6)
    assert np.allclose(a, FROZEN_CORNER_COEFFS, rtol=0, atol=1e-13)
    assert np.allclose(singular_power_coeffs_exact(0.25, 0.5445, 1.0, 6), FROZEN_CORNER_COEFFS, rtol=0, atol=1e-14)
    quad = singular_power_coeffs(0.0, 0.3, 0.9085 + 0.2j, 1.3, 40)
    exact = singular_power_coeffs_exact(0.3, 0.9085 + 0.2j, 1.3, 40)
    assert np.max(np.abs(quad - exact)) <= 1e-13 * np.max(np.abs(exact))


def test_singular_power_far_panel_decays_geometrically():
    h = 0.1
    a = singular_power_coeffs(10 * h, 11 * h, 0.5445, 1.0, 32)
    assert np.max(np.abs(a[16:])) < 1e-12


def test_singular_power_scales_with_panel_length():
    z = 0.5445
    a1 = singular_power_coeffs(0.0, 0.1, z, 1.0, 8)
    a2 = singular_power_coeffs(0.0, 0.05, z, 1.0, 8)
    assert np.allclose(np.abs(a2) / np.abs(a1), 2.0**-z, rtol=1e-12)


def test_singular_power_rejects_bad_input():
    with pytest.raises(ValueError):
        singular_power_coeffs(0.5, 0.2, 0.5, 1.0, 4)
    with pytest.raises(ValueError):
        singular_power_coeffs(0.0, 1.0, -0.2, 1.0, 4)
