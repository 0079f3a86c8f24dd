"""Special-function primitives against independent references."""

import math

import numpy as np
import pytest
from scipy import integrate, special as sps

from workstats.exceptions import RangeError
from workstats.special import (
    SeriesControl,
    bessel_j,
    coth_half,
    hyp_2f3,
    struve_h,
    x_coth_half,
)

# first positive zero of J0, found by bisection on mpmath's series
J0_FIRST_ZERO = 2.404825557695773


def test_bessel_trivial_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_bessel_j0_at_one():
    # frozen from an independent 30-digit series evaluation
    assert bessel_j(0, 1.0) == pytest.approx(0.7651976865579666, abs=1e-14)


def test_bessel_first_zero():
    assert abs(bessel_j(0, J0_FIRST_ZERO)) < 1e-12


def test_bessel_against_scipy():
    xs = np.concatenate([np.linspace(-30, 30, 121), [50.0, 120.0, 199.0]])
    for x in xs:
        assert bessel_j(0, float(x)) == pytest.approx(
            float(sps.j0(x)), abs=1e-12)
        assert bessel_j(1, float(x)) == pytest.approx(
            float(sps.j1(x)), abs=1e-12)


def test_bessel_parity():
    for x in (0.3, 2.0, 17.5):
        assert bessel_j(0, x) == bessel_j(0, -x)
        assert bessel_j(1, x) == -bessel_j(1, -x)


def test_bessel_derivative_identity():
    # J0' = -J1 via central differences
    h = 1e-6
    for x in (0.5, 1.7, 6.3, 14.0):
        fd = (bessel_j(0, x + h) - bessel_j(0, x - h)) / (2 * h)
        assert fd == pytest.approx(-bessel_j(1, x), abs=1e-6)


def test_bessel_range_error():
    with pytest.raises(RangeError):
        bessel_j(0, 1e4)


def test_struve_trivial():
    assert struve_h(0, 0.0) == 0.0
    assert struve_h(1, 0.0) == 0.0


def test_struve_small_argument():
    # leading term 2x/pi
    assert struve_h(0, 1e-4) == pytest.approx(2e-4 / math.pi, rel=1e-8)


def test_struve_against_scipy():
    for x in [0.1, 1.0, 5.0, 11.0, 13.0, 20.0, 29.5, 30.0, 42.0, 50.0]:
        assert struve_h(0, x) == pytest.approx(
            float(sps.struve(0, x)), abs=1e-10)
        assert struve_h(1, x) == pytest.approx(
            float(sps.struve(1, x)), abs=1e-10)


def test_struve_domain_errors():
    with pytest.raises(RangeError):
        struve_h(0, -1.0)
    with pytest.raises(RangeError):
        struve_h(0, 300.0)


def test_hyp_2f3_at_zero():
    assert hyp_2f3(1, 1, 1.5, 1.5, 2, 0.0) == 1.0


def _mean_freq_integral(y):
    # quadrature oracle: int_0^1 sin^2(y w / 2) / (w sqrt(1 - w^2)) dw
    val, _ = integrate.quad(
        lambda w: math.sin(y * w / 2) ** 2 / (w * math.sqrt(1 - w * w)),
        0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return val


@pytest.mark.parametrize("y", [2.0, 20.0])
def test_hyp_2f3_against_quadrature(y):
    # the first spectral moment integral equals (y^2/4) 2F3(1,1;3/2,3/2,2;-y^2/4)
    oracle = _mean_freq_integral(y)
    series = (y * y / 4.0) * hyp_2f3(1, 1, 1.5, 1.5, 2, -y * y / 4.0)
    assert series == pytest.approx(oracle, rel=1e-8)


def test_hyp_2f3_partial_sums_bracket():
    # alternating series at z < 0: consecutive truncations bracket the limit
    z = -3.0
    full = hyp_2f3(1, 1, 1.5, 1.5, 2, z)
    partials = []
    term, total = 1.0, 1.0
    for k in range(12):
        term *= (1 + k) * (1 + k) * z / ((1.5 + k) * (1.5 + k) * (2 + k) * (k + 1))
        total += term
        partials.append(total)
    for lo, hi in zip(partials[:-1], partials[1:]):
        a, b = sorted((lo, hi))
        assert a <= full <= b


def test_hyp_2f3_rejects_bad_b():
    with pytest.raises(ValueError):
        hyp_2f3(1, 1, 0.0, 1.5, 2, -1.0)


def test_hyp_2f3_max_terms():
    from workstats.exceptions import ConvergenceError
    with pytest.raises(ConvergenceError):
        hyp_2f3(1, 1, 1.5, 1.5, 2, -20.0, SeriesControl(max_terms=3))


def test_coth_half_reference():
    # coth(1), frozen from a 30-digit reference evaluation
    assert coth_half(2.0) == pytest.approx(1.3130352854993312, abs=5e-16)


def test_coth_half_limits():
    # 2/x Laurent behaviour at small x; the x/6 term is checked at 1e-4,
    # where it still clears the ulp of the leading 2/x term
    assert coth_half(1e-8) == pytest.approx(2e8, rel=1e-12)
    assert coth_half(1e-4) - 2e4 == pytest.approx(1e-4 / 6, rel=1e-6)
    assert coth_half(100.0) == pytest.approx(1.0, abs=1e-15)
    assert coth_half(-2.0) == -coth_half(2.0)
    with pytest.raises(ValueError):
        coth_half(0.0)


def test_x_coth_half_product_form():
    # finite and continuous through zero; even; saturates to |x|
    assert x_coth_half(0.0) == 2.0
    assert x_coth_half(1e-9) == pytest.approx(2.0, abs=1e-15)
    for x in (0.3, 1.0, 7.0):
        assert x_coth_half(x) == pytest.approx(x / math.tanh(x / 2), rel=1e-14)
        assert x_coth_half(-x) == x_coth_half(x)
    assert x_coth_half(800.0) == pytest.approx(800.0, rel=1e-15)
    # continuity across the series switchover
    lo, hi = x_coth_half(0.99999e-4), x_coth_half(1.00001e-4)
    assert abs(hi - lo) < 1e-12
