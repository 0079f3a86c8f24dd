"""Quadrature engine against closed-form integrals."""

import math

import numpy as np
import pytest

from workstats.exceptions import ConvergenceError, DivergentIntegralError
from workstats.quadrature import (
    QuadSpec,
    TruncationPolicy,
    integrate_endpoint_singular,
    integrate_halfline,
    integrate_halfline_family,
    integrate_interval,
)

# int_R 4 sin^2(tau w/2) / (g^2 w^2 + w^4) dw = 2 pi (g tau + e^{-g tau} - 1)/g^3,
# so the half-line value at g = tau = 1 is pi/e.
OSC_HALFLINE = math.pi * math.exp(-1.0)


def overdamped_k1_integrand(w):
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) < 1e-6
    ws = w[~small]
    out[~small] = 4 * np.sin(ws / 2) ** 2 / (ws**2 + ws**4)
    out[small] = 1.0
    return out


def test_exponential():
    value, err = integrate_halfline(lambda w: np.exp(-w), QuadSpec())
    assert value == pytest.approx(1.0, abs=1e-10)
    assert abs(value - 1.0) <= err


def test_oscillatory_halfline():
    spec = QuadSpec(oscillation_period_hint=2 * math.pi, scale_hint=1.0)
    value, err = integrate_halfline(overdamped_k1_integrand, spec)
    assert value == pytest.approx(OSC_HALFLINE, rel=1e-7)
    assert abs(value - OSC_HALFLINE) <= err


# the error estimate bounds the rule's own error; evaluating 1 - w near the
# edge costs the test integrands a few 1e-12 of their own rounding, hence the
# machine-level slack in the bound assertions below
_EDGE_ROUNDING = 5e-12


def test_compact_support_arcsine():
    spec = QuadSpec(truncation_policy=TruncationPolicy.COMPACT_SUPPORT,
                    support_edge=1.0)
    value, err = integrate_halfline(
        lambda w: 1.0 / np.sqrt((1.0 - w) * (1.0 + w)), spec)
    assert value == pytest.approx(math.pi / 2, abs=1e-10)
    assert abs(value - math.pi / 2) <= err + _EDGE_ROUNDING


def test_endpoint_singular_sqrt():
    value, err = integrate_endpoint_singular(
        lambda w: 1.0 / np.sqrt(1.0 - w), 1.0, -0.5)
    assert value == pytest.approx(2.0, abs=1e-10)
    assert abs(value - 2.0) <= err + _EDGE_ROUNDING


def test_endpoint_singular_moment():
    # int_0^1 w^2 / sqrt(1 - w^2) dw = pi/4, frozen reference value
    value, err = integrate_endpoint_singular(
        lambda w: w**2 / np.sqrt((1.0 - w) * (1.0 + w)), 1.0, -0.5)
    assert value == pytest.approx(math.pi / 4, abs=1e-10)
    assert abs(value - math.pi / 4) <= err + _EDGE_ROUNDING


def test_endpoint_singular_offset_edge():
    # exponent -1/2, f = 1/sqrt(3 - w), edge 3: integral from 0 is 2 sqrt(3)
    value, _ = integrate_endpoint_singular(
        lambda w: 1.0 / np.sqrt(3.0 - w), 3.0, -0.5)
    assert value == pytest.approx(2.0 * math.sqrt(3.0), abs=1e-9)


def test_endpoint_singular_validates_exponent():
    with pytest.raises(ValueError):
        integrate_endpoint_singular(lambda w: w, 1.0, -1.5)


def test_halving_rel_tol_never_hurts():
    errors = []
    for rel in (1e-6, 1e-8, 1e-10):
        spec = QuadSpec(rel_tol=rel, oscillation_period_hint=2 * math.pi)
        value, _ = integrate_halfline(overdamped_k1_integrand, spec)
        errors.append(abs(value - OSC_HALFLINE))
    assert errors[1] <= errors[0]
    assert errors[2] <= errors[1]


def test_even_fold_identity():
    # int_R of an even integrand equals twice the half-line value
    spec = QuadSpec(oscillation_period_hint=2 * math.pi)
    half, _ = integrate_halfline(overdamped_k1_integrand, spec)
    sym, _ = integrate_interval(overdamped_k1_integrand, -40.0, 40.0,
                                QuadSpec(oscillation_period_hint=2 * math.pi))
    # generous tolerance: the symmetric interval misses the tails
    assert sym == pytest.approx(2 * half, rel=1e-4)


def test_slow_tail_extrapolation():
    # int_0^inf sin^2(w/2)/(1+w^2) dw = (pi/4)(1 - e^{-1}); tail ~ w^-2
    truth = math.pi / 4 * (1 - math.exp(-1))
    spec = QuadSpec(oscillation_period_hint=2 * math.pi)
    value, err = integrate_halfline(
        lambda w: np.sin(np.asarray(w) / 2) ** 2 / (1 + np.asarray(w) ** 2), spec)
    assert value == pytest.approx(truth, rel=1e-5)
    assert abs(value - truth) <= err


def test_divergent_tail_detected():
    def f(w):
        w = np.asarray(w, dtype=float)
        return np.where(w > 1e-10,
                        np.sin(w / 2) ** 2 / np.maximum(w, 1e-300),
                        0.25 * w)

    with pytest.raises(DivergentIntegralError):
        integrate_halfline(f, QuadSpec(oscillation_period_hint=2 * math.pi))


def test_zero_integrand():
    value, err = integrate_halfline(lambda w: np.zeros_like(np.asarray(w)),
                                    QuadSpec())
    assert value == 0.0
    assert err == 0.0


def test_subdivision_budget_error():
    # unresolvable oscillation within an 8-panel budget
    def wiggle(w):
        w = np.asarray(w, dtype=float)
        return np.sin(1000.0 * w) ** 2

    with pytest.raises(ConvergenceError) as info:
        integrate_interval(wiggle, 0.0, 50.0, QuadSpec(max_subdivisions=8))
    assert info.value.best is not None


def test_family_shares_panels():
    spec = QuadSpec(oscillation_period_hint=2 * math.pi)
    fs = [lambda w, c=c: c * overdamped_k1_integrand(w) for c in (0.5, 1.0, 2.0)]
    results = integrate_halfline_family(fs, spec)
    # exact scaling relations hold on shared panels
    assert results[1][0] == pytest.approx(2 * results[0][0], rel=1e-14)
    assert results[2][0] == pytest.approx(4 * results[0][0], rel=1e-14)


def test_quadspec_validation():
    with pytest.raises(ValueError):
        QuadSpec(rel_tol=-1.0)
    with pytest.raises(ValueError):
        QuadSpec(max_subdivisions=4)
    with pytest.raises(ValueError):
        QuadSpec(truncation_policy=TruncationPolicy.COMPACT_SUPPORT)
