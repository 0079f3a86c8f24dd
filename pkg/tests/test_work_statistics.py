"""Cumulants, CGF, Fano factor and bounds of the dissipated work."""

import math

import numpy as np
import pytest
from scipy import integrate

from workstats.exceptions import WorkstatsError
from workstats.protocols import linear, sampled_rate
from workstats.relaxation import bessel, overdamped, underdamped
from workstats.work_statistics import (
    CumulantDivergenceError,
    ThermalParams,
    average_dissipated_work,
    average_dissipated_work_time_domain,
    bessel_average_ratio,
    bessel_mean_frequency_closed,
    beta_average_bessel,
    beta_average_overdamped,
    build_report,
    cgf,
    cgf_derivatives_fd,
    cumulant,
    fano_factor,
    fano_sweep,
    jensen_bound,
    mean_pseudo_frequency,
    pseudo_mode_distribution,
    sweep_point,
)

PARAMS = ThermalParams(beta=2.0)


def test_zero_protocol_gives_zero_cumulants():
    proto = sampled_rate(np.zeros(16), 1.0)
    for model in (overdamped(1, 1), bessel(1, 1)):
        for k in (1, 2, 3):
            value, err = cumulant(k, model, proto, PARAMS)
            assert value == 0.0 and err == 0.0


def test_overdamped_average_closed_form():
    # beta k1 = a^2 psi0 (y + e^-y - 1)/y^2; at y = 1: 1/e
    m = overdamped(1.0, 1.0)
    k1, _ = cumulant(1, m, linear(1.0, 1.0), PARAMS)
    assert PARAMS.beta * k1 == pytest.approx(math.exp(-1.0), rel=2e-8)
    for y in (0.05, 0.7, 12.0, 50.0):
        k1, _ = cumulant(1, m, linear(1.0, y), PARAMS)
        assert PARAMS.beta * k1 == pytest.approx(
            beta_average_overdamped(y), rel=2e-8)


def test_sudden_quench_limit():
    # y -> 0: beta k1 -> a^2 psi0 / 2 for every model; at y = 1e-4 the
    # leading correction is O(y) (e.g. -y/6 for the exponential model)
    for m in (overdamped(1.0, 1.0), underdamped(1.0, 1.0, 3.0), bessel(1.0, 1.0)):
        k1, _ = cumulant(1, m, linear(1.0, 1e-4), PARAMS)
        assert PARAMS.beta * k1 == pytest.approx(0.5, rel=1e-4)
    k1, _ = cumulant(1, overdamped(1.0, 1.0), linear(1.0, 1e-4), PARAMS)
    assert PARAMS.beta * k1 == pytest.approx(
        beta_average_overdamped(1e-4), rel=1e-8)


def test_alpha_squared_scaling_exact():
    m = overdamped(1.0, 1.0)
    base, _ = cumulant(2, m, linear(0.25, 1.0), PARAMS)
    doubled, _ = cumulant(2, m, linear(0.5, 1.0), PARAMS)
    assert doubled == pytest.approx(4.0 * base, rel=1e-13)


def test_cumulant_positivity_matrix():
    # all converged orders <= 4 stay nonnegative across the sweep matrix
    for m, kmax in ((overdamped(1, 1), 3), (underdamped(1, 1, 5), 4),
                    (bessel(1, 1), 4)):
        for x in (0.5, 2.0, 5.0, 10.0):
            for y in (0.1, 1.0, 10.0):
                params = ThermalParams(beta=x)
                proto = linear(1.0, y)
                for k in range(1, kmax + 1):
                    value, _ = cumulant(k, m, proto, params)
                    assert value >= 0.0, (m.kind, x, y, k)


def test_overdamped_skewness_positive():
    # strictly positive third cumulant at x = 5, y = 1
    k3, _ = cumulant(3, overdamped(1.0, 1.0), linear(1.0, 1.0),
                     ThermalParams(beta=5.0))
    assert k3 > 0.0


def test_divergent_orders_flagged():
    with pytest.raises(CumulantDivergenceError):
        cumulant(4, overdamped(1, 1), linear(1, 1), PARAMS)
    with pytest.raises(CumulantDivergenceError):
        cumulant(6, underdamped(1, 1, 2), linear(1, 1), PARAMS)
    # compact support converges at every order
    k6, _ = cumulant(6, bessel(1, 1), linear(1, 1), PARAMS)
    assert k6 >= 0.0


def test_time_domain_average_agrees():
    # dual-route check at x = 2, y = 1
    m = overdamped(1.0, 1.0)
    proto = linear(1.0, 1.0)
    freq, _ = average_dissipated_work(m, proto, PARAMS)
    time = average_dissipated_work_time_domain(m, proto, PARAMS)
    assert time == pytest.approx(freq, rel=1e-6)


def test_bessel_average_against_struve_closed_form():
    m = bessel(1.0, 1.0)
    for y in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0):
        k1, _ = cumulant(1, m, linear(1.0, y), PARAMS)
        assert PARAMS.beta * k1 == pytest.approx(
            beta_average_bessel(y), rel=1e-9)


def test_bessel_short_time_ratio():
    # dimensionless average -> pi/8 as y -> 0
    y = 1e-3
    k1, _ = cumulant(1, bessel(1.0, 1.0), linear(1.0, y), PARAMS)
    ratio = PARAMS.beta * k1 * math.pi / 4.0
    assert ratio == pytest.approx(math.pi / 8.0, rel=1e-4)
    assert bessel_average_ratio(y) == pytest.approx(math.pi / 8.0, rel=1e-4)


def test_cgf_endpoints_and_sign():
    m = overdamped(1.0, 1.0)
    proto = linear(0.5, 1.0)
    assert cgf(0.0, m, proto, PARAMS) == 0.0
    assert cgf(1.0, m, proto, PARAMS) == 0.0
    assert cgf(0.5, m, proto, PARAMS) < 0.0


def test_cgf_symmetry():
    proto = linear(1.0, 1.0)
    for m in (overdamped(1, 1), underdamped(1, 1, 5), bessel(1, 1)):
        for eta in (0.1, 0.3, 0.7):
            k = cgf(eta, m, proto, PARAMS)
            k_mirror = cgf(1.0 - eta, m, proto, PARAMS)
            assert abs(k - k_mirror) <= 1e-9 * max(1.0, abs(k))


def test_cgf_overflow_regime():
    # beta hbar omega ~ 1e4 over the integration range must not overflow
    params = ThermalParams(beta=100.0, hbar=1.0)
    value = cgf(0.3, overdamped(1.0, 1.0), linear(1.0, 1.0), params)
    assert math.isfinite(value) and value < 0.0


def test_derivative_consistency_smooth_models():
    # FD derivatives of K at 0 reproduce the cumulant integrals
    proto = linear(1.0, 1.0)
    for m in (underdamped(1.0, 1.0, 5.0), bessel(1.0, 1.0)):
        fd = cgf_derivatives_fd(m, proto, PARAMS)
        for k, fd_k in enumerate(fd, start=1):
            direct, _ = cumulant(k, m, proto, PARAMS)
            assert fd_k == pytest.approx(direct, rel=1e-4), (m.kind, k)


def test_derivative_consistency_overdamped_low_orders():
    # the exponential model's CGF is only C^3 in eta (the order-4 integrand
    # diverges logarithmically), so only k <= 2 meet the tight tolerance
    proto = linear(1.0, 1.0)
    m = overdamped(1.0, 1.0)
    fd = cgf_derivatives_fd(m, proto, PARAMS, max_order=2)
    for k, fd_k in enumerate(fd, start=1):
        direct, _ = cumulant(k, m, proto, PARAMS)
        assert fd_k == pytest.approx(direct, rel=1e-4)


def test_pseudo_mode_distribution_normalized():
    grid = np.linspace(0.0, 10.0, 101)
    for m in (overdamped(1, 1), underdamped(1, 1, 5), bessel(1, 1)):
        density, norm, recheck = pseudo_mode_distribution(
            m, linear(1.0, 1.0), PARAMS, grid)
        assert norm > 0.0
        assert np.all(density >= 0.0)
        assert recheck == pytest.approx(1.0, abs=1e-8)


def test_pseudo_modes_compact_support():
    m = bessel(1.0, 1.0)
    grid = np.array([0.5, 0.99, 1.5, 3.0])
    density, _, _ = pseudo_mode_distribution(m, linear(1.0, 1.0), PARAMS, grid)
    assert density[0] > 0.0 and density[1] > 0.0
    assert density[2] == 0.0 and density[3] == 0.0


def test_pseudo_modes_zero_weight_error():
    with pytest.raises(WorkstatsError):
        pseudo_mode_distribution(overdamped(1, 1), sampled_rate(np.zeros(8), 1.0),
                                 PARAMS, np.linspace(0, 5, 11))


def test_fano_two_routes_and_floor():
    # route agreement is asserted inside fano_factor; classical floor 2/beta
    params = ThermalParams(beta=0.01)
    f = fano_factor(overdamped(1.0, 1.0), linear(1.0, 1.0), params)
    assert params.beta * f == pytest.approx(2.0, abs=0.02)
    assert params.beta * f >= 2.0


def test_fano_undefined_for_null_protocol():
    with pytest.raises(WorkstatsError):
        fano_factor(overdamped(1, 1), sampled_rate(np.zeros(8), 1.0), PARAMS)


def test_bound_chain():
    # F_W >= jensen >= 2/beta at scattered (model, x, y) points
    for m in (overdamped(1, 1), underdamped(1, 1, 5), bessel(1, 1)):
        for x in (0.5, 5.0):
            for y in (0.1, 1.0, 10.0):
                params = ThermalParams(beta=x)
                proto = linear(1.0, y)
                f = fano_factor(m, proto, params)
                j = jensen_bound(m, proto, params)
                assert f >= j * (1 - 1e-9)
                assert j >= 2.0 / params.beta - 1e-12


def test_low_temperature_zero_point_regime():
    # beta hbar gamma = 50, gamma tau = 0.1: F ~ hbar <omega> within 5%
    params = ThermalParams(beta=50.0)
    m = overdamped(1.0, 1.0)
    proto = linear(1.0, 0.1)
    f = fano_factor(m, proto, params)
    mean_w = mean_pseudo_frequency(m, proto, params)
    assert f == pytest.approx(params.hbar * mean_w, rel=0.05)


def test_bessel_jensen_closed_form():
    # 2F3 numerator versus direct quadrature of the spectral moments
    m = bessel(1.0, 1.0)
    for y in (0.5, 2.0, 10.0):
        closed = bessel_mean_frequency_closed(y, gamma=1.0)
        direct = mean_pseudo_frequency(m, linear(1.0, y), PARAMS)
        assert closed == pytest.approx(direct, rel=1e-8)


def test_fano_sweep_rows_and_order():
    rows = fano_sweep(overdamped(1.0, 1.0), [0.5, 2.0], [0.5, 1.0, 2.0])
    assert [(r.x, r.y) for r in rows] == [
        (0.5, 0.5), (0.5, 1.0), (0.5, 2.0), (2.0, 0.5), (2.0, 1.0), (2.0, 2.0)]
    assert all(not r.failed for r in rows)
    assert all(r.beta_fano >= r.beta_jensen_bound >= 2.0 - 1e-9 for r in rows)


def test_sweep_point_classical_limit():
    row = sweep_point(overdamped(1.0, 1.0), 0.01, 1.0)
    assert 2.0 <= row.beta_fano <= 2.02


def test_report_contents():
    report = build_report(underdamped(1.0, 1.0, 5.0), linear(0.2, 1.0), PARAMS,
                          max_order=4)
    orders = [k for (k, _, _, flag) in report.cumulants]
    assert orders == [1, 2, 3, 4]
    assert all(flag == "ok" for (_, _, _, flag) in report.cumulants)
    assert report.fano >= report.jensen_bound >= 2.0 / PARAMS.beta
    assert report.pseudo_norm == pytest.approx(1.0, abs=1e-8)
    d = report.to_dict()
    assert d["max_amplitude"] == pytest.approx(0.2)
    k_at = {row["eta"]: row["K"] for row in d["cgf_samples"]}
    assert k_at[0.0] == 0.0 and k_at[1.0] == 0.0


def test_report_flags_divergent_orders():
    report = build_report(overdamped(1.0, 1.0), linear(0.2, 1.0), PARAMS,
                          max_order=4)
    flags = {k: flag for (k, _, _, flag) in report.cumulants}
    assert flags[3] == "ok" and flags[4] == "divergent"
