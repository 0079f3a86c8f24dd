"""Dissipated-work statistics of a weakly driven system.

Everything is computed from one spectral object, the product
Psi~_0(omega) * S(omega) of the relaxation spectrum and the protocol's
spectral weight.  Scaled cumulants are frequency integrals

    beta^k kappa_k = (2/sqrt(2 pi)) * int_0^inf  Psi~_0 S g_k(beta hbar omega) d omega

with the kernel g_k(b) = b^(k-1)/2 for odd k and (b^(k-1)/2) coth(b/2) for
even k, and the generating function is

    K(eta) = -(2/sqrt(2 pi)) * int_0^inf  Psi~_0 S  k_eta(beta hbar omega) d omega,
    k_eta(b) = sinh(b(1-eta)/2) sinh(b eta/2) / (b sinh(b/2)).

The 1/sqrt(2 pi) prefactor on K is pinned by requiring that eta-derivatives
of K at 0 reproduce the cumulant integrals (checked by a finite-difference
test); with this library's Fourier convention the constant is exactly
1/sqrt(2 pi).  All integrands are even in omega, so only [0, inf) is ever
integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DivergentIntegralError, WorkstatsError
from .protocols import DrivingProtocol
from .quadrature import (
    QuadSpec,
    TruncationPolicy,
    integrate_halfline,
    integrate_halfline_family,
    integrate_interval,
)
from .relaxation import ModelKind, RelaxationModel
from . import special

__all__ = [
    "ThermalParams",
    "WorkStatisticsReport",
    "CumulantDivergenceError",
    "cumulant",
    "average_dissipated_work",
    "average_dissipated_work_time_domain",
    "cgf",
    "cgf_samples",
    "cgf_derivatives_fd",
    "pseudo_mode_distribution",
    "mean_pseudo_frequency",
    "fano_factor",
    "jensen_bound",
    "fano_sweep",
    "SweepRow",
    "build_report",
    "ConsistencyConfig",
    "beta_average_overdamped",
    "bessel_average_bracket",
    "beta_average_bessel",
    "bessel_average_ratio",
    "bessel_mean_frequency_closed",
    "CGF_PREFACTOR",
]

# Convention constant in K(eta); fixed by the derivative-consistency check.
CGF_PREFACTOR = 1.0 / math.sqrt(2.0 * math.pi)


class CumulantDivergenceError(DivergentIntegralError):
    """The requested cumulant order has a non-integrable frequency integrand."""


@dataclass(frozen=True)
class ThermalParams:
    """Inverse temperature and hbar; k_B = 1 throughout."""

    beta: float
    hbar: float = 1.0

    def __post_init__(self):
        if self.beta <= 0 or self.hbar <= 0:
            raise ValueError("beta and hbar must be positive")


@dataclass(frozen=True)
class ConsistencyConfig:
    """Named constants of the derivative-consistency check."""

    fd_step: float = 1e-3
    fd_nodes: int = 7
    rel_tol: float = 1e-4


def _xcoth(b):
    """b * coth(b/2), vectorized; equals 2 at b = 0, |b| for large |b|."""
    b = np.asarray(b, dtype=float)
    ab = np.abs(b)
    small = ab < 1e-4
    safe = np.where(small, 1.0, ab)
    e = np.expm1(-safe)
    exact = safe * (2.0 + e) / (-e)
    return np.where(small, 2.0 + b * b / 6.0, exact)


def _cumulant_kernel(k: int, b):
    """gamma^k as a function of b = beta hbar omega (even in b)."""
    b = np.asarray(b, dtype=float)
    ab = np.abs(b)
    if k % 2 == 1:
        return 0.5 * ab ** (k - 1)
    return 0.5 * ab ** (k - 2) * _xcoth(ab)


def _cgf_kernel(b, eta: float):
    """sinh(b(1-eta)/2) sinh(b eta/2) / (b sinh(b/2)), stable for all b.

    Written with expm1 so it neither overflows at large b nor cancels at
    small b; the eta <-> 1-eta symmetry is exact up to the rounding of 1-eta
    because the two factors just swap under the exchange.
    """
    b = np.asarray(b, dtype=float)
    ab = np.abs(b)
    e1 = -np.expm1(-ab * (1.0 - eta))
    e2 = -np.expm1(-ab * eta)
    e3 = -np.expm1(-ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = e1 * e2 / (2.0 * ab * e3)
    return np.where(ab == 0.0, eta * (1.0 - eta) / 2.0, out)


def _quad_spec(model: RelaxationModel, protocol: DrivingProtocol,
               params: ThermalParams, rel_tol: float, abs_tol: float) -> QuadSpec:
    if model.freq_support_edge is not None:
        return QuadSpec(
            rel_tol=rel_tol, abs_tol=abs_tol,
            truncation_policy=TruncationPolicy.COMPACT_SUPPORT,
            oscillation_period_hint=protocol.oscillation_period,
            support_edge=model.freq_support_edge)
    scale = max(model.frequency_scale, 1.0 / (params.beta * params.hbar))
    return QuadSpec(
        rel_tol=rel_tol, abs_tol=abs_tol,
        oscillation_period_hint=protocol.oscillation_period,
        scale_hint=scale)


def _check_integrable(k: int, model: RelaxationModel):
    tail = model.freq_tail_exponent
    if tail is None:
        return  # compact spectral support: every order converges
    # integrand ~ omega^(tail - 2 + k - 1); integrable iff power < -1
    if tail - 2.0 + (k - 1.0) >= -1.0:
        raise CumulantDivergenceError(
            f"cumulant order {k} undefined for this model: frequency integrand "
            f"grows like omega^{tail - 3.0 + k:g} at large omega")


def cumulant(k: int, model: RelaxationModel, protocol: DrivingProtocol,
             params: ThermalParams, rel_tol: float = 1e-11,
             abs_tol: float = 1e-16):
    """kappa_k of the dissipated work, with its quadrature error estimate.

    Returns kappa_k in energy^k units (k_B = 1).  Raises
    CumulantDivergenceError when the order does not converge for the model's
    spectral tail (e.g. k >= 4 for the exponential model).
    """
    if k < 1:
        raise ValueError("cumulant order must be >= 1")
    _check_integrable(k, model)
    bh = params.beta * params.hbar

    def integrand(w):
        return (np.asarray(model.eval_freq(w))
                * protocol.spectral_weight(w)
                * _cumulant_kernel(k, bh * w))

    spec = _quad_spec(model, protocol, params, rel_tol, abs_tol)
    value, err = integrate_halfline(integrand, spec)
    scale = 2.0 * CGF_PREFACTOR / params.beta**k
    return scale * value, scale * err


def average_dissipated_work(model, protocol, params, **kw):
    """<W_diss> = kappa_1."""
    return cumulant(1, model, protocol, params, **kw)


def average_dissipated_work_time_domain(model: RelaxationModel,
                                        protocol: DrivingProtocol,
                                        params: ThermalParams,
                                        n_grid: int = 4097) -> float:
    """<W_diss> from the double time integral, for cross-validation.

    beta <W> = (1/2) int int Psi_0(t - t') rate(t) rate(t') dt dt', evaluated
    as int_0^tau ds Psi_0(s) G(s) with the rate autocorrelation G from
    `protocols.rate_autocorrelation`, Simpson over the lag.
    """
    from .protocols import rate_autocorrelation

    tau = protocol.tau
    s_grid = np.linspace(0.0, tau, n_grid)
    psi = np.asarray(model.eval_time(s_grid))
    auto = rate_autocorrelation(protocol, s_grid)
    return _simpson(psi * auto, dx=tau / (n_grid - 1)) / params.beta


def _simpson(y, dx):
    n = len(y)
    if n % 2 == 0:
        raise ValueError("simpson needs an odd number of samples")
    return dx / 3.0 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-2:2].sum())


def cgf(eta: float, model: RelaxationModel, protocol: DrivingProtocol,
        params: ThermalParams, rel_tol: float = 1e-11,
        abs_tol: float = 1e-16) -> float:
    """K(eta) = ln <exp(-eta beta W_diss)> in the weak-drive approximation.

    Zero at eta = 0 and eta = 1, symmetric under eta <-> 1-eta (the
    fluctuation theorem at generating-function level), and <= 0 between.
    Convergence is guaranteed for eta in [0, 1]; values outside may diverge
    for slowly decaying spectra.
    """
    if eta == 0.0 or eta == 1.0:
        return 0.0
    bh = params.beta * params.hbar

    def integrand(w):
        return (np.asarray(model.eval_freq(w))
                * protocol.spectral_weight(w)
                * _cgf_kernel(bh * w, eta))

    spec = _quad_spec(model, protocol, params, rel_tol, abs_tol)
    value, _ = integrate_halfline(integrand, spec)
    return -2.0 * CGF_PREFACTOR * value


def cgf_samples(etas, model, protocol, params, rel_tol: float = 1e-11,
                abs_tol: float = 1e-16):
    """K(eta) on a grid, all etas sharing one quadrature panelization.

    The shared panels make the residual quadrature error a smooth function
    of eta, which a finite-difference stencil then cancels; use this for
    derivative estimates rather than calling `cgf` pointwise.
    """
    bh = params.beta * params.hbar

    def make(eta):
        def integrand(w):
            return (np.asarray(model.eval_freq(w))
                    * protocol.spectral_weight(w)
                    * _cgf_kernel(bh * w, eta))
        return integrand

    fs = [make(e) for e in etas]
    spec = _quad_spec(model, protocol, params, rel_tol, abs_tol)
    results = integrate_halfline_family(fs, spec)
    return [-2.0 * CGF_PREFACTOR * v for v, _ in results]


def _fd_weights(order: int, n_nodes: int) -> np.ndarray:
    """Forward-difference weights for f^(order)(0) on nodes 0, 1, ..., n-1."""
    nodes = np.arange(n_nodes, dtype=float)
    rhs = np.zeros(n_nodes)
    rhs[order] = math.factorial(order)
    vander = np.vander(nodes, n_nodes, increasing=True).T
    return np.linalg.solve(vander, rhs)


def cgf_derivatives_fd(model, protocol, params,
                       config: ConsistencyConfig = ConsistencyConfig(),
                       max_order: int = 3):
    """Cumulants from finite differences of K(eta) at eta = 0.

    Returns [kappa_1_fd, ..., kappa_max_order_fd] using forward stencils on
    eta = 0, h, ..., (n-1) h with K(0) = 0.  Agreement with `cumulant` fixes
    and verifies the CGF convention constant.
    """
    h = config.fd_step
    n = config.fd_nodes
    etas = [j * h for j in range(1, n)]
    ks = [0.0] + cgf_samples(etas, model, protocol, params)
    ks = np.asarray(ks)
    out = []
    for order in range(1, max_order + 1):
        w = _fd_weights(order, n)
        deriv = float(w @ ks) / h**order
        out.append((-1.0 / params.beta) ** order * deriv)
    return out


def _spectral_moment(model, protocol, params, power: int, rel_tol=1e-11):
    """integral_0^inf Psi~_0(omega) S(omega) omega^power d omega."""

    def integrand(w):
        base = np.asarray(model.eval_freq(w)) * protocol.spectral_weight(w)
        return base * np.asarray(w, dtype=float) ** power if power else base

    spec = _quad_spec(model, protocol, params, rel_tol, 1e-16)
    return integrate_halfline(integrand, spec)


def pseudo_mode_distribution(model, protocol, params, omega_grid,
                             rel_tol: float = 1e-11):
    """Normalized spectral density P(omega) on [0, inf) sampled on a grid.

    Returns (density_samples, normalization_integral, recheck_norm) where
    recheck_norm re-integrates the normalized density at a tighter tolerance
    and should equal 1.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    norm, _ = _spectral_moment(model, protocol, params, 0, rel_tol)
    if norm <= 0.0:
        raise WorkstatsError("pseudo-mode weight vanishes (null protocol?)")
    density = (np.asarray(model.eval_freq(omega_grid))
               * protocol.spectral_weight(omega_grid)) / norm
    recheck, _ = _spectral_moment(model, protocol, params, 0,
                                  rel_tol=min(rel_tol, 1e-12))
    return density, norm, recheck / norm


def mean_pseudo_frequency(model, protocol, params, rel_tol: float = 1e-11) -> float:
    """<omega> over the pseudo-mode distribution."""
    num, _ = _spectral_moment(model, protocol, params, 1, rel_tol)
    den, _ = _spectral_moment(model, protocol, params, 0, rel_tol)
    if den <= 0.0:
        raise WorkstatsError("pseudo-mode weight vanishes (null protocol?)")
    return num / den


def fano_factor(model, protocol, params, rel_tol: float = 1e-11,
                check_routes: bool = True) -> float:
    """F_W = Var(W) / <W_diss> = kappa_2 / kappa_1.

    Also evaluated as the pseudo-mode average of hbar omega coth(beta hbar
    omega / 2); the two routes must agree, which cross-checks the kernel
    bookkeeping.  Raises on a vanishing first cumulant.
    """
    k1, _ = cumulant(1, model, protocol, params, rel_tol=rel_tol)
    if k1 <= 0.0:
        raise WorkstatsError("Fano factor undefined: <W_diss> = 0")
    k2, _ = cumulant(2, model, protocol, params, rel_tol=rel_tol)
    ratio = k2 / k1
    if check_routes:
        bh = params.beta * params.hbar

        def weighted(w):
            return (np.asarray(model.eval_freq(w)) * protocol.spectral_weight(w)
                    * _xcoth(bh * np.asarray(w, dtype=float)))

        spec = _quad_spec(model, protocol, params, rel_tol, 1e-16)
        num, _ = integrate_halfline(weighted, spec)
        den, _ = _spectral_moment(model, protocol, params, 0, rel_tol)
        alt = num / den / params.beta
        if not math.isclose(ratio, alt, rel_tol=1e-6):
            raise WorkstatsError(
                f"Fano routes disagree: {ratio!r} vs {alt!r}")
    return ratio


def jensen_bound(model, protocol, params, rel_tol: float = 1e-11) -> float:
    """hbar <omega> coth(beta hbar <omega> / 2): the zero-point lower bound.

    Lies between 2/beta and the Fano factor; for the compact-spectrum model
    the mean frequency also has a closed 2F3 form (see
    `bessel_mean_frequency_closed`), compared against this route in tests.
    """
    mean_w = mean_pseudo_frequency(model, protocol, params, rel_tol)
    return special.x_coth_half(params.beta * params.hbar * mean_w) / params.beta


# -- closed-form benchmarks ---------------------------------------------------

def beta_average_overdamped(y: float, alpha: float = 1.0,
                            psi0: float = 1.0) -> float:
    """beta <W_diss> for the exponential model under a linear ramp.

    Equals alpha^2 psi0 (y + e^-y - 1)/y^2 with y = gamma tau; the sudden
    limit y -> 0 gives alpha^2 psi0 / 2.
    """
    if y < 1e-4:
        series = 0.5 - y / 6.0 + y * y / 24.0
        return alpha * alpha * psi0 * series
    # y + expm1(-y) avoids the small-y cancellation of y + e^-y - 1
    return alpha * alpha * psi0 * (y + math.expm1(-y)) / (y * y)


def bessel_average_bracket(y: float) -> float:
    """J1(y)(-2 + pi y H0(y)) + y J0(y)(2 - pi H1(y))."""
    j0 = special.bessel_j(0, y)
    j1 = special.bessel_j(1, y)
    h0 = special.struve_h(0, y)
    h1 = special.struve_h(1, y)
    return j1 * (-2.0 + math.pi * y * h0) + y * j0 * (2.0 - math.pi * h1)


def bessel_average_ratio(y: float) -> float:
    """(pi/(8y)) * bracket(y): the dimensionless average, -> pi/8 as y -> 0."""
    return math.pi / (8.0 * y) * bessel_average_bracket(y)


def beta_average_bessel(y: float, alpha: float = 1.0, psi0: float = 1.0) -> float:
    """beta <W_diss> for the compact-spectrum model under a linear ramp."""
    return alpha * alpha * psi0 / (2.0 * y) * bessel_average_bracket(y)


def bessel_mean_frequency_closed(y: float, gamma: float = 1.0) -> float:
    """<omega> over the pseudo-modes for the compact-spectrum model.

    gamma (2y/pi) 2F3(1,1;3/2,3/2,2;-y^2/4) / bracket(y): the numerator is
    the hypergeometric form of the first spectral moment.
    """
    f23 = special.hyp_2f3(1.0, 1.0, 1.5, 1.5, 2.0, -y * y / 4.0)
    return gamma * (2.0 * y / math.pi) * f23 / bessel_average_bracket(y)


# -- sweeps and reports --------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    """One (x, y) point of a dimensionless Fano sweep."""

    x: float
    y: float
    beta_fano: float
    beta_jensen_bound: float
    beta_avg_rescaled: float
    err_estimate: float
    failed: bool = False


def sweep_point(model: RelaxationModel, x: float, y: float, *,
                alpha: float = 1.0, hbar: float = 1.0,
                rel_tol: float = 1e-10) -> SweepRow:
    """Evaluate one sweep point at beta = x/(hbar gamma), tau = y/gamma."""
    from .protocols import linear

    gamma = model.gamma
    params = ThermalParams(beta=x / (hbar * gamma), hbar=hbar)
    protocol = linear(alpha, y / gamma)
    try:
        k1, e1 = cumulant(1, model, protocol, params, rel_tol=rel_tol)
        k2, e2 = cumulant(2, model, protocol, params, rel_tol=rel_tol)
        mean_w = mean_pseudo_frequency(model, protocol, params, rel_tol)
        beta = params.beta
        beta_f = beta * k2 / k1
        beta_j = special.x_coth_half(beta * hbar * mean_w)
        rescaled = beta * k1 / (model.psi0_at_zero * alpha * alpha)
        err = beta * (abs(e2 / k1) + abs(e1 * k2 / k1**2))
        return SweepRow(x, y, beta_f, beta_j, rescaled, err)
    except (DivergentIntegralError, WorkstatsError):
        return SweepRow(x, y, math.nan, math.nan, math.nan, math.nan, failed=True)


def fano_sweep(model: RelaxationModel, x_values, y_values, *,
               alpha: float = 1.0, hbar: float = 1.0,
               rel_tol: float = 1e-10):
    """Dimensionless Fano-factor table over (x, y) = (beta hbar gamma, gamma tau).

    Row order is x-major, y-minor and deterministic.  Failed points carry
    NaNs and a flag instead of aborting the sweep.
    """
    return [
        sweep_point(model, float(x), float(y), alpha=alpha, hbar=hbar,
                    rel_tol=rel_tol)
        for x in x_values for y in y_values
    ]


@dataclass(frozen=True)
class WorkStatisticsReport:
    """Full per-configuration summary of the work statistics."""

    cumulants: tuple          # (order, value, err_estimate, flag) rows
    fano: float
    jensen_bound: float
    mean_pseudo_freq: float
    pseudo_norm: float
    cgf_samples: tuple        # (eta, K(eta)) rows
    max_amplitude: float

    def to_dict(self) -> dict:
        return {
            "cumulants": [
                {"order": k, "value": v, "err_estimate": e, "flag": f}
                for (k, v, e, f) in self.cumulants
            ],
            "fano": self.fano,
            "jensen_bound": self.jensen_bound,
            "mean_pseudo_freq": self.mean_pseudo_freq,
            "pseudo_norm": self.pseudo_norm,
            "cgf_samples": [{"eta": e, "K": k} for (e, k) in self.cgf_samples],
            "max_amplitude": self.max_amplitude,
        }


def build_report(model, protocol, params, max_order: int = 4,
                 eta_grid=None, rel_tol: float = 1e-10) -> WorkStatisticsReport:
    """Assemble cumulants, bounds and CGF samples into one report.

    Divergent cumulant orders are flagged rather than raised; the CGF is
    sampled on `eta_grid` (default 0..1 in steps of 0.1).
    """
    if eta_grid is None:
        eta_grid = [i / 10 for i in range(11)]
    rows = []
    for k in range(1, max_order + 1):
        try:
            v, e = cumulant(k, model, protocol, params, rel_tol=rel_tol)
            rows.append((k, v, e, "ok"))
        except DivergentIntegralError:
            rows.append((k, math.nan, math.nan, "divergent"))
    fano = fano_factor(model, protocol, params, rel_tol=rel_tol)
    bound = jensen_bound(model, protocol, params, rel_tol=rel_tol)
    mean_w = mean_pseudo_frequency(model, protocol, params, rel_tol=rel_tol)
    grid = np.linspace(0.0, max(model.frequency_scale * 5, 1.0), 16)
    _, _, recheck = pseudo_mode_distribution(model, protocol, params, grid,
                                             rel_tol=rel_tol)
    samples = tuple((float(e), cgf(float(e), model, protocol, params))
                    for e in eta_grid)
    return WorkStatisticsReport(
        cumulants=tuple(rows),
        fano=fano,
        jensen_bound=bound,
        mean_pseudo_freq=mean_w,
        pseudo_norm=recheck,
        cgf_samples=samples,
        max_amplitude=protocol.max_amplitude(),
    )
