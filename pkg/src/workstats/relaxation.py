"""Phenomenological relaxation functions and their Fourier transforms.

Four model families: exponential (overdamped Brownian motion), damped
oscillatory (underdamped), a compact-spectrum Bessel model, and tabulated
data.  The Fourier convention is fixed once for the whole library:

    F[f](omega) = (1/sqrt(2*pi)) * integral f(t) e^{i omega t} dt,

so the exponential model transforms to psi0 * sqrt(2/pi) * gamma /
(gamma^2 + omega^2).  The Bessel model's paper normalisation is only
proportional; here it is pinned by the t = 0 sum rule
(1/sqrt(2*pi)) * integral freq(omega) d omega = psi0, which fixes the
spectral density to exactly psi0 * sqrt(2/pi) / sqrt(gamma^2 - omega^2)
on |omega| < gamma (the arcsine integral equals pi, cancelling the pi
from the convention).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import special
from .exceptions import RangeError, TimescaleUndefinedError
from .quadrature import QuadSpec, TruncationPolicy, integrate_interval

__all__ = [
    "ModelKind",
    "RelaxationModel",
    "overdamped",
    "underdamped",
    "bessel",
    "tabulated",
    "ValidationReport",
    "validate",
    "relaxation_timescale",
    "model_from_dict",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _sinc(z):
    """sin(z)/z with series switch near zero."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z * z / 6.0, np.sin(safe) / safe)


def _sinc_moment(z):
    """(sin z - z cos z) / z^2, the first-moment kernel; ~ z/3 near zero."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    exact = (np.sin(safe) - safe * np.cos(safe)) / (safe * safe)
    return np.where(small, z / 3.0 - z**3 / 30.0, exact)


class ModelKind(enum.Enum):
    OVERDAMPED = "overdamped"
    UNDERDAMPED = "underdamped"
    BESSEL = "bessel"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class RelaxationModel:
    """An immutable relaxation-function model.

    ``psi0_at_zero`` carries the (beta^2, ||V|| = 1) amplitude at t = 0,
    ``gamma`` the decay rate, ``nu`` the oscillation frequency (underdamped
    only).  Tabulated models hold uniform (time, value) samples for t >= 0;
    evaluation uses the even extension.
    """

    kind: ModelKind
    psi0_at_zero: float
    gamma: float
    nu: float | None = None
    table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.psi0_at_zero <= 0:
            raise ValueError("psi0_at_zero must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.kind is ModelKind.UNDERDAMPED and (self.nu is None or self.nu <= 0):
            raise ValueError("underdamped model needs nu > 0")
        if self.kind is ModelKind.TABULATED and self.table is None:
            raise ValueError("tabulated model needs a table")

    # -- time domain ---------------------------------------------------------

    def eval_time(self, t):
        """Psi_0(t); even in t by construction."""
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        if self.kind is ModelKind.OVERDAMPED:
            out = self.psi0_at_zero * np.exp(-self.gamma * at)
        elif self.kind is ModelKind.UNDERDAMPED:
            out = self.psi0_at_zero * np.exp(-self.gamma * at) * (
                np.cos(self.nu * t) + (self.gamma / self.nu) * np.sin(self.nu * at))
        elif self.kind is ModelKind.BESSEL:
            j0 = np.vectorize(lambda x: special.bessel_j(0, x))
            out = self.psi0_at_zero * j0(self.gamma * at)
        else:
            times, values = self._table_arrays()
            if np.any(at > times[-1] * (1 + 1e-12)):
                raise RangeError(
                    f"tabulated model covers |t| <= {times[-1]}, asked beyond")
            out = np.interp(at, times, values)
        return out if out.shape else float(out)

    # -- frequency domain ----------------------------------------------------

    def eval_freq(self, omega):
        """Fourier transform of Psi_0; nonnegative and even for valid models.

        For the Bessel model the value at exactly |omega| = gamma is +inf,
        the integrable-singularity marker: quadrature must approach the edge
        through the singularity-aware substitution rule, never sample it.
        """
        w = np.asarray(omega, dtype=float)
        if self.kind is ModelKind.OVERDAMPED:
            out = self.psi0_at_zero * _SQRT_2_OVER_PI * self.gamma / (
                self.gamma * self.gamma + w * w)
        elif self.kind is ModelKind.UNDERDAMPED:
            g, nu = self.gamma, self.nu
            # factored denominator: manifestly positive, no cancellation
            den = (g * g + (nu - w) ** 2) * (g * g + (nu + w) ** 2)
            out = self.psi0_at_zero * _SQRT_2_OVER_PI * 2 * g * (nu * nu + g * g) / den
        elif self.kind is ModelKind.BESSEL:
            g = self.gamma
            inside = np.abs(w) < g
            with np.errstate(divide="ignore"):
                out = np.where(
                    inside,
                    self.psi0_at_zero * _SQRT_2_OVER_PI
                    / np.sqrt(np.maximum(g * g - w * w, 0.0)),
                    0.0,
                )
                out = np.where(np.abs(w) == g, np.inf, out)
        else:
            out = self._table_freq(w)
        return out if out.shape else float(out)

    def _table_arrays(self):
        tbl = np.asarray(self.table, dtype=float)
        return tbl[:, 0], tbl[:, 1]

    def _table_freq(self, w):
        # exact cosine transform of the even-extended linear interpolant,
        # zero outside the table.  Each segment integral is written around its
        # midpoint, which is cancellation-free at every omega.
        times, values = self._table_arrays()
        shape = np.asarray(w).shape
        w = np.atleast_1d(np.asarray(w, dtype=float))
        aw = np.abs(w)[:, None]
        t0, t1 = times[:-1][None, :], times[1:][None, :]
        v0, v1 = values[:-1][None, :], values[1:][None, :]
        half = 0.5 * (t1 - t0)
        mid = 0.5 * (t0 + t1)
        vmid = 0.5 * (v0 + v1)
        slope = (v1 - v0) / (t1 - t0)
        z = aw * half
        segment = (
            2.0 * half * vmid * np.cos(aw * mid) * _sinc(z)
            - 2.0 * half**2 * slope * np.sin(aw * mid) * _sinc_moment(z)
        )
        out = _SQRT_2_OVER_PI * segment.sum(axis=1)
        return out.reshape(shape)

    # -- integration metadata -------------------------------------------------

    @property
    def freq_support_edge(self) -> float | None:
        """Hard spectral edge (Bessel model), else None."""
        return self.gamma if self.kind is ModelKind.BESSEL else None

    @property
    def freq_tail_exponent(self) -> float | None:
        """Asymptotic decay power of eval_freq, None for compact support."""
        if self.kind is ModelKind.OVERDAMPED:
            return -2.0
        if self.kind is ModelKind.UNDERDAMPED:
            return -4.0
        if self.kind is ModelKind.TABULATED:
            return -2.0  # generic boundary-slope decay of the table transform
        return None

    @property
    def frequency_scale(self) -> float:
        """Knee frequency for quadrature panel sizing."""
        if self.kind is ModelKind.UNDERDAMPED:
            return self.gamma + self.nu
        return self.gamma


def overdamped(psi0: float, gamma: float) -> RelaxationModel:
    """Exponential relaxation psi0 * exp(-gamma |t|)."""
    return RelaxationModel(ModelKind.OVERDAMPED, psi0, gamma)


def underdamped(psi0: float, gamma: float, nu: float) -> RelaxationModel:
    """Damped oscillation psi0 * exp(-gamma|t|) (cos(nu t) + (gamma/nu) sin(nu |t|))."""
    return RelaxationModel(ModelKind.UNDERDAMPED, psi0, gamma, nu=nu)


def bessel(psi0: float, gamma: float) -> RelaxationModel:
    """Compact-spectrum model psi0 * J0(gamma t)."""
    return RelaxationModel(ModelKind.BESSEL, psi0, gamma)


def tabulated(times, values) -> RelaxationModel:
    """Model from samples of Psi_0 on t >= 0; resampled to a uniform grid."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
        raise ValueError("need matching 1-d time and value arrays, length >= 2")
    if times[0] != 0.0:
        raise ValueError("table must start at t = 0")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9):
        uniform = np.linspace(times[0], times[-1], len(times))
        values = np.interp(uniform, times, values)
        times = uniform
    if values[0] <= 0:
        raise ValueError("Psi_0(0) must be positive")
    gamma = 1.0 / times[-1]  # nominal inverse-length scale of the table
    return RelaxationModel(
        ModelKind.TABULATED, float(values[0]), gamma,
        table=tuple((float(t), float(v)) for t, v in zip(times, values)))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the thermodynamic-consistency checks."""

    passed: bool
    time_symmetric: bool
    freq_nonnegative: bool
    first_violation: tuple[str, float, float] | None = None

    def __str__(self):
        if self.passed:
            return "model consistent: Psi0 even in t, Fourier transform >= 0"
        what, where, value = self.first_violation
        return f"model violates {what} at {where:g} (value {value:g})"


def validate(model: RelaxationModel, omega_grid) -> ValidationReport:
    """Check time-reversal symmetry and spectral positivity on sample grids."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    if omega_grid.size == 0:
        raise ValueError("omega grid must be nonempty")

    if model.kind is ModelKind.TABULATED:
        t_end = model._table_arrays()[0][-1]
    else:
        t_end = 8.0 / model.gamma
    t_grid = np.linspace(0.0, t_end, 201)
    forward = np.asarray(model.eval_time(t_grid))
    backward = np.asarray(model.eval_time(-t_grid))
    sym_err = np.abs(forward - backward)
    time_ok = bool(np.all(sym_err <= 1e-12 * (1 + np.abs(forward))))
    first = None
    if not time_ok:
        i = int(np.argmax(sym_err))
        first = ("time evenness", float(t_grid[i]), float(forward[i] - backward[i]))

    fv = np.asarray(model.eval_freq(omega_grid))
    finite = np.isfinite(fv)
    freq_ok = bool(np.all(fv[finite] >= 0.0))
    if time_ok and not freq_ok:
        bad = np.where(finite & (fv < 0))[0][0]
        first = ("spectral positivity", float(omega_grid[bad]), float(fv[bad]))
    return ValidationReport(time_ok and freq_ok, time_ok, freq_ok, first)


def relaxation_timescale(model: RelaxationModel) -> float:
    """tau_R = integral_0^inf Psi_0(t) dt / Psi_0(0).

    Raises TimescaleUndefinedError for the Bessel model, whose J0 tail is
    not absolutely integrable.  Tabulated models integrate over the table.
    """
    if model.kind is ModelKind.BESSEL:
        raise TimescaleUndefinedError(
            "J0(gamma t) has no integrable envelope; tau_R is undefined")
    if model.kind is ModelKind.OVERDAMPED:
        return 1.0 / model.gamma
    if model.kind is ModelKind.UNDERDAMPED:
        g, nu = model.gamma, model.nu
        return 2.0 * g / (g * g + nu * nu)
    times, values = model._table_arrays()
    return float(np.trapz(values, times) / values[0])


def model_from_dict(cfg: dict) -> RelaxationModel:
    """Build a model from its JSON-config form."""
    try:
        kind = str(cfg["kind"]).lower()
    except KeyError as exc:
        raise KeyError("model.kind") from exc
    if kind == "overdamped":
        return overdamped(_get(cfg, "psi0"), _get(cfg, "gamma"))
    if kind == "underdamped":
        return underdamped(_get(cfg, "psi0"), _get(cfg, "gamma"), _get(cfg, "nu"))
    if kind == "bessel":
        return bessel(_get(cfg, "psi0"), _get(cfg, "gamma"))
    if kind == "tabulated":
        table = np.asarray(_get(cfg, "table"), dtype=float)
        return tabulated(table[:, 0], table[:, 1])
    raise ValueError(f"unknown model kind {kind!r}")


def _get(cfg: dict, key: str):
    try:
        return cfg[key]
    except KeyError as exc:
        raise KeyError(f"model.{key}") from exc
