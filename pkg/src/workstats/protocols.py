"""Driving schedules lambda_t on [0, tau] and their spectral weight.

Every cumulant integral consumes a protocol only through

    S(omega) = | integral_0^tau  dlambda/dt  e^{i omega t} dt |^2,

so protocols are specified by their rates.  S is even, nonnegative, and
scales exactly as alpha^2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ProtocolKind", "DrivingProtocol", "linear", "piecewise_linear",
           "sampled_rate", "protocol_from_dict"]


class ProtocolKind(enum.Enum):
    LINEAR = "linear"
    PIECEWISE_LINEAR = "piecewise_linear"
    SAMPLED_RATE = "sampled_rate"


def _sinc(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z * z / 6.0, np.sin(safe) / safe)


@dataclass(frozen=True)
class DrivingProtocol:
    """A driving schedule with lambda_0 = 0.

    Linear ramps carry strength ``alpha`` (lambda_t = alpha t / tau);
    piecewise-linear protocols carry (time, lambda) knots; sampled-rate
    protocols carry uniform rate samples that are treated as a
    piecewise-linear interpolant of dlambda/dt.
    """

    kind: ProtocolKind
    alpha: float
    tau: float
    knots: tuple | None = field(default=None, repr=False)
    rates: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.kind is ProtocolKind.PIECEWISE_LINEAR:
            k = np.asarray(self.knots, dtype=float)
            if k.ndim != 2 or k.shape[1] != 2 or len(k) < 2:
                raise ValueError("knots must be a list of (time, lambda) pairs")
            if k[0, 0] != 0.0 or k[0, 1] != 0.0:
                raise ValueError("protocol must start at (t, lambda) = (0, 0)")
            if np.any(np.diff(k[:, 0]) <= 0):
                raise ValueError("knot times must be strictly increasing")
            if not math.isclose(k[-1, 0], self.tau):
                raise ValueError("last knot time must equal tau")
        if self.kind is ProtocolKind.SAMPLED_RATE:
            r = np.asarray(self.rates, dtype=float)
            if r.ndim != 1 or len(r) < 2:
                raise ValueError("need at least two rate samples")

    # -- spectral weight -------------------------------------------------------

    def rate_transform(self, omega):
        """Complex amplitude A(omega) = integral dlambda/dt e^{i omega t} dt."""
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.kind is ProtocolKind.LINEAR:
            # constant rate alpha/tau over [0, tau]
            z = 0.5 * w * self.tau
            amp = self.alpha * _sinc(z) * np.exp(1j * z)
            return amp
        times, rates = self._segments()
        t0, t1 = times[:-1][None, :], times[1:][None, :]
        r0, r1 = rates[:-1][None, :], rates[1:][None, :]
        half = 0.5 * (t1 - t0)
        mid = 0.5 * (t0 + t1)
        z = w[:, None] * half
        phase = np.exp(1j * w[:, None] * mid)
        base = (r0 + r1) * half * _sinc(z)
        moment = (r1 - r0) * half * 1j * _sinc_moment_ratio(z)
        return (phase * (base + moment)).sum(axis=1)

    def spectral_weight(self, omega):
        """S(omega) = |A(omega)|^2; even, nonnegative, O(alpha^2)."""
        scalar = np.asarray(omega).shape == ()
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.kind is ProtocolKind.LINEAR:
            z = 0.5 * np.abs(w) * self.tau
            s = (self.alpha * _sinc(z)) ** 2
        else:
            s = np.abs(self.rate_transform(np.abs(w))) ** 2
        return float(s[0]) if scalar else s

    def _segments(self):
        if self.kind is ProtocolKind.PIECEWISE_LINEAR:
            k = np.asarray(self.knots, dtype=float)
            times = k[:, 0]
            seg_rates = np.diff(k[:, 1]) / np.diff(times)
            # piecewise-constant rate: duplicate rate at both segment ends
            t = np.repeat(times, 2)[1:-1]
            r = np.repeat(seg_rates, 2)
            return t, r
        times = np.linspace(0.0, self.tau, len(self.rates))
        return times, np.asarray(self.rates, dtype=float)

    # -- time domain -----------------------------------------------------------

    def value(self, t):
        """lambda_t, with lambda_0 = 0."""
        t = np.asarray(t, dtype=float)
        if self.kind is ProtocolKind.LINEAR:
            out = self.alpha * t / self.tau
        elif self.kind is ProtocolKind.PIECEWISE_LINEAR:
            k = np.asarray(self.knots, dtype=float)
            out = np.interp(t, k[:, 0], k[:, 1])
        else:
            times, rates = self._segments()
            grid = np.linspace(0.0, self.tau, 4 * len(times) + 1)
            lam = np.concatenate([[0.0], np.cumsum(
                0.5 * (np.interp(grid[1:], times, rates)
                       + np.interp(grid[:-1], times, rates)) * np.diff(grid))])
            out = np.interp(t, grid, lam)
        return out if np.asarray(out).shape else float(out)

    def rate(self, t):
        """dlambda/dt at time t."""
        t = np.asarray(t, dtype=float)
        if self.kind is ProtocolKind.LINEAR:
            out = np.full_like(t, self.alpha / self.tau)
        else:
            times, rates = self._segments()
            out = np.interp(t, times, rates)
        return out if np.asarray(out).shape else float(out)

    def max_amplitude(self) -> float:
        """max over [0, tau] of |lambda_t|, for checking the weak-drive premise."""
        if self.kind is ProtocolKind.LINEAR:
            return abs(self.alpha)
        if self.kind is ProtocolKind.PIECEWISE_LINEAR:
            k = np.asarray(self.knots, dtype=float)
            return float(np.max(np.abs(k[:, 1])))
        grid = np.linspace(0.0, self.tau, 8 * len(self.rates) + 1)
        return float(np.max(np.abs(self.value(grid))))

    def final_value(self) -> float:
        """lambda_tau (enters the free-energy change and sudden limits)."""
        return float(self.value(self.tau))

    @property
    def oscillation_period(self) -> float:
        """Spectral period 2 pi / tau of S(omega), the quadrature hint."""
        return 2.0 * math.pi / self.tau


def rate_autocorrelation(protocol: DrivingProtocol, s_values, m: int = 257):
    """G(s) = integral_s^tau rate(t) rate(t - s) dt for each s in s_values.

    Simpson on an m-point subgrid of [s, tau] per lag, so the moving lower
    limit never aliases against a fixed grid.  Exact for linear ramps.
    """
    if m % 2 == 0:
        m += 1
    tau = protocol.tau
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    u = np.linspace(0.0, 1.0, m)
    t = s[:, None] + (tau - s)[:, None] * u[None, :]
    r1 = np.asarray(protocol.rate(t.ravel())).reshape(t.shape)
    r2 = np.asarray(protocol.rate((t - s[:, None]).ravel())).reshape(t.shape)
    wts = np.ones(m)
    wts[1:-1:2], wts[2:-2:2] = 4.0, 2.0
    h = (tau - s) / (m - 1)
    out = (r1 * r2) @ wts * h / 3.0
    return out if np.asarray(s_values).shape else float(out[0])


def _sinc_moment_ratio(z):
    """3-point helper (sin z - z cos z)/z^2 used by linear-rate segments."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    exact = (np.sin(safe) - safe * np.cos(safe)) / (safe * safe)
    return np.where(small, z / 3.0 - z**3 / 30.0, exact)


def linear(alpha: float, tau: float) -> DrivingProtocol:
    """Linear ramp lambda_t = alpha t / tau."""
    return DrivingProtocol(ProtocolKind.LINEAR, alpha, tau)


def piecewise_linear(knots, alpha: float | None = None) -> DrivingProtocol:
    """Protocol through (time, lambda) knots, starting at (0, 0)."""
    knots = [(float(t), float(v)) for t, v in knots]
    tau = knots[-1][0]
    amp = alpha if alpha is not None else max(abs(v) for _, v in knots)
    return DrivingProtocol(ProtocolKind.PIECEWISE_LINEAR, amp, tau,
                           knots=tuple(knots))


def sampled_rate(rates, tau: float) -> DrivingProtocol:
    """Protocol from uniform samples of dlambda/dt on [0, tau]."""
    rates = tuple(float(r) for r in rates)
    proto = DrivingProtocol(ProtocolKind.SAMPLED_RATE, 0.0, tau, rates=rates)
    amp = proto.max_amplitude()
    return DrivingProtocol(ProtocolKind.SAMPLED_RATE, amp, tau, rates=rates)


def protocol_from_dict(cfg: dict) -> DrivingProtocol:
    """Build a protocol from its JSON-config form."""
    try:
        kind = str(cfg["kind"]).lower()
    except KeyError as exc:
        raise KeyError("protocol.kind") from exc
    if kind == "linear":
        return linear(_get(cfg, "alpha"), _get(cfg, "tau"))
    if kind in ("piecewise_linear", "piecewise-linear"):
        return piecewise_linear(_get(cfg, "knots"))
    if kind in ("sampled_rate", "sampled-rate"):
        return sampled_rate(_get(cfg, "rates"), _get(cfg, "tau"))
    raise ValueError(f"unknown protocol kind {kind!r}")


def _get(cfg: dict, key: str):
    try:
        return cfg[key]
    except KeyError as exc:
        raise KeyError(f"protocol.{key}") from exc
