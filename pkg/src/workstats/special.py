"""Self-contained special functions: Bessel J0/J1, Struve H0/H1, 2F3, coth.

Everything here is double precision on the outside.  The alternating power
series cancel badly once the argument is large (terms grow like e^x while the
result stays O(1)), so beyond ``_SERIES_CUTOFF`` the same series are summed in
``decimal`` arithmetic with enough guard digits to absorb the cancellation,
then rounded once at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

from .exceptions import ConvergenceError, RangeError

__all__ = [
    "SeriesControl",
    "bessel_j",
    "struve_h",
    "hyp_2f3",
    "coth_half",
    "x_coth_half",
]

# Largest |x| for which the float64 series keeps absolute error comfortably
# below 1e-12 (max term ~ e^x, so roundoff ~ e^12 * 1e-16 ~ 2e-11 at 12).
_SERIES_CUTOFF = 12.0
# Hard cap: arguments past this raise RangeError (contract validated to 50).
_MAX_ARG = 200.0


@dataclass(frozen=True)
class SeriesControl:
    """Termination policy for the hypergeometric series."""

    max_terms: int = 500
    rel_tol: float = 1e-14

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")


_DEFAULT_CONTROL = SeriesControl()


def _decimal_digits(x: float) -> int:
    # cancellation eats ~0.434*x digits; keep a generous guard band
    return 30 + int(0.5 * abs(x))


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind, order 0 or 1.

    Power series for |x| <= 12, extended-precision series beyond; absolute
    error below 1e-12 over the validated range |x| <= 200.
    """
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    ax = abs(x)
    if ax > _MAX_ARG:
        raise RangeError(f"bessel_j validated only for |x| <= {_MAX_ARG}, got {x}")
    sign = 1.0
    if n == 1 and x < 0:
        sign = -1.0  # J1 is odd, J0 even
    if ax <= _SERIES_CUTOFF:
        return sign * _bessel_series_float(n, ax)
    return sign * _bessel_series_decimal(n, ax)


def _bessel_series_float(n: int, x: float) -> float:
    # J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
    q = 0.25 * x * x
    term = (0.5 * x) ** n / (1.0 if n == 0 else 1.0)  # k = 0 term; 0!*(n)! = 1
    total = term
    comp = 0.0
    for k in range(1, 300):
        term *= -q / (k * (k + n))
        # Kahan-compensated accumulation
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) <= 1e-17 * (abs(total) + 1e-300):
            return total
    raise ConvergenceError("bessel series did not terminate")


def _bessel_series_decimal(n: int, x: float) -> float:
    with localcontext() as ctx:
        ctx.prec = _decimal_digits(x)
        xd = Decimal(x)
        q = xd * xd / 4
        term = (xd / 2) ** n
        total = term
        for k in range(1, 2000):
            term = -term * q / (k * (k + n))
            total += term
            if abs(term) < Decimal(10) ** (-(ctx.prec - 5)) * (abs(total) + 1):
                return float(total)
    raise ConvergenceError("bessel decimal series did not terminate")


def struve_h(n: int, x: float) -> float:
    """Struve function H0 or H1 for x >= 0.

    Power series with extended precision for large arguments; absolute error
    below 1e-10 over the validated range x <= 200.
    """
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    if not math.isfinite(x) or x < 0:
        raise RangeError("struve_h requires finite x >= 0")
    if x > _MAX_ARG:
        raise RangeError(f"struve_h validated only for x <= {_MAX_ARG}, got {x}")
    if x == 0.0:
        return 0.0
    if x <= _SERIES_CUTOFF:
        return _struve_series_float(n, x)
    return _struve_series_decimal(n, x)


def _struve_series_float(n: int, x: float) -> float:
    # H0(x) = (2/pi) sum (-1)^k x^(2k+1) / ((2k+1)!!)^2
    # H1(x) = (2/pi) sum (-1)^k x^(2k+2) / ((2k+1)!! (2k+3)!!)
    x2 = x * x
    if n == 0:
        term = x
    else:
        term = x2 / 3.0
    total = term
    comp = 0.0
    for k in range(1, 400):
        if n == 0:
            term *= -x2 / ((2 * k + 1) * (2 * k + 1))
        else:
            term *= -x2 / ((2 * k + 1) * (2 * k + 3))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) <= 1e-17 * (abs(total) + 1e-300):
            return (2.0 / math.pi) * total
    raise ConvergenceError("struve series did not terminate")


def _struve_series_decimal(n: int, x: float) -> float:
    with localcontext() as ctx:
        ctx.prec = _decimal_digits(x)
        xd = Decimal(x)
        x2 = xd * xd
        term = xd if n == 0 else x2 / 3
        total = term
        for k in range(1, 3000):
            if n == 0:
                term = -term * x2 / ((2 * k + 1) * (2 * k + 1))
            else:
                term = -term * x2 / ((2 * k + 1) * (2 * k + 3))
            total += term
            if abs(term) < Decimal(10) ** (-(ctx.prec - 5)) * (abs(total) + 1):
                return float(Decimal(2) / _decimal_pi(ctx.prec) * total)
    raise ConvergenceError("struve decimal series did not terminate")


def _decimal_pi(prec: int) -> Decimal:
    """pi via the Machin formula 16*acot(5) - 4*acot(239)."""
    with localcontext() as ctx:
        ctx.prec = prec + 10

        def acot_series(u: int) -> Decimal:
            power = Decimal(1) / u
            total = power
            u2 = u * u
            k = 1
            while True:
                power /= u2
                term = power / (2 * k + 1)
                if term == 0:
                    break
                total += -term if k % 2 else term
                k += 1
            return total

        pi = 16 * acot_series(5) - 4 * acot_series(239)
    return +pi


def hyp_2f3(
    a1: float,
    a2: float,
    b1: float,
    b2: float,
    b3: float,
    z: float,
    control: SeriesControl = _DEFAULT_CONTROL,
) -> float:
    """Generalised hypergeometric 2F3 by direct series with term recursion.

    Entire in z; for large negative z the alternating sum is evaluated in
    extended precision.  None of b1, b2, b3 may be a nonpositive integer.
    """
    for b in (b1, b2, b3):
        if b <= 0 and float(b).is_integer():
            raise ValueError("b parameters must not be nonpositive integers")
    if z == 0.0:
        return 1.0
    if abs(z) <= 30.0:
        return _hyp_2f3_float(a1, a2, b1, b2, b3, z, control)
    return _hyp_2f3_decimal(a1, a2, b1, b2, b3, z, control)


def _hyp_2f3_float(a1, a2, b1, b2, b3, z, control) -> float:
    term = 1.0
    total = 1.0
    comp = 0.0
    small = 0
    for k in range(control.max_terms):
        term *= (a1 + k) * (a2 + k) * z / ((b1 + k) * (b2 + k) * (b3 + k) * (k + 1))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        small = small + 1 if abs(term) <= control.rel_tol * abs(total) else 0
        if small >= 2:
            return total
    raise ConvergenceError(
        f"2F3 series did not converge within {control.max_terms} terms",
        best=total,
        err_estimate=abs(term),
    )


def _hyp_2f3_decimal(a1, a2, b1, b2, b3, z, control) -> float:
    digits = 30 + int(1.6 * abs(z) ** (1.0 / 3.0) * 3)
    with localcontext() as ctx:
        ctx.prec = digits
        term = Decimal(1)
        total = Decimal(1)
        zd = Decimal(z)
        small = 0
        for k in range(max(control.max_terms, 4000)):
            num = Decimal((a1 + k) * (a2 + k)) * zd
            den = Decimal((b1 + k) * (b2 + k) * (b3 + k) * (k + 1))
            term = term * num / den
            total += term
            small = small + 1 if abs(term) <= Decimal(1e-30) * abs(total) else 0
            if small >= 2:
                return float(total)
    raise ConvergenceError("2F3 decimal series did not converge")


def coth_half(x: float) -> float:
    """coth(x/2), with the Laurent series 2/x + x/6 - x^3/360 near zero."""
    if x == 0.0:
        raise ValueError("coth_half diverges at x = 0")
    ax = abs(x)
    if ax < 1e-4:
        return 2.0 / x + x / 6.0 - x**3 / 360.0
    e = math.expm1(-ax)  # (1 + e^-x)/(1 - e^-x) without the 1 - e^-x cancellation
    value = (2.0 + e) / (-e)
    return value if x > 0 else -value


def x_coth_half(x: float) -> float:
    """x * coth(x/2): the finite, even product entering even-order cumulants.

    Continuous at x = 0 with value 2; saturates to |x| for large |x|.
    """
    ax = abs(x)
    if ax < 1e-4:
        return 2.0 + x * x / 6.0 - x**4 / 360.0
    e = math.expm1(-ax)
    return ax * (2.0 + e) / (-e)
