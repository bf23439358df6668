"""q-deformed arithmetic and special functions.

q-numbers follow the symmetric convention ``[n] = (q**n - q**-n) / (q - 1/q)``.
They are evaluated as ``sinh(n*h) / sinh(h)`` with ``h = |log q|``, which is
exact at ``q = 1``, well conditioned near it, and manifestly invariant under
``q -> 1/q``.

Series are summed in double precision and re-summed in extended precision
(mpmath) whenever the rounding estimate of the double-precision pass breaks
the tolerance contract, which is routine for ``e_q(x)`` at large negative
``x`` where the terms cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import mpmath
import numpy as np

from .errors import ConvergenceError, DomainError, NoRealZeroError, ZeroSearchError

_EPS = float(np.finfo(float).eps)
_FACTORIAL_PRODUCT_LIMIT = 250
_ZETA_GRID_RATIO = 1.1
_ZETA_GRID_STEPS = 200
_ZETA_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class QParams:
    """Deformation parameter with the numerical settings used by series.

    ``sqrt_q`` is derived; it is the base of the ``[n]_{sqrt q}`` numbers that
    appear in the q-Bessel functions and the radial q-integrals.
    """

    q: float
    tol: float = 1e-14
    max_terms: int = 10_000
    sqrt_q: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = float(self.q)
        if not math.isfinite(q) or q <= 0.0:
            raise DomainError(f"q must be a positive finite number, got {self.q!r}")
        if not self.tol > 0.0:
            raise DomainError(f"tol must be positive, got {self.tol!r}")
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "sqrt_q", math.sqrt(q))

    @property
    def undeformed(self) -> bool:
        return self.q == 1.0

    @property
    def h(self) -> float:
        """|log q|; zero in the undeformed case."""
        return abs(math.log(self.q))

    @property
    def canonical_q(self) -> float:
        """The representative of {q, 1/q} inside (0, 1]."""
        return self.q if self.q <= 1.0 else 1.0 / self.q

    def canonical(self) -> "QParams":
        if self.q <= 1.0:
            return self
        return QParams(1.0 / self.q, self.tol, self.max_terms)

    def sqrt_base(self) -> "QParams":
        return QParams(self.sqrt_q, self.tol, self.max_terms)


ParamsLike = Union[QParams, float, int]


def as_params(p: ParamsLike) -> QParams:
    if isinstance(p, QParams):
        return p
    return QParams(float(p))


@dataclass(frozen=True)
class SeriesValue:
    value: Union[float, complex]
    abs_err_estimate: float
    terms_used: int
    converged: bool

    def __float__(self):
        return float(self.value)

    def require(self, what: str = "series") -> "SeriesValue":
        if not self.converged:
            raise ConvergenceError(
                f"{what} did not converge (terms={self.terms_used}, "
                f"err~{self.abs_err_estimate:.3g})"
            )
        return self


# --------------------------------------------------------------------------
# q-numbers and q-factorials


def _log_sinh(z: float) -> float:
    if z > 20.0:
        return z - math.log(2.0) + math.log1p(-math.exp(-2.0 * z))
    return math.log(math.sinh(z))


def q_number(n: int, p: ParamsLike) -> float:
    """Symmetric q-number ``[n]``."""
    p = as_params(p)
    if n < 0:
        raise DomainError(f"q_number needs n >= 0, got {n}")
    if p.undeformed or n == 0:
        return float(n)
    h = p.h
    if n * h > 700.0:
        return math.exp(log_q_number(n, p))
    return math.sinh(n * h) / math.sinh(h)


def log_q_number(n: int, p: ParamsLike) -> float:
    p = as_params(p)
    if n < 0:
        raise DomainError(f"log_q_number needs n >= 0, got {n}")
    if n == 0:
        return -math.inf
    if p.undeformed:
        return math.log(n)
    h = p.h
    return _log_sinh(n * h) - _log_sinh(h)


@lru_cache(maxsize=128)
def _log_factorial_table(q: float, size: int) -> np.ndarray:
    p = QParams(q)
    logs = np.zeros(size)
    for i in range(1, size):
        logs[i] = log_q_number(i, p)
    return np.cumsum(logs)


def log_q_factorials(n_max: int, p: ParamsLike) -> np.ndarray:
    """Array of ``log [n]!`` for ``n = 0..n_max``."""
    p = as_params(p)
    size = 256
    while size <= n_max:
        size *= 2
    table = _log_factorial_table(p.canonical_q, size)
    return table[: n_max + 1]


def log_q_factorial(n: int, p: ParamsLike) -> float:
    if n < 0:
        raise DomainError(f"q_factorial needs n >= 0, got {n}")
    return float(log_q_factorials(n, p)[n])


def q_factorial(n: int, p: ParamsLike) -> float:
    """``[n]! = [n][n-1]...[1]`` with ``[0]! = 1``.

    Raises OverflowError when the result is not representable; use
    :func:`log_q_factorial` in that regime.
    """
    p = as_params(p)
    if n < 0:
        raise DomainError(f"q_factorial needs n >= 0, got {n}")
    if n <= _FACTORIAL_PRODUCT_LIMIT:
        out = 1.0
        for i in range(1, n + 1):
            out *= q_number(i, p)
        if math.isinf(out):
            raise OverflowError(f"[{n}]! overflows double precision; use log_q_factorial")
        return out
    log_value = log_q_factorial(n, p)
    if log_value > 709.0:
        raise OverflowError(f"[{n}]! overflows double precision; use log_q_factorial")
    return math.exp(log_value)


# --------------------------------------------------------------------------
# series machinery


class _MpQNumbers:
    """q-numbers evaluated at the current mpmath working precision."""

    def __init__(self, p: QParams):
        self.undeformed = p.undeformed
        if not self.undeformed:
            self.h = mpmath.log(mpmath.mpf(p.canonical_q))
            self.den = mpmath.sinh(self.h)

    def __call__(self, n: int):
        if self.undeformed:
            return mpmath.mpf(n)
        return mpmath.sinh(n * self.h) / self.den


def _run_series(first, ratio: Callable, tol: float, max_terms: int):
    """Sum ``first * prod ratio(i)`` with the three-small-terms stopping rule."""
    total = first
    term = first
    peak = abs(first)
    small = 0
    n = 1
    while n < max_terms:
        term = term * ratio(n - 1)
        total += term
        n += 1
        mag = abs(term)
        if mag > peak:
            peak = mag
        if mag <= tol * abs(total):
            small += 1
            if small == 3:
                return total, n, peak, mag, True
        else:
            small = 0
    return total, n, peak, abs(term), False


def _sum_series(p: QParams, first, ratio, mp_first, mp_ratio_factory, force_mp=False) -> SeriesValue:
    tol = p.tol
    if not force_mp:
        total, n, peak, last, stopped = _run_series(first, ratio, tol, p.max_terms)
        err = last + 4.0 * _EPS * peak * n
        if math.isfinite(abs(total)) and err <= tol * max(1.0, abs(total)):
            return SeriesValue(total, err, n, stopped)
        if not stopped and math.isfinite(peak) and 4.0 * _EPS * peak * n <= tol * max(1.0, abs(total)):
            # rounding is fine; the series itself ran out of terms
            return SeriesValue(total, err, n, False)
        peak_hint = peak if math.isfinite(peak) else 1e300
    else:
        peak_hint = 1.0
    dps = 25 + max(0, int(math.log10(max(peak_hint, 1.0)))) + max(0, int(-math.log10(tol)))
    with mpmath.workdps(dps):
        total, n, peak, last, stopped = _run_series(mp_first(), mp_ratio_factory(), tol, p.max_terms)
        err = float(last + peak * mpmath.mpf(10) ** (-dps + 5) * n)
        value = complex(total) if isinstance(total, mpmath.mpc) else float(total)
    converged = stopped and err <= tol * max(1.0, abs(value))
    return SeriesValue(value, err, n, converged)


# --------------------------------------------------------------------------
# q-exponential and its largest zero


def _q_exp_series(x: float, p: QParams) -> SeriesValue:
    def ratio(n):
        return x / q_number(n + 1, p)

    def mp_ratio_factory():
        qn = _MpQNumbers(p)
        xm = mpmath.mpf(x)
        return lambda n: xm / qn(n + 1)

    return _sum_series(p, 1.0, ratio, lambda: mpmath.mpf(1), mp_ratio_factory, force_mp=x < -1.0)


@lru_cache(maxsize=1 << 17)
def _q_exponential_cached(x: float, p: QParams) -> SeriesValue:
    if x == 0.0:
        return SeriesValue(1.0, 0.0, 1, True)
    if x < -1.0 and not p.undeformed and x <= -largest_zero(p):
        return SeriesValue(0.0, 0.0, 0, True)
    return _q_exp_series(x, p)


def q_exponential(x: float, p: ParamsLike) -> SeriesValue:
    """``e_q(x) = sum x**n / [n]!`` above its largest zero ``-zeta``, else 0."""
    return _q_exponential_cached(float(x), as_params(p))


@lru_cache(maxsize=64)
def _largest_zero(q: float, tol: float, max_terms: int) -> float:
    p = QParams(q, tol, max_terms)
    prev = -1.0
    for m in range(_ZETA_GRID_STEPS + 1):
        x = -(_ZETA_GRID_RATIO**m)
        v = _q_exp_series(x, p).value
        if v == 0.0:
            return -x
        if v < 0.0:
            lo, hi = x, prev
            while hi - lo > _ZETA_BISECT_TOL * max(1.0, abs(lo)):
                mid = 0.5 * (lo + hi)
                if _q_exp_series(mid, p).value > 0.0:
                    hi = mid
                else:
                    lo = mid
            return -0.5 * (lo + hi)
        prev = x
    raise ZeroSearchError(
        f"no sign change of e_q on [-{_ZETA_GRID_RATIO}**{_ZETA_GRID_STEPS}, 0] for q={q}"
    )


def largest_zero(p: ParamsLike) -> float:
    """Return zeta > 0 where ``-zeta`` is the zero of ``e_q`` closest to the origin."""
    p = as_params(p)
    if p.undeformed:
        raise NoRealZeroError("the undeformed exponential has no real zero")
    return _largest_zero(p.canonical_q, p.tol, p.max_terms)


# --------------------------------------------------------------------------
# q-Bessel functions


def _check_order(nu: int):
    if int(nu) != nu or nu < 0:
        raise DomainError(f"Bessel order must be a nonnegative integer, got {nu!r}")


def _bessel_series(nu: int, z, sign: int, p: QParams) -> SeriesValue:
    """sum_k sign**k / ([k]! [nu+k]!) * z**(nu + 2k)."""
    first = z**nu / q_factorial(nu, p)
    z2 = sign * z * z

    def ratio(k):
        return z2 / (q_number(k + 1, p) * q_number(nu + k + 1, p))

    def mp_first():
        zm = mpmath.mpmathify(z)
        out = zm**nu
        qn = _MpQNumbers(p)
        for i in range(1, nu + 1):
            out /= qn(i)
        return out

    def mp_ratio_factory():
        qn = _MpQNumbers(p)
        zm2 = sign * mpmath.mpmathify(z) ** 2
        return lambda k: zm2 / (qn(k + 1) * qn(nu + k + 1))

    return _sum_series(p, first, ratio, mp_first, mp_ratio_factory)


def _bessel_scale(p: QParams) -> float:
    return p.sqrt_q * q_number(2, p.sqrt_base())


def q_bessel_j(nu: int, x, p: ParamsLike) -> SeriesValue:
    """q-Bessel function of the first kind, integer order, complex argument."""
    p = as_params(p)
    _check_order(nu)
    is_complex = isinstance(x, complex)
    if x == 0:
        v = 1.0 if nu == 0 else 0.0
        return SeriesValue(complex(v) if is_complex else v, 0.0, 1, True)
    z = x / _bessel_scale(p)
    return _bessel_series(int(nu), z, -1, p)


def q_bessel_i_like(nu: int, y: float, p: ParamsLike) -> SeriesValue:
    """``(-i)**nu J_nu(q, i*y)``: the all-positive modified series, real for y >= 0."""
    p = as_params(p)
    _check_order(nu)
    if y < 0:
        raise DomainError(f"q_bessel_i_like needs y >= 0, got {y}")
    if y == 0:
        return SeriesValue(1.0 if nu == 0 else 0.0, 0.0, 1, True)
    w = float(y) / _bessel_scale(p)
    return _bessel_series(int(nu), w, 1, p)


def _snap(x: float) -> float:
    # Nested Jackson nodes reach the same e_q argument through different
    # float paths; rounding to 13 digits lets the cache see them as one.
    return float("%.13g" % x)


def q_bessel_k(nu: int, x: float, p: ParamsLike) -> SeriesValue:
    """q-deformed modified Bessel function from its q-integral representation.

    The integrand ``t**(-nu-1) e_q(-t) e_q(-x**2/([2]**2 t))`` is supported on
    ``x**2/([2]**2 zeta) < t < zeta`` because of the cut in ``e_q``, so the
    Jackson sum is finite.
    """
    p = as_params(p)
    _check_order(nu)
    if not x > 0:
        raise DomainError(f"q_bessel_k needs x > 0, got {x}")
    if p.undeformed:
        raise DomainError("q_bessel_k is defined through a q-integral and needs q != 1")
    return _q_bessel_k(int(nu), float(x), p.canonical())


@lru_cache(maxsize=1 << 16)
def _q_bessel_k(nu: int, x: float, p: QParams) -> SeriesValue:
    from .qcalculus import jackson_integral_halfline

    two = q_number(2, p.sqrt_base())
    root_y = x / two
    y = root_y * root_y
    zeta = largest_zero(p)
    if y >= zeta * zeta:
        return SeriesValue(0.0, 0.0, 0, True)

    def integrand(t):
        if t >= zeta or y >= zeta * t:
            return 0.0
        a = q_exponential(-_snap(t), p).value
        if a == 0.0:
            return 0.0
        b = q_exponential(-_snap(y / t), p).value
        return (root_y / t) ** nu * a * b / t

    integral = jackson_integral_halfline(integrand, p, support=(y / zeta, zeta))
    return SeriesValue(
        integral.value / two,
        integral.abs_err_estimate / two,
        integral.terms_used,
        integral.converged,
    )
