"""Symmetric q-derivative and the bilateral Jackson rule on the half-line."""

from __future__ import annotations

import math
from typing import Callable, Optional, Tuple

from .errors import ConvergenceError, DomainError
from .qmath import (
    ParamsLike,
    SeriesValue,
    as_params,
    largest_zero,
    q_bessel_k,
    q_factorial,
    q_number,
)

_START_M = 40
_MAX_NODES = 2**14


def q_derivative(f: Callable, xi: complex, p: ParamsLike):
    """``(f(q xi) - f(xi / q)) / ((q - 1/q) xi)``.

    ``f`` may return scalars or numpy arrays; the difference quotient is
    applied elementwise.
    """
    p = as_params(p)
    if xi == 0:
        raise DomainError("the q-derivative divides by xi and is undefined at 0")
    q = p.q
    if q == 1.0:
        raise DomainError("the q-derivative needs q != 1")
    return (f(q * xi) - f(xi / q)) / ((q - 1.0 / q) * xi)


def jackson_integral_halfline(
    f: Callable[[float], float],
    p: ParamsLike,
    scale: float = 1.0,
    support: Optional[Tuple[float, float]] = None,
    start_m: int = _START_M,
    max_nodes: int = _MAX_NODES,
) -> SeriesValue:
    """Bilateral Jackson sum ``(1/q - q) * sum_m t_m f(t_m)`` with ``t_m = scale * q**(2m+1)``.

    The node range ``|m| <= M`` starts at ``start_m`` and doubles until the
    outer half of each side contributes less than ``tol * |sum|``.  Nodes
    outside ``support`` (an open interval where ``f`` may be nonzero) are
    skipped.  ``q`` and ``1/q`` give the same rule.
    """
    p = as_params(p)
    if p.undeformed:
        raise DomainError("Jackson integration needs q != 1")
    p = p.canonical()
    q = p.q
    log_q = math.log(q)
    log_scale = math.log(scale)
    lo, hi = support if support is not None else (0.0, math.inf)

    values: dict = {}

    def weighted(m: int) -> float:
        if m in values:
            return values[m]
        log_t = log_scale + (2 * m + 1) * log_q
        if log_t > 709.0 or log_t < -745.0:
            out = 0.0
        else:
            t = math.exp(log_t)
            if t <= lo or t >= hi:
                out = 0.0
            else:
                out = t * f(t)
        values[m] = out
        return out

    factor = 1.0 / q - q
    m_cap = (max_nodes - 1) // 2
    big_m = min(start_m, m_cap)
    while True:
        small_side = [weighted(m) for m in range(big_m // 2 + 1, big_m + 1)]
        large_side = [weighted(-m) for m in range(big_m // 2 + 1, big_m + 1)]
        core = [weighted(m) for m in range(-(big_m // 2), big_m // 2 + 1)]
        total = math.fsum(core + small_side + large_side)
        tail_small = abs(math.fsum(small_side))
        tail_large = abs(math.fsum(large_side))
        bound = p.tol * abs(total)
        done = tail_small <= bound and tail_large <= bound
        nodes = 2 * big_m + 1
        if done or big_m >= m_cap:
            peak = max(map(abs, values.values()), default=0.0)
            err = factor * (tail_small + tail_large + 4 * 2.2e-16 * nodes * peak)
            return SeriesValue(factor * total, err, nodes, done)
        big_m = min(2 * big_m, m_cap)


def moment_integral(p_idx: int, nu: int, p: ParamsLike) -> SeriesValue:
    """``int_0^inf d_{sqrt q}u  u**(2p+nu+1) K_nu(q, [2]_{sqrt q} u)``."""
    p = as_params(p)
    if p_idx < 0 or nu < 0:
        raise DomainError("moment indices must be nonnegative")
    if p.undeformed:
        raise DomainError("the moment integral needs q != 1")
    p = p.canonical()
    s = p.sqrt_base()
    two = q_number(2, s)
    power = 2 * p_idx + nu + 1
    zeta = largest_zero(p)
    failures = []

    def integrand(u):
        k = q_bessel_k(nu, two * u, p)
        if not k.converged:
            failures.append(u)
        return u**power * k.value

    # K_nu(q, [2] u) vanishes once u >= zeta because both exponentials are cut.
    result = jackson_integral_halfline(integrand, s, support=(0.0, zeta))
    if failures:
        return SeriesValue(result.value, result.abs_err_estimate, result.terms_used, False)
    return result


def moment_rhs(p_idx: int, nu: int, p: ParamsLike) -> float:
    p = as_params(p)
    two = q_number(2, p.sqrt_base())
    return q_factorial(nu + p_idx, p) * q_factorial(p_idx, p) / (two * two)


def verify_moment_identity(p_idx: int, nu: int, p: ParamsLike) -> float:
    """Relative error of the q-integral moment of ``K_nu`` against its closed form."""
    lhs = moment_integral(p_idx, nu, p)
    if not lhs.converged:
        raise ConvergenceError(f"moment integral (p={p_idx}, nu={nu}) did not converge")
    rhs = moment_rhs(p_idx, nu, p)
    return abs(lhs.value - rhs) / abs(rhs)
