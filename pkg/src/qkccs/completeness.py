"""Per-sector resolution of unity for the k-component states.

After the angular integral is done analytically, the diagonal coefficient of
``|n+qbar, n><n+qbar, n|`` in the sector projector is the radial q-integral

    w_n = [2]**2 / ([n]! [n+|qbar|]!) * int d_{sqrt q}u  u**(2n+|qbar|+1) K_|qbar|(q, [2] u),

with ``[2] = [2]_{sqrt q}``; a correct measure makes every ``w_n`` equal to 1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import DomainError
from .qcalculus import jackson_integral_halfline, moment_integral
from .qmath import ParamsLike, as_params, largest_zero, q_bessel_i_like, q_bessel_k, q_factorial, q_number


def measure_phi(qbar: int, x: float, p: ParamsLike) -> float:
    """Radial weight ``[2]**2/2 * I_|qbar|(sqrt(q) [2] x) * K_|qbar|([2] x)`` at ``x = |xi|``."""
    p = as_params(p)
    if not x > 0:
        raise DomainError(f"measure_phi needs x > 0, got {x}")
    nu = abs(qbar)
    two = q_number(2, p.sqrt_base())
    i_like = q_bessel_i_like(nu, p.sqrt_q * two * x, p).require("modified q-Bessel series")
    k_val = q_bessel_k(nu, two * x, p).require("q-Bessel K")
    return 0.5 * two * two * i_like.value * k_val.value


@dataclass(frozen=True)
class SectorWeights:
    qbar: int
    weights: List[float]
    max_n: int
    n_values: List[int] = field(default_factory=list)
    converged: List[bool] = field(default_factory=list)

    def max_deviation(self) -> float:
        return max((abs(w - 1.0) for w in self.weights), default=0.0)


def sector_resolution_weights(qbar: int, k: int, n_list: Sequence[int], p: ParamsLike) -> SectorWeights:
    """Weights ``w_n`` for the sector ``qbar``; they do not depend on ``k``."""
    p = as_params(p)
    if int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    nu = abs(qbar)
    two = q_number(2, p.sqrt_base())
    weights, flags = [], []
    for n in n_list:
        if n < 0:
            raise DomainError("sector levels must be >= 0")
        moment = moment_integral(n, nu, p)
        weights.append(two * two * moment.value / (q_factorial(n, p) * q_factorial(n + nu, p)))
        flags.append(moment.converged)
    return SectorWeights(qbar, weights, max(n_list, default=0), list(n_list), flags)


def sector_weights_k_route(qbar: int, k: int, n_list: Sequence[int], p: ParamsLike) -> SectorWeights:
    """Same weights assembled from the k-component projector term by term.

    Level ``n`` belongs to component ``j = n mod k`` with series index
    ``n // k``; the radial integrand is built from that term directly rather
    than from the moment routine.
    """
    p = as_params(p).canonical()
    if int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    nu = abs(qbar)
    s = p.sqrt_base()
    two = q_number(2, s)
    zeta = largest_zero(p)
    weights, flags = [], []
    for n in n_list:
        j, level_index = n % k, n // k
        level = k * level_index + j
        denom = q_factorial(level, p) * q_factorial(level + nu, p)

        def integrand(u, level=level, denom=denom):
            kv = q_bessel_k(nu, two * u, p)
            return two * two * u ** (nu + 1) * kv.value * (u * u) ** level / denom

        res = jackson_integral_halfline(integrand, s, support=(0.0, zeta))
        weights.append(res.value)
        flags.append(res.converged)
    return SectorWeights(qbar, weights, max(n_list, default=0), list(n_list), flags)


@dataclass(frozen=True)
class CoverageReport:
    counts: Dict[Tuple[int, int], int]
    exact: bool
    sectors: List[int]


def sector_support(qbar: int, n_max: int) -> List[Tuple[int, int]]:
    """Lattice points ``{|n+qbar, n>}`` (qbar >= 0) or ``{|n, n-qbar>}`` (qbar < 0) inside the cutoff."""
    if qbar >= 0:
        return [(n + qbar, n) for n in range(n_max + 1) if n + qbar <= n_max]
    return [(n, n - qbar) for n in range(n_max + 1) if n - qbar <= n_max]


def sector_union_check(qbar_values: Iterable[int], n_max: int) -> CoverageReport:
    """Check that the listed sectors tile their part of the truncated lattice exactly once.

    Repeated sector labels are merged, so overlapping input ranges do not
    double count a sector.
    """
    sectors = sorted(set(int(v) for v in qbar_values))
    counts: Counter = Counter()
    for qbar in sectors:
        counts.update(sector_support(qbar, n_max))
    wanted = {(m, n) for m in range(n_max + 1) for n in range(n_max + 1) if (m - n) in set(sectors)}
    exact = set(counts) == wanted and all(c == 1 for c in counts.values())
    return CoverageReport(dict(counts), exact, sectors)
