"""Quadrature variances, squeezing predicates and two-mode q-correlation degrees.

Correlation degrees come from two independent routes: ratios of the
normalization series ``S_j(x)`` and matrix moments of ``K_-`` on a built
state.  With ``S_j`` the component series,

    <K+ K->_j = x S_{j-1} / S_j,     g_j = S_j S_{j-2} / S_{j-1}**2,

indices taken mod ``k``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO

import numpy as np

from .errors import ConvergenceError, DomainError
from .fockspace import OperatorSet, TwoModeState
from .qmath import ParamsLike, QParams, as_params, q_number
from .states import log_component_series, check_component_indices

SQUEEZE_ATOL = 1e-10


def default_grid() -> np.ndarray:
    """Geometric grid from 0.01 to 100 with 40 points per decade; contains x = 1 exactly."""
    return 10.0 ** (np.arange(-80, 81) / 40.0)


# --------------------------------------------------------------------------
# quadratures


@dataclass(frozen=True)
class QuadratureReport:
    var_x1: float
    var_x2: float
    bound_su11: float
    var_y1: float
    var_y2: float
    var_z1: float
    var_z2: float
    bound_mode1: float
    bound_mode2: float
    var_w1: float
    var_w2: float
    bound_two_mode: float
    mean_two_k0: float
    mean_k_minus: complex
    mean_k_minus_sq: complex
    single_mode_moments: Dict[str, complex]
    mean_n1_ladder: float
    mean_n2_ladder: float
    flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def su11_product_gap(self) -> float:
        """``var_x1 var_x2 - |<[2K0]>|**2 / 16`` (zero for minimum uncertainty)."""
        return self.var_x1 * self.var_x2 - self.bound_su11**2


def _variance(op, vec: np.ndarray) -> float:
    w = op @ vec
    mean = np.vdot(vec, w)
    return float(np.vdot(w, w).real - abs(mean) ** 2)


def quadrature_report(state: TwoModeState, ops: OperatorSet) -> QuadratureReport:
    """All quadrature variances and their squeezing bounds from operator moments.

    The truncation of ``ops`` should leave room above the state's support so
    that raising operators do not fall off the edge.
    """
    vec = state.to_vector()
    norm2 = float(np.vdot(vec, vec).real)
    vec = vec / math.sqrt(norm2)
    kp, km = ops.k_plus, ops.k_minus
    a1, a2, a1d, a2d = ops.a1, ops.a2, ops.a1_dag, ops.a2_dag
    x1 = 0.5 * (kp + km)
    x2 = 0.5j * (kp - km)
    y1, y2 = 0.5 * (a1d + a1), 0.5j * (a1d - a1)
    z1, z2 = 0.5 * (a2d + a2), 0.5j * (a2d - a2)
    w1 = (a1d + a2d + a1 + a2) / math.sqrt(8.0)
    w2 = 1j * (a1d + a2d - a1 - a2) / math.sqrt(8.0)

    def mean(op):
        return complex(np.vdot(vec, op @ vec))

    comm1 = mean(ops.comm1).real
    comm2 = mean(ops.comm2).real
    two_k0 = mean(ops.q_two_k0).real
    report = QuadratureReport(
        var_x1=_variance(x1, vec),
        var_x2=_variance(x2, vec),
        bound_su11=0.25 * abs(two_k0),
        var_y1=_variance(y1, vec),
        var_y2=_variance(y2, vec),
        var_z1=_variance(z1, vec),
        var_z2=_variance(z2, vec),
        bound_mode1=0.25 * abs(comm1),
        bound_mode2=0.25 * abs(comm2),
        var_w1=_variance(w1, vec),
        var_w2=_variance(w2, vec),
        bound_two_mode=0.125 * abs(comm1 + comm2),
        mean_two_k0=two_k0,
        mean_k_minus=mean(km),
        mean_k_minus_sq=mean(km @ km),
        single_mode_moments={
            "a1": mean(a1),
            "a2": mean(a2),
            "a1_sq": mean(a1 @ a1),
            "a2_sq": mean(a2 @ a2),
            "a1_dag_a2": mean(a1d @ a2),
        },
        mean_n1_ladder=mean(a1d @ a1).real,
        mean_n2_ladder=mean(a2d @ a2).real,
    )
    return QuadratureReport(**{**report.__dict__, "flags": squeezing_predicates(report)})


def squeezing_predicates(report: QuadratureReport, atol: float = SQUEEZE_ATOL) -> Dict[str, bool]:
    """Strict-inequality squeezing flags; a variance must undercut its bound by more than ``atol``."""

    def below(var, bound):
        return var < bound - atol

    return {
        "su11_squeezed": below(report.var_x1, report.bound_su11) or below(report.var_x2, report.bound_su11),
        "mode1_squeezed": below(report.var_y1, report.bound_mode1) or below(report.var_y2, report.bound_mode1),
        "mode2_squeezed": below(report.var_z1, report.bound_mode2) or below(report.var_z2, report.bound_mode2),
        "two_mode_squeezed": below(report.var_w1, report.bound_two_mode)
        or below(report.var_w2, report.bound_two_mode),
    }


# --------------------------------------------------------------------------
# correlation degrees


def _log_s(k: int, qbar: int, x: float, p: QParams) -> List[float]:
    out = []
    for j in range(k):
        value, _, ok = log_component_series(k, j, x, p, abs(qbar))
        if not ok:
            raise ConvergenceError(f"normalization series k={k} j={j} x={x} did not converge")
        out.append(value)
    return out


def moment_k_plus_k_minus(k: int, qbar: int, j: int, x: float, p: ParamsLike) -> float:
    """``<K+ K->`` in component ``j``: ``x (N^j / N^{j-1})**2``."""
    p = as_params(p)
    check_component_indices(k, j)
    if x <= 0:
        raise DomainError("the moment formula needs x > 0")
    logs = _log_s(k, qbar, float(x), p)
    return float(x * math.exp(logs[(j - 1) % k] - logs[j]))


@dataclass(frozen=True)
class G2Report:
    k: int
    qbar: int
    q: float
    x: float
    g_values: List[float]
    product: float
    antibunched_flags: List[bool]


def g2_degrees(k: int, qbar: int, x: float, p: ParamsLike) -> G2Report:
    p = as_params(p)
    if int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    if x <= 0:
        raise DomainError("correlation degrees need x > 0")
    if k == 1:
        g = [1.0]
        log_g = [0.0]
    else:
        logs = _log_s(k, qbar, float(x), p)
        log_g = [logs[j] + logs[(j - 2) % k] - 2.0 * logs[(j - 1) % k] for j in range(k)]
        g = [math.exp(v) for v in log_g]
    product = math.exp(math.fsum(log_g))
    return G2Report(k, qbar, p.q, float(x), g, product, [v < 1.0 for v in g])


def g2_from_state(state: TwoModeState, ops: OperatorSet) -> float:
    """``<K+^2 K-^2> / <K+ K->^2`` from matrix moments (only lowering is applied)."""
    vec = state.to_vector()
    norm2 = float(np.vdot(vec, vec).real)
    once = ops.k_minus @ vec
    twice = ops.k_minus @ once
    m1 = float(np.vdot(once, once).real) / norm2
    m2 = float(np.vdot(twice, twice).real) / norm2
    return m2 / (m1 * m1)


# --------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanRow:
    x: float
    g_values: List[float]
    antibunched: List[bool]
    converged: bool = True


@dataclass(frozen=True)
class BoundCheck:
    x: float
    l: int
    threshold: float
    g_value: float
    holds: bool


@dataclass
class ScanResult:
    k: int
    qbar: int
    q: float
    rows: List[ScanRow]
    crossing: Optional[float]
    bound_checks: List[BoundCheck]

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)


def small_x_threshold(k: int, qbar: int, l: int, p: ParamsLike) -> float:
    """Largest ``x`` with ``x**k <= 1 - sqrt([l-1][l-1+|qbar|] / ([l][l+|qbar|]))``."""
    p = as_params(p)
    a = abs(qbar)
    ratio = q_number(l - 1, p) * q_number(l - 1 + a, p) / (q_number(l, p) * q_number(l + a, p))
    return (1.0 - math.sqrt(ratio)) ** (1.0 / k)


def _g0_minus_one(k, qbar, x, p) -> float:
    return g2_degrees(k, qbar, x, p).g_values[0] - 1.0


def locate_crossing(k: int, qbar: int, lo: float, hi: float, p: ParamsLike, xtol: float = 1e-6) -> float:
    """Bisect ``g_0(x) = 1`` inside a bracket where ``g_0 - 1`` changes sign from + to -."""
    p = as_params(p)
    f_lo = _g0_minus_one(k, qbar, lo, p)
    if f_lo < 0 or _g0_minus_one(k, qbar, hi, p) >= 0:
        raise DomainError(f"[{lo}, {hi}] does not bracket a downward crossing of g_0 = 1")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if _g0_minus_one(k, qbar, mid, p) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def antibunching_scan(k: int, qbar: int, p: ParamsLike, x_grid: Optional[Sequence[float]] = None) -> ScanResult:
    p = as_params(p)
    xs = default_grid() if x_grid is None else np.asarray(list(x_grid), dtype=float)
    if xs.size == 0:
        raise DomainError("x grid is empty")
    if np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise DomainError("x grid must be positive and strictly increasing")
    rows: List[ScanRow] = []
    for x in xs:
        try:
            rep = g2_degrees(k, qbar, float(x), p)
            rows.append(ScanRow(float(x), rep.g_values, rep.antibunched_flags))
        except ConvergenceError:
            rows.append(ScanRow(float(x), [math.nan] * k, [False] * k, converged=False))
    crossing = None
    if k > 1:
        for prev, cur in zip(rows, rows[1:]):
            if prev.converged and cur.converged and prev.g_values[0] >= 1.0 > cur.g_values[0]:
                crossing = locate_crossing(k, qbar, prev.x, cur.x, p)
                break
    checks: List[BoundCheck] = []
    for l in range(2, k):
        threshold = small_x_threshold(k, qbar, l, p)
        for row in rows:
            if row.converged and row.x <= threshold:
                checks.append(BoundCheck(row.x, l, threshold, row.g_values[l], row.g_values[l] < 1.0))
    return ScanResult(k, qbar, p.q, rows, crossing, checks)


def write_scan_csv(fh: TextIO, result: ScanResult, tol: float) -> None:
    """CSV with a ``#`` parameter header; floats in round-trip precision, flags as 1/0."""
    k = result.k
    fh.write(f"# k={k} qbar={result.qbar} q={result.q!r} tol={tol!r}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["x"] + [f"g_{j}" for j in range(k)] + [f"antibunched_{j}" for j in range(k)])
    for row in result.rows:
        if not row.converged:
            fh.write(f"# convergence-failure x={row.x!r}\n")
            continue
        writer.writerow([repr(row.x)] + [repr(g) for g in row.g_values] + [int(b) for b in row.antibunched])


def scan_csv_text(result: ScanResult, tol: float) -> str:
    buf = io.StringIO()
    write_scan_csv(buf, result, tol)
    return buf.getvalue()
