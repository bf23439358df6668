"""Action of q-boson and SU_q(1,1) operators on the column of unnormalized components.

Each unnormalized component ``||qbar>_j`` is a polynomial in ``xi`` with
vector coefficients once the Fock space is truncated.  The right-hand sides
of the action table are differential operators in ``xi`` combined with the
cyclic mixing matrices, so they are evaluated two ways:

* exactly, term by term, with the monomial rules
  ``d/d_q xi: xi**l -> [l] xi**(l-1)`` and ``xi d/dxi: xi**l -> l xi**l``;
* numerically, through :func:`qkccs.qcalculus.q_derivative` on the
  evaluated polynomial (a cross-check of the monomial rule).

Operator strings are applied right to left, as written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, InsufficientTruncationError
from .fockspace import OperatorSet, Truncation, build_operators
from .qcalculus import q_derivative
from .qmath import ParamsLike, QParams, as_params, log_q_factorials, q_number
from .states import basis_pair, choose_truncation

Term = Tuple[int, Tuple[int, int], complex]  # (power of xi, Fock pair, coefficient)
Component = List[Term]
Column = List[Component]


@dataclass(frozen=True)
class CyclicPair:
    m_matrix: np.ndarray
    n_matrix: np.ndarray


def cyclic_matrices(k: int) -> CyclicPair:
    """``M`` shifts component ``j-1`` into slot ``j``; ``N = M.T`` undoes it."""
    if int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    m = np.zeros((k, k), dtype=int)
    for i in range(k):
        m[i, (i - 1) % k] = 1
    return CyclicPair(m, m.T.copy())


def rotation_orbit(k: int) -> List[int]:
    """Component indices visited by repeated application of ``a1 a2``, starting at 0."""
    if int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    orbit = [0]
    j = (0 - 1) % k
    while j != 0:
        orbit.append(j)
        j = (j - 1) % k
    orbit.append(0)
    return orbit


# --------------------------------------------------------------------------
# monomial columns


def unnormalized_column(qbar: int, k: int, top_level: int, p: QParams) -> Column:
    """Monomial form of ``||qbar>_j`` for ``j = 0..k-1`` up to series level ``top_level``."""
    lf = log_q_factorials(top_level + abs(qbar), p)
    column = []
    for j in range(k):
        terms = []
        for level in range(j, top_level + 1, k):
            coeff = math.exp(-0.5 * (lf[level] + lf[level + abs(qbar)]))
            terms.append((level, basis_pair(level, qbar), complex(coeff)))
        column.append(terms)
    return column


def _mix(column: Column, which: str) -> Column:
    k = len(column)
    step = -1 if which == "M" else 1
    return [list(column[(j + step) % k]) for j in range(k)]


def _apply_monomial(column: Column, op: Tuple, p: QParams) -> Column:
    kind = op[0]
    if kind == "mix":
        return _mix(column, op[1])
    out = []
    for comp in column:
        new = []
        for power, pair, c in comp:
            if kind == "power":
                new.append((power + op[1], pair, c))
            elif kind == "dq":
                if power != 0:
                    new.append((power - 1, pair, c * _signed_q_number(power, p)))
            elif kind == "euler":
                # a * xi d/dxi + b
                factor = op[1] * power + op[2]
                if factor != 0:
                    new.append((power, pair, c * factor))
            else:
                raise ValueError(f"unknown operation {kind!r}")
        out.append(new)
    return out


def _signed_q_number(n: int, p: QParams) -> float:
    return q_number(n, p) if n >= 0 else -q_number(-n, p)


def evaluate_component(comp: Component, xi: complex, trunc: Truncation) -> np.ndarray:
    vec = np.zeros(trunc.dim, dtype=complex)
    for power, (m, n), c in comp:
        if m <= trunc.n_max and n <= trunc.n_max:
            vec[m * trunc.size + n] += c * xi**power
    return vec


def _functional(column: Column, trunc: Truncation) -> List[Callable]:
    return [lambda z, comp=comp: evaluate_component(comp, z, trunc) for comp in column]


def _apply_functional(funcs: List[Callable], op: Tuple, p: QParams) -> List[Callable]:
    kind = op[0]
    k = len(funcs)
    if kind == "mix":
        step = -1 if op[1] == "M" else 1
        return [funcs[(j + step) % k] for j in range(k)]
    if kind == "power":
        s = op[1]
        return [lambda z, f=f: z**s * f(z) for f in funcs]
    if kind == "dq":
        return [lambda z, f=f: q_derivative(f, z, p) for f in funcs]
    return None  # no independent route for the ordinary derivative


def _pipeline(column: Column, ops: Sequence[Tuple], p: QParams, trunc: Truncation, xi: complex):
    """Apply ``ops`` in list order.

    Returns the exact monomial evaluation and, when every step has a
    numerical counterpart, the q-difference evaluation.
    """
    mono = column
    funcs = _functional(column, trunc)
    for op in ops:
        mono = _apply_monomial(mono, op, p)
        if funcs is not None:
            funcs = _apply_functional(funcs, op, p)
    exact = [evaluate_component(comp, xi, trunc) for comp in mono]
    numeric = [f(xi) for f in funcs] if funcs is not None else None
    return exact, numeric


# --------------------------------------------------------------------------
# action table

# Each row maps to (target sector shift, right-hand pipeline); pipelines list
# steps in application order, so the rightmost printed factor comes first.
_ROWS = ("a1", "a2", "a1_dag", "a2_dag", "n1", "n2")


def _row_rule(row: str, column: str, qbar: int):
    if column == "positive":
        table = {
            "a1": (-1, []),
            "a2": (+1, [("mix", "M"), ("power", 1)]),
            "a1_dag": (+1, [("power", qbar + 1), ("dq",), ("power", -qbar)]),
            "a2_dag": (-1, [("mix", "N"), ("dq",)]),
            "n1": (0, [("euler", 1, qbar)]),
            "n2": (0, [("euler", 1, 0)]),
        }
    else:
        table = {
            "a1": (-1, [("mix", "M"), ("power", 1)]),
            "a2": (+1, []),
            "a1_dag": (+1, [("mix", "N"), ("dq",)]),
            "a2_dag": (-1, [("power", -qbar + 1), ("dq",), ("power", qbar)]),
            "n1": (0, [("euler", 1, 0)]),
            "n2": (0, [("euler", 1, -qbar)]),
        }
    return table[row]


def _applicable_column(row: str, qbar: int) -> str:
    if qbar > 0:
        return "positive"
    if qbar < 0:
        return "negative"
    # At qbar = 0 a ladder row lands in sector +-1 and only the column of
    # that sign describes it; number rows agree in both columns.
    shift = {"a1": -1, "a2": +1, "a1_dag": +1, "a2_dag": -1, "n1": 0, "n2": 0}[row]
    return "negative" if shift < 0 else "positive"


@dataclass(frozen=True)
class RowResult:
    row: str
    column: str
    residual: float
    q_difference_residual: Optional[float]
    other_column_residual: Optional[float] = None


@dataclass
class _Workspace:
    xi: complex
    qbar: int
    k: int
    p: QParams
    trunc: Truncation
    ops: OperatorSet
    top_level: int
    mask: np.ndarray
    columns: Dict[int, Column]

    def column(self, sector: int) -> Column:
        if sector not in self.columns:
            self.columns[sector] = unnormalized_column(sector, self.k, self.top_level + 2, self.p)
        return self.columns[sector]

    def source(self) -> List[np.ndarray]:
        comps = unnormalized_column(self.qbar, self.k, self.top_level, self.p)
        return [evaluate_component(c, self.xi, self.trunc) for c in comps]


def _workspace(xi, qbar, k, trunc, p) -> _Workspace:
    p = as_params(p)
    if xi == 0:
        raise DomainError("the action table needs xi != 0")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    if trunc is None:
        trunc = Truncation(choose_truncation(xi, qbar, k, p) + 4)
    top = trunc.n_max - abs(qbar) - 4
    if top < 2 * k + 2:
        need = 2 * k + 6 + abs(qbar)
        raise InsufficientTruncationError(f"n_max={trunc.n_max} is too small; need at least {need}", need)
    m_occ, n_occ = trunc.occupations()
    # compare only where no term was lost to the series cap
    mask = np.minimum(m_occ, n_occ) <= top - 2
    return _Workspace(complex(xi), qbar, k, p, trunc, build_operators(trunc, p), top, mask, {})


def _scaled(diff: np.ndarray, ref: np.ndarray, mask: np.ndarray) -> float:
    num = float(np.max(np.abs(diff[mask]))) if mask.any() else 0.0
    return num / max(1.0, float(np.max(np.abs(ref[mask]))) if mask.any() else 1.0)


def _row_residual(ws: _Workspace, row: str, column: str, lhs: List[np.ndarray]):
    shift, pipeline = _row_rule(row, column, ws.qbar)
    exact, numeric = _pipeline(ws.column(ws.qbar + shift), pipeline, ws.p, ws.trunc, ws.xi)
    res = max(_scaled(lhs[j] - exact[j], lhs[j], ws.mask) for j in range(ws.k))
    qres = None
    if numeric is not None and any(op[0] == "dq" for op in pipeline):
        qres = max(_scaled(numeric[j] - exact[j], exact[j], ws.mask) for j in range(ws.k))
    return res, qres


def verify_action_table(
    xi: complex, qbar: int, k: int, trunc: Optional[Truncation] = None, p: ParamsLike = 0.9
) -> Dict[str, RowResult]:
    """Residual of each row of the ladder/number action table on the column ``||qbar>``.

    Residuals are max-norm differences divided by ``max(1, max |lhs|)``.
    """
    ws = _workspace(xi, qbar, k, trunc, p)
    source = ws.source()
    out = {}
    for row in _ROWS:
        op = getattr(ws.ops, row)
        lhs = [op @ v for v in source]
        column = _applicable_column(row, qbar)
        res, qres = _row_residual(ws, row, column, lhs)
        other = None
        if qbar == 0:
            other_col = "negative" if column == "positive" else "positive"
            other, _ = _row_residual(ws, row, other_col, lhs)
        out[row] = RowResult(row, column, res, qres, other)
    return out


def verify_su11_dalgebra(
    xi: complex, qbar: int, k: int, trunc: Optional[Truncation] = None, p: ParamsLike = 0.9
) -> Dict[str, float]:
    """Residuals of the differential realization of ``K_-``, ``K_+``, ``K_0`` on ``||qbar>``.

    Also reports the ``K_-**k`` cycle, the support shift under ``K_-``, the
    bra-side action ``<u_i|K_+|u_j> = conj(xi) <u_{i-1}|u_j>`` and the
    q-difference cross-check of the ``K_+`` pipeline.
    """
    ws = _workspace(xi, qbar, k, trunc, p)
    nu = abs(qbar)
    source = ws.source()
    col = ws.column(qbar)
    out: Dict[str, float] = {}
    generators = {
        "k_minus": (ws.ops.k_minus, [("mix", "M"), ("power", 1)]),
        "k_plus": (ws.ops.k_plus, [("mix", "N"), ("dq",), ("power", nu + 1), ("dq",), ("power", -nu)]),
        "k0": (ws.ops.k0, [("euler", 1, 0.5 * (nu + 1))]),
    }
    for name, (op, pipeline) in generators.items():
        exact, numeric = _pipeline(col, pipeline, ws.p, ws.trunc, ws.xi)
        lhs = [op @ v for v in source]
        out[name] = max(_scaled(lhs[j] - exact[j], lhs[j], ws.mask) for j in range(k))
        if numeric is not None and any(o[0] == "dq" for o in pipeline):
            out[f"{name}_q_difference"] = max(_scaled(numeric[j] - exact[j], exact[j], ws.mask) for j in range(k))

    cycle = 0.0
    for j, v in enumerate(source):
        w = v
        for _ in range(k):
            w = ws.ops.k_minus @ w
        cycle = max(cycle, _scaled(w - ws.xi**k * v, w, np.minimum(*ws.trunc.occupations()) <= ws.top_level - k - 2))
    out["k_minus_cycle"] = cycle

    # support of K_- u_j sits on levels j-1 (mod k)
    m_occ, n_occ = ws.trunc.occupations()
    levels = np.minimum(m_occ, n_occ)
    shift_ok = True
    for j, v in enumerate(source):
        w = ws.ops.k_minus @ v
        support = levels[np.abs(w) > 0]
        if support.size and np.any((support - (j - 1)) % k != 0):
            shift_ok = False
    out["support_shift"] = 0.0 if shift_ok else 1.0

    # K_- u_i equals xi u_{i-1} on every level below the series cap, so the
    # bra-side identity is exact with the Gram matrix cut at that level.
    below_cap = levels <= ws.top_level - 1
    gram = np.array([[np.vdot(np.where(below_cap, a, 0), b) for b in source] for a in source])
    kp_elems = np.array([[np.vdot(a, ws.ops.k_plus @ b) for b in source] for a in source])
    km_elems = np.array([[np.vdot(a, ws.ops.k_minus @ b) for b in source] for a in source])
    cyc = cyclic_matrices(k)
    bra_plus = np.conj(ws.xi) * (cyc.m_matrix @ gram)
    scale = max(1.0, float(np.max(np.abs(gram))))
    out["adjoint_k_plus"] = float(np.max(np.abs(kp_elems - bra_plus))) / scale
    out["adjoint_pair"] = float(np.max(np.abs(kp_elems - km_elems.conj().T))) / scale
    return out
