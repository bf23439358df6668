"""Truncated two-mode Fock space and sparse q-boson operators.

The basis ``|m, n>`` (mode 1 occupation ``m``, mode 2 occupation ``n``) is
stored at flat index ``m * (n_max + 1) + n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .qmath import ParamsLike, QParams, as_params, q_number


@dataclass(frozen=True)
class Truncation:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise DomainError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def size(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.size * self.size

    def index(self, m: int, n: int) -> int:
        if not (0 <= m <= self.n_max and 0 <= n <= self.n_max):
            raise DomainError(f"|{m},{n}> lies outside the truncation n_max={self.n_max}")
        return m * self.size + n

    def pair(self, idx: int) -> Tuple[int, int]:
        return divmod(idx, self.size)

    def occupations(self) -> Tuple[np.ndarray, np.ndarray]:
        """Arrays ``(m, n)`` of mode occupations for every flat index."""
        grid = np.arange(self.size)
        return np.repeat(grid, self.size), np.tile(grid, self.size)


def interior_mask(trunc: Truncation, margin: int) -> np.ndarray:
    """Flat indices with both occupations at most ``n_max - margin``."""
    m, n = trunc.occupations()
    limit = trunc.n_max - margin
    return (m <= limit) & (n <= limit)


@dataclass(frozen=True, eq=False)
class OperatorSet:
    a1: sp.csr_matrix
    a2: sp.csr_matrix
    a1_dag: sp.csr_matrix
    a2_dag: sp.csr_matrix
    n1: sp.csr_matrix
    n2: sp.csr_matrix
    charge: sp.csr_matrix
    k_minus: sp.csr_matrix
    k_plus: sp.csr_matrix
    k0: sp.csr_matrix
    params: QParams
    trunc: Truncation
    # diagonal helpers: [N_i], q**-N_i, the exact [a_i, a_i^dag] = [N_i + 1] - [N_i], [2 K0]
    qn1: sp.csr_matrix = field(repr=False)
    qn2: sp.csr_matrix = field(repr=False)
    q_pow_neg_n1: sp.csr_matrix = field(repr=False)
    q_pow_neg_n2: sp.csr_matrix = field(repr=False)
    comm1: sp.csr_matrix = field(repr=False)
    comm2: sp.csr_matrix = field(repr=False)
    q_two_k0: sp.csr_matrix = field(repr=False)

    @property
    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.trunc.dim, format="csr")


def _csr(mat) -> sp.csr_matrix:
    out = sp.csr_matrix(mat)
    out.eliminate_zeros()
    out.sort_indices()
    return out


def _diag(values) -> sp.csr_matrix:
    return _csr(sp.diags(np.asarray(values, dtype=float), 0))


def single_mode_lowering(n_max: int, p: ParamsLike) -> sp.csr_matrix:
    """``a|n> = sqrt([n]) |n-1>`` on ``{|0>, ..., |n_max>}``."""
    p = as_params(p)
    amps = np.sqrt([q_number(i, p) for i in range(1, n_max + 1)])
    return _csr(sp.diags(amps, 1, shape=(n_max + 1, n_max + 1)))


def build_operators(trunc: Truncation, p: ParamsLike) -> OperatorSet:
    p = as_params(p)
    size = trunc.size
    eye = sp.identity(size, format="csr")
    a = single_mode_lowering(trunc.n_max, p)
    a1 = _csr(sp.kron(a, eye))
    a2 = _csr(sp.kron(eye, a))
    a1_dag = _csr(a1.T)
    a2_dag = _csr(a2.T)
    m, n = trunc.occupations()
    qnum = np.array([q_number(i, p) for i in range(2 * size + 1)])
    return OperatorSet(
        a1=a1,
        a2=a2,
        a1_dag=a1_dag,
        a2_dag=a2_dag,
        n1=_diag(m),
        n2=_diag(n),
        charge=_diag(m - n),
        k_minus=_csr(a1 @ a2),
        k_plus=_csr(a1_dag @ a2_dag),
        k0=_diag(0.5 * (m + n + 1)),
        params=p,
        trunc=trunc,
        qn1=_diag(qnum[m]),
        qn2=_diag(qnum[n]),
        q_pow_neg_n1=_diag(p.q ** (-m.astype(float))),
        q_pow_neg_n2=_diag(p.q ** (-n.astype(float))),
        comm1=_diag(qnum[m + 1] - qnum[m]),
        comm2=_diag(qnum[n + 1] - qnum[n]),
        q_two_k0=_diag(qnum[m + n + 1]),
    )


def ladder_from_bosons(trunc: Truncation, p: ParamsLike) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """q-boson lowering operators built by dressing ordinary boson ones with sqrt([N+1]/(N+1))."""
    p = as_params(p)
    size = trunc.size
    b = _csr(sp.diags(np.sqrt(np.arange(1, size, dtype=float)), 1, shape=(size, size)))
    dressing = _diag([np.sqrt(q_number(i + 1, p) / (i + 1)) for i in range(size)])
    a = _csr(dressing @ b)
    eye = sp.identity(size, format="csr")
    return _csr(sp.kron(a, eye)), _csr(sp.kron(eye, a))


@dataclass(frozen=True)
class Residual:
    """Max-norm deviation of an operator identity on the interior block.

    ``scaled`` divides by ``max(1, largest operand entry)`` so that identities
    between operators with large matrix elements are judged at working
    precision.
    """

    absolute: float
    scaled: float


def _block_residual(diff, operands: Iterable, mask: np.ndarray) -> Residual:
    idx = np.flatnonzero(mask)
    block = sp.csr_matrix(diff)[idx][:, idx]
    absolute = float(abs(block).max()) if block.nnz else 0.0
    scale = 1.0
    for op in operands:
        sub = sp.csr_matrix(op)[idx][:, idx]
        if sub.nnz:
            scale = max(scale, float(abs(sub).max()))
    return Residual(absolute, absolute / scale)


def algebra_residuals(ops: OperatorSet, k: int = 3, margin: Optional[int] = None) -> Dict[str, Residual]:
    """Deviations of the defining q-boson and SU_q(1,1) relations on the interior block.

    The interior is the set of basis states with both occupations at most
    ``n_max - margin`` (default ``margin = k``), where raising operators and
    ``(a1 a2)**k`` stay inside the truncation.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    margin = k if margin is None else margin
    mask = interior_mask(ops.trunc, margin)
    if not mask.any():
        raise DomainError(f"n_max={ops.trunc.n_max} leaves no interior for margin {margin}")
    q = ops.params.q
    out: Dict[str, Residual] = {}
    for i, (a, ad, num, qnum, qneg) in enumerate(
        [
            (ops.a1, ops.a1_dag, ops.n1, ops.qn1, ops.q_pow_neg_n1),
            (ops.a2, ops.a2_dag, ops.n2, ops.qn2, ops.q_pow_neg_n2),
        ],
        start=1,
    ):
        aad, ada = a @ ad, ad @ a
        out[f"heisenberg_weyl_{i}"] = _block_residual(aad - q * ada - qneg, [aad, ada, qneg], mask)
        out[f"number_raise_{i}"] = _block_residual(num @ ad - ad @ num - ad, [num @ ad, ad @ num], mask)
        out[f"number_lower_{i}"] = _block_residual(num @ a - a @ num + a, [num @ a, a @ num], mask)
        out[f"number_from_ladder_{i}"] = _block_residual(ada - qnum, [ada, qnum], mask)
    kp, km, k0 = ops.k_plus, ops.k_minus, ops.k0
    pm, mp = kp @ km, km @ kp
    out["su11_plus_minus"] = _block_residual(pm - mp + ops.q_two_k0, [pm, mp, ops.q_two_k0], mask)
    out["su11_k0_plus"] = _block_residual(k0 @ kp - kp @ k0 - kp, [k0 @ kp, kp @ k0], mask)
    out["su11_k0_minus"] = _block_residual(k0 @ km - km @ k0 + km, [k0 @ km, km @ k0], mask)
    power = sp.identity(ops.trunc.dim, format="csr")
    for _ in range(k):
        power = power @ km
    qp, pq = ops.charge @ power, power @ ops.charge
    out["charge_pair_power"] = _block_residual(qp - pq, [qp, pq], mask)
    return out


@dataclass
class TwoModeState:
    amplitudes: Dict[Tuple[int, int], complex]
    trunc: Truncation
    norm_declared: float = 1.0

    def __post_init__(self):
        for m, n in self.amplitudes:
            if not (0 <= m <= self.trunc.n_max and 0 <= n <= self.trunc.n_max):
                raise DomainError(f"|{m},{n}> lies outside the truncation n_max={self.trunc.n_max}")

    def to_vector(self) -> np.ndarray:
        vec = np.zeros(self.trunc.dim, dtype=complex)
        for (m, n), c in self.amplitudes.items():
            vec[self.trunc.index(m, n)] = c
        return vec

    @classmethod
    def from_vector(cls, vec, trunc: Truncation, cutoff: float = 0.0, norm_declared: float = 1.0):
        vec = np.asarray(vec)
        if vec.shape != (trunc.dim,):
            raise DomainError(f"vector of shape {vec.shape} does not match dimension {trunc.dim}")
        amps = {}
        for idx in np.flatnonzero(np.abs(vec) > cutoff):
            amps[trunc.pair(int(idx))] = complex(vec[idx])
        return cls(amps, trunc, norm_declared)

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.amplitudes.values())))

    def inner(self, other: "TwoModeState") -> complex:
        """``<self|other>``."""
        if other.trunc != self.trunc:
            raise DomainError("states live in different truncations")
        return complex(
            sum(np.conj(c) * other.amplitudes[key] for key, c in self.amplitudes.items() if key in other.amplitudes)
        )

    def swapped(self) -> "TwoModeState":
        """Exchange the roles of mode 1 and mode 2."""
        return TwoModeState({(n, m): c for (m, n), c in self.amplitudes.items()}, self.trunc, self.norm_declared)


def basis_state(m: int, n: int, trunc: Truncation) -> TwoModeState:
    return TwoModeState({(m, n): 1.0 + 0j}, trunc)


def expectation(state: TwoModeState, op) -> complex:
    """``<psi| op |psi>``."""
    if op.shape != (state.trunc.dim, state.trunc.dim):
        raise DomainError(f"operator shape {op.shape} does not match dimension {state.trunc.dim}")
    vec = state.to_vector()
    return complex(np.vdot(vec, op @ vec))
