"""k-component q-deformed charge coherent states and their identities.

A component with charge ``qbar`` and index ``j`` is

    N * sum_n xi**(kn+j) / sqrt([kn+j]! [kn+j+|qbar|]!) |basis(kn+j)>

with ``basis(l) = |l+qbar, l>`` for ``qbar >= 0`` and ``|l, l-qbar>`` for
``qbar <= 0``.  Norm series are summed in the log domain so that large ``x``
does not overflow.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import AliasingError, DomainError, InsufficientTruncationError
from .fockspace import OperatorSet, Truncation, TwoModeState, expectation, interior_mask
from .qmath import ParamsLike, QParams, SeriesValue, as_params, log_q_factorials, q_exponential

_AMPLITUDE_FLOOR = 1e-16


@dataclass(frozen=True)
class KccsParams:
    xi: complex
    qbar: int
    k: int
    j: int
    p: QParams
    trunc: Truncation

    def __post_init__(self):
        check_component_indices(self.k, self.j)
        if self.xi == 0 and self.j != 0:
            raise DomainError("xi = 0 leaves only the j = 0 component defined")
        object.__setattr__(self, "xi", complex(self.xi))
        object.__setattr__(self, "p", as_params(self.p))

    def with_j(self, j: int) -> "KccsParams":
        return KccsParams(self.xi, self.qbar, self.k, j, self.p, self.trunc)


@dataclass(frozen=True)
class NormFactor:
    value: float
    x: float
    series: SeriesValue
    log_series: float


def check_component_indices(k: int, j: int):
    if int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    if int(j) != j or not 0 <= j < k:
        raise DomainError(f"j must lie in [0, {k - 1}], got {j!r}")


def basis_pair(level: int, qbar: int) -> Tuple[int, int]:
    """Fock pair carrying series level ``level`` in charge sector ``qbar``."""
    if qbar >= 0:
        return level + qbar, level
    return level, level - qbar


# --------------------------------------------------------------------------
# normalization series


def log_component_series(k: int, j: int, x: float, p: QParams, shift: Optional[int]) -> Tuple[float, int, bool]:
    """log of sum_n x**(kn+j) / ([kn+j]! [kn+j+shift]!) (second factorial dropped when shift is None).

    Returns ``(log_sum, terms_used, converged)``.
    """
    if x == 0.0:
        if j != 0:
            return -math.inf, 1, True
        lf = log_q_factorials(max(shift or 0, 1), p)
        return -(lf[shift] if shift is not None else 0.0), 1, True
    log_x = math.log(x)
    size = 64
    while True:
        lf = log_q_factorials(size + (shift or 0) + 1, p)
        levels = np.arange(j, size + 1, k)
        logs = levels * log_x - lf[levels]
        if shift is not None:
            logs = logs - lf[levels + shift]
        peak = logs.max()
        terms = np.exp(logs - peak)
        partial = np.cumsum(terms)
        small = terms <= p.tol * partial
        # three consecutive small terms after the peak
        run = np.convolve(small.astype(int), np.ones(3, dtype=int), mode="valid")
        hits = np.flatnonzero((run == 3) & (np.arange(run.size) > int(np.argmax(logs))))
        if hits.size:
            stop = int(hits[0]) + 3
            return float(peak + math.log(math.fsum(terms[:stop]))), stop, True
        if levels.size >= p.max_terms:
            return float(peak + math.log(math.fsum(terms))), int(levels.size), False
        size *= 2


def norm_series(k: int, qbar: int, j: int, x: float, p: ParamsLike) -> SeriesValue:
    """``S_j(x) = sum_n x**(kn+j) / ([kn+j]! [kn+j+|qbar|]!)``."""
    p = as_params(p)
    check_component_indices(k, j)
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    log_value, terms, ok = log_component_series(k, j, float(x), p, abs(qbar))
    value = math.exp(log_value) if log_value < 709.0 else math.inf
    return SeriesValue(value, p.tol * value, terms, ok)


def log_norm_series(k: int, qbar: int, j: int, x: float, p: ParamsLike) -> float:
    p = as_params(p)
    check_component_indices(k, j)
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    return log_component_series(k, j, float(x), p, abs(qbar))[0]


def norm_series_complex(k: int, qbar: int, j: int, z: complex, p: ParamsLike) -> complex:
    """``S_j`` continued to a complex argument (the overlap kernel)."""
    p = as_params(p)
    check_component_indices(k, j)
    r = abs(z)
    if r == 0:
        return complex(math.exp(log_norm_series(k, qbar, j, 0.0, p)))
    log_r, phase = math.log(r), cmath.phase(z)
    shift = abs(qbar)
    size = 64
    while True:
        lf = log_q_factorials(size + shift + 1, p)
        levels = np.arange(j, size + 1, k)
        logs = levels * log_r - lf[levels] - lf[levels + shift]
        if logs[-1] < logs.max() + math.log(p.tol) - 5 or levels.size >= p.max_terms:
            break
        size *= 2
    terms = np.exp(logs) * np.exp(1j * levels * phase)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def normalization(k: int, qbar: int, j: int, x: float, p: ParamsLike) -> NormFactor:
    """``N^j = S_j(x)**-1/2``."""
    p = as_params(p)
    check_component_indices(k, j)
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0 and j > 0:
        raise DomainError("the j > 0 normalization series vanishes at x = 0")
    log_value, terms, ok = log_component_series(k, j, float(x), p, abs(qbar))
    value = math.exp(log_value) if log_value < 709.0 else math.inf
    return NormFactor(math.exp(-0.5 * log_value), float(x), SeriesValue(value, p.tol * value, terms, ok), log_value)


def single_mode_norm(k: int, j: int, x: float, p: ParamsLike) -> float:
    """``(sum_n x**(kn+j) / [kn+j]!)**-1/2``."""
    p = as_params(p)
    check_component_indices(k, j)
    if x == 0 and j > 0:
        raise DomainError("the j > 0 normalization series vanishes at x = 0")
    return math.exp(-0.5 * log_component_series(k, j, float(x), p, None)[0])


# --------------------------------------------------------------------------
# truncation


def _log_amplitudes(levels: np.ndarray, r: float, qbar: int, p: QParams) -> np.ndarray:
    lf = log_q_factorials(int(levels.max()) + abs(qbar), p)
    log_r = math.log(r) if r > 0 else -math.inf
    with np.errstate(invalid="ignore"):
        out = np.where(levels == 0, 0.0, levels * log_r)
    return out - 0.5 * (lf[levels] + lf[levels + abs(qbar)])


def choose_truncation(xi: complex, qbar: int, k: int, p: ParamsLike) -> int:
    """Smallest cutoff keeping every series level whose amplitude is at least
    1e-16 of the largest, plus a safety margin of ``k + 2`` levels."""
    p = as_params(p)
    r = abs(xi)
    size = 64
    while True:
        levels = np.arange(size + 1)
        logs = _log_amplitudes(levels, r, qbar, p)
        keep = np.flatnonzero(logs >= logs.max() + math.log(_AMPLITUDE_FLOOR))
        last = int(keep[-1])
        if last < size - k - 2:
            break
        size *= 2
    return max(last + abs(qbar) + k + 2, 3 * k - 1 + abs(qbar), k + abs(qbar) + 4)


def default_truncation(xi: complex, qbar: int, k: int, p: ParamsLike) -> Truncation:
    return Truncation(choose_truncation(xi, qbar, k, p))


# --------------------------------------------------------------------------
# construction


def component_amplitudes(xi: complex, qbar: int, k: int, j: int, trunc: Truncation, p: ParamsLike) -> Dict[Tuple[int, int], complex]:
    """Unnormalized amplitudes ``xi**l / sqrt([l]! [l+|qbar|]!)`` for levels ``l = j mod k`` in the truncation."""
    p = as_params(p)
    top = trunc.n_max - abs(qbar)
    if top < j:
        return {}
    levels = np.arange(j, top + 1, k)
    r = abs(xi)
    if r == 0:
        levels = levels[:1]
    logs = _log_amplitudes(levels, r, qbar, p)
    phase = cmath.phase(xi) if r > 0 else 0.0
    amps = {}
    for level, log_a in zip(levels, logs):
        amps[basis_pair(int(level), qbar)] = cmath.rect(math.exp(log_a), level * phase)
    return amps


def build_kccs(params: KccsParams) -> TwoModeState:
    """Normalized component ``|xi, qbar, k>_j`` on the given truncation."""
    k, j, qbar, p, trunc = params.k, params.j, params.qbar, params.p, params.trunc
    if params.xi != 0 and trunc.n_max < 2 * k + j + abs(qbar):
        required = choose_truncation(params.xi, qbar, k, p)
        raise InsufficientTruncationError(
            f"n_max={trunc.n_max} holds fewer than three series terms; need at least {required}",
            required_n_max=required,
        )
    norm = normalization(k, qbar, j, abs(params.xi) ** 2, p).value
    amps = component_amplitudes(params.xi, qbar, k, j, trunc, p)
    return TwoModeState({key: norm * c for key, c in amps.items()}, trunc, 1.0)


def build_unnormalized(params: KccsParams) -> TwoModeState:
    """``(N^j)**-1 |xi, qbar, k>_j``: the bare series."""
    amps = component_amplitudes(params.xi, params.qbar, params.k, params.j, params.trunc, params.p)
    declared = math.exp(0.5 * log_norm_series(params.k, params.qbar, params.j, abs(params.xi) ** 2, params.p))
    return TwoModeState(amps, params.trunc, declared)


def verify_eigen_relations(state: TwoModeState, params: KccsParams, ops: OperatorSet) -> Dict[str, float]:
    """Residuals of the pair-power eigenvalue, the charge eigenvalue and orthonormality.

    The pair-power residual is restricted to basis states whose partner
    ``k`` levels higher lies inside the truncation.
    """
    vec = state.to_vector()
    out = ops.k_minus @ vec
    for _ in range(params.k - 1):
        out = ops.k_minus @ out
    mask = interior_mask(params.trunc, params.k)
    pair = float(np.linalg.norm((out - params.xi**params.k * vec)[mask]))
    charge = float(np.linalg.norm(ops.charge @ vec - params.qbar * vec))
    comps = [vec if jj == params.j else build_kccs(params.with_j(jj)).to_vector() for jj in range(params.k)]
    if params.xi == 0:
        comps = [vec]
    gram = np.array([[np.vdot(a, b) for b in comps] for a in comps])
    ortho = float(np.max(np.abs(gram - np.eye(len(comps)))))
    return {"pair_power_eigen": pair, "charge_eigen": charge, "orthonormality": ortho}


def overlap_general(a: KccsParams, b: KccsParams) -> complex:
    """Closed-form overlap ``<a|b>`` of two normalized components with equal ``k``."""
    if a.k != b.k:
        raise DomainError("overlap formula needs equal k")
    if a.qbar != b.qbar or a.j != b.j:
        return 0j
    x_a, x_b = abs(a.xi) ** 2, abs(b.xi) ** 2
    n_a = normalization(a.k, a.qbar, a.j, x_a, a.p).value
    n_b = normalization(b.k, b.qbar, b.j, x_b, b.p).value
    return n_a * n_b * norm_series_complex(a.k, a.qbar, a.j, a.xi.conjugate() * b.xi, a.p)


def mean_number_relation(state: TwoModeState) -> Tuple[float, float]:
    """``(<N1>, <N2>)`` from the amplitudes."""
    n1 = math.fsum(abs(c) ** 2 * m for (m, _), c in state.amplitudes.items())
    n2 = math.fsum(abs(c) ** 2 * n for (_, n), c in state.amplitudes.items())
    return n1, n2


@dataclass(frozen=True)
class ExpansionReport:
    reconstruction_residual: float
    sum_rule_residual: float


def expand_charge_coherent(xi: complex, qbar: int, k: int, trunc: Truncation, p: ParamsLike) -> ExpansionReport:
    """Rebuild the k = 1 charge coherent state from its k components and check the norm sum rule."""
    p = as_params(p)
    x = abs(xi) ** 2
    whole = build_kccs(KccsParams(xi, qbar, 1, 0, p, trunc)).to_vector()
    n_whole = normalization(1, qbar, 0, x, p).value
    recon = np.zeros(trunc.dim, dtype=complex)
    for j in range(k if xi != 0 else 1):
        comp = build_kccs(KccsParams(xi, qbar, k, j, p, trunc)).to_vector()
        recon += comp / normalization(k, qbar, j, x, p).value
    recon *= n_whole
    parts = [norm_series(k, qbar, j, x, p).value for j in range(k)]
    total = norm_series(1, qbar, 0, x, p).value
    return ExpansionReport(
        float(np.max(np.abs(recon - whole))),
        abs(total - math.fsum(parts)) / total,
    )


# --------------------------------------------------------------------------
# single-mode states and U(1) averaging


def single_mode_kcs(xi: complex, k: int, j: int, n_max: int, p: ParamsLike) -> np.ndarray:
    """Normalized single-mode k-component state ``N_k^j sum xi**(kn+j)/sqrt([kn+j]!) |kn+j>``."""
    p = as_params(p)
    check_component_indices(k, j)
    if xi == 0 and j > 0:
        raise DomainError("xi = 0 leaves only the j = 0 component defined")
    norm = single_mode_norm(k, j, abs(xi) ** 2, p)
    vec = np.zeros(n_max + 1, dtype=complex)
    if j > n_max:
        return vec
    levels = np.arange(j, n_max + 1, k)
    if xi == 0:
        levels = levels[:1]
    lf = log_q_factorials(n_max, p)
    r = abs(xi)
    with np.errstate(divide="ignore"):
        log_mag = np.where(levels == 0, 0.0, levels * (math.log(r) if r > 0 else -math.inf)) - 0.5 * lf[levels]
    vec[levels] = norm * np.exp(log_mag) * np.exp(1j * levels * cmath.phase(xi))
    return vec


def generate_by_averaging(
    xi1: complex,
    xi2: complex,
    qbar: int,
    k: int,
    j: int,
    n_angles: int,
    trunc: Truncation,
    p: ParamsLike,
) -> TwoModeState:
    """Project the product of a coherent state and a k-component state onto charge ``qbar``.

    The angular average runs over ``n_angles`` uniform points; discrete
    orthogonality makes the projection exact once ``n_angles`` exceeds the
    spread of charges present in the truncated product.
    """
    p = as_params(p)
    check_component_indices(k, j)
    xi = complex(xi1) * complex(xi2)
    if xi == 0:
        raise DomainError("generation by averaging needs xi1 * xi2 != 0")
    if n_angles < 4 * (trunc.n_max + 1):
        raise AliasingError(f"n_angles={n_angles} is below 4 * (n_max + 1) = {4 * (trunc.n_max + 1)}")
    n_max = trunc.n_max
    coherent = single_mode_kcs(xi1, 1, 0, n_max, p)
    component = single_mode_kcs(xi2, k, j, n_max, p)
    levels = np.arange(n_max + 1)
    acc = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    sign = 1 if qbar >= 0 else -1
    for r in range(n_angles):
        alpha = -math.pi + 2.0 * math.pi * r / n_angles
        c1 = coherent * np.exp(-1j * alpha * levels)
        c2 = component * np.exp(1j * alpha * levels)
        weight = np.exp(1j * sign * qbar * alpha)
        if sign > 0:
            acc += weight * np.outer(c1, c2)
        else:
            # first tensor slot is mode 1: the k-component factor
            acc += weight * np.outer(c2, c1)
    acc /= n_angles
    x1, x2 = abs(xi1) ** 2, abs(xi2) ** 2
    e_half = math.sqrt(q_exponential(x1, p).require("e_q").value)
    prefactor = (
        normalization(k, qbar, j, abs(xi) ** 2, p).value
        * e_half
        / single_mode_norm(k, j, x2, p)
        * complex(xi1) ** (-sign * qbar)
    )
    vec = (prefactor * acc).reshape(-1)
    cutoff = 1e-14 * float(np.max(np.abs(vec)))
    return TwoModeState.from_vector(vec, trunc, cutoff=cutoff)


def fidelity(a: TwoModeState, b: TwoModeState) -> float:
    return abs(a.inner(b))


# --------------------------------------------------------------------------
# serialization

_HEADER_KEYS = ("k", "qbar", "j", "xi_re", "xi_im", "q", "n_max")


def write_state(path, state: TwoModeState, params: KccsParams) -> None:
    header = (
        f"# k={params.k} qbar={params.qbar} j={params.j} xi_re={params.xi.real!r} "
        f"xi_im={params.xi.imag!r} q={params.p.q!r} n_max={params.trunc.n_max}\n"
    )
    with open(path, "w") as fh:
        fh.write(header)
        for (m, n) in sorted(state.amplitudes):
            c = state.amplitudes[(m, n)]
            if c != 0:
                fh.write(f"{m} {n} {c.real!r} {c.imag!r}\n")


def read_state(path) -> Tuple[TwoModeState, KccsParams]:
    with open(path) as fh:
        header = fh.readline()
        fields = dict(re.findall(r"(\w+)=(\S+)", header))
        missing = [key for key in _HEADER_KEYS if key not in fields]
        if missing:
            raise DomainError(f"state header lacks {missing}")
        trunc = Truncation(int(fields["n_max"]))
        params = KccsParams(
            complex(float(fields["xi_re"]), float(fields["xi_im"])),
            int(fields["qbar"]),
            int(fields["k"]),
            int(fields["j"]),
            QParams(float(fields["q"])),
            trunc,
        )
        amps = {}
        for line in fh:
            if not line.strip():
                continue
            m, n, re_, im_ = line.split()
            amps[(int(m), int(n))] = complex(float(re_), float(im_))
    return TwoModeState(amps, trunc), params
