import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkccs import qcalculus, qmath
from qkccs.errors import DomainError
from qkccs.qmath import QParams

# Frozen from tests/oracles.py.  The moment values come from the factorized
# form Gamma_odd(p) * Gamma_even(p + nu) / [2]**2 of the nested Jackson sum.
JACKSON_GAUSSIAN_08 = 0.49992102730679549885
MOMENT_ORACLE = {
    (0, 0, 0.9): 0.2493074791601021,
    (1, 1, 0.9): 0.5013849855887675,
    (2, 3, 0.8): 147.18961030727801,
    (4, 4, 0.9): 360670.76098370718,
}


def test_q_derivative_monomials():
    assert qcalculus.q_derivative(lambda x: x, 2.0, 0.9) == pytest.approx(1.0, rel=1e-15)
    assert qcalculus.q_derivative(lambda x: x * x, 1.0, 0.9) == pytest.approx(qmath.q_number(2, 0.9), rel=1e-15)
    xi = 1.3
    expected = qmath.q_number(5, 0.8) * xi**4
    assert qcalculus.q_derivative(lambda x: x**5, xi, 0.8) == pytest.approx(expected, rel=1e-12)


@given(n=st.integers(0, 12), re=st.floats(0.1, 2.0), im=st.floats(-1.0, 1.0))
def test_q_derivative_monomial_rule_complex(n, re, im):
    xi = complex(re, im)
    got = qcalculus.q_derivative(lambda z: z**n, xi, 0.85)
    want = qmath.q_number(n, 0.85) * xi ** (n - 1) if n else 0.0
    assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_q_derivative_of_vector_valued_function():
    coeffs = np.array([1.0, -2.0, 0.5])
    out = qcalculus.q_derivative(lambda x: coeffs * x**3, 1.5, 0.9)
    assert np.allclose(out, coeffs * qmath.q_number(3, 0.9) * 1.5**2, rtol=1e-13)


def test_q_derivative_domain():
    with pytest.raises(DomainError):
        qcalculus.q_derivative(lambda x: x, 0.0, 0.9)
    with pytest.raises(DomainError):
        qcalculus.q_derivative(lambda x: x, 1.0, 1.0)


def test_jackson_zero_integrand():
    res = qcalculus.jackson_integral_halfline(lambda t: 0.0, 0.9)
    assert res.value == 0.0
    assert res.converged


def test_jackson_matches_high_m_reference_sum():
    res = qcalculus.jackson_integral_halfline(lambda t: t * qmath.q_exponential(-t * t, 0.8).value, 0.8)
    assert res.converged
    assert res.value == pytest.approx(JACKSON_GAUSSIAN_08, rel=1e-13)


def test_jackson_same_rule_for_inverse_base():
    f = lambda t: t * math.exp(-t)
    a = qcalculus.jackson_integral_halfline(f, 0.9)
    b = qcalculus.jackson_integral_halfline(f, 1 / 0.9)
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_jackson_inverts_q_derivative():
    # the rule telescopes on D_q F, giving F(inf) - F(0)
    p = QParams(0.85)
    res = qcalculus.jackson_integral_halfline(lambda t: qcalculus.q_derivative(lambda u: math.exp(-u), t, p), p)
    assert res.converged
    assert res.value == pytest.approx(-1.0, rel=1e-13)


def test_jackson_undeformed_rejected():
    with pytest.raises(DomainError):
        qcalculus.jackson_integral_halfline(lambda t: t, 1.0)


def test_jackson_reports_unconverged_tail():
    res = qcalculus.jackson_integral_halfline(lambda t: 1.0 / (1.0 + t), 0.9, max_nodes=256)
    assert not res.converged


@pytest.mark.parametrize("key", sorted(MOMENT_ORACLE))
def test_moment_integral_matches_factorized_oracle(key):
    p_idx, nu, q = key
    res = qcalculus.moment_integral(p_idx, nu, q)
    assert res.converged
    assert res.value == pytest.approx(MOMENT_ORACLE[key], rel=1e-11)


def test_jackson_moment_example():
    # t**(2p+nu+1) K_nu(q, [2] t) on the sqrt(q) lattice, p = nu = 1
    s = QParams(0.9).sqrt_base()
    rhs = qmath.q_factorial(2, 0.9) * qmath.q_factorial(1, 0.9) / qmath.q_number(2, s) ** 2
    assert qcalculus.moment_rhs(1, 1, 0.9) == pytest.approx(rhs, rel=1e-15)
    assert qcalculus.verify_moment_identity(1, 1, 0.9) < 1e-6


def test_moment_identity_lowest_order():
    assert qcalculus.verify_moment_identity(0, 0, 0.9) < 1e-6


def test_moment_identity_p2_nu3_q08():
    assert qcalculus.verify_moment_identity(2, 3, 0.8) < 1e-6


def test_moment_classical_limit():
    from scipy.integrate import quad
    from scipy.special import k0

    classical, _ = quad(lambda u: u * k0(2 * u), 0, np.inf)
    assert classical == pytest.approx(0.25, rel=1e-10)
    near = qcalculus.moment_integral(0, 0, 0.95)
    assert near.converged
    assert near.value == pytest.approx(classical, rel=1e-3)
    assert qcalculus.moment_rhs(0, 0, 1.0) == 0.25


def test_moment_domain():
    with pytest.raises(DomainError):
        qcalculus.moment_integral(-1, 0, 0.9)
    with pytest.raises(DomainError):
        qcalculus.moment_integral(0, 0, 1.0)
