import io
import math

import numpy as np
import pytest

from qkccs import nonclassical as nc
from qkccs import states
from qkccs.errors import DomainError
from qkccs.fockspace import Truncation, build_operators
from qkccs.qmath import QParams, q_number

import oracles as O

PAD = 6


def state_and_ops(xi, qbar, k, j, q):
    p = QParams(q)
    tr = states.default_truncation(xi, qbar, k, p)
    wide = Truncation(tr.n_max + PAD)
    state = states.build_kccs(states.KccsParams(xi, qbar, k, j, p, wide))
    return state, build_operators(wide, p)


def test_default_grid_contains_one():
    g = nc.default_grid()
    assert g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(100.0)
    assert 1.0 in g
    assert np.all(np.diff(g) > 0)


# -- quadratures ------------------------------------------------------------------


def test_su11_variance_closed_form():
    k, qbar, xi, q = 3, 2, 0.7, 0.9
    state, ops = state_and_ops(xi, qbar, k, 0, q)
    rep = nc.quadrature_report(state, ops)
    x = xi * xi
    n0 = states.normalization(k, qbar, 0, x, q).value
    nlast = states.normalization(k, qbar, k - 1, x, q).value
    want = 0.25 * rep.mean_two_k0 + 0.5 * x * n0**2 / nlast**2
    assert rep.var_x1 == pytest.approx(want, rel=1e-10)
    assert rep.var_x2 == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("k", [3, 4, 5])
@pytest.mark.parametrize("qbar", [-3, 2])
def test_no_squeezing_for_three_or_more_components(k, qbar):
    for j in range(k):
        rep = nc.quadrature_report(*state_and_ops(0.9, qbar, k, j, 0.8))
        assert not any(rep.flags.values()), rep.flags
        assert rep.var_x1 - rep.bound_su11 >= -1e-10
        assert abs(rep.mean_k_minus) < 1e-12
        assert abs(rep.mean_k_minus_sq) < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_single_mode_moments_vanish(k):
    for j in range(k):
        rep = nc.quadrature_report(*state_and_ops(1.1, -2, k, j, 0.9))
        assert max(abs(v) for v in rep.single_mode_moments.values()) < 1e-12


@pytest.mark.parametrize("k", [2, 3, 5])
def test_variance_symmetries_and_decomposition(k):
    rep = nc.quadrature_report(*state_and_ops(0.8, 3, k, 1, 0.9))
    if k >= 3:
        # for k = 2 the pair moment <K-**2> = xi**2 survives
        assert rep.var_x1 == pytest.approx(rep.var_x2, abs=1e-10)
    assert rep.var_y1 == pytest.approx(rep.var_y2, abs=1e-10)
    assert rep.var_z1 == pytest.approx(rep.var_z2, abs=1e-10)
    assert rep.var_w1 == pytest.approx(rep.var_w2, abs=1e-10)
    assert rep.var_w1 == pytest.approx(0.5 * (rep.var_y1 + rep.var_z1), abs=1e-10)


def test_k1_minimum_uncertainty():
    rep = nc.quadrature_report(*state_and_ops(0.8, 2, 1, 0, 0.9))
    assert abs(rep.su11_product_gap) < 1e-8
    assert abs(rep.var_x1 - rep.bound_su11) < 1e-8
    assert not rep.flags["su11_squeezed"]


def test_k2_has_no_single_or_two_mode_squeezing():
    for j in (0, 1):
        rep = nc.quadrature_report(*state_and_ops(0.8, 2, 2, j, 0.9))
        assert not rep.flags["mode1_squeezed"]
        assert not rep.flags["mode2_squeezed"]
        assert not rep.flags["two_mode_squeezed"]


def test_uncertainty_products_respected():
    for k in (1, 2, 3):
        rep = nc.quadrature_report(*state_and_ops(0.6 + 0.3j, -1, k, 0, 0.8))
        assert rep.var_x1 * rep.var_x2 >= rep.bound_su11**2 - 1e-10
        assert rep.var_y1 * rep.var_y2 >= rep.bound_mode1**2 - 1e-10
        assert rep.var_w1 * rep.var_w2 >= rep.bound_two_mode**2 - 1e-10


def test_squeezing_predicate_is_strict():
    rep = nc.quadrature_report(*state_and_ops(0.8, 2, 1, 0, 0.9))
    edge = nc.QuadratureReport(**{**rep.__dict__, "var_x1": rep.bound_su11 - 5e-11})
    assert not nc.squeezing_predicates(edge)["su11_squeezed"]
    below = nc.QuadratureReport(**{**rep.__dict__, "var_x1": rep.bound_su11 - 1e-6})
    assert nc.squeezing_predicates(below)["su11_squeezed"]


# -- correlation degrees ----------------------------------------------------------


def test_pair_moment_formula_vs_matrix():
    k, qbar, j, x, q = 4, -1, 2, 0.9, 0.8
    state, ops = state_and_ops(math.sqrt(x), qbar, k, j, q)
    vec = state.to_vector()
    matrix = float(np.vdot(ops.k_minus @ vec, ops.k_minus @ vec).real)
    assert nc.moment_k_plus_k_minus(k, qbar, j, x, q) == pytest.approx(matrix, rel=1e-8)


def test_pair_moment_undeformed_limit():
    k, qbar, x = 3, 2, 1.5
    for j in range(k):
        s = [O.classical_norm_series(k, qbar, i, x) for i in range(k)]
        want = float(x * s[(j - 1) % k] / s[j])
        assert nc.moment_k_plus_k_minus(k, qbar, j, x, 1.0) == pytest.approx(want, rel=1e-12)


def test_g2_single_component_is_one():
    rep = nc.g2_degrees(1, 3, 2.5, 0.8)
    assert rep.g_values == [1.0]
    state, ops = state_and_ops(1.2, 3, 1, 0, 0.8)
    assert nc.g2_from_state(state, ops) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("q", [0.8, 0.9])
@pytest.mark.parametrize("qbar", [-3, -2, 2, 3])
@pytest.mark.parametrize("k", [3, 4, 5])
def test_g2_product_is_one(k, qbar, q):
    for x in (0.25, 1.0, 2.0, 4.0):
        rep = nc.g2_degrees(k, qbar, x, q)
        assert rep.product == pytest.approx(1.0, abs=1e-8)
        assert all(g > 0 for g in rep.g_values)


def test_g2_example_bunched_component():
    assert nc.g2_degrees(3, 2, 0.5, 0.9).g_values[0] > 1


@pytest.mark.parametrize("k, qbar, x, q", [(3, 2, 0.5, 0.9), (4, -3, 2.0, 0.8), (5, 2, 4.0, 0.9)])
def test_g2_formula_vs_matrix(k, qbar, x, q):
    rep = nc.g2_degrees(k, qbar, x, q)
    for j in range(k):
        state, ops = state_and_ops(math.sqrt(x), qbar, k, j, q)
        assert nc.g2_from_state(state, ops) == pytest.approx(rep.g_values[j], rel=1e-7)


def test_g2_classical_limit():
    q = 1 - 1e-6
    for k, qbar, x in [(3, 2, 0.5), (4, -3, 2.0), (5, 2, 4.0)]:
        s = [O.classical_norm_series(k, qbar, j, x) for j in range(k)]
        want = [float(s[j] * s[(j - 2) % k] / s[(j - 1) % k] ** 2) for j in range(k)]
        got = nc.g2_degrees(k, qbar, x, q).g_values
        assert np.allclose(got, want, rtol=1e-4, atol=0)


def test_g2_domain():
    with pytest.raises(DomainError):
        nc.g2_degrees(3, 2, 0.0, 0.9)
    with pytest.raises(DomainError):
        nc.g2_degrees(0, 2, 1.0, 0.9)


# -- scans ---------------------------------------------------------------------


def test_scan_k3_bunching_then_crossing():
    xs = np.linspace(0.05, 5.0, 100)
    res = nc.antibunching_scan(3, 2, 0.9, xs)
    assert all(r.g_values[0] > 1 for r in res.rows if r.x <= 1)
    # the first crossing sits beyond 5 for these parameters
    assert all(r.g_values[0] > 1 for r in res.rows)
    assert res.crossing is None
    full = nc.antibunching_scan(3, 2, 0.9)
    assert full.crossing is not None and full.crossing > 1
    assert nc.g2_degrees(3, 2, full.crossing + 1e-3, 0.9).g_values[0] < 1


def test_scan_first_antibunched_component():
    res = nc.antibunching_scan(4, 3, 0.8)
    assert all(r.g_values[1] < 1 for r in res.rows if r.x <= 1)


def test_small_x_bound():
    k, qbar, l, q = 5, 2, 3, 0.9
    threshold = nc.small_x_threshold(k, qbar, l, q)
    ratio = q_number(2, q) * q_number(4, q) / (q_number(3, q) * q_number(5, q))
    assert threshold == pytest.approx((1 - math.sqrt(ratio)) ** (1 / k), rel=1e-15)
    for x in np.linspace(threshold / 20, threshold, 20):
        assert nc.g2_degrees(k, qbar, x, q).g_values[l] < 1
    res = nc.antibunching_scan(k, qbar, q)
    assert res.bound_checks and all(c.holds for c in res.bound_checks)


def test_locate_crossing_requires_bracket():
    with pytest.raises(DomainError):
        nc.locate_crossing(3, 2, 0.1, 0.5, 0.9)


def test_scan_rejects_bad_grid():
    with pytest.raises(DomainError):
        nc.antibunching_scan(3, 2, 0.9, [1.0, 0.5])
    with pytest.raises(DomainError):
        nc.antibunching_scan(3, 2, 0.9, [])


def test_scan_csv_schema():
    res = nc.antibunching_scan(3, -2, 0.9, [0.5, 1.0, 2.0])
    text = nc.scan_csv_text(res, 1e-14)
    lines = text.splitlines()
    assert lines[0] == "# k=3 qbar=-2 q=0.9 tol=1e-14"
    assert lines[1] == "x,g_0,g_1,g_2,antibunched_0,antibunched_1,antibunched_2"
    first = lines[2].split(",")
    assert float(first[0]) == 0.5
    assert float(first[1]) == res.rows[0].g_values[0]
    assert first[4:] == [str(int(b)) for b in res.rows[0].antibunched]


def test_scan_csv_marks_failures():
    res = nc.ScanResult(2, 0, 0.9, [nc.ScanRow(1.0, [math.nan] * 2, [False] * 2, converged=False)], None, [])
    buf = io.StringIO()
    nc.write_scan_csv(buf, res, 1e-14)
    assert "# convergence-failure x=1.0" in buf.getvalue()
