import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locqubo.builders import build_fcflp_aggregated, build_pmedian, build_qubo
from locqubo.errors import Infeasible, NotNormalized, ShapeMismatch, UnsupportedFamily
from locqubo.instances import DompInstance, builtin_instances
from locqubo.qubo import QuboModel, brute_force_min
from locqubo.relaxations import (
    LinearProgram,
    SdpRelaxationData,
    box_energy,
    extract_sdp_warmstart,
    load_sdp_solution,
    lp_relaxation,
    minimize_box_qubo,
    sdp_relaxation_data,
    solve_lp,
)

FCFLP = builtin_instances("fcflp", 3)


def _vertex_optimum(c, A_eq, b_eq, A_ub, b_ub):
    """Enumerate basic points of a tiny LP over the unit box with numpy."""
    n = len(c)
    rows = [(list(map(float, r)), float(b)) for r, b in zip(A_eq, b_eq)]
    rows += [(list(map(float, r)), float(b)) for r, b in zip(A_ub, b_ub)]
    for k in range(n):
        e = [0.0] * n
        e[k] = 1.0
        rows += [(e, 0.0), (e, 1.0)]
    best = None
    for combo in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[r][0] for r in combo])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, [rows[r][1] for r in combo])
        ok = np.all(x > -1e-9) and np.all(x < 1 + 1e-9)
        ok = ok and all(abs(np.dot(r, x) - b) < 1e-9 for r, b in zip(A_eq, b_eq))
        ok = ok and all(np.dot(r, x) <= b + 1e-9 for r, b in zip(A_ub, b_ub))
        if ok:
            v = float(np.dot(c, x))
            best = v if best is None else min(best, v)
    return best


def test_trivial_lp():
    res = solve_lp(LinearProgram(c=[1]))
    assert res.x == [0] and res.objective == 0


def test_infeasible_lp():
    with pytest.raises(Infeasible):
        solve_lp(LinearProgram(c=[1, 1], A_eq=[[1, 1]], b_eq=[3]))


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        LinearProgram(c=[1, 1], A_eq=[[1]], b_eq=[1])


def test_degenerate_redundant_rows():
    lp = LinearProgram(c=[-1, -1, 0], A_eq=[[1, 1, 0], [1, 1, 0], [2, 2, 0]], b_eq=[1, 1, 2],
                       A_ub=[[1, 0, 0], [0, 1, 0]], b_ub=[1, 1])
    res = solve_lp(lp)
    assert res.objective == -1


def test_pmedian_n4_lp_integral_99():
    inst = builtin_instances("pmedian", 4)[0]
    res = solve_lp(lp_relaxation(inst))
    assert res.is_integral and res.objective == 99


@pytest.mark.parametrize("size", [3, 4])
def test_all_pmedian_lps_integral(size):
    for inst in builtin_instances("pmedian", size):
        res = solve_lp(lp_relaxation(inst))
        _, e, _ = brute_force_min(build_pmedian(inst))
        assert res.is_integral and res.objective == e, inst.name


@pytest.mark.parametrize("k", [3, 8])
def test_fcflp_disaggregated_integral(k):
    res = solve_lp(lp_relaxation(FCFLP[k], "disaggregated"))
    assert res.is_integral
    _, e, _ = brute_force_min(build_qubo(FCFLP[k], "disaggregated"))
    assert res.objective == e


def test_fcflp_aggregated_fractional_bound():
    res = solve_lp(lp_relaxation(FCFLP[0], "aggregated"))
    assert not res.is_integral and res.objective <= 40


def test_lp_unsupported_family():
    with pytest.raises(UnsupportedFamily):
        lp_relaxation(DompInstance(M=3, N=1, cost=[[0, 1, 1]] * 3, lam=[1, 1, 1]))


def test_lp_row_permutation_invariance():
    lp = lp_relaxation(FCFLP[0], "disaggregated")
    perm = list(reversed(range(len(lp.A_ub))))
    lp2 = LinearProgram(lp.c, lp.A_eq[::-1], lp.b_eq[::-1], [lp.A_ub[i] for i in perm],
                        [lp.b_ub[i] for i in perm], lp.names)
    a, b = solve_lp(lp), solve_lp(lp2)
    assert a.objective == b.objective and a.x == b.x


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 4),
    data=st.data(),
)
def test_simplex_matches_vertex_enumeration(n, data):
    ints = st.integers(-4, 4)
    c = data.draw(st.lists(ints, min_size=n, max_size=n))
    m_eq = data.draw(st.integers(0, 1))
    m_ub = data.draw(st.integers(0, 3))
    A_eq = [data.draw(st.lists(ints, min_size=n, max_size=n)) for _ in range(m_eq)]
    b_eq = [data.draw(ints) for _ in range(m_eq)]
    A_ub = [data.draw(st.lists(ints, min_size=n, max_size=n)) for _ in range(m_ub)]
    b_ub = [data.draw(ints) for _ in range(m_ub)]
    ref = _vertex_optimum(c, A_eq, b_eq, A_ub, b_ub)
    lp = LinearProgram(c, A_eq, b_eq, A_ub, b_ub)
    if ref is None:
        with pytest.raises(Infeasible):
            solve_lp(lp)
        return
    res = solve_lp(lp)
    assert abs(float(res.objective) - ref) < 1e-7
    x = res.x
    assert all(0 <= v <= 1 for v in x)
    assert all(sum(Fraction(a) * v for a, v in zip(r, x)) == b for r, b in zip(A_eq, b_eq))
    assert all(sum(Fraction(a) * v for a, v in zip(r, x)) <= b for r, b in zip(A_ub, b_ub))


def test_box_convex_one_var():
    res = minimize_box_qubo(QuboModel(n_vars=1, coeffs={(0, 0): 1}), [0.5])
    assert res.converged and abs(res.x[0]) < 1e-6 and abs(res.energy) < 1e-6


def test_box_negative_diagonal_goes_to_ones():
    q = QuboModel(n_vars=3, coeffs={(0, 0): -1, (1, 1): -2, (2, 2): -0.5})
    res = minimize_box_qubo(q, [0.2, 0.5, 0.9])
    assert np.allclose(res.x, 1.0)


def test_box_pmedian_n4_lower_bound():
    q = build_pmedian(builtin_instances("pmedian", 4)[0])
    start = np.full(q.n_vars, 0.5)
    res = minimize_box_qubo(q, start)
    assert res.energy >= 99 - 1e-6
    assert res.energy <= box_energy(q, start) + 1e-9


def test_box_shape_check():
    with pytest.raises(ShapeMismatch):
        minimize_box_qubo(QuboModel(n_vars=2, coeffs={}), [0.5])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_box_descent_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    Q = np.triu(rng.integers(-5, 6, (n, n)))
    q = QuboModel.from_matrix(Q)
    x0 = rng.random(n)
    res = minimize_box_qubo(q, x0)
    assert np.all((res.x >= 0) & (res.x <= 1))
    assert res.energy <= box_energy(q, x0) + 1e-9


def test_sdp_one_variable():
    data = sdp_relaxation_data(QuboModel(n_vars=1, coeffs={(0, 0): 1}))
    assert data.dim == 2
    A, b = data.constraints[1]
    assert np.array_equal(A, [[0, -0.5], [-0.5, 1]]) and b == 0
    assert np.array_equal(data.constraints[0][0], [[1, 0], [0, 0]])


def test_sdp_matrices_symmetric_and_recover_energy():
    q = build_pmedian(builtin_instances("pmedian", 3)[0])
    data = sdp_relaxation_data(q)
    for A, _ in [(data.objective, None)] + data.constraints:
        assert A.shape == (q.n_vars + 1,) * 2 and np.array_equal(A, A.T)
    bits, e, _ = brute_force_min(q)
    v = np.array([1.0] + bits)
    Y = np.outer(v, v)
    assert np.isclose(np.sum(data.objective * Y), e)
    assert all(np.isclose(np.sum(A * Y), b) for A, b in data.constraints)
    back = SdpRelaxationData.from_json(data.to_json())
    assert np.array_equal(back.objective, data.objective)


def test_extract_rank_one():
    x = np.array([1.0, 0.0, 1.0])
    v = np.concatenate(([1.0], x))
    assert np.array_equal(extract_sdp_warmstart(np.outer(v, v)), x)


def test_extract_first_row_and_clamp():
    Y = np.array([[1, 0.3, 0.9], [0.3, 0.3, 0.2], [0.9, 0.2, 0.9]])
    assert np.allclose(extract_sdp_warmstart(Y), [0.3, 0.9])
    Y[0, 2] = Y[2, 0] = 1.04
    assert extract_sdp_warmstart(Y)[1] == 1.0


def test_extract_errors(tmp_path):
    with pytest.raises(NotNormalized):
        extract_sdp_warmstart([[2, 0], [0, 1]])
    with pytest.raises(ShapeMismatch):
        extract_sdp_warmstart([[1, 0.2], [0.3, 1]])
    p = tmp_path / "y.json"
    p.write_text('{"Y": [[1, 0.5], [0.5, 0.5]]}')
    assert np.array_equal(load_sdp_solution(p), [[1, 0.5], [0.5, 0.5]])


def test_aggregated_box_from_lp_finite():
    q = build_fcflp_aggregated(FCFLP[0])
    res = minimize_box_qubo(q, np.full(q.n_vars, 0.5))
    assert np.isfinite(res.energy)
