from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locqubo.builders import build_pmedian, build_qubo, decode, penalty_energy
from locqubo.errors import EpsOutOfRange, UnsupportedFamily
from locqubo.instances import DompInstance, builtin_instances
from locqubo.qubo import QuboModel, brute_force_min, energy
from locqubo.relaxations import box_energy
from locqubo.warmstart import (
    STRATEGIES,
    WarmStartPoint,
    lp_point,
    project_ball,
    residual_slack_bits,
    rotation_angles,
    strategy_C,
    strategy_L,
    strategy_R,
    strategy_S,
    unprojected_warmstart,
)

PMED3 = builtin_instances("pmedian", 3)
FCFLP = builtin_instances("fcflp", 3)
unit = st.floats(0.0, 1.0, allow_nan=False)


def test_project_examples():
    assert np.allclose(project_ball([0, 1, 0.5], 0.1), [0.1, 0.9, 0.5])
    assert np.allclose(project_ball([0, 1, 0.3], 0.5), 0.5)
    assert np.allclose(project_ball([0.3, 0.7], 0.1), [0.3, 0.7])


@pytest.mark.parametrize("eps", [0, -0.1, 0.6])
def test_eps_out_of_range(eps):
    with pytest.raises(EpsOutOfRange):
        project_ball([0.5], eps)


@settings(max_examples=100, deadline=None)
@given(st.lists(unit, min_size=1, max_size=8), st.lists(unit, min_size=1, max_size=8),
       st.floats(0.01, 0.5))
def test_projection_properties(a, b, eps):
    m = min(len(a), len(b))
    a, b = np.array(a[:m]), np.array(b[:m])
    pa, pb = project_ball(a, eps), project_ball(b, eps)
    assert np.array_equal(project_ball(pa, eps), pa)
    assert np.all(np.abs(pa - pb) <= np.abs(a - b) + 1e-15)
    th = rotation_angles(pa)
    lo, hi = 2 * np.arcsin(np.sqrt(eps)), 2 * np.arcsin(np.sqrt(1 - eps))
    assert np.all(th >= lo - 1e-12) and np.all(th <= hi + 1e-12)


@settings(max_examples=50, deadline=None)
@given(unit, unit)
def test_theta_monotone(u, v):
    if u < v:
        tu, tv = rotation_angles([u, v])
        assert tu < tv


def test_strategy_R_positive_diagonal():
    q = QuboModel(n_vars=3, coeffs={(0, 0): 1, (1, 1): 2, (2, 2): 3})
    ws = strategy_R(q, 0.1)
    assert np.allclose(ws.raw, 0, atol=1e-6) and np.allclose(ws.projected, 0.1)
    assert ws.strategy == "R"


def test_strategy_R_descends_and_is_deterministic():
    q = build_pmedian(builtin_instances("pmedian", 4)[0])
    ws = strategy_R(q)
    assert box_energy(q, ws.raw) <= box_energy(q, np.full(q.n_vars, 0.5))
    assert np.array_equal(strategy_R(q).raw, ws.raw)


def test_strategy_L_pmedian_integral():
    inst = PMED3[0]
    ws = strategy_L(inst, eps=0.1)
    q = build_pmedian(inst)
    assert len(ws.raw) == q.n_vars
    assert set(np.round(ws.projected, 12)) <= {0.1, 0.9}
    bits = [int(v) for v in ws.raw]
    assert decode(q, bits).feasible
    assert energy(q, bits) == brute_force_min(q)[1]


def test_strategy_L_fcflp_instance4_disaggregated():
    inst = FCFLP[3]
    q = build_qubo(inst, "disaggregated")
    ws = strategy_L(inst, "disaggregated")
    assert len(ws.raw) == q.n_vars == 25
    assert set(ws.raw) <= {0.0, 1.0}
    bits = [int(v) for v in ws.raw]
    sol = decode(q, bits)
    assert sol.consistent and penalty_energy(q, bits) == 0


def test_residual_slack_floor():
    # 10 - (2 * 0.5 + 3 * 1.1) = 5.7 -> 5
    assert residual_slack_bits(10, [2, 3], [Fraction(1, 2), Fraction(11, 10)]) == [1, 0, 1, 0]
    assert residual_slack_bits(7, [1], [Fraction(33, 10)]) == [1, 1, 0]
    assert residual_slack_bits(4, [1], [Fraction(0)]) == [0, 0, 1]
    assert residual_slack_bits(4, [9], [Fraction(1)]) == [0, 0, 0]


def test_residual_slack_exact_at_integer_boundary():
    # 0.1 * 30 is 3.0000000000000004 in floats; exact arithmetic gives residual exactly 7
    assert residual_slack_bits(10, [30], [Fraction(1, 10)]) == [1, 1, 1, 0]


def test_lp_point_unsupported():
    with pytest.raises(UnsupportedFamily):
        lp_point(DompInstance(M=3, N=1, cost=[[0, 1, 1]] * 3, lam=[1, 1, 1]))


def test_strategy_C_equals_L_on_integral_points():
    for inst in PMED3:
        q = build_pmedian(inst)
        L, C = strategy_L(inst), strategy_C(inst, None, q)
        assert np.allclose(L.raw, C.raw, atol=1e-9), inst.name


@pytest.mark.parametrize("form", ["aggregated", "disaggregated"])
def test_strategy_C_not_worse_than_L(form):
    inst = FCFLP[0]
    q = build_qubo(inst, form)
    L, C = strategy_L(inst, form), strategy_C(inst, form, q)
    eL, eC = box_energy(q, L.raw), box_energy(q, C.raw)
    assert np.isfinite(eL) and np.isfinite(eC) and eC <= eL + 1e-9


def test_strategy_S():
    x = np.array([1.0, 0.0, 1.0])
    v = np.concatenate(([1.0], x))
    ws = strategy_S(np.outer(v, v), 0.1)
    assert np.allclose(ws.projected, [0.9, 0.1, 0.9])
    Y = np.array([[1, 0.5], [0.5, 0.5]])
    assert np.isclose(strategy_S(Y).thetas[0], np.pi / 2)


def test_eps_half_collapses_every_strategy():
    inst = PMED3[2]
    q = build_pmedian(inst)
    v = np.concatenate(([1.0], np.linspace(0, 1, q.n_vars)))
    for ws in (strategy_R(q, 0.5), strategy_L(inst, eps=0.5), strategy_C(inst, None, q, 0.5),
               strategy_S(np.outer(v, v), 0.5)):
        assert np.allclose(ws.thetas, np.pi / 2, atol=1e-12)
    assert set(STRATEGIES) == {"R", "S", "L", "C"}


def test_json_round_trip():
    ws = strategy_L(PMED3[0])
    back = WarmStartPoint.from_json(ws.to_json())
    assert np.array_equal(back.raw, ws.raw) and np.array_equal(back.thetas, ws.thetas)
    assert back.epsilon == 0.1 and back.strategy == "L"


def test_unprojected_angles():
    ws = unprojected_warmstart([0, 1, 1])
    assert np.allclose(ws.thetas, [0, np.pi, np.pi]) and ws.epsilon == 0.0
