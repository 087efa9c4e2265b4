import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locqubo.builders import build_fcflp_aggregated, build_fcflp_disaggregated, build_pmedian, encode_solution
from locqubo.errors import CapExceeded, LengthMismatch, ParseError
from locqubo.instances import builtin_instances
from locqubo.qubo import (
    QuboModel,
    bits_to_index,
    brute_force_min,
    energies,
    energy,
    energy_table,
    export_qubo,
    import_qubo,
    index_to_bits,
    penalty_bound,
    to_ising,
)

PMED4 = builtin_instances("pmedian", 4)[0]
FCFLP1 = builtin_instances("fcflp", 3)[0]


def _pmedian_opt_bits(q):
    return encode_solution(q, y={1: 1, 2: 1}, x={(1, 1): 1, (2, 0): 1, (2, 2): 1, (2, 3): 1})


def _fcflp_opt_bits(q, third_slack):
    x = encode_solution(q, x={(0, 0): 1, (0, 1): 1, (1, 2): 1}, y={0: 1, 1: 1})
    for i, resid in enumerate((1, 0, third_slack)):
        for k in range(4):
            idx = q.var_map.get("s", i, k)
            if idx is not None:
                x[idx] = (resid >> k) & 1
    return x


@st.composite
def small_qubos(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    vals = draw(st.lists(st.integers(-6, 6), min_size=len(pairs), max_size=len(pairs)))
    return QuboModel(n_vars=n, coeffs=dict(zip(pairs, vals)), offset=draw(st.integers(-5, 5)))


def test_zero_vector_gives_offset():
    q = build_pmedian(PMED4)
    assert energy(q, [0] * q.n_vars) == q.offset == 8800


def test_pmedian_n4_optimum_energy_is_99():
    q = build_pmedian(PMED4)
    assert energy(q, _pmedian_opt_bits(q)) == 99


def test_fcflp_optimum_disaggregated_energy_is_40():
    q = build_fcflp_disaggregated(FCFLP1)
    assert energy(q, _fcflp_opt_bits(q, 10)) == 40


def test_fcflp_optimum_aggregated_energy_is_40():
    q = build_fcflp_aggregated(FCFLP1)
    assert energy(q, _fcflp_opt_bits(q, 0)) == 40


def test_penalty_bound_examples():
    n = PMED4.n
    assert penalty_bound([PMED4.demand[j] * PMED4.cost[i][j] for i in range(n) for j in range(n)]) == 1100
    inst = FCFLP1
    assert penalty_bound(list(inst.fixed_cost) + [c for row in inst.cost for c in row]) == 81
    assert penalty_bound([0, 0, 0]) == 1
    assert penalty_bound([]) == 1


def test_length_mismatch():
    q = QuboModel(n_vars=2, coeffs={(0, 0): 1})
    with pytest.raises(LengthMismatch):
        energy(q, [0])


def test_storage_folds_and_drops_zeros():
    q = QuboModel(n_vars=3, coeffs={(1, 0): 2, (0, 1): 3, (2, 2): 0})
    assert q.coeffs == {(0, 1): 5}
    assert QuboModel.from_matrix([[1, 2], [3, 0]]).coeffs == {(0, 0): 1, (0, 1): 5}


def test_one_variable_ising():
    ising = to_ising(QuboModel(n_vars=1, coeffs={(0, 0): 1}))
    assert ising.fields == [-0.5] and ising.constant == 0.5
    assert ising.energy([-1]) == 0 and ising.energy([1]) == 1


def test_zero_qubo_gives_zero_ising():
    ising = to_ising(QuboModel(n_vars=3, coeffs={}))
    assert ising.couplings == {} and ising.fields == [0, 0, 0] and ising.constant == 0


@settings(max_examples=80, deadline=None)
@given(small_qubos())
def test_ising_matches_on_every_corner(q):
    ising = to_ising(q)
    for x in itertools.product((0, 1), repeat=q.n_vars):
        z = [2 * b - 1 for b in x]
        assert ising.energy(z) == energy(q, x)


def test_brute_force_diag():
    bits, e, unique = brute_force_min(QuboModel(n_vars=2, coeffs={(0, 0): 1, (1, 1): 1}))
    assert bits == [0, 0] and e == 0 and unique


def test_brute_force_cap():
    with pytest.raises(CapExceeded):
        brute_force_min(QuboModel(n_vars=31, coeffs={}))
    with pytest.raises(CapExceeded):
        energy_table(QuboModel(n_vars=26, coeffs={}))


def test_brute_force_pmedian_n4():
    q = build_pmedian(PMED4)
    bits, e, _ = brute_force_min(q)
    assert e == 99
    assert [i for i in range(4) if bits[q.var_map.index("y", i)]] == [1, 2]


def test_brute_force_fcflp_aggregated():
    _, e, _ = brute_force_min(build_fcflp_aggregated(FCFLP1))
    assert e == 40


def _reference_min(q):
    best = None
    for x in itertools.product((0, 1), repeat=q.n_vars):
        e = energy(q, x)
        if best is None or e < best[1]:
            best = (list(x), e, 1)
        elif e == best[1]:
            best = (best[0], e, best[2] + 1)
    return best


@settings(max_examples=80, deadline=None)
@given(small_qubos(max_n=8))
def test_brute_force_matches_itertools(q):
    ref_bits, ref_e, count = _reference_min(q)
    bits, e, unique = brute_force_min(q)
    # itertools.product enumerates in lexicographic order, so the first hit is the tie-break winner
    assert (bits, e, unique) == (ref_bits, ref_e, count == 1)


@settings(max_examples=20, deadline=None)
@given(small_qubos(max_n=6), st.randoms(use_true_random=False))
def test_builder_insertion_order_is_irrelevant(q, rnd):
    items = list(q.coeffs.items())
    rnd.shuffle(items)
    assert QuboModel(n_vars=q.n_vars, coeffs=dict(items), offset=q.offset) == q


def test_brute_force_split_path():
    # 24 variables exercises the Gray-code outer loop over the high bits
    rng = np.random.default_rng(5)
    n = 24
    coeffs = {(i, j): int(rng.integers(-3, 4)) for i in range(n) for j in range(i, n)
              if rng.random() < 0.15}
    q = QuboModel(n_vars=n, coeffs=coeffs)
    table = energy_table(q)
    bits, e, unique = brute_force_min(q)
    assert e == table.min()
    assert unique == (np.count_nonzero(table == table.min()) == 1)
    winners = [index_to_bits(k, n) for k in np.flatnonzero(table == table.min())]
    assert bits == min(winners)


@settings(max_examples=40, deadline=None)
@given(small_qubos(max_n=6))
def test_energy_table_and_batch(q):
    table = energy_table(q)
    X = [index_to_bits(k, q.n_vars) for k in range(2**q.n_vars)]
    assert np.array_equal(table, energies(q, X))
    assert all(table[k] == energy(q, x) for k, x in enumerate(X))


def test_index_bits_round_trip():
    assert index_to_bits(6, 4) == [0, 1, 1, 0]
    assert bits_to_index([0, 1, 1, 0]) == 6


def test_export_import_json_round_trip():
    q = build_pmedian(PMED4)
    back = import_qubo(export_qubo(q, "json"))
    assert back == q


def test_export_empty_coo():
    text = export_qubo(QuboModel(n_vars=3, coeffs={}), "sparse-coo-text").decode()
    assert text.splitlines() == ["3 0"]


def test_export_aggregated_first_entry():
    text = export_qubo(build_fcflp_aggregated(FCFLP1), "sparse-coo-text").decode()
    assert text.splitlines()[1] == "0 0 648"


@settings(max_examples=40, deadline=None)
@given(small_qubos(max_n=6), st.sampled_from(["json", "sparse-coo-text"]))
def test_round_trip_preserves_energy(q, fmt):
    back = import_qubo(export_qubo(q, fmt))
    for x in itertools.product((0, 1), repeat=q.n_vars):
        assert energy(back, x) == energy(q, x)


def test_real_coefficients_round_trip():
    q = QuboModel(n_vars=2, coeffs={(0, 1): 0.25, (1, 1): -1.5}, offset=0.125)
    assert import_qubo(export_qubo(q, "sparse-coo-text")) == q


@pytest.mark.parametrize("text", ["", "3\n", "2 0\n0 1\n", "2 0\n0 0 1\n0 0 2\n", "2 0\n0 5 1\n",
                                  "{\"n_vars\": 2}"])
def test_import_errors(text):
    with pytest.raises(ParseError):
        import_qubo(text.encode())
