import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vce.genus1 import (
    CharacterValue,
    InsertionList,
    _direct_numerator,
    one_point_series,
    reduction_trace,
    trace_n_point_direct,
    trace_one_point,
    zhu_reduce,
)
from vce.modforms import eisenstein, partition_count, weierstrass_p_direct
from vce.qseries import Q, TruncSeries, first_mismatch
from vce.voa import CutoffError, VoaState, weight_basis


def build(states, q_order=4, z_order=3):
    return InsertionList.build([(s, f"z{i + 1}") for i, s in enumerate(states)], q_order, z_order)


def test_vacuum_character_counts_partitions():
    z = trace_one_point(VoaState(()), 8)
    assert z.prefactor_exp == Q(-1, 24)
    assert [int(c) for c in z.body.coeffs] == [partition_count(n) for n in range(9)]


def test_one_point_of_heisenberg_field_vanishes():
    assert trace_one_point(VoaState((1,)), 6).body.is_zero()


def test_one_point_of_conformal_vector_is_weighted_dimension():
    omega = {(1, 1): Q(1, 2)}
    z = trace_one_point(omega, 8)
    assert list(z.body.coeffs) == [n * partition_count(n) for n in range(9)]


def test_one_point_cutoff():
    with pytest.raises(CutoffError):
        trace_one_point(VoaState((3, 2)), 4)


def test_zero_and_one_point_direct_traces():
    empty = InsertionList.build([], 5)
    assert trace_n_point_direct(empty).body == trace_one_point(VoaState(()), 5).body
    single = build([(2, 1, 1)], q_order=6)
    assert trace_n_point_direct(single) == trace_one_point(VoaState((2, 1, 1)), 6)
    assert zhu_reduce(single) == trace_one_point(VoaState((2, 1, 1)), 6)


def test_two_point_heisenberg_equals_p2_times_character():
    ins = build([(1,), (1,)], q_order=6, z_order=4)
    direct = trace_n_point_direct(ins).body
    char = one_point_series({(): Q(1)}, 6)
    p2 = weierstrass_p_direct(2, 4, 6)
    closed = TruncSeries("z1-z2", p2.lowest, [c * char for c in p2.coeffs], p2.order)
    assert first_mismatch(direct, closed) is None
    # the z^0 term is E_2 * Z once; adding a further E_2 * Z would double it
    assert direct[0] == eisenstein(2, 6).expansion * char


def test_two_point_reduction_pairs():
    ins = build([(1,), (1,)], q_order=5, z_order=3)
    red = reduction_trace(ins, 0)
    terms = dict(red.terms)
    assert set(terms) == {(), (1, 1)}
    assert dict(terms[()]) == {(("P", 2, "z1", "z2"),): 1, (("E", 2),): -1, (): Q(-1, 12)}
    assert dict(terms[(1, 1)]) == {(): 1}
    assert red.reconstruct(5, (3,)) == trace_n_point_direct(ins)
    pairs = red.pairs(5, (3,))
    assert [w.partition for w, _ in pairs] == [(), (1, 1)]


def test_single_vacuum_reduction():
    red = reduction_trace(build([()]), 0)
    assert red.terms == (((), (((), Q(1)),)),)


def test_anchor_swap_changes_pairs_not_value():
    ins = build([(1,), (2,), (1,)], q_order=4, z_order=2)
    reds = [reduction_trace(ins, a) for a in range(3)]
    assert len({r.terms for r in reds}) > 1
    values = [r.reconstruct(4, (2, 2)) for r in reds]
    assert values[0] == values[1] == values[2] == trace_n_point_direct(ins)


state_choices = [p for w in range(0, 4) for p in weight_basis(w)]


@st.composite
def small_vectors(draw):
    weight = draw(st.integers(0, 2))
    parts = weight_basis(weight)
    coeffs = draw(st.lists(st.integers(-2, 2), min_size=len(parts), max_size=len(parts)))
    vec = {p: Q(c) for p, c in zip(parts, coeffs) if c}
    return vec or {parts[0]: Q(1)}


@settings(max_examples=25)
@given(st.lists(small_vectors(), min_size=2, max_size=3))
def test_recursion_matches_direct_trace_for_every_anchor(vectors):
    ins = build(vectors, q_order=3, z_order=2)
    direct = trace_n_point_direct(ins)
    for anchor in range(len(vectors)):
        assert direct.mismatch(zhu_reduce(ins, anchor)) is None


@settings(max_examples=15)
@given(st.sampled_from(state_choices), st.sampled_from(state_choices))
def test_two_point_permutation_symmetry(u, v):
    forward = trace_n_point_direct(build([u, v], q_order=4, z_order=3)).body
    ins_back = InsertionList.build([(v, "z2"), (u, "z1")], 4, 3)
    backward = trace_n_point_direct(ins_back).body
    # z2 - z1 = -(z1 - z2)
    flipped = TruncSeries("z1-z2", backward.lowest, backward.coeffs, backward.order).substitute_scale(-1)
    assert first_mismatch(forward, flipped) is None


@pytest.mark.parametrize("lams", [((1,), (1,)), ((2,), (1,), (1,)), ((1, 1), (2,)), ((1,), (), (2, 1))])
@pytest.mark.parametrize("N", [0, 2, 3])
def test_numerator_support_bound(lams, N):
    assert _direct_numerator(lams, N, 3) == _direct_numerator(lams, N, 0)


def test_requested_orders_are_met_exactly():
    ins = build([(1,), (2,), (1, 1)], q_order=3, z_order=(2, 3))
    body = trace_n_point_direct(ins).body
    assert body.orders() == [2, 3, 3]
    assert zhu_reduce(ins, 2).body.orders() == [2, 3, 3]


def test_character_value_json_round_trip():
    value = zhu_reduce(build([(1,), (1,)], q_order=3, z_order=2))
    data = value.to_json()
    assert data["vars"] == ["z1-z2", "q"] and data["prefactor_exp"] == "-1/24"
    assert CharacterValue.from_json(data) == value


def test_duplicate_labels_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        InsertionList.build([((1,), "z"), ((1,), "z")], 3)


def test_cutoff_checked():
    ins = build([(3, 3)], q_order=4)
    with pytest.raises(CutoffError):
        trace_n_point_direct(ins, 4)
    with pytest.raises(CutoffError):
        zhu_reduce(ins, 0, 4)


def test_anchor_out_of_range():
    with pytest.raises(IndexError):
        reduction_trace(build([(1,), (1,)]), 2)
