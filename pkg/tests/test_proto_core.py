from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import deg2_subgraph, has_cycle
from protolab.proto_core import (
    BaseMatrix,
    ProtographError,
    build_protograph,
    check_theorem1,
    deg2_edges,
    design_rate,
    parse_base_matrix,
)
from protolab.registry import REGISTRY, builtin


def base_matrices(max_rows=4, max_cols=5, max_entry=3):
    """Random valid base matrices (no empty rows or columns)."""

    @st.composite
    def draw(draw_):
        r = draw_(st.integers(1, max_rows))
        c = draw_(st.integers(1, max_cols))
        a = draw_(arrays(np.int64, (r, c), elements=st.integers(0, max_entry)))
        a[np.arange(r), np.arange(r) % c] += a.sum(axis=1) == 0
        a[np.arange(c) % r, np.arange(c)] += a.sum(axis=0) == 0
        return BaseMatrix(a)

    return draw()


def test_parse_example_matrix():
    b = parse_base_matrix("1 1 1 2\n1 1 1 1")
    assert (b.rows, b.cols) == (2, 4)
    assert b.entries[0, 3] == 2


def test_parse_comments_and_blank_lines():
    b = parse_base_matrix("# header\n1 2   # first row\n\n3 0\n")
    assert b.entries.tolist() == [[1, 2], [3, 0]]
    assert b.num_edges == 6


@pytest.mark.parametrize(
    "text",
    ["0", "", "   \n# only comment", "1 2\n3", "1 -1\n1 1", "1 x\n1 1", "1 1.5", "0 1\n0 1"],
)
def test_parse_rejects_bad_input(text):
    with pytest.raises(ProtographError):
        parse_base_matrix(text)


def test_base_matrix_is_immutable():
    b = BaseMatrix([[1, 2]])
    with pytest.raises(ValueError):
        b.entries[0, 0] = 5


def test_edge_numbering_of_example():
    p = build_protograph(builtin("ex-2x4"))
    assert p.num_edges == 9
    # 1-based edges 7, 8 join v4-c1 and edge 9 joins v4-c2
    assert (p.edge_var[6], p.edge_chk[6]) == (3, 0)
    assert (p.edge_var[7], p.edge_chk[7]) == (3, 0)
    assert (p.edge_var[8], p.edge_chk[8]) == (3, 1)
    assert sorted(p.ev(6) + 1) == [8, 9]
    assert sorted(p.ec(6) + 1) == [1, 3, 5, 8]


def test_single_edge_protograph():
    p = build_protograph(BaseMatrix([[1]]))
    assert p.num_edges == 1
    assert p.ev(0).size == 0 and p.ec(0).size == 0


@pytest.mark.parametrize(
    "name, rate",
    [("r12-16x32", Fraction(1, 2)), ("ex-2x4", Fraction(1, 2)), ("r34-3x12", Fraction(3, 4)), ("r23-4x12", Fraction(2, 3))],
)
def test_design_rate(name, rate):
    assert design_rate(builtin(name)) == rate


@given(base_matrices())
def test_neighbourhood_contract(b):
    p = build_protograph(b)
    assert p.num_edges == b.entries.sum()
    assert p.bit_degree.sum() == p.check_degree.sum() == p.num_edges
    for e in range(p.num_edges):
        ev = {i for i in range(p.num_edges) if p.edge_var[i] == p.edge_var[e] and i != e}
        ec = {i for i in range(p.num_edges) if p.edge_chk[i] == p.edge_chk[e] and i != e}
        assert set(p.ev(e).tolist()) == ev
        assert set(p.ec(e).tolist()) == ec
        assert len(ev) == p.edge_l(e) - 1
        assert len(ec) == p.edge_r(e) - 1


@given(base_matrices())
def test_canonical_order_and_roundtrip(b):
    p = build_protograph(b)
    keys = list(zip(p.edge_var.tolist(), p.edge_chk.tolist()))
    assert keys == sorted(keys)
    assert p.to_base_matrix() == b


@given(base_matrices(max_rows=3, max_cols=4, max_entry=2))
def test_theorem1_matches_forest_oracle(b):
    if b.num_edges > 12:
        return
    rep = check_theorem1(b)
    assert rep.deg2_cycle_free == (not has_cycle(deg2_subgraph(b.entries)))
    ent = b.entries
    deg = ent.sum(axis=0)
    attached = all(
        any(deg[u] >= 3 and ent[c, u] > 0 for c in np.flatnonzero(ent[:, v]) for u in range(b.cols))
        for v in np.flatnonzero(deg == 2)
    )
    assert rep.every_deg2_touches_deg3plus == attached
    assert rep.deg2_count == int((deg == 2).sum())


def test_theorem1_example_witness():
    rep = check_theorem1(builtin("ex-2x4"))
    assert not rep.deg2_cycle_free
    assert rep.cycle_witness == [("v", 0), ("c", 0), ("v", 1), ("c", 1), ("v", 0)]
    assert "v1-c1-v2-c2-v1" in rep.describe()


def test_theorem1_single_bit_two_checks():
    rep = check_theorem1(BaseMatrix([[1], [1]]))
    assert rep.deg2_cycle_free
    assert not rep.every_deg2_touches_deg3plus
    assert rep.isolated_deg2 == [0]


def test_theorem1_parallel_edges_are_a_cycle():
    rep = check_theorem1(BaseMatrix([[2, 3]]))
    assert not rep.deg2_cycle_free
    assert rep.cycle_witness[0] == rep.cycle_witness[-1]


def test_theorem1_on_rate_half_4x8():
    b = builtin("r12-4x8")
    assert sorted(np.flatnonzero(b.column_sums() == 2) + 1) == [6, 8]
    assert check_theorem1(b).ok


def test_largest_registry_matrix_has_degree2_cycle():
    # the tree condition is sometimes claimed for this matrix; it does not hold
    rep = check_theorem1(builtin("r12-16x32"))
    assert not rep.deg2_cycle_free
    assert rep.cycle_witness == [("v", 8), ("c", 5), ("v", 19), ("c", 12), ("v", 8)]


def test_registry_contents():
    sums = {name: e.matrix.num_edges for name, e in REGISTRY.items()}
    assert sums["r23-4x12"] == 61 and sums["r34-3x12"] == 61 and sums["r12-16x32"] == 173
    assert sums["awgn-r23-4x12"] == 67 and sums["awgn-r34-3x12"] == 71
    for e in REGISTRY.values():
        assert e.matrix.is_design_candidate()
        if e.lift_q:
            assert e.matrix.num_edges == e.lift_q
            assert e.blocklength == e.lift_q**2 * e.matrix.cols
    with pytest.raises(KeyError):
        builtin("nope")


def test_deg2_edges():
    p = build_protograph(builtin("ex-2x4"))
    assert deg2_edges(p).tolist() == [0, 1, 2, 3, 4, 5]
