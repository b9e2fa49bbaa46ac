from collections import Counter

import pytest

from krqchar.cartan import cartan_data
from krqchar.quiverbuild import (
    Vertex,
    build_g_minus,
    build_gamma_minus,
    build_gamma_tilde_window,
    column_index,
    column_order,
    columns,
    default_depth,
    in_v,
    in_w,
    mutation_schedule,
    psi,
    psi_inv,
    w_parity,
)

TYPES = ["A1", "A2", "A3", "A4", "B2", "B3", "C3", "D4", "F4", "G2"]


@pytest.mark.parametrize("label", TYPES)
def test_gamma_minus_is_a_component_of_the_full_window(label):
    cd = cartan_data(label)
    depth = -6 * cd.t * cd.h_dual
    gm = build_gamma_minus(cd, depth, guard=0)
    lo = min(x.shift for x in gm.vertices)
    full = build_gamma_tilde_window(cd, lo, 0)
    keep = [x for x in full.vertices if in_v(cd, x.node, x.shift) and depth <= psi(cd, x).shift <= 0]
    assert set(keep) == gm.vertices
    assert full.restrict(keep).same_arrows(gm)
    # no arrow of the full window joins the two parity classes
    for (u, w), _m in full.arrows().items():
        assert in_v(cd, *u) == in_v(cd, *w)


@pytest.mark.parametrize("label", TYPES)
def test_w_arrows(label):
    cd = cartan_data(label)
    q = build_g_minus(cd, -4 * cd.t * cd.h_dual, guard=0)
    for (u, w), m in q.arrows().items():
        assert m == 1
        if u.node == w.node:
            assert w.shift == u.shift + cd.bii(u.node)
        else:
            assert cd.c(u.node, w.node) != 0
            assert w.shift == u.shift + cd.b(u.node, w.node) + cd.di(w.node) - cd.di(u.node)


def test_anchor_parity():
    assert w_parity(cartan_data("A3"))[2] == 0
    assert w_parity(cartan_data("A3"))[1] == 1
    assert w_parity(cartan_data("B2")) == {2: 0, 1: 1}
    assert w_parity(cartan_data("G2"))[2] == 0


def test_b2_window_matches_drawing():
    cd = cartan_data("B2")
    q = build_g_minus(cd, -8, guard=0)
    V = Vertex
    expected = {
        (V(2, -8), V(2, -6)), (V(2, -6), V(2, -4)), (V(2, -4), V(2, -2)), (V(2, -2), V(2, 0)),
        (V(1, -5), V(1, -1)), (V(1, -7), V(1, -3)),
        (V(2, 0), V(1, -1)), (V(2, -4), V(1, -5)), (V(1, -1), V(2, -4)), (V(1, -5), V(2, -8)),
        (V(2, -2), V(1, -3)), (V(1, -3), V(2, -6)), (V(2, -6), V(1, -7)),
    }
    assert set(q.arrows()) == expected


@pytest.mark.parametrize("label", TYPES)
def test_psi_round_trip(label):
    cd = cartan_data(label)
    for i in cd.nodes:
        for r in range(-12, 1):
            assert psi_inv(cd, psi(cd, (i, r))) == (i, r)
            assert in_v(cd, i, r) == in_w(cd, i, r + cd.di(i))


@pytest.mark.parametrize("label", TYPES)
def test_columns_and_indices(label):
    cd = cartan_data(label)
    tops = columns(cd)
    assert Counter(x.node for x in tops) == Counter({i: cd.di(i) for i in cd.nodes})
    for top in tops:
        assert column_index(cd, top.node, top.shift) == 1
        assert column_index(cd, top.node, top.shift - 3 * cd.bii(top.node)) == 4
    with pytest.raises(ValueError):
        column_index(cd, 1, 2)


@pytest.mark.parametrize("label", TYPES)
def test_schedule_visits_each_vertex_t_over_d_times(label):
    cd = cartan_data(label)
    order = column_order(cd)
    assert len(order) == cd.t * cd.n
    assert Counter(x.node for x in order) == Counter({i: cd.t for i in cd.nodes})
    depth = default_depth(cd, 1, 1)
    q = build_g_minus(cd, depth)
    seq = mutation_schedule(cd, depth, q).sequence
    counts = Counter(seq)
    assert set(counts) == q.mutable()
    for x, c in counts.items():
        assert c == cd.t // cd.di(x.node)


def test_depth_must_be_negative():
    with pytest.raises(ValueError):
        build_g_minus(cartan_data("A2"), 0)


def test_mutation_of_quiver_is_involutive():
    q = build_g_minus(cartan_data("B3"), -30, guard=0)
    x = Vertex(2, -11) if Vertex(2, -11) in q.vertices else sorted(q.vertices)[5]
    p = q.copy()
    p.mutate(x)
    assert not p.same_arrows(q)
    p.mutate(x)
    assert p.same_arrows(q)


def test_exports():
    q = build_g_minus(cartan_data("A2"), -6)
    assert q.to_dot().startswith("digraph")
    obj = q.to_json_obj()
    assert set(obj) >= {"vertices", "arrows"}
