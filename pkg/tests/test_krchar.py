from collections import Counter

import numpy as np
import pytest

from krqchar.cartan import cartan_data
from krqchar.krchar import (
    KREngine,
    deep_shift,
    dimension,
    engine_for,
    highest_monomial,
    is_dominant,
    kr_location,
    kr_qcharacter,
    lowest_monomial,
    lowest_monomial_check,
    mutation_budget,
    truncate_to_Yminus,
    verify_periodicity,
    weight_span,
)
from krqchar.laurent import LaurentPoly, Y
from krqchar.quiverbuild import Vertex, in_w

from oracles import fm_character, weyl_dimension

FUND_TYPES = ["A1", "A2", "A3", "A4", "B2", "B3", "C3", "D4", "G2"]


def _shift(cd, i, r):
    return r if in_w(cd, i, r) else r - 1


@pytest.mark.parametrize("label", FUND_TYPES)
def test_fundamental_characters_match_frenkel_mukhin(label):
    cd = cartan_data(label)
    eng = engine_for(cd)
    for i in cd.nodes:
        r = _shift(cd, i, -10)
        assert eng.complete(i, 1, r) == fm_character(cd, i, r)


@pytest.mark.parametrize("label", ["A2", "A3", "A4"])
def test_type_a_kr_modules_are_irreducible_for_g(label):
    cd = cartan_data(label)
    for i in cd.nodes:
        for k in (1, 2, 3):
            chi = kr_qcharacter(cd, (i, k, _shift(cd, i, -14)))
            assert dimension(chi) == weyl_dimension(cd, [k * int(j == i) for j in cd.nodes])


def _weights(cd, chi):
    out = Counter()
    for c, exps in chi.terms():
        w = [0] * cd.rank
        for var, e in exps:
            w[var.node - 1] += e
        out[tuple(w)] += c
    return out


@pytest.mark.parametrize("label", ["A3", "B2", "C3", "G2"])
@pytest.mark.parametrize("k", [1, 2])
def test_weight_multiset_is_weyl_invariant(label, k):
    cd = cartan_data(label)
    C = np.array(cd.C)
    for i in cd.nodes:
        wts = _weights(cd, kr_qcharacter(cd, (i, k, _shift(cd, i, -16))))
        for j in range(cd.rank):
            # s_j(lambda) = lambda - lambda_j alpha_j, alpha_j = column j of C in w-coordinates
            img = Counter({tuple(int(x) for x in np.array(w) - w[j] * C[:, j]): m for w, m in wts.items()})
            assert img == wts


@pytest.mark.parametrize("label", ["A3", "B2", "B3", "C3", "G2"])
@pytest.mark.parametrize("k", [1, 2])
def test_highest_monomial_positivity_and_dominance(label, k):
    cd = cartan_data(label)
    for i in cd.nodes:
        r = _shift(cd, i, -16)
        chi = kr_qcharacter(cd, (i, k, r))
        top = highest_monomial(cd, i, k, r)
        assert chi.coefficient(top.exponent_dict()) == 1
        assert all(c > 0 for c, _ in chi.terms())
        dominant = [m for m in chi.monomials() if is_dominant(m)]
        if k == 1:
            assert dominant == [top]


@pytest.mark.parametrize("label", ["A3", "B2", "G2", "C3"])
def test_spectral_shift_equivariance(label):
    cd = cartan_data(label)
    for i in cd.nodes:
        r = _shift(cd, i, -12)
        a = kr_qcharacter(cd, (i, 2, r))
        b = kr_qcharacter(cd, (i, 2, r - 2 * cd.t))
        assert b.shift(2 * cd.t) == a


def test_glossary_lowest_monomials():
    b2, a3 = cartan_data("B2"), cartan_data("A3")
    assert lowest_monomial(kr_qcharacter(b2, (2, 1, -8))) == Y(2, -2, -1)
    assert lowest_monomial(kr_qcharacter(a3, (1, 1, -5))) == Y(3, -1, -1)
    a1 = cartan_data("A1")
    assert kr_qcharacter(a1, (1, 1, -6)) == Y(1, -6) + Y(1, -4, -1)


@pytest.mark.parametrize("label", ["A3", "B2", "B3", "C3", "D4", "G2"])
def test_lowest_monomial_check(label):
    cd = cartan_data(label)
    for i in cd.nodes:
        assert lowest_monomial_check(cd, i, _shift(cd, i, -10))


@pytest.mark.parametrize("backend", ["direct", "separated", "flint"])
def test_backends_agree(backend):
    cd = cartan_data("B2")
    eng = KREngine(cd, backend)
    ref = engine_for(cd)
    for lab in [(1, 1, -7), (2, 1, -8), (1, 2, -11), (2, 2, -10)]:
        assert eng.complete(*lab) == ref.complete(*lab)


def test_truncated_character_is_truncation_of_complete():
    cd = cartan_data("B2")
    eng = engine_for(cd)
    for (i, k, s) in [(1, 1, -3), (2, 1, -2), (2, 2, -4), (1, 2, -7)]:
        assert eng.truncated(i, k, s) == truncate_to_Yminus(eng.complete(i, k, s))


def test_level_zero_is_one():
    assert kr_qcharacter(cartan_data("A2"), (1, 0, -4)) == LaurentPoly.one()


def test_kr_location():
    cd = cartan_data("B2")
    assert kr_location(cd, 1, 1, -5) == (Vertex(1, -1), 1)
    assert kr_location(cd, 2, 2, -8) == (Vertex(2, -2), 3)
    with pytest.raises(ValueError):
        kr_location(cd, 1, 2, -3)
    with pytest.raises(ValueError):
        kr_location(cd, 1, 1, -4)
    with pytest.raises(ValueError):
        kr_location(cd, 1, 0, -5)


def test_deep_shift_is_complete_and_shallowest():
    cd = cartan_data("B2")
    for i in cd.nodes:
        for k in (1, 2):
            s = deep_shift(cd, i, k, _shift(cd, i, 0))
            assert in_w(cd, i, s)
            assert s + (k - 1) * cd.bii(i) + cd.t * cd.h_dual <= 0
            assert s + 2 + (k - 1) * cd.bii(i) + cd.t * cd.h_dual > 0


def test_weight_span():
    # w_1 + w_3 = alpha_1 + alpha_2 + alpha_3 in A3
    assert weight_span(cartan_data("A3"), 1, 1) == {1: 1, 2: 1, 3: 1}
    assert weight_span(cartan_data("A3"), 2, 2) == {1: 2, 2: 4, 3: 2}


def test_mutation_budget_formula():
    # (h' + 2l - 1) h' n / 2 with h' = ceil(h/2)
    assert mutation_budget(cartan_data("A3"), 1) == (2 + 1) * 2 * 3 // 2
    assert mutation_budget(cartan_data("B2"), 3) == (2 + 5) * 2 * 2 // 2
    with pytest.raises(ValueError):
        mutation_budget(cartan_data("A3"), 0)


@pytest.mark.parametrize("label", ["A1", "A2", "B2"])
def test_periodicity_small(label):
    rep = verify_periodicity(cartan_data(label), passes=2)
    assert rep.ok, rep.failures
    assert rep.to_json_obj()["ok"]


def test_bad_mode_and_parity():
    cd = cartan_data("A3")
    with pytest.raises(ValueError):
        kr_qcharacter(cd, (1, 1, -5), mode="bogus")
    with pytest.raises(ValueError):
        kr_qcharacter(cd, (2, 1, -5))
    with pytest.raises(ValueError):
        KREngine(cd, "nope")
