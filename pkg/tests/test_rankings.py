import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acteval.base import DomainError
from acteval.rankings import (
    AgreAccumulator,
    GreParams,
    Ranking,
    agre_update,
    alpha,
    generalized_ranking_error,
    kendall_tau,
    normalized_kendall_tau,
    top_k_identification_error,
)

from .conftest import brute_kendall_tau


def permutations(max_size: int = 9):
    return st.integers(min_value=2, max_value=max_size).flatmap(
        lambda m: st.permutations(list(range(m)))
    )


def test_ranking_rejects_duplicates_and_empty():
    with pytest.raises(DomainError):
        Ranking([0, 1, 1])
    with pytest.raises(DomainError):
        Ranking([])


def test_ranking_is_immutable():
    r = Ranking([1, 0])
    with pytest.raises(AttributeError):
        r.order = (0, 1)


def test_from_scores_breaks_ties_by_index():
    assert Ranking.from_scores([1.0, 3.0, 3.0, 0.5]) == Ranking([1, 2, 0, 3])
    assert Ranking.from_scores([0.0, 0.0, 0.0]) == Ranking.identity(3)


def test_csv_field_form():
    r = Ranking([3, 0, 2, 1])
    assert str(r) == "3,0,2,1"
    assert Ranking.parse("3,0,2,1") == r
    with pytest.raises(DomainError):
        Ranking.parse("3,x,1")


def test_restrict_keeps_relative_order():
    r = Ranking([4, 2, 0, 3, 1])
    assert r.restrict([0, 1, 2]) == Ranking([2, 0, 1])
    with pytest.raises(DomainError):
        r.restrict([5])


def test_kendall_tau_examples():
    r1 = Ranking([3, 0, 2, 1])
    assert kendall_tau(r1, r1) == 0
    assert kendall_tau(r1, Ranking([0, 1, 2, 3])) == 4
    assert kendall_tau(Ranking([1, 0]), Ranking([0, 2, 1])) == 1


def test_kendall_tau_missing_agent():
    with pytest.raises(DomainError):
        kendall_tau(Ranking([0, 3]), Ranking([0, 1, 2]))


def test_normalized_kendall_tau_examples():
    assert normalized_kendall_tau(Ranking([3, 2, 1, 0]), Ranking([0, 1, 2, 3])) == 1.0
    assert normalized_kendall_tau(Ranking([0, 1, 2, 3]), Ranking([0, 1, 2, 3])) == 0.0
    assert normalized_kendall_tau(Ranking([3, 0, 2, 1]), Ranking([0, 1, 2, 3])) == pytest.approx(4 / 6)
    # one element: no pairs
    assert normalized_kendall_tau(Ranking([2]), Ranking([0, 1, 2])) == 0.0


@given(permutations(), st.randoms())
@settings(max_examples=200, deadline=None)
def test_kendall_tau_matches_pair_enumeration(order, random):
    other = list(order)
    random.shuffle(other)
    r1, r2 = Ranking(order), Ranking(other)
    assert kendall_tau(r1, r2) == brute_kendall_tau(r1, r2)
    assert kendall_tau(r1, r2) == kendall_tau(r2, r1)


@given(permutations(), st.randoms())
@settings(max_examples=100, deadline=None)
def test_kendall_tau_is_a_metric(order, random):
    a = Ranking(order)
    rest = [list(order), list(order)]
    for r in rest:
        random.shuffle(r)
    b, c = Ranking(rest[0]), Ranking(rest[1])
    assert kendall_tau(a, a) == 0
    assert kendall_tau(a, c) <= kendall_tau(a, b) + kendall_tau(b, c)
    assert 0.0 <= normalized_kendall_tau(a, b) <= 1.0


def test_identification_error_examples():
    gt = Ranking([0, 1, 2, 3, 4])
    assert top_k_identification_error(Ranking([2, 0, 1, 3, 4]), gt, 3) == 0.0
    assert top_k_identification_error(Ranking([0, 1, 3, 2, 4]), gt, 3) == pytest.approx(1 / 3)
    assert top_k_identification_error(Ranking([4, 3, 2, 1, 0]), gt, 5) == 0.0


def test_identification_error_rejects_bad_cutoff():
    gt = Ranking([0, 1, 2])
    with pytest.raises(DomainError):
        top_k_identification_error(gt, gt, 0)
    with pytest.raises(DomainError):
        generalized_ranking_error(gt, gt, 4)


def test_alpha_endpoints():
    assert alpha(1, 8) == 1.0
    assert alpha(8, 8) == 0.0
    assert alpha(3, 8) == pytest.approx(5 / 7)
    assert GreParams(3, 8).alpha == pytest.approx(5 / 7)
    with pytest.raises(DomainError):
        GreParams(0, 8)


def test_gre_k1_is_top_identification():
    gt = Ranking([0, 1, 2, 3])
    assert generalized_ranking_error(Ranking([0, 3, 2, 1]), gt, 1) == 0.0
    assert generalized_ranking_error(Ranking([1, 0, 2, 3]), gt, 1) == 1.0


def test_gre_mixed_example():
    # m = 8, k = 3: top-3 {0, 1, 2} vs {0, 2, 7}, IDE = 1/3; 0, 1, 2 ordered as 0, 2, 1 in r
    gt = Ranking(range(8))
    r = Ranking([0, 2, 7, 1, 3, 4, 5, 6])
    assert top_k_identification_error(r, gt, 3) == pytest.approx(1 / 3)
    assert normalized_kendall_tau(r.restrict(gt.top(3)), gt) == pytest.approx(1 / 3)
    assert generalized_ranking_error(r, gt, 3) == pytest.approx(1 / 3)


@given(permutations(), st.randoms(), st.data())
@settings(max_examples=150, deadline=None)
def test_gre_identities(order, random, data):
    other = list(order)
    random.shuffle(other)
    r, gt = Ranking(other), Ranking(order)
    m = len(order)
    k = data.draw(st.integers(min_value=1, max_value=m))

    assert generalized_ranking_error(r, gt, m) == pytest.approx(normalized_kendall_tau(r, gt))
    assert generalized_ranking_error(r, gt, 1) == top_k_identification_error(r, gt, 1)
    assert generalized_ranking_error(gt, gt, k) == 0.0
    assert 0.0 <= generalized_ranking_error(r, gt, k) <= 1.0


def test_agre_accumulator_examples():
    acc = AgreAccumulator()
    for _ in range(3):
        acc.push(0.0)
    assert acc.mean == 0.0

    acc = AgreAccumulator()
    agre_update(agre_update(acc, 1.0), 0.0)
    assert acc.mean == 0.5
    assert acc.count == 2


def test_agre_accumulator_window():
    acc = AgreAccumulator(window_size=2)
    for value in (1.0, 0.0, 0.5):
        acc.push(value)
    assert acc.window_mean == pytest.approx(0.25)
    assert acc.mean == pytest.approx(0.5)


def test_agre_accumulator_rejects_out_of_range():
    with pytest.raises(DomainError):
        AgreAccumulator().push(1.5)
    with pytest.raises(DomainError):
        AgreAccumulator(window_size=0)


@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=200))
def test_agre_matches_two_pass_mean(values):
    acc = AgreAccumulator()
    for value in values:
        acc.push(value)
    assert acc.mean == pytest.approx(math.fsum(values) / len(values))


def test_position_array():
    assert np.array_equal(Ranking([2, 0, 1]).position_array(), [1, 2, 0])
