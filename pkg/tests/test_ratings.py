import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acteval.base import DomainError
from acteval.datagen import sample_mallows
from acteval.rankings import Ranking
from acteval.ratings import (
    ELO_BASE,
    EloState,
    Outcome,
    Preference,
    ScoState,
    elo_batch_fit,
    elo_expected,
    elo_online_update,
    preferences_from_rankings,
    sco_batch_fit,
    sco_gradient,
    sco_loss,
    sco_online_update,
)

ratings_st = st.floats(min_value=-1000.0, max_value=1000.0)


def test_outcome_from_scores():
    assert Outcome.from_scores(2.0, 1.0) is Outcome.WIN_I
    assert Outcome.from_scores(1.0, 2.0) is Outcome.WIN_J
    assert Outcome.from_scores(1.0, 1.0) is Outcome.DRAW
    assert [o.score for o in Outcome] == [1.0, 0.0, 0.5]


def test_elo_expected_examples():
    assert elo_expected(1500.0, 1500.0) == 0.5
    assert elo_expected(1900.0, 1500.0) == pytest.approx(10 / 11)


@given(ratings_st, ratings_st, st.floats(min_value=1.0, max_value=500.0))
def test_elo_expected_is_monotone(theta_i, theta_j, gain):
    assert elo_expected(theta_i + gain, theta_j) > elo_expected(theta_i, theta_j)
    assert elo_expected(theta_i, theta_j) + elo_expected(theta_j, theta_i) == pytest.approx(1.0)


def test_online_elo_examples():
    state = EloState.create(2)
    elo_online_update(state, 0, 1, Outcome.DRAW)
    assert list(state.ratings) == [1500.0, 1500.0]

    elo_online_update(state, 0, 1, Outcome.WIN_I)
    assert list(state.ratings) == [1516.0, 1484.0]


def test_online_elo_rejects_self_play():
    with pytest.raises(DomainError):
        elo_online_update(EloState.create(3), 1, 1, Outcome.WIN_I)
    with pytest.raises(DomainError):
        EloState.create(3, k_factor=0.0)


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.sampled_from(list(Outcome))), max_size=50))
def test_online_elo_conserves_total(games):
    state = EloState.create(4)
    for i, j, outcome in games:
        if i != j:
            elo_online_update(state, i, j, outcome)
    assert state.ratings.sum() == pytest.approx(4 * ELO_BASE)


def test_elo_state_record():
    state = EloState.create(3)
    state.record(0, 2, Outcome.WIN_I)
    state.record(0, 2, Outcome.DRAW)
    assert state.wins[0, 2] == 1.5
    assert state.wins[2, 0] == 0.5


def test_batch_elo_head_to_head():
    wins = np.array([[0.0, 3.0], [1.0, 0.0]])
    fit = elo_batch_fit(wins)
    gap = fit.ratings[0] - fit.ratings[1]
    assert fit.converged
    # half a virtual draw shrinks 3-1 to 3.25-1.25
    assert gap == pytest.approx(400.0 * math.log10(3.25 / 1.25), abs=1e-3)
    assert gap < 400.0 * math.log10(3.0)
    assert fit.ratings.mean() == pytest.approx(ELO_BASE)


def test_batch_elo_symmetric_tallies():
    wins = np.full((4, 4), 5.0)
    np.fill_diagonal(wins, 0.0)
    assert np.allclose(elo_batch_fit(wins).ratings, ELO_BASE)


def test_batch_elo_recovers_generating_order(rng):
    truth = np.array([1300.0, 1700.0, 1500.0, 1400.0, 1600.0])
    wins = np.zeros((5, 5))
    for _ in range(10000):
        i, j = rng.choice(5, size=2, replace=False)
        if rng.random() < elo_expected(truth[i], truth[j]):
            wins[i, j] += 1
        else:
            wins[j, i] += 1
    fit = elo_batch_fit(wins)
    assert Ranking.from_scores(fit.ratings) == Ranking.from_scores(truth)


def test_batch_elo_reports_non_convergence():
    wins = np.array([[0.0, 9.0, 1.0], [1.0, 0.0, 4.0], [2.0, 3.0, 0.0]])
    fit = elo_batch_fit(wins, iterations=1, tolerance=0.0)
    assert not fit.converged
    assert fit.iterations == 1


def test_batch_elo_warm_start_reaches_same_fit():
    wins = np.array([[0.0, 9.0, 1.0], [1.0, 0.0, 4.0], [2.0, 3.0, 0.0]])
    cold = elo_batch_fit(wins, tolerance=1e-10)
    warm = elo_batch_fit(wins, tolerance=1e-10, initial=cold.ratings + 50.0)
    assert np.allclose(cold.ratings, warm.ratings, atol=1e-4)
    assert warm.iterations <= cold.iterations


@pytest.mark.parametrize("wins", [
    np.zeros((1, 1)),
    np.zeros((2, 3)),
    np.array([[0.0, -1.0], [1.0, 0.0]]),
])
def test_batch_elo_validation(wins):
    with pytest.raises(DomainError):
        elo_batch_fit(wins)


def test_sco_gradient_single_preference():
    grad = sco_gradient(np.zeros(2), [Preference(0, 1)], temperature=2.0)
    assert np.allclose(grad, [-0.125, 0.125])
    assert sco_loss(np.zeros(2), [Preference(0, 1)]) == 0.5


def test_sco_gradient_weights():
    observations = [Preference(0, 1, 3.0)]
    assert np.allclose(sco_gradient(np.zeros(2), observations), [-0.75, 0.75])


@st.composite
def sco_problems(draw, m=4):
    thetas = draw(st.lists(st.floats(min_value=-3.0, max_value=3.0), min_size=m, max_size=m))
    pairs = st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)).filter(lambda p: p[0] != p[1])
    preferences = [
        Preference(winner, loser, draw(st.floats(min_value=0.1, max_value=3.0)))
        for winner, loser in draw(st.lists(pairs, min_size=1, max_size=8))
    ]
    temperature = draw(st.floats(min_value=0.5, max_value=2.0))
    return np.array(thetas), preferences, temperature


@given(sco_problems())
@settings(max_examples=100, deadline=None)
def test_sco_gradient_matches_finite_differences(problem):
    thetas, preferences, temperature = problem
    h = 1e-5
    numeric = np.empty(len(thetas))
    for a in range(len(thetas)):
        step = np.zeros(len(thetas))
        step[a] = h
        numeric[a] = (sco_loss(thetas + step, preferences, temperature)
                      - sco_loss(thetas - step, preferences, temperature)) / (2 * h)
    assert np.allclose(sco_gradient(thetas, preferences, temperature), numeric, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("seed", range(10))
def test_sco_batch_loss_does_not_increase(seed):
    rng = np.random.default_rng(seed)
    center = Ranking(rng.permutation(5))
    votes = [sample_mallows(center, 0.5, rng) for _ in range(8)]
    state = ScoState.create(5, learning_rate=0.001)

    losses = [sco_loss(state.ratings, votes)]
    for _ in range(15):
        sco_batch_fit(votes, state, epochs=1, rng=rng)
        losses.append(sco_loss(state.ratings, votes))
    assert all(after <= before + 1e-9 for before, after in zip(losses, losses[1:]))


def test_sco_online_maximal_slope_at_equal_ratings():
    state = ScoState.create(2, temperature=1.0, learning_rate=0.01)
    sco_online_update(state, 0, 1, 1)
    assert np.allclose(state.ratings, [-0.0025, 0.0025])


def test_sco_online_saturates():
    state = ScoState(np.array([50.0, 0.0]))
    sco_online_update(state, 0, 1, 0)
    assert abs(state.ratings[0] - 50.0) < 1e-12


def test_sco_online_validation():
    state = ScoState.create(3)
    with pytest.raises(DomainError):
        sco_online_update(state, 1, 1, 1)
    with pytest.raises(DomainError):
        sco_online_update(state, 0, 1, 2)
    with pytest.raises(DomainError):
        ScoState.create(3, temperature=0.0)


def test_sco_online_unanimous_stream(rng):
    order = Ranking([2, 0, 3, 1])
    state = ScoState.create(4)
    for _ in range(1000):
        i, j = (int(a) for a in rng.choice(4, size=2, replace=False))
        sco_online_update(state, i, j, i if order.prefers(i, j) else j)
    assert state.ranking() == order


def test_sco_batch_unanimous_profile(rng):
    vote = Ranking([1, 3, 0, 2])
    state = ScoState.create(4)
    sco_batch_fit([vote] * 10, state, epochs=20, rng=rng)
    assert state.ranking() == vote
    loss_after = sco_loss(state.ratings, [vote] * 10)
    assert loss_after < sco_loss(np.zeros(4), [vote] * 10)


def test_sco_batch_needs_observations(rng):
    with pytest.raises(DomainError):
        sco_batch_fit([], ScoState.create(2), 1, rng)


def test_preferences_from_rankings():
    assert preferences_from_rankings([Ranking([2, 0, 1])]) == [
        Preference(2, 0), Preference(2, 1), Preference(0, 1),
    ]
