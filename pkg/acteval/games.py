"""
Two-player zero-sum matrix games.

Full-information regret matching solves a known payoff table; the sampled
variant learns the table from one noisy cell per step, the way an online
evaluator sees it. Nash-averaging ratings come from the agents-vs-tasks game.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .base import DomainError
from .rankings import Ranking

SIMPLEX_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MatrixGame:
    """
    Payoffs to the row player; the column player receives the negation.
    """
    payoffs: np.ndarray

    def __post_init__(self):
        payoffs = np.array(self.payoffs, dtype=float)
        if payoffs.ndim != 2 or 0 in payoffs.shape:
            raise DomainError(f"payoff table must be a non-empty matrix, got shape {payoffs.shape}")
        if not np.isfinite(payoffs).all():
            raise DomainError("payoff table has non-finite entries")
        payoffs.setflags(write=False)
        object.__setattr__(self, "payoffs", payoffs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.payoffs.shape

    def value(self, row: np.ndarray, col: np.ndarray) -> float:
        return float(row @ self.payoffs @ col)


def as_mixed_strategy(probs, size: int | None = None) -> np.ndarray:
    """
    Validate a simplex vector.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or (size is not None and len(probs) != size):
        raise DomainError(f"strategy of shape {probs.shape} does not match {size} actions")
    if (probs < -SIMPLEX_TOLERANCE).any() or abs(probs.sum() - 1.0) > SIMPLEX_TOLERANCE:
        raise DomainError("strategy is not a probability vector")
    return probs


def regret_matching(cum_regret: np.ndarray) -> np.ndarray:
    positive = np.maximum(cum_regret, 0.0)
    total = positive.sum()
    if total > 0.0:
        return positive / total
    return np.full(len(cum_regret), 1.0 / len(cum_regret))


def mix_uniform(strategy: np.ndarray, epsilon: float) -> np.ndarray:
    """
    epsilon / |S| + (1 - epsilon) * strategy.
    """
    return epsilon / len(strategy) + (1.0 - epsilon) * strategy


@dataclass
class RegretMatcherState:
    """
    One regret-matching player over a finite action set.
    """
    n_actions: int
    gamma: float = 0.1
    cum_regret: np.ndarray = None
    strategy_sum: np.ndarray = None

    def __post_init__(self):
        if self.n_actions < 1:
            raise DomainError("a player needs at least one action")
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError(f"exploration gamma={self.gamma} outside (0, 1]")
        if self.cum_regret is None:
            self.cum_regret = np.zeros(self.n_actions)
        if self.strategy_sum is None:
            self.strategy_sum = np.zeros(self.n_actions)

    def current(self) -> np.ndarray:
        return regret_matching(self.cum_regret)

    def sampling(self) -> np.ndarray:
        return mix_uniform(self.current(), self.gamma)

    def average(self) -> np.ndarray:
        total = self.strategy_sum.sum()
        if total <= 0.0:
            return np.full(self.n_actions, 1.0 / self.n_actions)
        return self.strategy_sum / total


def rm_current_strategy(state: RegretMatcherState) -> np.ndarray:
    return state.current()


@dataclass
class SampledSelfPlay:
    """
    Two regret matchers and the empirical payoff table they learn from.

    Unvisited cells read as 0.
    """
    row: RegretMatcherState
    col: RegretMatcherState
    mean_payoff: np.ndarray = None
    visits: np.ndarray = None

    def __post_init__(self):
        shape = (self.row.n_actions, self.col.n_actions)
        if self.mean_payoff is None:
            self.mean_payoff = np.zeros(shape)
        if self.visits is None:
            self.visits = np.zeros(shape, dtype=np.int64)

    @classmethod
    def create(cls, n_rows: int, n_cols: int, gamma: float = 0.1) -> "SampledSelfPlay":
        return cls(RegretMatcherState(n_rows, gamma), RegretMatcherState(n_cols, gamma))

    def row_ratings(self) -> np.ndarray:
        """
        Expected empirical payoff of every pure row action against the
        column player's average strategy.
        """
        return self.mean_payoff @ self.col.average()


def rm_sample_actions(play: SampledSelfPlay, rng: np.random.Generator) -> tuple[int, int]:
    a1 = int(rng.choice(play.row.n_actions, p=play.row.sampling()))
    a2 = int(rng.choice(play.col.n_actions, p=play.col.sampling()))
    return a1, a2


def rm_observe(play: SampledSelfPlay, a1: int, a2: int, utility: float) -> SampledSelfPlay:
    """
    Regret update after observing the row player's utility on cell (a1, a2).
    """
    # sampling strategies before the regrets move
    sigma1 = play.row.sampling()
    sigma2 = play.col.sampling()

    play.visits[a1, a2] += 1
    play.mean_payoff[a1, a2] += (utility - play.mean_payoff[a1, a2]) / play.visits[a1, a2]

    # observed sample on the played cell, running means elsewhere
    row_utils = play.mean_payoff[:, a2].copy()
    row_utils[a1] = utility
    col_utils = play.mean_payoff[a1, :].copy()
    col_utils[a2] = utility

    play.row.cum_regret += row_utils - utility
    play.col.cum_regret -= col_utils - utility
    play.row.strategy_sum += sigma1
    play.col.strategy_sum += sigma2
    return play


def rm_sampled_step(play: SampledSelfPlay,
                    oracle: Callable[[int, int], float],
                    rng: np.random.Generator) -> SampledSelfPlay:
    a1, a2 = rm_sample_actions(play, rng)
    return rm_observe(play, a1, a2, oracle(a1, a2))


class ZeroSumSolution(NamedTuple):
    row: np.ndarray
    col: np.ndarray
    value: float


def solve_zero_sum(game: MatrixGame, iterations: int, plus: bool = False) -> ZeroSumSolution:
    """
    Full-information regret-matching self-play.

    plus=False: simultaneous vanilla regret matching, uniform averaging.
    plus=True: regret matching+ with alternating updates and linear averaging
    over the second half of the iterations. Actions whose clamped regret stays
    at zero then carry exactly zero average mass.
    """
    if iterations < 1:
        raise DomainError("the solver needs at least one iteration")

    payoffs = game.payoffs
    n_rows, n_cols = payoffs.shape
    regret1 = np.zeros(n_rows)
    regret2 = np.zeros(n_cols)
    sum1 = np.zeros(n_rows)
    sum2 = np.zeros(n_cols)
    delay = iterations // 2 if plus else 0

    for t in range(1, iterations + 1):
        sigma1 = regret_matching(regret1)
        sigma2 = regret_matching(regret2)
        weight = float(max(t - delay, 0)) if plus else 1.0

        row_utils = payoffs @ sigma2
        regret1 += row_utils - sigma1 @ row_utils
        sum1 += weight * sigma1
        if plus:
            np.maximum(regret1, 0.0, out=regret1)
            # alternating: the column player answers the updated row strategy
            sigma1 = regret_matching(regret1)

        col_utils = -(sigma1 @ payoffs)
        regret2 += col_utils - col_utils @ sigma2
        if plus:
            np.maximum(regret2, 0.0, out=regret2)
        sum2 += weight * sigma2

    row = sum1 / sum1.sum()
    col = sum2 / sum2.sum()
    return ZeroSumSolution(row, col, game.value(row, col))


def exploitability(game: MatrixGame, row: np.ndarray, col: np.ndarray) -> float:
    """
    Sum of both players' best-response gains; zero exactly at equilibrium.
    """
    row = as_mixed_strategy(row, game.shape[0])
    col = as_mixed_strategy(col, game.shape[1])
    best_row = np.max(game.payoffs @ col)
    best_col = np.min(row @ game.payoffs)
    return float(max(0.0, best_row - best_col))


def nash_averaging_ratings(scores: np.ndarray, iterations: int = 1000, plus: bool = True) -> np.ndarray:
    """
    Ratings from the agents-vs-tasks game: scores[a, v] is the mean score of
    agent a on task v, the payoff to the agent (row) player. An agent's rating
    is its expected score against the task player's equilibrium strategy.
    """
    game = MatrixGame(scores)
    solution = solve_zero_sum(game, iterations, plus=plus)
    return game.payoffs @ solution.col


def nash_averaging_ranking(scores: np.ndarray, iterations: int = 1000) -> Ranking:
    return Ranking.from_scores(nash_averaging_ratings(scores, iterations))
