"""
Growing-batch evaluators: keep every observed outcome and re-run an offline
rule (a voting rule, a rating fit or an equilibrium) on the whole batch.
"""

import numpy as np

from ..games import MatrixGame, solve_zero_sum
from ..ratings import EloState, Outcome, Preference, ScoState, elo_batch_fit, sco_batch_fit
from ..rankings import Ranking
from ..voting import PreferenceProfile, copeland_ranking, maximal_lotteries_tiers, ranked_pairs_ranking
from .base import (
    BurnInSchedule,
    Choice,
    Evaluator,
    MeanTable,
    other_agent,
    sample_from,
    uniform_choose,
)


class GrowingBatchEvaluator(Evaluator):
    """
    Burn-in over all (task, agent) cells, then uniform selection. Outcomes are
    tallied in a pairwise win matrix where a tie counts half each way.

    The ranking is recomputed once recompute_every new observations arrived
    and cached in between.
    """

    default_recompute_every = 1

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every: int | None = None):
        """"""
        super().__init__(m, n, rng, score_range)
        if recompute_every is None:
            recompute_every = self.default_recompute_every
        self.recompute_every = max(1, int(recompute_every))
        self.burn_in = BurnInSchedule(n, m, rng)
        self.wins = np.zeros((m, m))
        self._ranking: Ranking | None = None
        self._stale = 0

    def choose(self, t: int) -> Choice:
        if not self.burn_in.done:
            return self.burn_in.next_choice(self.rng)
        return self.select(t)

    def select(self, t: int) -> Choice:
        return uniform_choose(self.m, self.n, self.rng)

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        self._stale += 1
        if agent_i != agent_j:
            s = Outcome.from_scores(score_i, score_j).score
            self.wins[agent_i, agent_j] += s
            self.wins[agent_j, agent_i] += 1.0 - s
        self.observe(task, agent_i, agent_j, score_i, score_j)

    def observe(self, task, agent_i, agent_j, score_i, score_j) -> None:
        pass

    def ranking(self) -> Ranking:
        if self._ranking is None or self._stale >= self.recompute_every:
            self._ranking = self.compute_ranking()
            self._stale = 0
        return self._ranking

    def compute_ranking(self) -> Ranking:
        raise NotImplementedError

    def profile(self) -> PreferenceProfile:
        return PreferenceProfile(self.wins)


class BatchElo(GrowingBatchEvaluator):

    name = "batch_elo"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every=None,
                 iterations: int = 1000, tolerance: float = 1e-6):
        """"""
        super().__init__(m, n, rng, score_range, recompute_every)
        self.iterations = iterations
        self.tolerance = tolerance
        self.state = EloState.create(m)

    def compute_ranking(self) -> Ranking:
        fit = elo_batch_fit(self.wins, self.iterations, self.tolerance, initial=self.state.ratings)
        self.state.ratings = fit.ratings
        return Ranking.from_scores(fit.ratings)

    def ratings(self) -> np.ndarray:
        return self.state.ratings.copy()


class BatchCopeland(GrowingBatchEvaluator):

    name = "batch_copeland"

    def compute_ranking(self) -> Ranking:
        return copeland_ranking(self.profile())


class BatchRankedPairs(GrowingBatchEvaluator):

    name = "batch_ranked_pairs"

    def compute_ranking(self) -> Ranking:
        return ranked_pairs_ranking(self.profile())


class BatchMaximalLotteries(GrowingBatchEvaluator):
    """
    Iterative Maximal Lotteries over the batch profile. After burn-in both
    agents are drawn from the current maximal lottery with uniform exploration.
    """

    name = "batch_max_lotteries"
    default_recompute_every = 20

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every=None,
                 solver_iterations: int = 500, epsilon: float = 0.1):
        """"""
        super().__init__(m, n, rng, score_range, recompute_every)
        self.solver_iterations = solver_iterations
        self.epsilon = epsilon
        self.lottery = np.full(m, 1.0 / m)

    def select(self, t: int) -> Choice:
        self.ranking()
        task = int(self.rng.integers(self.n))
        agent_i = sample_from(self.lottery, self.rng, self.epsilon)
        # second agent from the same lottery, conditioned on differing
        probs = self.epsilon / self.m + (1.0 - self.epsilon) * self.lottery
        probs[agent_i] = 0.0
        agent_j = int(self.rng.choice(self.m, p=probs / probs.sum()))
        return Choice(task, agent_i, agent_j)

    def compute_ranking(self) -> Ranking:
        ranking, self.lottery = maximal_lotteries_tiers(self.profile(), self.solver_iterations)
        return ranking

    def ratings(self) -> np.ndarray:
        return self.lottery.copy()


class BatchSCO(GrowingBatchEvaluator):
    """
    Soft Condorcet Optimization refit on the weighted pairwise outcomes, one
    warm-started epoch per refresh. Ties carry no preference.
    """

    name = "batch_sco"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every=None,
                 temperature: float = 1.0, learning_rate: float = 0.01, epochs: int = 1):
        """"""
        super().__init__(m, n, rng, score_range, recompute_every)
        self.state = ScoState.create(m, temperature, learning_rate)
        self.epochs = epochs
        self.strict_wins = np.zeros((m, m))

    def observe(self, task, agent_i, agent_j, score_i, score_j) -> None:
        if score_i > score_j:
            self.strict_wins[agent_i, agent_j] += 1.0
        elif score_j > score_i:
            self.strict_wins[agent_j, agent_i] += 1.0

    def compute_ranking(self) -> Ranking:
        winners, losers = np.nonzero(self.strict_wins)
        if len(winners):
            preferences = [
                Preference(int(a), int(b), float(self.strict_wins[a, b]))
                for a, b in zip(winners, losers)
            ]
            sco_batch_fit(preferences, self.state, self.epochs, self.rng)
        return self.state.ranking()

    def ratings(self) -> np.ndarray:
        return self.state.ratings.copy()


class BatchNashAveraging(GrowingBatchEvaluator):
    """
    Nash averaging on the agents-vs-tasks game of empirical mean scores, scaled
    to [0, 1]; unsampled cells count as 0. After burn-in the first agent and
    the task are drawn from the two equilibrium strategies with uniform
    exploration, the second agent uniformly.
    """

    name = "batch_nash_averaging"
    default_recompute_every = 20

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every=None,
                 solver_iterations: int = 500, epsilon: float = 0.1):
        """"""
        super().__init__(m, n, rng, score_range, recompute_every)
        self.solver_iterations = solver_iterations
        self.epsilon = epsilon
        self.table = MeanTable(n, m)
        self.agent_strategy = np.full(m, 1.0 / m)
        self.task_strategy = np.full(n, 1.0 / n)
        self._ratings = np.zeros(m)

    def observe(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.table.push(task, agent_i, self.normalize(score_i))
        self.table.push(task, agent_j, self.normalize(score_j))

    def select(self, t: int) -> Choice:
        self.ranking()
        agent_i = sample_from(self.agent_strategy, self.rng, self.epsilon)
        task = sample_from(self.task_strategy, self.rng, self.epsilon)
        return Choice(task, agent_i, other_agent(agent_i, self.m, self.rng))

    def compute_ranking(self) -> Ranking:
        game = MatrixGame(self.table.filled_means(0.0).T)
        solution = solve_zero_sum(game, self.solver_iterations, plus=True)
        self.agent_strategy = solution.row
        self.task_strategy = solution.col
        self._ratings = game.payoffs @ solution.col
        return Ranking.from_scores(self._ratings)

    def ratings(self) -> np.ndarray:
        return self._ratings.copy()
