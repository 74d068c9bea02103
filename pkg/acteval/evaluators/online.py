"""
Fully online evaluators: constant work per round, no stored batch.
"""

import numpy as np

from ..games import SampledSelfPlay, rm_observe, rm_sample_actions
from ..ratings import EloState, Outcome, ScoState, elo_online_update, sco_online_update
from ..rankings import Ranking
from .base import EXPLORATION, Choice, Evaluator, other_agent, uniform_choose


class OnlineElo(Evaluator):

    name = "online_elo"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), k_factor: float = 32.0,
                 initial: float = 1500.0):
        """"""
        super().__init__(m, n, rng, score_range)
        self.state = EloState.create(m, k_factor, initial)

    def choose(self, t: int) -> Choice:
        return uniform_choose(self.m, self.n, self.rng)

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        elo_online_update(self.state, agent_i, agent_j, Outcome.from_scores(score_i, score_j))

    def ranking(self) -> Ranking:
        return Ranking.from_scores(self.state.ratings)

    def ratings(self) -> np.ndarray:
        return self.state.ratings.copy()


class OnlineSCO(Evaluator):

    name = "online_sco"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), temperature: float = 1.0,
                 learning_rate: float = 0.01):
        """"""
        super().__init__(m, n, rng, score_range)
        self.state = ScoState.create(m, temperature, learning_rate)

    def choose(self, t: int) -> Choice:
        return uniform_choose(self.m, self.n, self.rng)

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        # ties carry no preference
        if score_i > score_j:
            sco_online_update(self.state, agent_i, agent_j, agent_i)
        elif score_j > score_i:
            sco_online_update(self.state, agent_i, agent_j, agent_j)

    def ranking(self) -> Ranking:
        return self.state.ranking()

    def ratings(self) -> np.ndarray:
        return self.state.ratings.copy()


class OnlineGameEvaluator(Evaluator):
    """
    Sampled regret-matching self-play; agents are ranked by the expected
    empirical payoff of each pure row action against the column player's
    average strategy.
    """

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), gamma: float = EXPLORATION):
        """"""
        super().__init__(m, n, rng, score_range)
        self.play = SampledSelfPlay.create(m, self.columns(), gamma)

    def columns(self) -> int:
        raise NotImplementedError

    def ranking(self) -> Ranking:
        return Ranking.from_scores(self.play.row_ratings())

    def ratings(self) -> np.ndarray:
        return self.play.row_ratings()


class OnlineMaximalLotteries(OnlineGameEvaluator):
    """
    Both agents come from the two regret matchers of the agent-vs-agent margin
    game, the column agent conditioned on differing from the row agent; the
    task is uniform. Utility is +1 / -1 for a win / loss of the row agent and
    0 on a tie. A cell with both players on the same agent reads 0.
    """

    name = "online_max_lotteries"

    def columns(self) -> int:
        return self.m

    def choose(self, t: int) -> Choice:
        agent_i = int(self.rng.choice(self.m, p=self.play.row.sampling()))
        # column agent conditioned on differing from the row agent
        probs = self.play.col.sampling()
        probs[agent_i] = 0.0
        agent_j = int(self.rng.choice(self.m, p=probs / probs.sum()))
        return Choice(int(self.rng.integers(self.n)), agent_i, agent_j)

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        if agent_i == agent_j:
            utility = 0.0
        else:
            utility = 2.0 * Outcome.from_scores(score_i, score_j).score - 1.0
        rm_observe(self.play, agent_i, agent_j, utility)


class OnlineNashAveraging(OnlineGameEvaluator):
    """
    Agent (row) against task (column) game with the normalized score of the
    row agent as utility. The second agent of the pair is uniform and its
    score is not used.
    """

    name = "online_nash_averaging"

    def columns(self) -> int:
        return self.n

    def choose(self, t: int) -> Choice:
        agent_i, task = rm_sample_actions(self.play, self.rng)
        return Choice(task, agent_i, other_agent(agent_i, self.m, self.rng))

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        rm_observe(self.play, agent_i, task, self.normalize(score_i))
