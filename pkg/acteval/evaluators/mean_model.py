"""
Mean-model evaluators: estimate every task ranking from per-(task, agent)
mean scores and aggregate the estimated rankings with a voting rule.
"""

import logging
import math

import numpy as np

from ..base import DomainError
from ..rankings import Ranking
from ..voting import PreferenceProfile, copeland_ranking, maximal_lotteries_ranking, ranked_pairs_ranking
from .base import BurnInSchedule, Choice, Evaluator, MeanTable, uniform_choose

logger = logging.getLogger(__name__)


class MeanModelEvaluator(Evaluator):
    """
    Burn-in, then uniform selection. The votes are the estimated rankings of
    the tasks whose agents all have a sample.
    """

    default_recompute_every = 1

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every: int | None = None):
        """"""
        super().__init__(m, n, rng, score_range)
        if recompute_every is None:
            recompute_every = self.default_recompute_every
        self.recompute_every = max(1, int(recompute_every))
        self.burn_in = BurnInSchedule(n, m, rng)
        self.table = MeanTable(n, m)
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
        self.table.push(task, agent_i, score_i)
        self.table.push(task, agent_j, score_j)

    def estimated_profile(self, tasks: np.ndarray | None = None) -> PreferenceProfile:
        if tasks is None:
            tasks = self.table.complete_tasks()
        counts = np.zeros((self.m, self.m))
        if len(tasks):
            pos = self.table.task_positions(tasks)
            counts = (pos[:, :, None] < pos[:, None, :]).sum(axis=0).astype(float)
        return PreferenceProfile(counts)

    def ranking(self) -> Ranking:
        if self._ranking is None or self._stale >= self.recompute_every:
            self._ranking = self.rule(self.estimated_profile())
            self._stale = 0
        return self._ranking

    def rule(self, profile: PreferenceProfile) -> Ranking:
        raise NotImplementedError


class MeanModelCopeland(MeanModelEvaluator):

    name = "mean_model_copeland"

    def rule(self, profile: PreferenceProfile) -> Ranking:
        return copeland_ranking(profile)


class MeanModelRankedPairs(MeanModelEvaluator):

    name = "mean_model_ranked_pairs"

    def rule(self, profile: PreferenceProfile) -> Ranking:
        return ranked_pairs_ranking(profile)


class MeanModelMaximalLotteries(MeanModelEvaluator):

    name = "mean_model_max_lotteries"
    default_recompute_every = 20

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every=None,
                 solver_iterations: int = 500):
        """"""
        super().__init__(m, n, rng, score_range, recompute_every)
        self.solver_iterations = solver_iterations

    def rule(self, profile: PreferenceProfile) -> Ranking:
        return maximal_lotteries_ranking(profile, self.solver_iterations)


def pair_order_vectors(pos: np.ndarray) -> np.ndarray:
    """
    One boolean per agent pair i < j: is i ranked above j. Hamming distance
    between two rows is the Kendall-tau distance of the rankings.
    """
    m = pos.shape[1]
    upper_i, upper_j = np.triu_indices(m, 1)
    return pos[:, upper_i] < pos[:, upper_j]


def greedy_committee(distances: np.ndarray, size: int) -> list[int]:
    """
    Greedy proportional representation: repeatedly add the task that most
    lowers sum_v min over chosen r of distances[v, r]; ties go to the lower index.
    """
    n = len(distances)
    if not 1 <= size <= n:
        raise DomainError(f"committee size {size} outside [1, {n}]")

    chosen: list[int] = []
    closest = np.full(n, np.inf)
    for _ in range(size):
        costs = np.minimum(closest[:, None], distances).sum(axis=0)
        costs[chosen] = np.inf
        pick = int(np.argmin(costs))
        chosen.append(pick)
        closest = np.minimum(closest, distances[:, pick])
    return chosen


class ProportionalRepresentation(MeanModelEvaluator):
    """
    Mean-model evaluator that concentrates sampling on a small evaluation set
    of representative tasks, refreshed every refresh_every rounds. Tasks are
    drawn from the evaluation set with probability 1 - explore, from all tasks
    otherwise. The report is Ranked Pairs over all estimated task rankings.
    """

    name = "proportional_representation"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every=None,
                 committee_size: int | None = None, refresh_every: int = 50,
                 explore: float = 0.1):
        """
        committee_size defaults to ceil(n / 5) tasks.
        """
        super().__init__(m, n, rng, score_range, recompute_every)
        self.committee_size = math.ceil(n / 5) if committee_size is None else int(committee_size)
        if not 1 <= self.committee_size <= n:
            raise DomainError(f"committee size {self.committee_size} outside [1, {n}]")
        self.refresh_every = max(1, int(refresh_every))
        self.explore = explore
        self.evaluation_set = list(range(n))
        self._refreshed_at: int | None = None

    def refresh_evaluation_set(self) -> list[int]:
        complete = self.table.complete_tasks()
        if len(complete) < self.n:
            self.evaluation_set = list(range(self.n))
            return self.evaluation_set

        orders = pair_order_vectors(self.table.task_positions(complete))
        distances = (orders[:, None, :] != orders[None, :, :]).sum(axis=2)
        self.evaluation_set = greedy_committee(distances, self.committee_size)
        logger.debug("evaluation set %s", self.evaluation_set)
        return self.evaluation_set

    def select(self, t: int) -> Choice:
        if self._refreshed_at is None or t - self._refreshed_at >= self.refresh_every:
            self.refresh_evaluation_set()
            self._refreshed_at = t
        if self.rng.random() < self.explore:
            task = int(self.rng.integers(self.n))
        else:
            task = self.evaluation_set[int(self.rng.integers(len(self.evaluation_set)))]
        agent_i, agent_j = self.rng.choice(self.m, size=2, replace=False)
        return Choice(task, int(agent_i), int(agent_j))

    def rule(self, profile: PreferenceProfile) -> Ranking:
        return ranked_pairs_ranking(profile)
