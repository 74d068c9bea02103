"""
Shared pieces of the active evaluators: the choose/update/ranking interface,
per-(task, agent) mean tables, the burn-in schedule and the selection rules
several algorithms have in common.
"""

from abc import ABC, abstractmethod
from typing import NamedTuple

import numpy as np

from ..base import DomainError
from ..rankings import Ranking

# uniform exploration mixed into equilibrium sampling strategies
EXPLORATION = 0.1


class Choice(NamedTuple):
    task: int
    agent_i: int
    agent_j: int


class Evaluator(ABC):
    """
    One active-evaluation algorithm.

    Each round the harness asks choose(t) for a task and an agent pair,
    samples both scores, feeds them to update() and reads ranking().
    """

    name: str = ""

    def __init__(self, m: int, n: int, rng: np.random.Generator,
                 score_range: tuple[float, float] = (0.0, 100.0)):
        """"""
        if m < 2:
            raise DomainError("an evaluator needs at least two agents")
        if n < 1:
            raise DomainError("an evaluator needs at least one task")
        lo, hi = score_range
        if not lo < hi:
            raise DomainError(f"empty score range {score_range}")

        self.m = m
        self.n = n
        self.rng = rng
        self.score_range = (float(lo), float(hi))
        self.updates = 0

    @abstractmethod
    def choose(self, t: int) -> Choice:
        """"""
        pass

    @abstractmethod
    def update(self, task: int, agent_i: int, agent_j: int, score_i: float, score_j: float) -> None:
        """"""
        pass

    @abstractmethod
    def ranking(self) -> Ranking:
        """"""
        pass

    def ratings(self) -> np.ndarray | None:
        """
        Per-agent scalar behind the ranking, when the algorithm has one.
        """
        return None

    def normalize(self, score: float) -> float:
        lo, hi = self.score_range
        return (score - lo) / (hi - lo)


class MeanTable:
    """
    Running mean score per (task, agent).
    """

    def __init__(self, n: int, m: int):
        """"""
        self.sums = np.zeros((n, m))
        self.counts = np.zeros((n, m), dtype=np.int64)

    def push(self, task: int, agent: int, score: float) -> None:
        self.sums[task, agent] += score
        self.counts[task, agent] += 1

    @property
    def means(self) -> np.ndarray:
        """
        n x m means, NaN where a cell has no sample.
        """
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    def filled_means(self, fill: float = 0.0) -> np.ndarray:
        means = self.means
        means[self.counts == 0] = fill
        return means

    def complete_tasks(self) -> np.ndarray:
        """
        Indices of tasks where every agent has at least one sample.
        """
        return np.flatnonzero((self.counts > 0).all(axis=1))

    def task_positions(self, tasks: np.ndarray) -> np.ndarray:
        """
        pos[k, a]: position of agent a in the estimated ranking of tasks[k],
        descending mean with index tie-break.
        """
        means = self.means[tasks]
        order = np.argsort(-means, axis=1, kind="stable")
        return np.argsort(order, axis=1)

    def task_rankings(self) -> list[Ranking]:
        means = self.means
        return [Ranking.from_scores(means[v]) for v in self.complete_tasks()]


class BurnInSchedule:
    """
    One pass over all (task, agent) cells in shuffled order.
    """

    def __init__(self, n: int, m: int, rng: np.random.Generator):
        """"""
        self.m = m
        self.cells = [(int(c) // m, int(c) % m) for c in rng.permutation(n * m)]
        self.cursor = 0

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.cells)

    def next_choice(self, rng: np.random.Generator) -> Choice:
        """
        Next cell as (task, agent_i); agent_j uniform among the other agents.
        """
        task, agent_i = self.cells[self.cursor]
        self.cursor += 1
        return Choice(task, agent_i, other_agent(agent_i, self.m, rng))


def other_agent(agent: int, m: int, rng: np.random.Generator) -> int:
    other = int(rng.integers(m - 1))
    return other + 1 if other >= agent else other


def uniform_choose(m: int, n: int, rng: np.random.Generator) -> Choice:
    if m < 2:
        raise DomainError("a pair needs at least two agents")
    task = int(rng.integers(n))
    agent_i, agent_j = rng.choice(m, size=2, replace=False)
    return Choice(task, int(agent_i), int(agent_j))


def sample_from(strategy: np.ndarray, rng: np.random.Generator, epsilon: float = EXPLORATION) -> int:
    """
    Draw from epsilon-uniform mixed strategy.
    """
    probs = epsilon / len(strategy) + (1.0 - epsilon) * np.asarray(strategy, dtype=float)
    return int(rng.choice(len(probs), p=probs / probs.sum()))


def ucb_scores(means: np.ndarray, counts: np.ndarray, exploration: float) -> np.ndarray:
    """
    mean + C * sqrt(log(total pulls) / pulls), every agent pulled at least once.
    """
    total = counts.sum()
    return means + exploration * np.sqrt(np.log(total) / counts)


def ucb_choose(means: np.ndarray, counts: np.ndarray, exploration: float) -> tuple[int, int]:
    """
    Unpulled agents first in index order, then the two best UCB scores.
    """
    m = len(counts)
    unpulled = np.flatnonzero(counts == 0)
    if len(unpulled) >= 2:
        return int(unpulled[0]), int(unpulled[1])
    if len(unpulled) == 1:
        first = int(unpulled[0])
        return first, (first + 1) % m
    top = Ranking.from_scores(ucb_scores(means, counts, exploration)).top(2)
    return top[0], top[1]


def uniform_averaging_ranking(sums: np.ndarray, counts: np.ndarray) -> Ranking:
    """
    Descending cumulative mean; unsampled agents last, all ties by index.
    """
    means = np.full(len(counts), -np.inf)
    sampled = counts > 0
    means[sampled] = sums[sampled] / counts[sampled]
    return Ranking.from_scores(means)
