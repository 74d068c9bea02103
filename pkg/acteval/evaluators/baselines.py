"""
Baselines: uniform averaging, UCB over agents and a Kemeny-based
elimination scheme with epoch-wise confidence halving.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..base import CapabilityError
from ..ratings import Outcome
from ..rankings import Ranking
from ..voting import KEMENY_MAX_AGENTS, PreferenceProfile, kemeny_ranking
from .base import Choice, Evaluator, ucb_choose, uniform_averaging_ranking, uniform_choose

logger = logging.getLogger(__name__)


class UniformAveraging(Evaluator):
    """
    Uniform tasks and pairs; rank by cumulative mean score across tasks.
    """

    name = "uniform_averaging"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0)):
        """"""
        super().__init__(m, n, rng, score_range)
        self.sums = np.zeros(m)
        self.counts = np.zeros(m, dtype=np.int64)

    def choose(self, t: int) -> Choice:
        return uniform_choose(self.m, self.n, self.rng)

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        for agent, score in ((agent_i, score_i), (agent_j, score_j)):
            self.sums[agent] += score
            self.counts[agent] += 1

    def ranking(self) -> Ranking:
        return uniform_averaging_ranking(self.sums, self.counts)

    def ratings(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)


class BasicUCB(Evaluator):
    """
    UCB1 with one arm per agent; each round pulls the two best UCB arms on a
    uniform task. Agents are ranked by visit count.
    """

    name = "basic_ucb"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), exploration: float | None = None):
        """"""
        super().__init__(m, n, rng, score_range)
        lo, hi = self.score_range
        self.exploration = math.sqrt(2.0) * (hi - lo) if exploration is None else exploration
        self.sums = np.zeros(m)
        self.counts = np.zeros(m, dtype=np.int64)

    @property
    def means(self) -> np.ndarray:
        return self.sums / np.maximum(self.counts, 1)

    def choose(self, t: int) -> Choice:
        task = int(self.rng.integers(self.n))
        agent_i, agent_j = ucb_choose(self.means, self.counts, self.exploration)
        return Choice(task, agent_i, agent_j)

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        for agent, score in ((agent_i, score_i), (agent_j, score_j)):
            self.sums[agent] += score
            self.counts[agent] += 1

    def ranking(self) -> Ranking:
        # visit counts, then mean, then index
        order = np.lexsort((np.arange(self.m), -self.means, -self.counts))
        return Ranking(order)

    def ratings(self) -> np.ndarray:
        return self.counts.astype(float)


@dataclass
class KemenyElEpoch:
    """
    One epoch of the Kemeny elimination scheme: every agent pair is compared
    `quota` times before the next epoch starts with halved confidence and
    distance budget.
    """
    index: int
    confidence: float
    distance_budget: float
    quota: int
    samples: np.ndarray = field(repr=False)
    cursor: int = 0

    INITIAL_CONFIDENCE = 0.1
    MIN_GAP = 0.05

    @classmethod
    def first(cls, m: int) -> "KemenyElEpoch":
        return cls(
            index=0,
            confidence=cls.INITIAL_CONFIDENCE,
            distance_budget=m * (m - 1) / 4.0,
            quota=cls.sample_quota(1.0, cls.INITIAL_CONFIDENCE),
            samples=np.zeros((m, m), dtype=np.int64),
        )

    @staticmethod
    def sample_quota(gap: float, confidence: float) -> int:
        """
        ceil(2 / gap^2 * ln(2 / confidence)).
        """
        return math.ceil(2.0 / gap ** 2 * math.log(2.0 / confidence))

    @property
    def filled(self) -> bool:
        m = len(self.samples)
        upper = self.samples[np.triu_indices(m, 1)]
        return bool((upper >= self.quota).all())

    def next_pair(self, pairs: list[tuple[int, int]]) -> tuple[int, int]:
        """
        Round-robin over the pairs still short of the quota.
        """
        for step in range(len(pairs)):
            i, j = pairs[(self.cursor + step) % len(pairs)]
            if self.samples[i, j] < self.quota:
                self.cursor = (self.cursor + step + 1) % len(pairs)
                return i, j
        raise RuntimeError("next_pair called on a filled epoch")

    def record(self, i: int, j: int) -> None:
        lo, hi = min(i, j), max(i, j)
        self.samples[lo, hi] += 1

    def advance(self, wins: np.ndarray) -> "KemenyElEpoch":
        """
        Next epoch; its quota uses the smallest normalized pairwise margin seen so far.
        """
        games = wins + wins.T
        with np.errstate(invalid="ignore", divide="ignore"):
            gaps = np.abs(wins - wins.T) / games
        upper = gaps[np.triu_indices(len(wins), 1)]
        upper = upper[np.isfinite(upper)]
        gap = float(np.clip(upper.min() if len(upper) else 1.0, self.MIN_GAP, 1.0))

        confidence = self.confidence / 2.0
        return KemenyElEpoch(
            index=self.index + 1,
            confidence=confidence,
            distance_budget=self.distance_budget / 2.0,
            quota=self.sample_quota(gap, confidence),
            samples=np.zeros_like(self.samples),
        )


class KemenyEl(Evaluator):
    """
    Epoch-wise uniform pair comparisons with the Kemeny ranking of the
    accumulated pairwise tallies as the report.
    """

    name = "kemenyel"

    def __init__(self, m, n, rng, score_range=(0.0, 100.0), recompute_every: int = 1):
        """"""
        if m > KEMENY_MAX_AGENTS:
            raise CapabilityError(f"kemenyel needs exact Kemeny search, which supports at most "
                                  f"{KEMENY_MAX_AGENTS} agents, got {m}")
        super().__init__(m, n, rng, score_range)
        self.recompute_every = max(1, int(recompute_every))
        self.pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        self.wins = np.zeros((m, m))
        self.epoch = KemenyElEpoch.first(m)
        self._ranking = Ranking.identity(m)
        self._stale = 0

    def choose(self, t: int) -> Choice:
        task = int(self.rng.integers(self.n))
        agent_i, agent_j = self.epoch.next_pair(self.pairs)
        return Choice(task, agent_i, agent_j)

    def update(self, task, agent_i, agent_j, score_i, score_j) -> None:
        self.updates += 1
        s = Outcome.from_scores(score_i, score_j).score
        self.wins[agent_i, agent_j] += s
        self.wins[agent_j, agent_i] += 1.0 - s
        self._stale += 1

        self.epoch.record(agent_i, agent_j)
        if self.epoch.filled:
            self._refresh()
            self.epoch = self.epoch.advance(self.wins)
            logger.debug("kemenyel epoch %d: confidence=%g budget=%g quota=%d",
                         self.epoch.index, self.epoch.confidence,
                         self.epoch.distance_budget, self.epoch.quota)

    def _refresh(self) -> None:
        self._ranking, _ = kemeny_ranking(PreferenceProfile(self.wins))
        self._stale = 0

    def ranking(self) -> Ranking:
        if self._stale >= self.recompute_every:
            self._refresh()
        return self._ranking
