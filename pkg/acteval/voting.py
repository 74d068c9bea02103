"""
Preference aggregation over agent rankings.

Tasks (or observed score comparisons) are votes; a PreferenceProfile counts,
for every ordered agent pair, how much weight prefers the first agent.
Copeland, Ranked Pairs, Kemeny and iterative Maximal Lotteries turn a
profile into a full ranking.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .base import CapabilityError, DomainError
from .games import MatrixGame, solve_zero_sum
from .rankings import Ranking

KEMENY_MAX_AGENTS = 16

SUPPORT_THRESHOLD = 1e-6
# equilibrium probabilities closer than this order a tier by index
TIER_RESOLUTION = 1e-3


@dataclass(frozen=True)
class PreferenceProfile:
    """
    counts[i, j]: weight of observations preferring agent i over agent j.
    """
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] < 1:
            raise DomainError(f"a profile needs a square count matrix, got shape {counts.shape}")
        if not np.isfinite(counts).all() or (counts < 0.0).any():
            raise DomainError("profile counts must be finite and non-negative")
        if np.diag(counts).any():
            raise DomainError("profile diagonal must be zero")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def empty(cls, m: int) -> "PreferenceProfile":
        return cls(np.zeros((m, m)))

    @property
    def m(self) -> int:
        return self.counts.shape[0]

    def margins(self) -> "MarginMatrix":
        return MarginMatrix(self.counts - self.counts.T)


@dataclass(frozen=True)
class MarginMatrix:
    """
    delta[i, j] = N(i, j) - N(j, i).
    """
    delta: np.ndarray

    def __post_init__(self):
        delta = np.array(self.delta, dtype=float)
        if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
            raise DomainError(f"a margin matrix must be square, got shape {delta.shape}")
        if not np.array_equal(delta, -delta.T):
            raise DomainError("margin matrix must be antisymmetric")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)

    @property
    def m(self) -> int:
        return self.delta.shape[0]


def profile_from_rankings(votes: Sequence[Ranking], m: int | None = None) -> PreferenceProfile:
    """
    counts[i, j] = number of votes ranking i above j.
    """
    if not votes:
        if m is None:
            raise DomainError("cannot size a profile without votes")
        return PreferenceProfile.empty(m)

    agents = votes[0].agents
    m = len(agents)
    if agents != frozenset(range(m)):
        raise DomainError("votes must rank the dense agent set 0..m-1")

    counts = np.zeros((m, m))
    for vote in votes:
        if vote.agents != agents:
            raise DomainError(f"vote {vote} ranks a different agent set")
        pos = vote.position_array(m)
        counts += pos[:, None] < pos[None, :]
    return PreferenceProfile(counts)


def profile_to_csv(p: PreferenceProfile, path: str | Path) -> None:
    """
    Debug dump; row i holds counts[i, *].
    """
    labels = [f"a{i}" for i in range(p.m)]
    pd.DataFrame(p.counts, index=labels, columns=labels).to_csv(path, float_format="%.6f")


def copeland_scores(p: PreferenceProfile) -> np.ndarray:
    delta = p.margins().delta
    wins = (delta > 0).sum(axis=1)
    ties = (delta == 0).sum(axis=1) - 1
    return wins + 0.5 * ties


def copeland_ranking(p: PreferenceProfile) -> Ranking:
    return Ranking.from_scores(copeland_scores(p))


def _reaches(edges: list[set[int]], src: int, dst: int) -> bool:
    stack = [src]
    seen = {src}
    while stack:
        node = stack.pop()
        if node == dst:
            return True
        for nxt in edges[node]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def ranked_pairs_ranking(p: PreferenceProfile) -> Ranking:
    """
    Tideman's Ranked Pairs. Pairs with equal margins lock in (winner, loser)
    index order; the output is the topological order of the locked graph,
    smallest free index first.
    """
    m = p.m
    delta = p.margins().delta
    winners, losers = np.nonzero(delta > 0)
    pairs = sorted(zip(winners.tolist(), losers.tolist()), key=lambda e: (-delta[e], e[0], e[1]))

    edges: list[set[int]] = [set() for _ in range(m)]
    for winner, loser in pairs:
        if not _reaches(edges, loser, winner):
            edges[winner].add(loser)

    indegree = [0] * m
    for targets in edges:
        for loser in targets:
            indegree[loser] += 1

    order = []
    free = sorted(a for a in range(m) if indegree[a] == 0)
    while free:
        node = free.pop(0)
        order.append(node)
        for loser in edges[node]:
            indegree[loser] -= 1
            if indegree[loser] == 0:
                free.append(loser)
        free.sort()
    return Ranking(order)


def _check_agents(p: PreferenceProfile, r: Ranking) -> None:
    if len(r) != p.m or r.agents != frozenset(range(p.m)):
        raise DomainError(f"ranking {r} does not cover the profile's {p.m} agents")


def kemeny_score(p: PreferenceProfile, r: Ranking) -> float:
    """
    Sum of N(i, j) over the pairs r ranks as i above j.
    """
    _check_agents(p, r)
    pos = r.position_array(p.m)
    return float(p.counts[pos[:, None] < pos[None, :]].sum())


def kemeny_score_distance(p: PreferenceProfile, r1: Ranking, r2: Ranking) -> float:
    return abs(kemeny_score(p, r1) - kemeny_score(p, r2))


def kemeny_ranking(p: PreferenceProfile) -> tuple[Ranking, float]:
    """
    Exact Kemeny ranking by Held-Karp dynamic programming over subsets.

    best[S] is the largest score of an ordering of the agent set S when S is
    ranked below everything else. Among optimal rankings the lexicographically
    smallest order is returned.
    """
    m = p.m
    if m > KEMENY_MAX_AGENTS:
        raise CapabilityError(f"exact Kemeny search supports at most {KEMENY_MAX_AGENTS} agents, got {m}")
    if m == 1:
        return Ranking([0]), 0.0

    counts = p.counts
    size = 1 << m
    # above[S, a] = sum of counts[a, j] over j in S
    above = np.zeros((1, m))
    for j in range(m):
        above = np.concatenate((above, above + counts[:, j]))

    masks = np.arange(size)
    popcount = np.zeros(size, dtype=np.int64)
    for a in range(m):
        popcount += (masks >> a) & 1

    best = np.zeros(size)
    for layer in range(1, m + 1):
        subsets = masks[popcount == layer]
        candidates = np.full((len(subsets), m), -np.inf)
        for a in range(m):
            has = ((subsets >> a) & 1).astype(bool)
            rest = subsets[has] ^ (1 << a)
            candidates[has, a] = above[rest, a] + best[rest]
        best[subsets] = candidates.max(axis=1)

    tolerance = 1e-9 * max(1.0, abs(best[-1]))
    order = []
    remaining = size - 1
    while remaining:
        for a in range(m):
            if not (remaining >> a) & 1:
                continue
            rest = remaining ^ (1 << a)
            if above[rest, a] + best[rest] >= best[remaining] - tolerance:
                order.append(a)
                remaining = rest
                break

    ranking = Ranking(order)
    return ranking, kemeny_score(p, ranking)


def maximal_lotteries_tiers(p: PreferenceProfile,
                            iterations: int = 500,
                            support_threshold: float = SUPPORT_THRESHOLD) -> tuple[Ranking, np.ndarray]:
    """
    Iterative Maximal Lotteries.

    Solve the symmetric margin game on the remaining agents; its equilibrium
    support is the next tier, ordered by descending probability then index.
    Remove the tier and repeat. Also returns the lottery of the first game,
    over all agents.
    """
    delta = p.margins().delta
    remaining = list(range(p.m))
    order: list[int] = []
    first_lottery = None

    while remaining:
        if len(remaining) == 1:
            lottery = np.ones(1)
        else:
            sub = delta[np.ix_(remaining, remaining)]
            solution = solve_zero_sum(MatrixGame(sub), iterations, plus=True)
            # the margin game is symmetric: both averages estimate one lottery
            lottery = (solution.row + solution.col) / 2.0
        if first_lottery is None:
            first_lottery = lottery

        tier = [i for i in range(len(remaining)) if lottery[i] > support_threshold]
        tier.sort(key=lambda i: (-round(lottery[i] / TIER_RESOLUTION), remaining[i]))
        order.extend(remaining[i] for i in tier)
        chosen = set(tier)
        remaining = [a for i, a in enumerate(remaining) if i not in chosen]

    return Ranking(order), first_lottery


def maximal_lotteries_ranking(p: PreferenceProfile,
                              iterations: int = 500,
                              support_threshold: float = SUPPORT_THRESHOLD) -> Ranking:
    return maximal_lotteries_tiers(p, iterations, support_threshold)[0]
