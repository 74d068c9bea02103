"""
Rankings and ranking-error metrics.

A ranking is a total order over agent indices, best first. Kendall-tau
distances use the generalized form where the first ranking may cover only
a subset of the agents of the second one.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .base import DomainError


class Ranking:
    """
    Immutable total order over agent indices, best first.

    Keeps the order and its inverse position map so pair-order queries are O(1).
    """

    __slots__ = ("order", "positions")

    def __init__(self, order: Iterable[int]):
        """"""
        order = tuple(int(a) for a in order)
        if not order:
            raise DomainError("a ranking needs at least one agent")

        positions = {a: pos for pos, a in enumerate(order)}
        if len(positions) != len(order):
            raise DomainError(f"duplicate agents in ranking {order}")
        if min(order) < 0:
            raise DomainError(f"negative agent index in ranking {order}")

        object.__setattr__(self, "order", order)
        object.__setattr__(self, "positions", positions)

    def __setattr__(self, name, value):
        raise AttributeError("Ranking is immutable")

    @classmethod
    def identity(cls, m: int) -> "Ranking":
        return cls(range(m))

    @classmethod
    def from_scores(cls, scores: Sequence[float]) -> "Ranking":
        """
        Descending sort of per-agent scores, ties broken by ascending index.
        """
        scores = np.asarray(scores, dtype=float)
        # lexsort keys: last one is primary
        return cls(np.lexsort((np.arange(len(scores)), -scores)))

    @classmethod
    def parse(cls, text: str) -> "Ranking":
        """
        Parse the CSV field form, e.g. "3,0,2,1".
        """
        try:
            return cls(int(token) for token in text.split(","))
        except ValueError as e:
            raise DomainError(f"malformed ranking field {text!r}") from e

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[int]:
        return iter(self.order)

    def __getitem__(self, index):
        return self.order[index]

    def __eq__(self, other) -> bool:
        return isinstance(other, Ranking) and self.order == other.order

    def __hash__(self) -> int:
        return hash(self.order)

    def __repr__(self) -> str:
        return f"Ranking({list(self.order)})"

    def __str__(self) -> str:
        return ",".join(str(a) for a in self.order)

    @property
    def agents(self) -> frozenset[int]:
        return frozenset(self.order)

    def position(self, agent: int) -> int:
        return self.positions[agent]

    def prefers(self, a: int, b: int) -> bool:
        return self.positions[a] < self.positions[b]

    def top(self, k: int) -> tuple[int, ...]:
        return self.order[:k]

    def restrict(self, agents: Iterable[int]) -> "Ranking":
        """
        Relative order, inside this ranking, of the given agents.
        """
        keep = set(agents)
        missing = keep - self.positions.keys()
        if missing:
            raise DomainError(f"agents {sorted(missing)} are not ranked")
        return Ranking(a for a in self.order if a in keep)

    def position_array(self, m: int | None = None) -> np.ndarray:
        """
        pos[a] = position of agent a; agents must be dense 0..m-1.
        """
        m = len(self.order) if m is None else m
        pos = np.empty(m, dtype=np.int64)
        pos[list(self.order)] = np.arange(len(self.order))
        return pos


def _count_inversions(seq: list[int]) -> int:
    """
    Merge-sort inversion count, O(p log p).
    """
    if len(seq) < 2:
        return 0

    width = 1
    inversions = 0
    values = list(seq)
    n = len(values)
    while width < n:
        merged = []
        for lo in range(0, n, 2 * width):
            left = values[lo:lo + width]
            right = values[lo + width:lo + 2 * width]
            i = j = 0
            while i < len(left) and j < len(right):
                if left[i] <= right[j]:
                    merged.append(left[i])
                    i += 1
                else:
                    merged.append(right[j])
                    inversions += len(left) - i
                    j += 1
            merged.extend(left[i:])
            merged.extend(right[j:])
        values = merged
        width *= 2
    return inversions


def kendall_tau(r1: Ranking, r2: Ranking) -> int:
    """
    Number of pairs of r1's agents whose relative order differs in r2.

    r1 may rank a subset of r2's agents.
    """
    try:
        seq = [r2.positions[a] for a in r1.order]
    except KeyError as e:
        raise DomainError(f"agent {e.args[0]} of the first ranking is missing from the second") from None
    return _count_inversions(seq)


def normalized_kendall_tau(r1: Ranking, r2: Ranking) -> float:
    p = len(r1)
    if p < 2:
        return 0.0
    return 2.0 * kendall_tau(r1, r2) / (p * (p - 1))


def _check_cutoff(r: Ranking, gt: Ranking, k: int) -> int:
    m = len(gt)
    if len(r) != m or r.agents != gt.agents:
        raise DomainError("ranking and ground truth must cover the same agents")
    if not 1 <= k <= m:
        raise DomainError(f"rank cutoff k={k} outside [1, {m}]")
    return m


def alpha(k: int, m: int) -> float:
    """
    Weight on identification error, (m-k)/(m-1).
    """
    if m < 2:
        raise DomainError("the ranking error needs at least two agents")
    return (m - k) / (m - 1)


@dataclass(frozen=True)
class GreParams:
    k: int
    m: int

    def __post_init__(self):
        if self.m < 2:
            raise DomainError("the ranking error needs at least two agents")
        if not 1 <= self.k <= self.m:
            raise DomainError(f"rank cutoff k={self.k} outside [1, {self.m}]")

    @property
    def alpha(self) -> float:
        return alpha(self.k, self.m)


def top_k_identification_error(r: Ranking, gt: Ranking, k: int) -> float:
    _check_cutoff(r, gt, k)
    hits = len(set(r.top(k)) & set(gt.top(k)))
    return 1.0 - hits / k


def generalized_ranking_error(r: Ranking, gt: Ranking, k: int) -> float:
    """
    GRE: alpha(k) * IDE + (1 - alpha(k)) * K_n(top-k of gt ordered as in r, gt).
    """
    m = _check_cutoff(r, gt, k)
    a = alpha(k, m)
    ide = top_k_identification_error(r, gt, k) if a > 0.0 else 0.0
    sub = r.restrict(gt.top(k))
    # clamp float round-off of the convex combination
    return min(1.0, a * ide + (1.0 - a) * normalized_kendall_tau(sub, gt))


@dataclass
class AgreAccumulator:
    """
    Running average of GRE values plus a sliding window of the latest ones.
    """
    window_size: int = 250
    cumulative_gre: float = 0.0
    count: int = 0
    window: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.window_size < 1:
            raise DomainError("window size must be positive")
        self.window = deque(self.window, maxlen=self.window_size)

    @property
    def mean(self) -> float:
        if self.count == 0:
            return 0.0
        return self.cumulative_gre / self.count

    @property
    def window_mean(self) -> float:
        if not self.window:
            return 0.0
        return sum(self.window) / len(self.window)

    def push(self, gre: float) -> "AgreAccumulator":
        if not 0.0 <= gre <= 1.0:
            raise DomainError(f"GRE value {gre} outside [0, 1]")
        self.cumulative_gre += gre
        self.count += 1
        self.window.append(gre)
        return self


def agre_update(acc: AgreAccumulator, gre: float) -> AgreAccumulator:
    return acc.push(gre)
