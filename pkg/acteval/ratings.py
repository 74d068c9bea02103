"""
Scalar rating systems: Elo (online updates and a batch Bradley-Terry fit)
and Soft Condorcet Optimization (SCO).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import expit

from .base import DomainError
from .rankings import Ranking

logger = logging.getLogger(__name__)

ELO_BASE = 1500.0
ELO_K_FACTOR = 32.0
# one Bradley-Terry log-odds unit in Elo points
ELO_SCALE = 400.0 / np.log(10.0)
# virtual draws added between every pair before the batch fit
ELO_PRIOR_DRAWS = 0.5


class Outcome(Enum):
    WIN_I = "win_i"
    WIN_J = "win_j"
    DRAW = "draw"

    @property
    def score(self) -> float:
        """Score of agent i."""
        return {Outcome.WIN_I: 1.0, Outcome.WIN_J: 0.0, Outcome.DRAW: 0.5}[self]

    @classmethod
    def from_scores(cls, score_i: float, score_j: float) -> "Outcome":
        if score_i > score_j:
            return cls.WIN_I
        if score_i < score_j:
            return cls.WIN_J
        return cls.DRAW


def elo_expected(theta_i: float, theta_j: float) -> float:
    """
    Probability that i beats j.
    """
    return 1.0 / (1.0 + 10.0 ** ((theta_j - theta_i) / 400.0))


@dataclass
class EloState:
    ratings: np.ndarray
    k_factor: float = ELO_K_FACTOR
    wins: np.ndarray = None

    def __post_init__(self):
        self.ratings = np.array(self.ratings, dtype=float)
        m = len(self.ratings)
        if self.k_factor <= 0.0:
            raise DomainError(f"k-factor {self.k_factor} must be positive")
        if self.wins is None:
            self.wins = np.zeros((m, m))

    @classmethod
    def create(cls, m: int, k_factor: float = ELO_K_FACTOR, initial: float = ELO_BASE) -> "EloState":
        return cls(np.full(m, initial), k_factor)

    def record(self, i: int, j: int, outcome: Outcome) -> None:
        """
        Tally a game for the batch fit; a draw is half a win each way.
        """
        s = outcome.score
        self.wins[i, j] += s
        self.wins[j, i] += 1.0 - s


def elo_online_update(state: EloState, i: int, j: int, outcome: Outcome) -> EloState:
    if i == j:
        raise DomainError("an Elo game needs two different agents")
    change = state.k_factor * (outcome.score - elo_expected(state.ratings[i], state.ratings[j]))
    state.ratings[i] += change
    state.ratings[j] -= change
    return state


class EloFit(NamedTuple):
    ratings: np.ndarray
    converged: bool
    iterations: int


def elo_batch_fit(wins: np.ndarray,
                  iterations: int = 1000,
                  tolerance: float = 1e-6,
                  initial: np.ndarray | None = None,
                  prior_draws: float = ELO_PRIOR_DRAWS) -> EloFit:
    """
    Minorization-maximization fit of the Bradley-Terry model to a win matrix,
    wins[i, j] = (possibly fractional) wins of i over j.

    prior_draws virtual draws are added between every pair so that unbeaten
    agents keep finite ratings. Convergence is declared when no log-strength
    moves by more than tolerance.
    """
    wins = np.array(wins, dtype=float)
    m = wins.shape[0]
    if wins.ndim != 2 or wins.shape != (m, m) or m < 2:
        raise DomainError(f"batch Elo needs a square win matrix over at least two agents, got {wins.shape}")
    if (wins < 0.0).any():
        raise DomainError("win counts must be non-negative")

    wins = wins + prior_draws / 2.0
    np.fill_diagonal(wins, 0.0)
    games = wins + wins.T
    total_wins = wins.sum(axis=1)

    if initial is None:
        log_gamma = np.zeros(m)
    else:
        log_gamma = (np.asarray(initial, dtype=float) - ELO_BASE) / ELO_SCALE
        log_gamma -= log_gamma.mean()

    converged = False
    done = 0
    for done in range(1, iterations + 1):
        gamma = np.exp(log_gamma)
        denom = (games / (gamma[:, None] + gamma[None, :])).sum(axis=1)
        new_log_gamma = np.log(total_wins / denom)
        new_log_gamma -= new_log_gamma.mean()
        change = np.max(np.abs(new_log_gamma - log_gamma))
        log_gamma = new_log_gamma
        if change < tolerance:
            converged = True
            break

    if not converged:
        logger.debug("batch Elo stopped after %d iterations without converging", done)
    return EloFit(ELO_BASE + ELO_SCALE * log_gamma, converged, done)


class Preference(NamedTuple):
    winner: int
    loser: int
    weight: float = 1.0


@dataclass
class ScoState:
    ratings: np.ndarray
    temperature: float = 1.0
    learning_rate: float = 0.01

    def __post_init__(self):
        self.ratings = np.array(self.ratings, dtype=float)
        if self.temperature <= 0.0:
            raise DomainError(f"SCO temperature {self.temperature} must be positive")
        if self.learning_rate <= 0.0:
            raise DomainError(f"SCO learning rate {self.learning_rate} must be positive")

    @classmethod
    def create(cls, m: int, temperature: float = 1.0, learning_rate: float = 0.01) -> "ScoState":
        return cls(np.zeros(m), temperature, learning_rate)

    def ranking(self) -> Ranking:
        return Ranking.from_scores(self.ratings)


def preferences_from_rankings(votes: Sequence[Ranking]) -> list[Preference]:
    return [
        Preference(vote[x], vote[y])
        for vote in votes
        for x in range(len(vote))
        for y in range(x + 1, len(vote))
    ]


def _as_arrays(observations) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if observations and isinstance(observations[0], Ranking):
        observations = preferences_from_rankings(observations)
    if not observations:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)
    winners, losers, weights = zip(*observations)
    return np.array(winners), np.array(losers), np.array(weights, dtype=float)


def sco_loss(ratings: np.ndarray, observations, temperature: float = 1.0) -> float:
    """
    Soft Kendall-tau loss: sum over preferences a > b of
    weight * sigmoid((theta_b - theta_a) / temperature).
    """
    winners, losers, weights = _as_arrays(observations)
    ratings = np.asarray(ratings, dtype=float)
    return float(np.sum(weights * expit((ratings[losers] - ratings[winners]) / temperature)))


def sco_gradient(ratings: np.ndarray, observations, temperature: float = 1.0) -> np.ndarray:
    winners, losers, weights = _as_arrays(observations)
    ratings = np.asarray(ratings, dtype=float)
    p = expit((ratings[losers] - ratings[winners]) / temperature)
    slope = weights * p * (1.0 - p) / temperature
    grad = np.zeros(len(ratings))
    np.add.at(grad, winners, -slope)
    np.add.at(grad, losers, slope)
    return grad


def _sco_step(state: ScoState, winner: int, loser: int, weight: float) -> None:
    tau = state.temperature
    p = expit((state.ratings[loser] - state.ratings[winner]) / tau)
    step = state.learning_rate * weight * p * (1.0 - p) / tau
    state.ratings[winner] += step
    state.ratings[loser] -= step


def sco_batch_fit(observations, state: ScoState, epochs: int, rng: np.random.Generator) -> np.ndarray:
    """
    Stochastic gradient descent on the soft Kendall-tau loss, one shuffled pass
    over the observations per epoch. Observations are Preferences or Rankings;
    state.ratings is updated in place, which warm-starts the next fit.
    """
    if not observations:
        raise DomainError("SCO needs at least one observation")
    winners, losers, weights = _as_arrays(observations)
    for _ in range(epochs):
        for idx in rng.permutation(len(winners)):
            _sco_step(state, winners[idx], losers[idx], weights[idx])
    return state.ratings


def sco_online_update(state: ScoState, i: int, j: int, winner: int) -> ScoState:
    if i == j:
        raise DomainError("an SCO update needs two different agents")
    if winner not in (i, j):
        raise DomainError(f"winner {winner} is neither agent {i} nor agent {j}")
    loser = j if winner == i else i
    _sco_step(state, winner, loser, 1.0)
    return state
