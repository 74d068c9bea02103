import numpy as np

from ..base import CapabilityError, ConfigError, DomainError
from .base import (
    Choice,
    Evaluator,
    BurnInSchedule,
    MeanTable,
    ucb_choose,
    uniform_averaging_ranking,
    uniform_choose,
)
from .baselines import BasicUCB, KemenyEl, KemenyElEpoch, UniformAveraging
from .batch import (
    BatchCopeland,
    BatchElo,
    BatchMaximalLotteries,
    BatchNashAveraging,
    BatchRankedPairs,
    BatchSCO,
)
from .mean_model import (
    MeanModelCopeland,
    MeanModelMaximalLotteries,
    MeanModelRankedPairs,
    ProportionalRepresentation,
)
from .online import OnlineElo, OnlineMaximalLotteries, OnlineNashAveraging, OnlineSCO

ALGORITHMS: dict[str, type[Evaluator]] = {
    cls.name: cls
    for cls in (
        UniformAveraging,
        BasicUCB,
        KemenyEl,
        BatchElo,
        OnlineElo,
        BatchCopeland,
        BatchRankedPairs,
        BatchMaximalLotteries,
        OnlineMaximalLotteries,
        BatchSCO,
        OnlineSCO,
        BatchNashAveraging,
        OnlineNashAveraging,
        MeanModelCopeland,
        MeanModelRankedPairs,
        MeanModelMaximalLotteries,
        ProportionalRepresentation,
    )
}


def create_evaluator(name: str,
                     m: int,
                     n: int,
                     rng: np.random.Generator,
                     score_range: tuple[float, float] = (0.0, 100.0),
                     **params) -> Evaluator:
    """
    Build an evaluator by its algorithm name with hyperparameter overrides.
    """
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ConfigError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    try:
        return cls(m, n, rng, score_range, **params)
    except (TypeError, DomainError, CapabilityError) as e:
        raise ConfigError(f"bad hyperparameters for {name}: {e}") from e
