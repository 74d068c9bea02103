"""
Data generators for active evaluation.

An EvaluationWorld holds a ground-truth ranking, one ranking per task and a
normal score distribution per (task, agent). Worlds come from a Mallows or a
Plackett-Luce model over task rankings, or from a dataset table of per-task
mean scores and standard deviations.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import softmax

from .base import DataError, DomainError
from .rankings import Ranking, kendall_tau
from .voting import kemeny_ranking, profile_from_rankings

logger = logging.getLogger(__name__)

DATASET_COLUMNS = ["task", "agent", "mean", "stddev"]

# minimum gap between two uniform means before they are redrawn
MEAN_TIE_TOLERANCE = 1e-9


class GeneratorKind(Enum):
    MALLOWS = "mallows"
    PLACKETT_LUCE = "plackett_luce"
    DATASET = "dataset"


@dataclass(frozen=True)
class ScoreDistribution:
    mean: float
    stddev: float

    def __post_init__(self):
        if not self.stddev >= 0.0:
            raise DomainError(f"negative standard deviation {self.stddev}")


@dataclass(frozen=True)
class TaskModel:
    """
    One task: its ranking over agents and a score distribution per agent.
    """
    task_ranking: Ranking
    dists: tuple[ScoreDistribution, ...]

    def __post_init__(self):
        if len(self.dists) != len(self.task_ranking):
            raise DomainError("one score distribution per ranked agent is required")
        means = [self.dists[a].mean for a in self.task_ranking]
        if any(hi < lo for hi, lo in zip(means, means[1:])):
            raise DomainError("means must descend in task-ranking order")


@dataclass(frozen=True)
class EvaluationWorld:
    ground_truth: Ranking
    tasks: tuple[TaskModel, ...]
    n_original: int = 0
    agent_names: tuple[str, ...] = ()
    task_names: tuple[str, ...] = ()
    means: np.ndarray = field(init=False, repr=False, compare=False)
    stddevs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.ground_truth) < 2:
            raise DomainError("a world needs at least two agents")
        if not self.tasks:
            raise DomainError("a world needs at least one task")
        agents = self.ground_truth.agents
        if agents != frozenset(range(len(agents))):
            raise DomainError("agent indices must be dense 0..m-1")
        for task in self.tasks:
            if task.task_ranking.agents != agents:
                raise DomainError("every task must rank the ground-truth agent set")

        m = len(self.ground_truth)
        if not self.n_original:
            object.__setattr__(self, "n_original", m)
        if not self.agent_names:
            object.__setattr__(self, "agent_names", tuple(f"a{i}" for i in range(m)))
        if not self.task_names:
            object.__setattr__(self, "task_names", tuple(f"v{j}" for j in range(len(self.tasks))))

        # n x m lookup tables for the sampling hot path
        means = np.array([[d.mean for d in task.dists] for task in self.tasks])
        stddevs = np.array([[d.stddev for d in task.dists] for task in self.tasks])
        means.setflags(write=False)
        stddevs.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stddevs", stddevs)

    @property
    def m(self) -> int:
        return len(self.ground_truth)

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def task_rankings(self) -> list[Ranking]:
        return [task.task_ranking for task in self.tasks]

    @property
    def original_ground_truth(self) -> Ranking:
        """
        Ground truth restricted to the agents present before clone augmentation.
        """
        if self.n_original == self.m:
            return self.ground_truth
        return self.ground_truth.restrict(range(self.n_original))


@dataclass(frozen=True)
class CloneSpec:
    count: int = 0
    epsilon: float = 0.1

    def __post_init__(self):
        if self.count < 0:
            raise DomainError("clone count must be non-negative")
        if not 0.0 <= self.epsilon < 1.0:
            raise DomainError(f"clone epsilon {self.epsilon} outside [0, 1)")


@dataclass
class GeneratorConfig:
    kind: GeneratorKind = GeneratorKind.MALLOWS
    m: int = 8
    n: int = 50
    phi: float = 0.3
    temperature: float = 1.0
    rating_interval: tuple[float, float] = (0.0, 1.0)
    score_interval: tuple[float, float] = (0.0, 100.0)
    sigma: float = 20.0
    seed: int = 0
    dataset_path: str = ""

    def validate(self) -> None:
        if self.kind is GeneratorKind.DATASET:
            if not self.dataset_path:
                raise DomainError("dataset generator needs dataset_path")
            return
        if self.m < 2 or self.n < 1:
            raise DomainError(f"degenerate world size m={self.m}, n={self.n}")
        if not 0.0 <= self.phi <= 1.0:
            raise DomainError(f"dispersion phi={self.phi} outside [0, 1]")
        if self.temperature <= 0.0:
            raise DomainError(f"temperature {self.temperature} must be positive")
        lo, hi = self.score_interval
        if not lo < hi:
            raise DomainError(f"empty score interval {self.score_interval}")
        rlo, rhi = self.rating_interval
        if not rlo < rhi:
            raise DomainError(f"empty rating interval {self.rating_interval}")
        if self.sigma < 0.0:
            raise DomainError(f"negative sigma {self.sigma}")


def sample_mallows(center: Ranking, phi: float, rng: np.random.Generator) -> Ranking:
    """
    Exact Mallows sample by repeated insertion: the i-th item of the center
    goes to slot j (0..i) with probability proportional to phi^(i-j).
    """
    if not 0.0 <= phi <= 1.0:
        raise DomainError(f"dispersion phi={phi} outside [0, 1]")

    order: list[int] = []
    for i, item in enumerate(center):
        weights = phi ** np.arange(i, -1, -1, dtype=float)
        slot = rng.choice(i + 1, p=weights / weights.sum())
        order.insert(slot, item)
    return Ranking(order)


def sample_plackett_luce(thetas, tau: float, rng: np.random.Generator) -> Ranking:
    """
    Draw agents one by one without replacement, each with probability
    softmax(theta / tau) over the agents still in the urn.
    """
    if tau <= 0.0:
        raise DomainError(f"temperature {tau} must be positive")

    logits = np.asarray(thetas, dtype=float) / tau
    remaining = list(range(len(logits)))
    order = []
    while remaining:
        probs = softmax(logits[remaining])
        pick = rng.choice(len(remaining), p=probs)
        order.append(remaining.pop(pick))
    return Ranking(order)


def _draw_means(m: int, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    """
    m distinct uniform means, descending.
    """
    while True:
        means = np.sort(rng.uniform(lo, hi, size=m))[::-1]
        if m < 2 or np.min(-np.diff(means)) > MEAN_TIE_TOLERANCE:
            return means


def _task_model(task_ranking: Ranking, sorted_means: np.ndarray, sigma: float) -> TaskModel:
    m = len(task_ranking)
    means = np.empty(m)
    means[list(task_ranking)] = sorted_means
    return TaskModel(task_ranking, tuple(ScoreDistribution(float(mu), sigma) for mu in means))


def build_world(config: GeneratorConfig, rng: np.random.Generator) -> EvaluationWorld:
    config.validate()
    if config.kind is GeneratorKind.DATASET:
        return load_dataset(read_dataset(config.dataset_path))

    m, n = config.m, config.n
    if config.kind is GeneratorKind.MALLOWS:
        ground_truth = Ranking(rng.permutation(m))
        task_rankings = [sample_mallows(ground_truth, config.phi, rng) for _ in range(n)]
    else:
        rlo, rhi = config.rating_interval
        thetas = rng.uniform(rlo, rhi, size=m)
        ground_truth = Ranking.from_scores(thetas)
        task_rankings = [sample_plackett_luce(thetas, config.temperature, rng) for _ in range(n)]

    lo, hi = config.score_interval
    tasks = tuple(
        _task_model(ranking, _draw_means(m, lo, hi, rng), config.sigma)
        for ranking in task_rankings
    )
    return EvaluationWorld(ground_truth, tasks)


def sample_score(world: EvaluationWorld, v: int, a: int, rng: np.random.Generator) -> float:
    return float(rng.normal(world.means[v, a], world.stddevs[v, a]))


def _insert(order: list[int], anchor: int, new: int, ahead: bool) -> None:
    pos = order.index(anchor)
    order.insert(pos if ahead else pos + 1, new)


def add_clones(world: EvaluationWorld, spec: CloneSpec, rng: np.random.Generator) -> EvaluationWorld:
    """
    Add spec.count clones of randomly chosen original agents, each placed next
    to its original in every ranking with a slightly perturbed mean.
    """
    n_original = world.n_original
    gt = list(world.ground_truth)
    rankings = [list(task.task_ranking) for task in world.tasks]
    means = [list(row) for row in world.means]
    stddevs = [list(row) for row in world.stddevs]

    for _ in range(spec.count):
        original = int(rng.integers(n_original))
        clone = len(gt)
        ahead = bool(rng.integers(2))
        _insert(gt, original, clone, ahead)

        for v, order in enumerate(rankings):
            pos = order.index(original)
            if ahead and pos == 0:
                neighbour = order[1]
            elif not ahead and pos == len(order) - 1:
                neighbour = order[-2]
            else:
                neighbour = order[pos - 1] if ahead else order[pos + 1]

            mu_a = means[v][original]
            mu_clone = mu_a + spec.epsilon * (means[v][neighbour] - mu_a)
            if mu_clone > mu_a:
                side = True
            elif mu_clone < mu_a:
                side = False
            else:
                side = ahead
            _insert(order, original, clone, side)
            means[v].append(mu_clone)
            stddevs[v].append(stddevs[v][original])

    tasks = tuple(
        TaskModel(
            Ranking(order),
            tuple(ScoreDistribution(mu, sd) for mu, sd in zip(means[v], stddevs[v])),
        )
        for v, order in enumerate(rankings)
    )
    names = world.agent_names + tuple(f"a{i}" for i in range(world.m, len(gt)))
    return EvaluationWorld(Ranking(gt), tasks, n_original=n_original,
                           agent_names=names, task_names=world.task_names)


def read_dataset(path: str | Path) -> pd.DataFrame:
    """
    Read a dataset CSV with header task,agent,mean,stddev.
    """
    try:
        table = pd.read_csv(path, dtype={"task": str, "agent": str}, encoding="utf-8")
    except FileNotFoundError as e:
        raise DataError(f"dataset {path} not found") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"cannot parse dataset {path}: {e}") from e

    missing = set(DATASET_COLUMNS) - set(table.columns)
    if missing:
        raise DataError(f"dataset {path} is missing columns {sorted(missing)}")
    return table[DATASET_COLUMNS]


def dataset_problems(table: pd.DataFrame) -> list[str]:
    """
    Everything that keeps a table from becoming a world, one line each.
    """
    problems = []
    missing = set(DATASET_COLUMNS) - set(table.columns)
    if missing:
        return [f"missing columns {sorted(missing)}"]

    if table[["task", "agent"]].isna().any(axis=None):
        problems.append("rows with an empty task or agent name")
    values = table[["mean", "stddev"]].apply(pd.to_numeric, errors="coerce")
    if values.isna().any(axis=None) or not np.isfinite(values.to_numpy()).all():
        problems.append("non-numeric or non-finite mean/stddev cells")
        return problems
    if (values["stddev"] < 0).any():
        problems.append("negative stddev cells")

    duplicated = table.duplicated(["task", "agent"])
    for task, agent in table.loc[duplicated, ["task", "agent"]].itertuples(index=False):
        problems.append(f"duplicate cell task={task} agent={agent}")

    tasks = pd.unique(table["task"])
    agents = pd.unique(table["agent"])
    present = set(map(tuple, table[["task", "agent"]].itertuples(index=False)))
    for task in tasks:
        absent = [agent for agent in agents if (task, agent) not in present]
        if absent:
            problems.append(f"task {task} is missing agents {absent}")

    spread = values.groupby(table["task"], sort=False)["mean"].agg(lambda s: s.max() - s.min())
    for task, width in spread.items():
        if width <= 0.0:
            problems.append(f"task {task} has a constant mean")
    if len(agents) < 2:
        problems.append("fewer than two agents")
    return problems


def load_dataset(table: pd.DataFrame) -> EvaluationWorld:
    """
    Build a world from per-(task, agent) mean and stddev, normalizing every task
    to [0, 100]; the ground truth is the Kemeny ranking of the task rankings.
    """
    problems = dataset_problems(table)
    if problems:
        raise DataError("; ".join(problems))

    task_names = tuple(str(t) for t in pd.unique(table["task"]))
    agent_names = tuple(str(a) for a in pd.unique(table["agent"]))
    grid = table.pivot(index="task", columns="agent")
    mu = grid["mean"].loc[list(task_names), list(agent_names)].to_numpy(dtype=float)
    sd = grid["stddev"].loc[list(task_names), list(agent_names)].to_numpy(dtype=float)

    lo = mu.min(axis=1, keepdims=True)
    scale = 100.0 / (mu.max(axis=1, keepdims=True) - lo)
    mu = (mu - lo) * scale
    sd = sd * scale

    tasks = tuple(
        TaskModel(
            Ranking.from_scores(mu[v]),
            tuple(ScoreDistribution(float(x), float(s)) for x, s in zip(mu[v], sd[v])),
        )
        for v in range(len(task_names))
    )
    ground_truth, _ = kemeny_ranking(profile_from_rankings([t.task_ranking for t in tasks]))
    logger.info("loaded dataset with %d agents and %d tasks", len(agent_names), len(task_names))
    return EvaluationWorld(ground_truth, tasks, agent_names=agent_names, task_names=task_names)


def export_world(world: EvaluationWorld, path: str | Path) -> None:
    rows = [
        (world.task_names[v], world.agent_names[a], world.means[v, a], world.stddevs[v, a])
        for v in range(world.n)
        for a in range(world.m)
    ]
    pd.DataFrame(rows, columns=DATASET_COLUMNS).to_csv(path, index=False, encoding="utf-8")


def task_variation(world: EvaluationWorld) -> np.ndarray:
    """
    K_d between the ground truth and every task ranking.
    """
    return np.array([kendall_tau(task.task_ranking, world.ground_truth) for task in world.tasks])
