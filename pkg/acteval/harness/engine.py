"""
Experiment engines.

ExperimentEngine runs the active evaluation loop for every (algorithm, seed)
pair of a configuration and reduces the runs to mean windowed GRE curves and
AGRE values with 95% confidence half-widths. KemenyCheckEngine measures how
well the Kemeny ranking of task rankings recovers the ground truth.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import pandas as pd

from ..base import ConfigError, ContractViolation, EngineBase
from ..datagen import (
    CloneSpec,
    EvaluationWorld,
    GeneratorConfig,
    GeneratorKind,
    add_clones,
    build_world,
    sample_score,
    task_variation,
)
from ..evaluators import Evaluator, create_evaluator, uniform_choose
from ..rankings import AgreAccumulator, Ranking, generalized_ranking_error, normalized_kendall_tau
from ..ratings import Outcome
from ..utils import STREAM_ALGORITHM, STREAM_SCORES, STREAM_WORLD, ci95, derive_rng, windowed_mean
from ..voting import PreferenceProfile, kemeny_ranking, kemeny_score_distance, profile_from_rankings
from .config import AlgorithmSpec, ExperimentConfig

# values in reports carry this many decimals, the precision of the CSV files
REPORT_DECIMALS = 6


@dataclass
class RunRecord:
    """
    Per-round trace of one seeded run.
    """
    algorithm: str
    seed: int
    k_values: list[int]
    tasks: np.ndarray
    agent_i: np.ndarray
    agent_j: np.ndarray
    score_i: np.ndarray
    score_j: np.ndarray
    rankings: list[str]
    gre: np.ndarray
    agre: np.ndarray
    ratings: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return len(self.tasks)

    def to_df(self) -> pd.DataFrame:
        df = pd.DataFrame({
            "t": np.arange(1, self.horizon + 1),
            "task": self.tasks,
            "agent_i": self.agent_i,
            "agent_j": self.agent_j,
            "score_i": self.score_i,
            "score_j": self.score_j,
            "ranking": self.rankings,
        })
        for idx, k in enumerate(self.k_values):
            df[f"gre_k{k}"] = self.gre[:, idx]
        return df


def _check_choice(choice, world: EvaluationWorld, algorithm: str, t: int) -> None:
    task, agent_i, agent_j = choice
    if not (0 <= task < world.n and 0 <= agent_i < world.m and 0 <= agent_j < world.m):
        raise ContractViolation(f"{algorithm} chose an invalid (task, agent, agent) {tuple(choice)} at t={t}")


def run_single(world: EvaluationWorld,
               evaluator: Evaluator,
               horizon: int,
               k_values: Sequence[int],
               rng: np.random.Generator,
               algorithm: str = "",
               seed: int = 0) -> RunRecord:
    """
    The active evaluation loop: choose, sample both scores, update, report.

    GRE is measured against the ground truth of the original agents; clone
    agents are dropped from the reported ranking first.
    """
    algorithm = algorithm or evaluator.name
    m = world.m
    everyone = frozenset(range(m))
    originals = range(world.n_original)
    ground_truth = world.original_ground_truth
    restrict = world.n_original < m

    tasks = np.empty(horizon, dtype=np.int64)
    agent_i = np.empty(horizon, dtype=np.int64)
    agent_j = np.empty(horizon, dtype=np.int64)
    score_i = np.empty(horizon)
    score_j = np.empty(horizon)
    rankings = []
    gre = np.empty((horizon, len(k_values)))
    accumulators = [AgreAccumulator() for _ in k_values]

    for t in range(1, horizon + 1):
        choice = evaluator.choose(t)
        _check_choice(choice, world, algorithm, t)
        v, i, j = choice
        s_i = sample_score(world, v, i, rng)
        s_j = sample_score(world, v, j, rng)
        evaluator.update(v, i, j, s_i, s_j)

        ranking = evaluator.ranking()
        if not isinstance(ranking, Ranking) or len(ranking) != m or ranking.agents != everyone:
            raise ContractViolation(f"{algorithm} reported an invalid ranking {ranking!r} at t={t}")
        if restrict:
            ranking = ranking.restrict(originals)

        row = t - 1
        tasks[row], agent_i[row], agent_j[row] = v, i, j
        score_i[row], score_j[row] = s_i, s_j
        rankings.append(str(ranking))
        for idx, k in enumerate(k_values):
            value = generalized_ranking_error(ranking, ground_truth, k)
            gre[row, idx] = value
            accumulators[idx].push(value)

    ratings = evaluator.ratings()
    return RunRecord(
        algorithm=algorithm,
        seed=seed,
        k_values=list(k_values),
        tasks=tasks,
        agent_i=agent_i,
        agent_j=agent_j,
        score_i=score_i,
        score_j=score_j,
        rankings=rankings,
        gre=gre,
        agre=np.array([acc.mean for acc in accumulators]),
        ratings=None if ratings is None else np.asarray(ratings, dtype=float),
    )


def make_world(generator: GeneratorConfig, clones: CloneSpec, seed: int) -> EvaluationWorld:
    """
    The world of one seed, identical for every algorithm.
    """
    rng = derive_rng(seed, STREAM_WORLD)
    world = build_world(replace(generator, seed=seed), rng)
    if clones.count:
        world = add_clones(world, clones, rng)
    return world


@dataclass
class RunJob:
    generator: GeneratorConfig
    clones: CloneSpec
    algorithm: AlgorithmSpec
    seed: int
    horizon: int
    k_values: list[int]
    window: int


@dataclass
class RunResult:
    algorithm: str
    seed: int
    curves: np.ndarray
    agre: np.ndarray
    ratings: np.ndarray | None


def execute_job(job: RunJob) -> RunResult:
    """
    Worker entry point: one (algorithm, seed) run reduced to windowed curves.
    """
    world = make_world(job.generator, job.clones, job.seed)
    for k in job.k_values:
        if k > world.n_original:
            raise ConfigError(f"rank cutoff k={k} exceeds the {world.n_original} agents of the world")

    label = job.algorithm.label
    evaluator = create_evaluator(
        job.algorithm.name,
        world.m,
        world.n,
        derive_rng(job.seed, STREAM_ALGORITHM, label),
        job.generator.score_interval,
        **job.algorithm.params,
    )
    record = run_single(world, evaluator, job.horizon, job.k_values,
                        derive_rng(job.seed, STREAM_SCORES, label), label, job.seed)
    curves = np.column_stack([windowed_mean(record.gre[:, idx], job.window)
                              for idx in range(len(job.k_values))])
    return RunResult(label, job.seed, curves, record.agre, record.ratings)


@dataclass
class AggregateReport:
    """
    curves: algorithm, k, t, mean_windowed_gre, ci95
    agre: algorithm, k, agre, ci95
    ratings: algorithm, seed, agent, rating (optional)
    """
    curves: pd.DataFrame
    agre: pd.DataFrame
    ratings: pd.DataFrame | None = None
    log_log: bool = False

    CURVE_COLUMNS = ["algorithm", "k", "t", "mean_windowed_gre", "ci95"]
    AGRE_COLUMNS = ["algorithm", "k", "agre", "ci95"]
    RATING_COLUMNS = ["algorithm", "seed", "agent", "rating"]

    @classmethod
    def empty(cls) -> "AggregateReport":
        return cls(pd.DataFrame(columns=cls.CURVE_COLUMNS), pd.DataFrame(columns=cls.AGRE_COLUMNS))

    @property
    def algorithms(self) -> list[str]:
        return list(pd.unique(self.agre["algorithm"]))

    def agre_of(self, algorithm: str, k: int) -> float:
        rows = self.agre[(self.agre["algorithm"] == algorithm) & (self.agre["k"] == k)]
        return float(rows["agre"].iloc[0])


def reduce_runs(algorithm: str, k_values: Sequence[int], results: list[RunResult]) -> tuple[pd.DataFrame, pd.DataFrame]:
    """
    Window per seed, then average across seeds.
    """
    curves = np.stack([r.curves for r in results])
    agre = np.stack([r.agre for r in results])
    horizon = curves.shape[1]

    curve_frames = []
    agre_rows = []
    for idx, k in enumerate(k_values):
        curve_frames.append(pd.DataFrame({
            "algorithm": algorithm,
            "k": k,
            "t": np.arange(1, horizon + 1),
            "mean_windowed_gre": np.round(curves[:, :, idx].mean(axis=0), REPORT_DECIMALS),
            "ci95": np.round(ci95(curves[:, :, idx]), REPORT_DECIMALS),
        }))
        agre_rows.append({
            "algorithm": algorithm,
            "k": k,
            "agre": round(float(agre[:, idx].mean()), REPORT_DECIMALS),
            "ci95": round(float(ci95(agre[:, idx])), REPORT_DECIMALS),
        })
    return pd.concat(curve_frames, ignore_index=True), pd.DataFrame(agre_rows)


class ExperimentEngine(EngineBase):
    """
    Runs every (algorithm, seed) pair of a configuration on the worker pool.
    """

    def __init__(self, config: ExperimentConfig):
        """"""
        super().__init__(config.output_dir, config.workers)
        self.config = config

    def jobs(self) -> list[RunJob]:
        config = self.config
        return [
            RunJob(config.generator, config.clones, algorithm, seed,
                   config.horizon, list(config.k_values), config.window)
            for algorithm in config.algorithms
            for seed in config.seed_list
        ]

    def run_experiment(self) -> AggregateReport:
        config = self.config
        if not config.algorithms:
            self.write_log("no algorithms configured")
            return AggregateReport.empty()

        jobs = self.jobs()
        self.write_log(f"running {len(config.algorithms)} algorithms x {len(config.seed_list)} seeds, "
                       f"T={config.horizon}, k={config.k_values}, workers={self.workers}")

        curve_frames, agre_frames, rating_rows = [], [], []
        runs_by_label: dict[str, list[RunResult]] = {spec.label: [] for spec in config.algorithms}
        for result in self.map_jobs(execute_job, jobs):
            self.write_log(f"{result.algorithm} seed {result.seed} done", logging.DEBUG)
            runs_by_label[result.algorithm].append(result)
            if config.ratings and result.ratings is not None:
                rating_rows.extend(
                    {"algorithm": result.algorithm, "seed": result.seed, "agent": a, "rating": float(x)}
                    for a, x in enumerate(result.ratings)
                )

        for name, runs in runs_by_label.items():
            curves, agre = reduce_runs(name, config.k_values, runs)
            curve_frames.append(curves)
            agre_frames.append(agre)
            summary = ", ".join(f"k={row.k}: {row.agre:.6f}" for row in agre.itertuples())
            self.write_log(f"{name} AGRE {summary}")

        ratings = None
        if config.ratings:
            ratings = pd.DataFrame(rating_rows, columns=AggregateReport.RATING_COLUMNS)
        return AggregateReport(
            pd.concat(curve_frames, ignore_index=True),
            pd.concat(agre_frames, ignore_index=True),
            ratings,
            config.log_log,
        )

    def sweep_points(self) -> list[tuple[str, ExperimentConfig]]:
        """
        (sub-directory, configuration) for every point of the sweep.
        """
        config = self.config
        phis = config.sweep.phi or [config.generator.phi]
        k_sets = config.sweep.k_values or [config.k_values]
        algorithm_sets = config.sweep.algorithms or [config.algorithms]
        points = []
        for phi in phis:
            for k_values in k_sets:
                for set_index, algorithms in enumerate(algorithm_sets):
                    name = f"phi{phi:g}"
                    if len(k_sets) > 1:
                        name += "_k" + "-".join(str(k) for k in k_values)
                    if len(algorithm_sets) > 1:
                        name += f"_set{set_index}"
                    point = replace(
                        config,
                        generator=replace(config.generator, phi=float(phi)),
                        k_values=list(k_values),
                        algorithms=list(algorithms),
                        output_dir=str(self.output_dir / name),
                    )
                    point.validate()
                    points.append((name, point))
        return points


@dataclass
class KemenySummary:
    recovery: pd.DataFrame
    sampling: pd.DataFrame = field(default_factory=pd.DataFrame)

    RECOVERY_COLUMNS = ["phi", "instances", "mean_kn", "mean_ksd", "zero_ksd"]
    SAMPLING_COLUMNS = ["phi", "t", "mean_kn", "mean_ksd"]


@dataclass
class RecoveryJob:
    generator: GeneratorConfig
    seed: int


@dataclass
class SamplingJob:
    generator: GeneratorConfig
    seed: int
    horizon: int
    every: int


def recovery_instance(job: RecoveryJob) -> tuple[float, float]:
    """
    K_n and Kemeny-score distance between the Kemeny ranking of the task
    rankings and the ground truth of one world.
    """
    world = make_world(job.generator, CloneSpec(), job.seed)
    profile = profile_from_rankings(world.task_rankings)
    kemeny, _ = kemeny_ranking(profile)
    kn = normalized_kendall_tau(kemeny, world.ground_truth)
    return kn, kemeny_score_distance(profile, kemeny, world.ground_truth)


def sampling_instance(job: SamplingJob) -> tuple[np.ndarray, np.ndarray]:
    """
    Kemeny ranking of a growing profile of sampled score comparisons, checked
    every job.every rounds against the ground truth; the score distance is
    measured on the profile of the true task rankings.
    """
    world = make_world(job.generator, CloneSpec(), job.seed)
    rng = derive_rng(job.seed, STREAM_SCORES, "kemeny-sampling")
    truth = profile_from_rankings(world.task_rankings)
    wins = np.zeros((world.m, world.m))

    kn, ksd = [], []
    for t in range(1, job.horizon + 1):
        task, i, j = uniform_choose(world.m, world.n, rng)
        s = Outcome.from_scores(sample_score(world, task, i, rng), sample_score(world, task, j, rng)).score
        wins[i, j] += s
        wins[j, i] += 1.0 - s
        if t % job.every == 0:
            kemeny, _ = kemeny_ranking(PreferenceProfile(wins))
            kn.append(normalized_kendall_tau(kemeny, world.ground_truth))
            ksd.append(kemeny_score_distance(truth, kemeny, world.ground_truth))
    return np.array(kn), np.array(ksd)


class KemenyCheckEngine(EngineBase):
    """
    Ground-truth recovery of the Kemeny ranking over Mallows worlds.
    """

    ZERO_TOLERANCE = 1e-9

    def __init__(self, config: ExperimentConfig):
        """"""
        super().__init__(config.output_dir, config.workers)
        self.config = config
        if config.generator.kind is not GeneratorKind.MALLOWS:
            raise ConfigError("the Kemeny check runs on Mallows worlds")

    def kemeny_recovery_experiment(self) -> KemenySummary:
        spec = self.config.kemeny_check
        base = self.config.generator
        recovery_rows, sampling_frames = [], []

        for phi in spec.phi:
            generator = replace(base, phi=float(phi))
            jobs = [RecoveryJob(generator, base.seed + i) for i in range(spec.instances)]
            outcomes = np.array(list(self.map_jobs(recovery_instance, jobs)))
            kn, ksd = outcomes[:, 0], outcomes[:, 1]
            zero = int((ksd <= self.ZERO_TOLERANCE).sum())
            recovery_rows.append({
                "phi": float(phi),
                "instances": spec.instances,
                "mean_kn": round(float(kn.mean()), REPORT_DECIMALS),
                "mean_ksd": round(float(ksd.mean()), REPORT_DECIMALS),
                "zero_ksd": zero,
            })
            self.write_log(f"phi={phi}: {zero}/{spec.instances} instances at KSD 0, "
                           f"mean K_n {kn.mean():.6f}")

            if spec.sampling_seeds and spec.sampling_horizon >= spec.sampling_every:
                sampling = [
                    SamplingJob(generator, base.seed + i, spec.sampling_horizon, spec.sampling_every)
                    for i in range(spec.sampling_seeds)
                ]
                curves = list(self.map_jobs(sampling_instance, sampling))
                kn_curve = np.mean([c[0] for c in curves], axis=0)
                ksd_curve = np.mean([c[1] for c in curves], axis=0)
                sampling_frames.append(pd.DataFrame({
                    "phi": float(phi),
                    "t": np.arange(1, len(kn_curve) + 1) * spec.sampling_every,
                    "mean_kn": np.round(kn_curve, REPORT_DECIMALS),
                    "mean_ksd": np.round(ksd_curve, REPORT_DECIMALS),
                }))

        sampling = (pd.concat(sampling_frames, ignore_index=True) if sampling_frames
                    else pd.DataFrame(columns=KemenySummary.SAMPLING_COLUMNS))
        return KemenySummary(pd.DataFrame(recovery_rows, columns=KemenySummary.RECOVERY_COLUMNS), sampling)


def task_variation_table(config: ExperimentConfig) -> pd.DataFrame:
    """
    Histogram of K_d(ground truth, task ranking) pooled over seeds, per dispersion.
    """
    phis = config.sweep.phi or [config.generator.phi]
    frames = []
    for phi in phis:
        generator = replace(config.generator, phi=float(phi))
        distances = np.concatenate([
            task_variation(make_world(generator, CloneSpec(), seed)) for seed in config.seed_list
        ])
        values, counts = np.unique(distances, return_counts=True)
        frames.append(pd.DataFrame({"phi": float(phi), "distance": values, "count": counts}))
    return pd.concat(frames, ignore_index=True)
