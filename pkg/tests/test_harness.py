import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from acteval import __version__
from acteval.base import ConfigError, ContractViolation, DataError
from acteval.datagen import CloneSpec, GeneratorConfig, GeneratorKind
from acteval.evaluators import Choice, Evaluator, create_evaluator
from acteval.harness import cli
from acteval.harness.config import (
    ENV_OUTPUT_DIR,
    ENV_WORKERS,
    AlgorithmSpec,
    config_from_dict,
    load_config,
)
from acteval.harness.engine import (
    AggregateReport,
    ExperimentEngine,
    KemenyCheckEngine,
    RunJob,
    execute_job,
    make_world,
    run_single,
    task_variation_table,
)
from acteval.harness.report import (
    emit_kemeny_reports,
    emit_reports,
    line_plot_svg,
    read_report,
    write_manifest,
)
from acteval.rankings import Ranking, generalized_ranking_error
from acteval.utils import ci95, derive_rng, windowed_mean

from .conftest import noiseless_world

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in (ENV_WORKERS, ENV_OUTPUT_DIR):
        monkeypatch.delenv(name, raising=False)


def small_config(tmp_path, **changes) -> dict:
    data = {
        "generator": {"kind": "mallows", "m": 4, "n": 3, "phi": 0.3, "sigma": 20.0, "seed": 0},
        "algorithms": ["uniform_averaging", "batch_copeland"],
        "horizon": 30,
        "k_values": [1, 4],
        "seeds": 2,
        "window": 10,
        "output_dir": str(tmp_path / "out"),
    }
    data.update(changes)
    return data


def write_config(tmp_path, **changes) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(small_config(tmp_path, **changes)))
    return path


class BrokenRanking(Evaluator):

    name = "broken"

    def choose(self, t):
        return Choice(0, 0, 1)

    def update(self, task, agent_i, agent_j, score_i, score_j):
        pass

    def ranking(self):
        return Ranking([0])


class BrokenChoice(BrokenRanking):

    def choose(self, t):
        return Choice(self.n, 0, 1)


# configuration

def test_config_from_dict(tmp_path):
    config = config_from_dict(small_config(tmp_path, algorithms=[
        "uniform_averaging", {"name": "online_elo", "params": {"k_factor": 16}},
    ]))
    assert config.seed_list == [0, 1]
    assert config.algorithms[1] == AlgorithmSpec("online_elo", {"k_factor": 16})
    assert config.generator.kind is GeneratorKind.MALLOWS
    json.dumps(config.to_dict())


def test_explicit_seed_list(tmp_path):
    assert config_from_dict(small_config(tmp_path, seeds=[5, 9])).seed_list == [5, 9]


@pytest.mark.parametrize("changes", [
    {"unknown": 1},
    {"algorithms": ["no_such_algorithm"]},
    {"algorithms": [42]},
    {"k_values": [5]},
    {"k_values": []},
    {"horizon": 0},
    {"seeds": 0},
    {"seeds": True},
    {"workers": 0},
    {"generator": {"kind": "poisson"}},
    {"generator": {"phi": 2.0}},
    {"generator": {"colour": "red"}},
    {"clones": {"count": -1}},
    {"algorithms": ["online_elo", "online_elo"]},
    {"algorithms": [
        {"name": "online_elo", "params": {"k_factor": 4}},
        {"name": "online_elo", "params": {"k_factor": 64}},
    ]},
    {"algorithms": [{"name": "online_elo", "label": 7}]},
    {"algorithms": [{"name": "proportional_representation", "params": {"committee_size": 100}}]},
    {"algorithms": ["kemenyel"], "clones": {"count": 14}},
    {"sweep": {"algorithms": [[]]}},
])
def test_config_errors(tmp_path, changes):
    with pytest.raises(ConfigError):
        config_from_dict(small_config(tmp_path, **changes))


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_environment_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_WORKERS, "3")
    monkeypatch.setenv(ENV_OUTPUT_DIR, str(tmp_path / "elsewhere"))
    config = config_from_dict(small_config(tmp_path))
    assert config.workers == 3
    assert config.output_dir == str(tmp_path / "elsewhere")

    monkeypatch.setenv(ENV_WORKERS, "many")
    with pytest.raises(ConfigError):
        config_from_dict(small_config(tmp_path))


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    config = load_config(path)
    assert config.horizon >= 1


# run loop

def test_single_round_run():
    world = noiseless_world(4, 3)
    evaluator = create_evaluator("uniform_averaging", 4, 3, np.random.default_rng(1))
    record = run_single(world, evaluator, 1, [1, 4], np.random.default_rng(2))
    assert record.horizon == 1
    assert np.array_equal(record.agre, record.gre[0])


def test_agre_is_mean_of_gre(tmp_path):
    world = make_world(GeneratorConfig(m=5, n=4), CloneSpec(), seed=3)
    evaluator = create_evaluator("online_elo", world.m, world.n, np.random.default_rng(1))
    record = run_single(world, evaluator, 200, [2, 5], np.random.default_rng(2))

    assert np.allclose(record.agre, record.gre.mean(axis=0))
    df = record.to_df()
    assert len(df) == 200
    assert list(df.columns[-2:]) == ["gre_k2", "gre_k5"]
    gt = world.ground_truth
    assert df["gre_k2"].iloc[-1] == generalized_ranking_error(Ranking.parse(df["ranking"].iloc[-1]), gt, 2)


def test_noiseless_world_mean_model_reaches_zero():
    world = noiseless_world(4, 3, seed=5)
    evaluator = create_evaluator("mean_model_copeland", 4, 3, np.random.default_rng(1))
    record = run_single(world, evaluator, 40, [2, 4], np.random.default_rng(2))
    burn_in = world.n * world.m
    assert (record.gre[burn_in - 1:] == 0.0).all()


def test_replay_is_deterministic():
    def once():
        world = make_world(GeneratorConfig(m=5, n=4), CloneSpec(), seed=7)
        evaluator = create_evaluator("batch_max_lotteries", world.m, world.n, derive_rng(7, 2, "x"))
        return run_single(world, evaluator, 80, [3], derive_rng(7, 1, "x")).to_df()

    pd.testing.assert_frame_equal(once(), once())


def test_clone_rankings_are_restricted():
    world = make_world(GeneratorConfig(m=4, n=3), CloneSpec(count=2), seed=1)
    assert world.m == 6
    evaluator = create_evaluator("uniform_averaging", world.m, world.n, np.random.default_rng(1))
    record = run_single(world, evaluator, 20, [1, 4], np.random.default_rng(2))
    assert all(Ranking.parse(r).agents == frozenset(range(4)) for r in record.rankings)


@pytest.mark.parametrize("cls", [BrokenRanking, BrokenChoice])
def test_contract_violations(cls):
    world = noiseless_world(3, 2)
    with pytest.raises(ContractViolation):
        run_single(world, cls(3, 2, np.random.default_rng(0)), 5, [1], np.random.default_rng(0))


def test_make_world_is_seeded():
    a = make_world(GeneratorConfig(m=5, n=4), CloneSpec(), seed=2)
    b = make_world(GeneratorConfig(m=5, n=4), CloneSpec(), seed=2)
    c = make_world(GeneratorConfig(m=5, n=4), CloneSpec(), seed=3)
    assert np.array_equal(a.means, b.means)
    assert not np.array_equal(a.means, c.means)


def test_execute_job_rejects_large_cutoff():
    job = RunJob(GeneratorConfig(m=4, n=3), CloneSpec(), AlgorithmSpec("uniform_averaging"), 0, 10, [5], 5)
    with pytest.raises(ConfigError):
        execute_job(job)


# aggregation

def test_experiment_report(tmp_path):
    config = config_from_dict(small_config(tmp_path, ratings=True))
    report = ExperimentEngine(config).run_experiment()

    assert report.algorithms == ["uniform_averaging", "batch_copeland"]
    assert len(report.curves) == 2 * 2 * 30
    assert ((report.curves["mean_windowed_gre"] >= 0) & (report.curves["mean_windowed_gre"] <= 1)).all()
    assert (report.curves["ci95"] >= 0).all() and (report.agre["ci95"] >= 0).all()
    assert set(report.ratings["algorithm"]) == {"uniform_averaging"}
    assert len(report.ratings) == 2 * 4


def test_single_run_report_is_windowed_curve(tmp_path):
    config = config_from_dict(small_config(tmp_path, algorithms=["online_elo"], seeds=[4], k_values=[2]))
    report = ExperimentEngine(config).run_experiment()

    world = make_world(config.generator, config.clones, 4)
    evaluator = create_evaluator("online_elo", world.m, world.n, derive_rng(4, 2, "online_elo"))
    record = run_single(world, evaluator, 30, [2], derive_rng(4, 1, "online_elo"))
    expected = np.round(windowed_mean(record.gre[:, 0], 10), 6)
    assert np.array_equal(report.curves["mean_windowed_gre"].to_numpy(), expected)
    assert (report.curves["ci95"] == 0.0).all()
    assert report.agre_of("online_elo", 2) == round(float(record.agre[0]), 6)


def test_labelled_copies_of_one_algorithm_stay_apart(tmp_path):
    slow = {"name": "online_elo", "params": {"k_factor": 4}, "label": "elo_k4"}
    fast = {"name": "online_elo", "params": {"k_factor": 64}, "label": "elo_k64"}
    config = config_from_dict(small_config(tmp_path, algorithms=[slow, "uniform_averaging", fast]))
    report = ExperimentEngine(config).run_experiment()

    assert report.algorithms == ["elo_k4", "uniform_averaging", "elo_k64"]
    assert len(report.agre) == 3 * 2
    assert (report.curves.groupby(["algorithm", "k"]).size() == 30).all()

    for entry in (slow, fast):
        alone = config_from_dict(small_config(tmp_path, algorithms=[entry]))
        single = ExperimentEngine(alone).run_experiment()
        for k in (1, 4):
            assert report.agre_of(entry["label"], k) == single.agre_of(entry["label"], k)


def test_labels_default_to_algorithm_names(tmp_path):
    config = config_from_dict(small_config(tmp_path, algorithms=[
        "uniform_averaging", {"name": "online_elo", "params": {"k_factor": 16}},
    ]))
    assert [spec.label for spec in config.algorithms] == ["uniform_averaging", "online_elo"]


def test_workers_do_not_change_results(tmp_path):
    serial = ExperimentEngine(config_from_dict(small_config(tmp_path))).run_experiment()
    engine = ExperimentEngine(config_from_dict(small_config(tmp_path, workers=2)))
    try:
        parallel = engine.run_experiment()
    finally:
        engine.cleanup()
    pd.testing.assert_frame_equal(serial.curves, parallel.curves)
    pd.testing.assert_frame_equal(serial.agre, parallel.agre)


def test_sweep_points(tmp_path):
    config = config_from_dict(small_config(tmp_path, sweep={"phi": [0.3, 0.6], "k_values": [[1], [1, 4]]}))
    points = ExperimentEngine(config).sweep_points()
    assert [name for name, _ in points] == ["phi0.3_k1", "phi0.3_k1-4", "phi0.6_k1", "phi0.6_k1-4"]
    assert points[2][1].generator.phi == 0.6
    assert points[1][1].k_values == [1, 4]
    assert points[0][1].output_dir.endswith("phi0.3_k1")


def test_sweep_over_algorithm_sets(tmp_path):
    config = config_from_dict(small_config(tmp_path, sweep={
        "phi": [0.3],
        "algorithms": [["uniform_averaging"], ["online_elo", {"name": "basic_ucb", "label": "ucb"}]],
    }))
    points = ExperimentEngine(config).sweep_points()
    assert [name for name, _ in points] == ["phi0.3_set0", "phi0.3_set1"]
    assert [spec.label for spec in points[0][1].algorithms] == ["uniform_averaging"]
    assert [spec.label for spec in points[1][1].algorithms] == ["online_elo", "ucb"]


def test_derived_streams():
    assert derive_rng(1, 0).random() == derive_rng(1, 0).random()
    assert derive_rng(1, 0).random() != derive_rng(1, 1).random()
    assert derive_rng(1, 2, "a").random() != derive_rng(1, 2, "b").random()


def test_windowed_mean_and_ci():
    assert np.allclose(windowed_mean(np.array([1.0, 0.0, 1.0, 1.0]), 2), [1.0, 0.5, 0.5, 1.0])
    assert ci95(np.array([[0.5, 0.5]])).tolist() == [0.0, 0.0]
    assert ci95(np.array([0.0, 1.0])) == pytest.approx(1.96 * np.sqrt(0.5) / np.sqrt(2))


# Kemeny check

def test_kemeny_check_zero_dispersion(tmp_path):
    config = config_from_dict(small_config(tmp_path, kemeny_check={
        "phi": [0.0], "instances": 3, "sampling_horizon": 20, "sampling_seeds": 2, "sampling_every": 10,
    }))
    summary = KemenyCheckEngine(config).kemeny_recovery_experiment()
    row = summary.recovery.iloc[0]
    assert row["zero_ksd"] == 3
    assert row["mean_kn"] == 0.0
    assert list(summary.sampling["t"]) == [10, 20]

    written = emit_kemeny_reports(summary, tmp_path / "kemeny")
    assert {p.name for p in written} == {"kemeny_recovery.csv", "kemeny_sampling.csv", "kemeny_sampling.svg"}


def test_kemeny_check_needs_mallows(tmp_path):
    config = config_from_dict(small_config(tmp_path, generator={"kind": "plackett_luce", "m": 4, "n": 3}))
    with pytest.raises(ConfigError):
        KemenyCheckEngine(config)


@pytest.mark.slow
@pytest.mark.parametrize("phi, minimum", [(0.3, 100), (0.6, 70)])
def test_kemeny_recovery_at_desk_scale(tmp_path, phi, minimum):
    config = config_from_dict(small_config(
        tmp_path,
        generator={"kind": "mallows", "m": 8, "n": 50, "seed": 0},
        k_values=[3],
        kemeny_check={"phi": [phi], "instances": 100, "sampling_seeds": 0},
    ))
    summary = KemenyCheckEngine(config).kemeny_recovery_experiment()
    assert summary.recovery.iloc[0]["zero_ksd"] >= minimum


def test_task_variation_table(tmp_path):
    config = config_from_dict(small_config(tmp_path, generator={"kind": "mallows", "m": 4, "n": 3, "phi": 0.0}))
    table = task_variation_table(config)
    assert table["distance"].tolist() == [0]
    assert table["count"].tolist() == [2 * 3]


# reports

def test_empty_report_writes_headers_only(tmp_path):
    written = emit_reports(AggregateReport.empty(), tmp_path)
    assert {p.name for p in written} == {"curves.csv", "agre.csv"}
    assert (tmp_path / "agre.csv").read_text().strip() == "algorithm,k,agre,ci95"
    assert not list(tmp_path.glob("*.svg"))


def test_report_round_trip(tmp_path):
    config = config_from_dict(small_config(tmp_path))
    report = ExperimentEngine(config).run_experiment()
    written = emit_reports(report, tmp_path / "run")
    assert {"curves_k1.svg", "curves_k4.svg"} <= {p.name for p in written}

    loaded = read_report(tmp_path / "run")
    assert loaded.agre["agre"].tolist() == report.agre["agre"].tolist()
    assert loaded.agre["ci95"].tolist() == report.agre["ci95"].tolist()
    assert loaded.curves["mean_windowed_gre"].tolist() == report.curves["mean_windowed_gre"].tolist()

    svg = ET.parse(tmp_path / "run" / "curves_k4.svg").getroot()
    lines = [el for el in svg.iter() if el.tag.endswith("polyline")]
    assert [el.get("data-series") for el in lines] == ["uniform_averaging", "batch_copeland"]


def test_read_report_errors(tmp_path):
    with pytest.raises(DataError):
        read_report(tmp_path)
    (tmp_path / "curves.csv").write_text("algorithm,k\n")
    (tmp_path / "agre.csv").write_text("algorithm,k,agre,ci95\n")
    with pytest.raises(DataError):
        read_report(tmp_path)


def test_log_log_plot():
    series = {
        "a": pd.DataFrame({"t": [1, 10, 100], "gre": [0.5, 0.1, 0.0]}),
        "b": pd.DataFrame({"t": [1, 10, 100], "gre": [0.9, 0.4, 0.2]}),
    }
    svg = line_plot_svg(series, "t", "gre", log_log=True, title="log")
    root = ET.fromstring(ET.tostring(svg))
    assert len([el for el in root.iter() if el.tag.endswith("polyline")]) == 2


def test_manifest(tmp_path):
    path = write_manifest({"horizon": 5}, tmp_path, "run")
    manifest = json.loads(path.read_text())
    assert manifest["version"] == __version__
    assert manifest["command"] == "run"
    assert manifest["config"] == {"horizon": 5}


# command line

def test_cli_run(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "cli"
    assert cli.main(["run", str(path), "--out", str(out), "--horizon", "15", "--seeds", "1"]) == cli.EXIT_OK
    assert (out / "agre.csv").exists() and (out / "manifest.json").exists()
    assert json.loads((out / "manifest.json").read_text())["config"]["horizon"] == 15
    assert len(pd.read_csv(out / "curves.csv")) == 2 * 2 * 15

    assert cli.main(["report", str(out), "--log-log"]) == cli.EXIT_OK


def test_cli_sweep(tmp_path):
    path = write_config(tmp_path, sweep={"phi": [0.0, 0.5]}, horizon=12, seeds=1)
    out = tmp_path / "sweep"
    assert cli.main(["sweep", str(path), "--out", str(out)]) == cli.EXIT_OK
    assert (out / "phi0" / "agre.csv").exists()
    assert (out / "phi0.5" / "agre.csv").exists()


def test_cli_task_variation(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "tv"
    assert cli.main(["task-variation", str(path), "--out", str(out)]) == cli.EXIT_OK
    assert (out / "task_variation.csv").exists()


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert cli.main(["run", str(tmp_path / "absent.json")]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(write_config(tmp_path, horizon=0))]) == cli.EXIT_CONFIG
    too_large = {"name": "proportional_representation", "params": {"committee_size": 100}}
    assert cli.main(["run", str(write_config(tmp_path, algorithms=[too_large]))]) == cli.EXIT_CONFIG
    cloned = write_config(tmp_path, algorithms=["kemenyel"], clones={"count": 14})
    assert cli.main(["run", str(cloned)]) == cli.EXIT_CONFIG
    assert cli.main(["report", str(tmp_path / "nothing")]) == cli.EXIT_DATA

    bad = tmp_path / "scores.csv"
    bad.write_text("task,agent,mean,stddev\nt1,A,1.0,0.1\nt1,B,1.0,0.1\n")
    assert cli.main(["validate-data", str(bad)]) == cli.EXIT_DATA
    good = tmp_path / "good.csv"
    good.write_text("task,agent,mean,stddev\nt1,A,2.0,0.1\nt1,B,1.0,0.1\n")
    assert cli.main(["validate-data", str(good)]) == cli.EXIT_OK

    def violate(config, command="run"):
        raise ContractViolation("bad ranking")

    monkeypatch.setattr(cli, "run_config", violate)
    assert cli.main(["run", str(write_config(tmp_path))]) == cli.EXIT_CONTRACT
