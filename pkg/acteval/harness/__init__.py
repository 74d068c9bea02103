from .config import AlgorithmSpec, ExperimentConfig, KemenyCheckSpec, SweepSpec, config_from_dict, load_config
from .engine import (
    AggregateReport,
    ExperimentEngine,
    KemenyCheckEngine,
    KemenySummary,
    RunRecord,
    make_world,
    run_single,
)
from .report import emit_reports, read_report
