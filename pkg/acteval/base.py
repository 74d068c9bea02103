import atexit
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

APP_NAME = "ActiveEval"


class ActEvalError(Exception):
    """Root of every error raised on purpose by acteval."""


class DomainError(ActEvalError, ValueError):
    """An argument lies outside the domain of the operation."""


class DataError(ActEvalError):
    """A dataset table is incomplete or degenerate."""


class CapabilityError(ActEvalError):
    """The request exceeds what an exact algorithm can handle."""


class ConfigError(ActEvalError):
    """The experiment configuration is invalid."""


class ContractViolation(ActEvalError):
    """An evaluator broke the choose/update/ranking contract."""


class EngineBase:
    """
    Common plumbing for the experiment engines: logging, the worker pool
    and the output directory.
    """

    def __init__(self, output_dir: str | Path, workers: int = 1):
        """"""
        self.output_dir = Path(output_dir)
        self.workers = max(1, int(workers))
        self.logger = logging.getLogger(APP_NAME)
        self._executor: ProcessPoolExecutor | None = None

        atexit.register(self.cleanup)

    def write_log(self, msg: str, level: int = logging.INFO) -> None:
        """"""
        self.logger.log(level, msg)

    def prepare_output(self) -> Path:
        """
        Create the output directory, surfacing the path on failure.
        """
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OSError(f"cannot create output directory {self.output_dir}: {e}") from e
        return self.output_dir

    def map_jobs(self, func: Callable[[Any], Any], jobs: Iterable[Any]) -> Iterator[Any]:
        """
        Run jobs on the worker pool; results come back in submission order,
        so reductions over them are independent of completion order.
        """
        if self.workers == 1:
            yield from map(func, jobs)
            return

        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        yield from self._executor.map(func, jobs, chunksize=1)

    def cleanup(self) -> None:
        if self._executor is not None:
            self.write_log("shutting down worker pool...", logging.DEBUG)
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None
