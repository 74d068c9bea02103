import zlib
from typing import Sequence

import numpy as np
from pandas import DataFrame

# Stream purposes; world construction and score sampling never share a stream.
STREAM_WORLD = 0
STREAM_SCORES = 1
STREAM_ALGORITHM = 2


def name_key(name: str) -> int:
    """
    Stable 32-bit key of a string (python's hash() is salted per process).
    """
    return zlib.crc32(name.encode("utf-8"))


def derive_rng(seed: int, purpose: int, name: str = "") -> np.random.Generator:
    """
    Independent generator for a (seed, purpose, name) triple.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, purpose]
    if name:
        entropy.append(name_key(name))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def to_df(data_list: Sequence) -> DataFrame | None:
    """
    Convert a list of objects to DataFrame.
    """
    if not data_list:
        return None

    dict_list = [data.__dict__ for data in data_list if data is not None]
    return DataFrame(dict_list)


def windowed_mean(values: np.ndarray, window: int) -> np.ndarray:
    """
    Sliding mean over rounds max(1, t-W+1)..t for every t (1-based).
    """
    values = np.asarray(values, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    t = np.arange(1, len(values) + 1)
    start = np.maximum(0, t - window)
    return (csum[t] - csum[start]) / (t - start)


def ci95(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    """
    Normal-approximation 95% half-width, 1.96 * sd / sqrt(n); zero for n = 1.
    """
    samples = np.asarray(samples, dtype=float)
    count = samples.shape[axis]
    if count < 2:
        return np.zeros(np.delete(samples.shape, axis))
    return 1.96 * samples.std(axis=axis, ddof=1) / np.sqrt(count)
