"""
Nearest-neighbour classification of EMG gesture envelopes with dynamic time warping or
Euclidean distance, plus a synthetic gesture generator for testing the classifier.
"""

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import List, Sequence, Tuple, Union

import numpy as np

from .exceptions import ValidationError

logger = logging.getLogger(__name__)

GESTURE_LENGTH = 64
GESTURE_CLASSES = 4


class Metric(str, Enum):
    DTW = "dtw"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """
    Pairwise distances between labelled sequences. Symmetric, non-negative, zero diagonal.

    Attributes:
        labels (Tuple[str, ...]): One identifier per row and column.
        metric (Metric): Distance used.
        entries (np.ndarray): Square matrix of distances.
    """

    labels: Tuple[str, ...]
    metric: Metric
    entries: np.ndarray = field(repr=False)

    def to_rows(self) -> List[List[str]]:
        """
        CSV rows with a label header row and a label first column.
        """
        rows = [[""] + list(self.labels)]
        for label, row in zip(self.labels, self.entries):
            rows.append([label] + [repr(float(value)) for value in row])
        return rows


@dataclass(frozen=True, eq=False)
class Classification:
    """
    Attributes:
        labels (List[str]): Predicted label per query.
        nearest (List[int]): Index of the nearest reference per query.
        distances (np.ndarray): Query x reference distance block.
        matrix (DistanceMatrix): Distances over all queries followed by all references.
    """

    labels: List[str]
    nearest: List[int]
    distances: np.ndarray = field(repr=False)
    matrix: DistanceMatrix


def _as_sequence(x: Sequence[float], name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError(f"{name} must not be empty")
    return x


def _accumulated_cost(a: np.ndarray, b: np.ndarray, window: Union[int, None]) -> np.ndarray:
    n, m = a.size, b.size
    band = None if window is None else max(int(window), abs(n - m))
    cost = np.full((n + 1, m + 1), np.inf)
    cost[0, 0] = 0.0
    a_list, b_list = a.tolist(), b.tolist()
    for i in range(1, n + 1):
        lo, hi = 1, m
        if band is not None:
            lo, hi = max(1, i - band), min(m, i + band)
        previous, current = cost[i - 1], cost[i]
        ai = a_list[i - 1]
        left = current[lo - 1]
        for j in range(lo, hi + 1):
            best = min(previous[j - 1], previous[j], left)
            left = abs(ai - b_list[j - 1]) + best
            current[j] = left
    return cost[1:, 1:]


def dtw_distance(
    a: Sequence[float], b: Sequence[float], window: Union[int, None] = None
) -> float:
    """
    Dynamic time warping distance with local cost |a_i - b_j|, steps down, right and
    diagonal, and both end points matched. The accumulated cost is not normalized.

    DTW is symmetric and zero for identical sequences but does not satisfy the triangle
    inequality.

    Args:
        a (Sequence[float]): First sequence.
        b (Sequence[float]): Second sequence.
        window (int, optional): Sakoe-Chiba band half width; widened to |len(a) - len(b)|
                                if smaller. None for no constraint.

    Returns:
        float: Accumulated cost of the optimal alignment.

    Raises:
        ValidationError: If either sequence is empty.

    Example:
        >>> dtw_distance([0, 1, 2], [0, 2])
        1.0
    """
    a, b = _as_sequence(a, "a"), _as_sequence(b, "b")
    return float(_accumulated_cost(a, b, window)[-1, -1])


def dtw_path(
    a: Sequence[float], b: Sequence[float], window: Union[int, None] = None
) -> Tuple[float, List[Tuple[int, int]]]:
    """
    DTW distance and the optimal warping path as (i, j) index pairs from (0, 0) to
    (len(a) - 1, len(b) - 1).
    """
    a, b = _as_sequence(a, "a"), _as_sequence(b, "b")
    cost = _accumulated_cost(a, b, window)
    i, j = cost.shape[0] - 1, cost.shape[1] - 1
    path = deque([(i, j)])
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            step = int(np.argmin((cost[i - 1, j - 1], cost[i - 1, j], cost[i, j - 1])))
            if step == 0:
                i, j = i - 1, j - 1
            elif step == 1:
                i -= 1
            else:
                j -= 1
        path.appendleft((i, j))
    return float(cost[-1, -1]), list(path)


def resample_linear(x: Sequence[float], n: int) -> np.ndarray:
    """
    Resample a sequence to n points by linear interpolation over its index, keeping both
    end points.
    """
    x = _as_sequence(x, "x")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if x.size == n:
        return x.copy()
    if x.size == 1:
        return np.full(n, x[0])
    return np.interp(np.linspace(0.0, x.size - 1, n), np.arange(x.size), x)


def euclidean_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Euclidean distance after resampling both sequences to the longer length.
    """
    a, b = _as_sequence(a, "a"), _as_sequence(b, "b")
    n = max(a.size, b.size)
    return float(np.linalg.norm(resample_linear(a, n) - resample_linear(b, n)))


def distance(a: Sequence[float], b: Sequence[float], metric: Union[Metric, str]) -> float:
    if Metric(metric) is Metric.DTW:
        return dtw_distance(a, b)
    return euclidean_distance(a, b)


def pairwise_distances(
    sequences: Sequence[Sequence[float]],
    labels: Sequence[str],
    metric: Union[Metric, str] = Metric.DTW,
    workers: int = 1,
) -> DistanceMatrix:
    """
    Full pairwise distance matrix. Entries are computed for i < j and mirrored; with
    workers > 1 they are evaluated on a thread pool and assembled in index order.
    """
    metric = Metric(metric)
    if len(labels) != len(sequences):
        raise ValidationError("need one label per sequence")
    pairs = list(combinations(range(len(sequences)), 2))
    logger.debug("%d %s distances on %d worker(s)", len(pairs), metric.value, workers)

    def evaluate(pair: Tuple[int, int]) -> float:
        return distance(sequences[pair[0]], sequences[pair[1]], metric)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = list(executor.map(evaluate, pairs))
    else:
        values = [evaluate(pair) for pair in pairs]

    entries = np.zeros((len(sequences), len(sequences)))
    for (i, j), value in zip(pairs, values):
        entries[i, j] = entries[j, i] = value
    return DistanceMatrix(tuple(labels), metric, entries)


def classify_nearest(
    queries: Sequence[Sequence[float]],
    references: Sequence[Sequence[float]],
    reference_labels: Sequence[str],
    metric: Union[Metric, str] = Metric.DTW,
    workers: int = 1,
) -> Classification:
    """
    Label each query with the label of its nearest reference.

    Ties go to the lowest reference index. The returned DistanceMatrix covers every
    query and reference, named "query_<i>" and "<label>_<j>", so it can be inspected the
    same way as a cross-repetition gesture matrix.

    Args:
        queries (Sequence[Sequence[float]]): Envelopes to classify.
        references (Sequence[Sequence[float]]): Labelled envelopes.
        reference_labels (Sequence[str]): Label of each reference.
        metric (Metric): DTW or EUCLIDEAN.
        workers (int): Threads for the distance computations.

    Returns:
        Classification: Predicted labels and the distances behind them.

    Raises:
        ValidationError: If there are no references or the labels do not match them.
    """
    if len(references) == 0:
        raise ValidationError("at least one reference is needed")
    if len(reference_labels) != len(references):
        raise ValidationError(
            f"{len(reference_labels)} labels for {len(references)} references"
        )
    names = [f"query_{i}" for i in range(len(queries))] + [
        f"{label}_{j}" for j, label in enumerate(reference_labels)
    ]
    matrix = pairwise_distances(list(queries) + list(references), names, metric, workers)
    block = matrix.entries[: len(queries), len(queries):]
    nearest = [int(np.argmin(row)) for row in block]
    return Classification(
        labels=[reference_labels[j] for j in nearest],
        nearest=nearest,
        distances=block.copy(),
        matrix=matrix,
    )


def gesture_templates(
    length: int = GESTURE_LENGTH, classes: int = GESTURE_CLASSES
) -> List[np.ndarray]:
    """
    Synthetic gesture envelopes. Class k is a plateau at 1 + 2k with a unit Gaussian
    bump centred at 0.2 + 0.2k of the way through, so classes differ in both level and
    timing the way different hand gestures do in an RMS envelope.
    """
    if length < 2:
        raise ValidationError(f"length must be >= 2, got {length}")
    t = np.linspace(0.0, 1.0, length)
    return [
        1.0 + 2.0 * k + np.exp(-0.5 * ((t - (0.2 + 0.2 * k)) / 0.05) ** 2)
        for k in range(classes)
    ]


def add_noise(x: Sequence[float], snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """
    Add white Gaussian noise at the given signal-to-noise ratio, measured against the
    RMS of x.
    """
    x = np.asarray(x, dtype=float)
    rms = float(np.sqrt(np.mean(x**2)))
    sigma = rms / 10 ** (snr_db / 20)
    return x + rng.normal(0.0, sigma, size=x.shape)


def gesture_trial(
    rng: np.random.Generator, snr_db: float = 20.0, metric: Union[Metric, str] = Metric.DTW
) -> bool:
    """
    One cross-repetition trial: two noisy repetitions of every template; the second
    repetition is classified against the first. True when every gesture finds itself.
    """
    templates = gesture_templates()
    labels = [f"gesture_{k}" for k in range(len(templates))]
    first = [add_noise(template, snr_db, rng) for template in templates]
    second = [add_noise(template, snr_db, rng) for template in templates]
    result = classify_nearest(second, first, labels, metric)
    return result.labels == labels
