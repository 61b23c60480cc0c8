import math
from typing import List

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import ValidationError


def require_positive(name: str, value: float) -> float:
    """
    Check that a scalar is finite and strictly positive.

    Args:
        name (str): Parameter name used in the error message.
        value (float): Value to check.

    Returns:
        float: The value, unchanged.

    Raises:
        ValidationError: If the value is not finite or not strictly positive.
    """
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be finite and > 0, got {value!r}")
    return value


def require_fraction(name: str, value: float) -> float:
    """
    Check that a scalar lies in the closed interval [0, 1].
    """
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must be in [0, 1], got {value!r}")
    return value


def round_half_up(value: float) -> int:
    """
    Round to the nearest integer, ties going up (511.5 -> 512). Python's round()
    rounds ties to even, which is not what an ADC transfer function is specified with.
    """
    return int(math.floor(value + 0.5))


def trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """
    Causal trailing-window mean. Output sample i is the mean of inputs
    max(0, i - window + 1)..i, so the first window - 1 outputs average the
    available prefix only.

    Args:
        values (np.ndarray): One dimensional input.
        window (int): Window length in samples, >= 1.

    Returns:
        np.ndarray: Array of the same length as values.

    Example:
        >>> trailing_mean(np.array([1.0, 3.0, 5.0]), 2)
        array([1., 2., 4.])
    """
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values.copy()
    padded = np.concatenate([np.zeros(window - 1), values])
    sums = sliding_window_view(padded, window).sum(axis=1)
    counts = np.minimum(np.arange(1, values.size + 1), window)
    return sums / counts


def uniform_grid(stop: float, step: float) -> List[float]:
    """
    Build the grid 0, step, 2*step, ..., stop with each point rounded to 12 decimals
    so that grids read back from JSON compare equal to grids built in code.
    """
    if step <= 0 or stop < 0:
        raise ValidationError(f"grid needs stop >= 0 and step > 0, got {stop}, {step}")
    n_points = int(round(stop / step)) + 1
    return [round(i * step, 12) for i in range(n_points)]
