import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .biosignal import SignalRecording
from .coldchain import TemperatureSample
from .exceptions import ParseError

logger = logging.getLogger(__name__)

SIGNAL_HEADER = ("t_s", "value")
TEMPERATURE_HEADER = ("epoch_s", "temp_c")
UNIFORMITY_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class CsvSeries:
    """
    A two-column series read from CSV.

    Attributes:
        header (Tuple[str, str]): SIGNAL_HEADER or TEMPERATURE_HEADER.
        times (np.ndarray): First column.
        values (np.ndarray): Second column.
        sample_rate_hz (float): Rate of a uniformly sampled signal; None for temperature logs.
    """

    header: Tuple[str, str]
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    sample_rate_hz: Union[float, None] = None

    def to_recording(self, gain: float = 1.0) -> SignalRecording:
        if self.sample_rate_hz is None:
            raise ParseError(f"{','.join(self.header)} series is not a uniformly sampled signal")
        return SignalRecording(self.values, self.sample_rate_hz, gain)

    def to_samples(self) -> List[TemperatureSample]:
        if self.header != TEMPERATURE_HEADER:
            raise ParseError(f"{','.join(self.header)} series is not a temperature log")
        return [TemperatureSample(int(t), float(v)) for t, v in zip(self.times, self.values)]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        # repr gives the shortest string that parses back to the same float
        return repr(float(value))
    return str(value)


def write_csv(
    rows: Iterable[Sequence], path: Union[str, Path], header: Union[Sequence[str], None] = None
) -> None:
    """
    Write rows as CSV with "\\n" line endings. Floats are written with repr so they read
    back to the identical value.
    """
    with Path(path).open("w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])


def read_rows(path: Union[str, Path], header: Sequence[str]) -> List[Tuple[int, List[str]]]:
    """
    Read a CSV file that must start with the given header.

    Returns:
        List[Tuple[int, List[str]]]: (line number, cells) for every data row.

    Raises:
        ParseError: On a wrong header or a row with the wrong number of cells.
    """
    with Path(path).open("r", encoding="utf-8", newline="") as file:
        reader = csv.reader(file)
        found = next(reader, None)
        if found is None or [cell.strip() for cell in found] != list(header):
            raise ParseError(f"expected header {','.join(header)}, got {found}", 1)
        rows = []
        for cells in reader:
            if not cells:
                continue
            if len(cells) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(cells)}", reader.line_num
                )
            rows.append((reader.line_num, [cell.strip() for cell in cells]))
    return rows


def _to_float(text: str, line_number: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line_number) from None
    if not math.isfinite(value):
        raise ParseError(f"not a finite number: {text!r}", line_number)
    return value


def _to_int(text: str, line_number: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"not an integer: {text!r}", line_number) from None


def read_signal_csv(
    path: Union[str, Path], sample_rate_hz: Union[float, None] = None
) -> CsvSeries:
    """
    Read a `t_s,value` signal or an `epoch_s,temp_c` temperature log.

    Timestamps must be strictly increasing. A signal must also be uniformly sampled: every
    interval has to match 1 / sample_rate_hz within one part per million. Without an
    explicit rate the first interval sets it.

    Args:
        path (str | Path): CSV file.
        sample_rate_hz (float, optional): Expected sampling rate of a signal.

    Returns:
        CsvSeries: The series.

    Raises:
        ParseError: On a malformed row, non-increasing times or non-uniform sampling,
                    with the line number of the offending row.
    """
    with Path(path).open("r", encoding="utf-8", newline="") as file:
        first = file.readline().strip()
    header = tuple(cell.strip() for cell in first.split(","))
    if header not in (SIGNAL_HEADER, TEMPERATURE_HEADER):
        raise ParseError(
            f"expected header {','.join(SIGNAL_HEADER)} or {','.join(TEMPERATURE_HEADER)}", 1
        )

    rows = read_rows(path, header)
    logger.debug("Read %d rows of %s from %s", len(rows), ",".join(header), path)
    if header == TEMPERATURE_HEADER:
        times = [_to_int(cells[0], line) for line, cells in rows]
    else:
        times = [_to_float(cells[0], line) for line, cells in rows]
    values = [_to_float(cells[1], line) for line, cells in rows]

    for index in range(1, len(times)):
        if times[index] <= times[index - 1]:
            raise ParseError(
                f"time {times[index]} is not after {times[index - 1]}", rows[index][0]
            )

    rate = None
    if header == SIGNAL_HEADER:
        rate = _check_uniform(times, rows, sample_rate_hz)
    return CsvSeries(header, np.asarray(times), np.asarray(values, dtype=float), rate)


def _check_uniform(times: List[float], rows, sample_rate_hz: Union[float, None]) -> float:
    if len(times) < 2:
        if sample_rate_hz is None:
            raise ParseError("a signal needs two samples or an explicit sample rate")
        return sample_rate_hz
    period = 1.0 / sample_rate_hz if sample_rate_hz else times[1] - times[0]
    for index in range(1, len(times)):
        interval = times[index] - times[index - 1]
        if abs(interval - period) > UNIFORMITY_TOLERANCE * period:
            raise ParseError(
                f"non-uniform sampling: interval {interval!r} s, expected {period!r} s",
                rows[index][0],
            )
    return sample_rate_hz or 1.0 / period
