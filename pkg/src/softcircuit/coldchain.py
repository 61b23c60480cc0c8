"""
Smart-label cold chain monitor.

The label samples its storage temperature and lights a green LED while the contents are
safe. Once the temperature has stayed strictly above the threshold for latch_duration_s
without interruption, the red LED comes on and stays on for good, even if the package
is cooled down again. The sample history is kept so it can be read out as telemetry.

Temperatures travel on the wire as integer milli-degrees, so a history round-trips
exactly when its temperatures are multiples of 0.001 degC.
"""

import logging
import math
import os
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Tuple, Union

from .exceptions import ParseError, ValidationError
from .utilities import require_positive

logger = logging.getLogger(__name__)

TELEMETRY_HEADER = "SMARTLABEL v1"
_WIRE_STATUS = {"SAFE": "SAFE", "UNSAFE_LATCHED": "UNSAFE"}


class Status(str, Enum):
    SAFE = "SAFE"
    UNSAFE_LATCHED = "UNSAFE_LATCHED"


@dataclass(frozen=True)
class TemperatureSample:
    """
    One reading of the label.

    Attributes:
        epoch_s (int): Seconds since the start of monitoring, >= 0.
        temp_c (float): Temperature in degrees Celsius.
    """

    epoch_s: int
    temp_c: float

    def __post_init__(self):
        if isinstance(self.epoch_s, bool) or not isinstance(self.epoch_s, int):
            raise ValidationError(f"epoch_s must be an integer, got {self.epoch_s!r}")
        if self.epoch_s < 0:
            raise ValidationError(f"epoch_s must be >= 0, got {self.epoch_s}")
        if not math.isfinite(self.temp_c):
            raise ValidationError(f"temp_c must be finite, got {self.temp_c!r}")


@dataclass(frozen=True)
class ColdChainConfig:
    """
    Attributes:
        threshold_c (float): Samples strictly above this temperature are excursions.
        latch_duration_s (int): Contiguous excursion time that latches the alarm.
        max_gap_s (int): Sample intervals longer than this are flagged as gaps.
    """

    threshold_c: float = 5.0
    latch_duration_s: int = 3600
    max_gap_s: int = 600

    def __post_init__(self):
        if not math.isfinite(self.threshold_c):
            raise ValidationError(f"threshold_c must be finite, got {self.threshold_c!r}")
        require_positive("latch_duration_s", self.latch_duration_s)
        require_positive("max_gap_s", self.max_gap_s)


@dataclass(frozen=True)
class ColdChainState:
    """
    Immutable snapshot of the monitor.

    Attributes:
        status (Status): SAFE or UNSAFE_LATCHED. Never goes back to SAFE.
        excursion_start (int): Epoch of the first sample of the current excursion; None when
                               the last sample was safe or the alarm has latched.
        last_sample (TemperatureSample): Most recent sample, None before the first one.
        history (Tuple[TemperatureSample, ...]): All samples in arrival order.
        latched_at (int): Epoch at which the alarm latched, None while SAFE.
    """

    status: Status = Status.SAFE
    excursion_start: Union[int, None] = None
    last_sample: Union[TemperatureSample, None] = None
    history: Tuple[TemperatureSample, ...] = ()
    latched_at: Union[int, None] = None


@dataclass(frozen=True)
class LedOutputs:
    green: bool
    red: bool


@dataclass(frozen=True)
class TimelineEntry:
    """
    Status after one sample. gap is set when the interval since the previous sample
    exceeded max_gap_s.
    """

    epoch_s: int
    status: Status
    gap: bool = False


@dataclass(frozen=True)
class TraceResult:
    state: ColdChainState
    timeline: List[TimelineEntry]


def update(
    state: ColdChainState, sample: TemperatureSample, config: ColdChainConfig
) -> ColdChainState:
    """
    Fold one sample into the monitor state.

    A sample strictly above the threshold starts or continues an excursion and the alarm
    latches once sample.epoch_s - excursion_start >= latch_duration_s. A sample at or below
    the threshold ends the excursion. A gap longer than max_gap_s only ends an excursion if
    the sample after the gap is safe; a hot sample after a gap is assumed to continue it.

    Args:
        state (ColdChainState): Current state.
        sample (TemperatureSample): New reading.
        config (ColdChainConfig): Monitor settings.

    Returns:
        ColdChainState: The new state. The input state is never modified.

    Raises:
        ValidationError: If the sample is not later than the last one.
    """
    _check_order(state, sample, config)
    return replace(_advance(state, sample, config), history=state.history + (sample,))


def _check_order(state: ColdChainState, sample: TemperatureSample, config: ColdChainConfig) -> bool:
    # returns True when the sample follows a gap
    last = state.last_sample
    if last is None:
        return False
    if sample.epoch_s <= last.epoch_s:
        raise ValidationError(
            f"epoch {sample.epoch_s} is not after the previous epoch {last.epoch_s}"
        )
    if sample.epoch_s - last.epoch_s > config.max_gap_s:
        logger.info(
            "Sampling gap of %d s before epoch %d", sample.epoch_s - last.epoch_s, sample.epoch_s
        )
        return True
    return False


def _advance(
    state: ColdChainState, sample: TemperatureSample, config: ColdChainConfig
) -> ColdChainState:
    # history is left to the caller
    if state.status is Status.UNSAFE_LATCHED:
        return replace(state, last_sample=sample)

    if sample.temp_c <= config.threshold_c:
        return replace(state, excursion_start=None, last_sample=sample)

    start = state.excursion_start if state.excursion_start is not None else sample.epoch_s
    if sample.epoch_s - start >= config.latch_duration_s:
        logger.info("Storage alarm latched at epoch %d (excursion from %d)", sample.epoch_s, start)
        return replace(
            state,
            status=Status.UNSAFE_LATCHED,
            excursion_start=None,
            last_sample=sample,
            latched_at=sample.epoch_s,
        )
    return replace(state, excursion_start=start, last_sample=sample)


def led_outputs(state: ColdChainState) -> LedOutputs:
    safe = state.status is Status.SAFE
    return LedOutputs(green=safe, red=not safe)


def current_temperature(state: ColdChainState) -> Union[float, None]:
    return state.last_sample.temp_c if state.last_sample is not None else None


def run_trace(
    samples: Iterable[TemperatureSample],
    config: ColdChainConfig,
    state: Union[ColdChainState, None] = None,
) -> TraceResult:
    """
    Fold update over a sample stream.

    Args:
        samples (Iterable[TemperatureSample]): Time-ordered samples.
        config (ColdChainConfig): Monitor settings.
        state (ColdChainState, optional): State to continue from, a fresh SAFE state by
                                          default.

    Returns:
        TraceResult: Final state and one timeline entry per sample.

    Raises:
        ValidationError: If a sample is out of order; the message names its 0-based index.
    """
    if state is None:
        state = ColdChainState()
    initial_history = state.history
    added: List[TemperatureSample] = []
    timeline = []
    for index, sample in enumerate(samples):
        try:
            gap = _check_order(state, sample, config)
        except ValidationError as err:
            raise ValidationError(f"sample {index}: {err}") from err
        state = _advance(state, sample, config)
        added.append(sample)
        timeline.append(TimelineEntry(sample.epoch_s, state.status, gap))
    # same result as folding update, without copying the history on every sample
    state = replace(state, history=initial_history + tuple(added))
    return TraceResult(state=state, timeline=timeline)


def _format_record(sample: TemperatureSample) -> str:
    return f"{sample.epoch_s},{int(round(sample.temp_c * 1000))}"


def _parse_record(line: str, line_number: int) -> TemperatureSample:
    parts = line.split(",")
    if len(parts) != 2:
        raise ParseError(f"expected 'epoch_s,temp_milli_c', got {line!r}", line_number)
    try:
        epoch_s, milli_c = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(f"non-integer field in {line!r}", line_number) from None
    if epoch_s < 0:
        raise ParseError(f"negative epoch {epoch_s}", line_number)
    return TemperatureSample(epoch_s, milli_c / 1000)


def encode_telemetry(state: ColdChainState) -> bytes:
    """
    Serialize the state for read-out.

    The payload is UTF-8 text: "SMARTLABEL v1", then "status=SAFE" or "status=UNSAFE",
    then one "epoch_s,temp_milli_c" line per history sample. Every line ends in a newline.
    """
    lines = [TELEMETRY_HEADER, f"status={_WIRE_STATUS[state.status.value]}"]
    lines.extend(_format_record(sample) for sample in state.history)
    return ("\n".join(lines) + "\n").encode("utf-8")


def decode_telemetry(
    payload: bytes, config: Union[ColdChainConfig, None] = None
) -> ColdChainState:
    """
    Parse a telemetry payload back into a state.

    The history is replayed with config to recover excursion_start and latched_at. The
    transmitted status is authoritative in both directions: an UNSAFE payload stays latched
    even when the replayed history would not latch under config, and a SAFE payload stays
    SAFE when the label ran with a longer latch_duration_s than config.

    Args:
        payload (bytes): Output of encode_telemetry.
        config (ColdChainConfig, optional): Settings for the replay, defaults otherwise.

    Returns:
        ColdChainState: The decoded state.

    Raises:
        ParseError: On an unknown header, a bad status line, a malformed record or
                    non-increasing epochs.
    """
    config = config or ColdChainConfig()
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as err:
        raise ParseError(f"payload is not UTF-8: {err}", 1) from None
    lines = text.splitlines()
    if not lines or lines[0] != TELEMETRY_HEADER:
        raise ParseError(f"unknown version line, expected {TELEMETRY_HEADER!r}", 1)
    if len(lines) < 2 or not lines[1].startswith("status="):
        raise ParseError("expected 'status=SAFE' or 'status=UNSAFE'", 2)
    wire_status = lines[1][len("status="):]
    if wire_status not in ("SAFE", "UNSAFE"):
        raise ParseError(f"unknown status {wire_status!r}", 2)

    samples: List[TemperatureSample] = []
    for line_number, line in enumerate(lines[2:], start=3):
        sample = _parse_record(line, line_number)
        if samples and sample.epoch_s <= samples[-1].epoch_s:
            raise ParseError(
                f"epoch {sample.epoch_s} is not after {samples[-1].epoch_s}", line_number
            )
        samples.append(sample)

    state = run_trace(samples, config).state
    if wire_status == "UNSAFE" and state.status is Status.SAFE:
        state = replace(state, status=Status.UNSAFE_LATCHED, excursion_start=None)
    elif wire_status == "SAFE" and state.status is Status.UNSAFE_LATCHED:
        logger.warning(
            "SAFE payload would have latched at epoch %d under threshold %.3f degC for %d s",
            state.latched_at,
            config.threshold_c,
            config.latch_duration_s,
        )
        state = ColdChainState(
            excursion_start=_open_excursion_start(samples, config.threshold_c),
            last_sample=samples[-1],
            history=tuple(samples),
        )
    return state


def _open_excursion_start(samples: List[TemperatureSample], threshold_c: float) -> Union[int, None]:
    start = None
    for sample in samples:
        if sample.temp_c <= threshold_c:
            start = None
        elif start is None:
            start = sample.epoch_s
    return start


class TelemetryLog:
    """
    Append-only sample log on disk. Each record is written as one line in the telemetry
    record format and flushed to disk before append returns, so a crash can at worst leave
    a partial last line.

    Usage:
        with TelemetryLog(path) as log:
            log.append(sample)
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._file = self.path.open("a", encoding="utf-8", newline="\n")

    def append(self, sample: TemperatureSample) -> None:
        self._file.write(_format_record(sample) + "\n")
        self._file.flush()
        os.fsync(self._file.fileno())

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> "TelemetryLog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def replay_log(path: Union[str, Path]) -> List[TemperatureSample]:
    """
    Read back a TelemetryLog file. A final line without its newline is a torn write and is
    dropped; any complete malformed line is an error.

    Raises:
        ParseError: On a malformed complete line or non-increasing epochs.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines[-1]:
        logger.warning("Dropping torn final record of %s: %r", path, lines[-1])
    samples: List[TemperatureSample] = []
    for line_number, line in enumerate(lines[:-1], start=1):
        sample = _parse_record(line, line_number)
        if samples and sample.epoch_s <= samples[-1].epoch_s:
            raise ParseError(
                f"epoch {sample.epoch_s} is not after {samples[-1].epoch_s}", line_number
            )
        samples.append(sample)
    return samples
