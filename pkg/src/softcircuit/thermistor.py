"""
NTC thermistor body-temperature sensor: divider forward model, linear calibration and
smoothing.

The thermistor follows the beta model R(T) = R25 * exp(B * (1/T - 1/298.15)) with T in
kelvin. It sits in a voltage divider with one fixed resistor; the divider midpoint is read
by an ADC and a straight line fitted over 25-50 degC maps counts back to temperature.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from .exceptions import ValidationError
from .utilities import require_positive, round_half_up, trailing_mean

logger = logging.getLogger(__name__)

KELVIN_OFFSET = 273.15
T25_K = 298.15
DEFAULT_WINDOW_SAMPLES = 60
DEFAULT_FIT_RANGE_C = (25.0, 50.0)


class ThermistorPosition(str, Enum):
    HIGH_SIDE = "high-side"
    LOW_SIDE = "low-side"


@dataclass(frozen=True)
class NtcParams:
    """
    Attributes:
        r25_ohm (float): Resistance at 25 degC.
        beta_k (float): Beta constant in kelvin. 3435 K is typical for 10 kOhm 1206 parts.
    """

    r25_ohm: float = 10_000.0
    beta_k: float = 3435.0

    def __post_init__(self):
        require_positive("r25_ohm", self.r25_ohm)
        require_positive("beta_k", self.beta_k)


@dataclass(frozen=True)
class DividerConfig:
    """
    Attributes:
        r_fixed_ohm (float): Fixed divider resistor.
        vcc_v (float): Divider supply, also the ADC reference.
        adc_bits (int): ADC resolution, 8 to 16 bits.
        thermistor_position (ThermistorPosition): LOW_SIDE puts the NTC between the ADC
                                                  input and ground.
    """

    r_fixed_ohm: float = 10_000.0
    vcc_v: float = 3.3
    adc_bits: int = 10
    thermistor_position: ThermistorPosition = ThermistorPosition.LOW_SIDE

    def __post_init__(self):
        require_positive("r_fixed_ohm", self.r_fixed_ohm)
        require_positive("vcc_v", self.vcc_v)
        if isinstance(self.adc_bits, bool) or not isinstance(self.adc_bits, int):
            raise ValidationError(f"adc_bits must be an integer, got {self.adc_bits!r}")
        if not 8 <= self.adc_bits <= 16:
            raise ValidationError(f"adc_bits must be in [8, 16], got {self.adc_bits}")
        object.__setattr__(self, "thermistor_position", ThermistorPosition(self.thermistor_position))

    @property
    def full_scale(self) -> int:
        return 2**self.adc_bits - 1


@dataclass(frozen=True)
class CalibrationCurve:
    """
    Linear ADC-count to temperature calibration, temp = slope * count + intercept.

    Attributes:
        slope (float): degC per ADC count. Negative for a low-side NTC.
        intercept (float): degC.
        fit_range_c (Tuple[float, float]): Temperature span of the calibration data.
        residual_rms (float): RMS of the fit residuals in degC.
    """

    slope: float
    intercept: float
    fit_range_c: Tuple[float, float]
    residual_rms: float

    def __post_init__(self):
        if self.residual_rms < 0:
            raise ValidationError(f"residual_rms must be >= 0, got {self.residual_rms}")
        if self.fit_range_c[0] > self.fit_range_c[1]:
            raise ValidationError(f"fit_range_c must be ascending, got {self.fit_range_c}")

    def to_json(self) -> str:
        data = asdict(self)
        data["fit_range"] = list(data.pop("fit_range_c"))
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CalibrationCurve":
        try:
            data = json.loads(text)
            return cls(
                slope=float(data["slope"]),
                intercept=float(data["intercept"]),
                fit_range_c=(float(data["fit_range"][0]), float(data["fit_range"][1])),
                residual_rms=float(data["residual_rms"]),
            )
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as err:
            raise ValidationError(f"not a calibration curve document: {err}") from None

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CalibrationCurve":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class TemperatureReading:
    temp_c: float
    extrapolated: bool


def ntc_resistance(temp_c: float, params: NtcParams) -> float:
    """
    Beta-model resistance of the thermistor.

    Raises:
        ValidationError: If the temperature is at or below absolute zero.
    """
    if not math.isfinite(temp_c) or temp_c <= -KELVIN_OFFSET:
        raise ValidationError(f"temperature must be above absolute zero, got {temp_c!r}")
    temp_k = temp_c + KELVIN_OFFSET
    return params.r25_ohm * math.exp(params.beta_k * (1.0 / temp_k - 1.0 / T25_K))


def divider_ratio(temp_c: float, ntc: NtcParams, divider: DividerConfig) -> float:
    """
    V_adc / Vcc = R_low / (R_low + R_high).
    """
    r_ntc = ntc_resistance(temp_c, ntc)
    if divider.thermistor_position is ThermistorPosition.LOW_SIDE:
        r_low, r_high = r_ntc, divider.r_fixed_ohm
    else:
        r_low, r_high = divider.r_fixed_ohm, r_ntc
    return r_low / (r_low + r_high)


def adc_from_temperature(temp_c: float, ntc: NtcParams, divider: DividerConfig) -> int:
    """
    ADC count for a temperature, round(ratio * (2**bits - 1)) with ties rounded up and
    the result clamped to [0, 2**bits - 1].
    """
    count = round_half_up(divider_ratio(temp_c, ntc, divider) * divider.full_scale)
    return min(max(count, 0), divider.full_scale)


def linearizing_resistor(
    ntc: NtcParams, t_low_c: float = DEFAULT_FIT_RANGE_C[0], t_high_c: float = DEFAULT_FIT_RANGE_C[1]
) -> float:
    """
    Fixed resistor that puts the inflection point of the divider curve at the middle of
    the range, which makes a straight-line calibration as accurate as it gets:

        R = R(Tm) * (B - 2*Tm) / (B + 2*Tm),  Tm in kelvin

    With the default 10 kOhm / 3435 K part and 25-50 degC this is about 4.36 kOhm. An
    equal 10 kOhm resistor leaves a linear-fit error of roughly 0.7 degC at the ends of the
    range; the linearizing resistor brings it down to about 0.1 degC.
    """
    if t_high_c <= t_low_c:
        raise ValidationError(f"need t_low_c < t_high_c, got {t_low_c}, {t_high_c}")
    t_mid_c = (t_low_c + t_high_c) / 2
    t_mid_k = t_mid_c + KELVIN_OFFSET
    if ntc.beta_k <= 2 * t_mid_k:
        raise ValidationError(f"beta_k {ntc.beta_k} too small to linearize at {t_mid_c} degC")
    return ntc_resistance(t_mid_c, ntc) * (ntc.beta_k - 2 * t_mid_k) / (ntc.beta_k + 2 * t_mid_k)


def calibration_points(
    ntc: NtcParams,
    divider: DividerConfig,
    trials: int = 5,
    t_low_c: float = DEFAULT_FIT_RANGE_C[0],
    t_high_c: float = DEFAULT_FIT_RANGE_C[1],
    step_c: float = 1.0,
    noise_counts: float = 0.0,
    seed: Union[int, None] = None,
) -> List[Tuple[int, float]]:
    """
    Synthetic calibration run with the forward model: the temperature is stepped over the
    range, alternately increasing and decreasing (trials 1, 3, 5 up and 2, 4 down).

    Args:
        ntc (NtcParams): Thermistor.
        divider (DividerConfig): Divider and ADC.
        trials (int): Number of sweeps.
        t_low_c (float), t_high_c (float): Temperature range, inclusive.
        step_c (float): Temperature increment.
        noise_counts (float): Standard deviation of Gaussian ADC noise in counts, 0 for none.
        seed (int, optional): Seed for the noise.

    Returns:
        List[Tuple[int, float]]: (adc_count, true_temp_c) pairs in acquisition order.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    require_positive("step_c", step_c)
    n_steps = int(round((t_high_c - t_low_c) / step_c))
    temps = [round(t_low_c + i * step_c, 9) for i in range(n_steps + 1)]
    rng = np.random.default_rng(seed)
    points = []
    for trial in range(trials):
        sweep = temps if trial % 2 == 0 else temps[::-1]
        for temp_c in sweep:
            ratio = divider_ratio(temp_c, ntc, divider) * divider.full_scale
            if noise_counts > 0:
                ratio += rng.normal(0.0, noise_counts)
            count = min(max(round_half_up(ratio), 0), divider.full_scale)
            points.append((count, temp_c))
    return points


def fit_linear_calibration(points: Sequence[Tuple[int, float]]) -> CalibrationCurve:
    """
    Ordinary least squares fit temp = slope * count + intercept.

    Args:
        points (Sequence[Tuple[int, float]]): (adc_count, true_temp_c) pairs.

    Returns:
        CalibrationCurve: The fitted line and its residual RMS.

    Raises:
        ValidationError: If fewer than two distinct ADC counts are given.
    """
    if len(points) == 0:
        raise ValidationError("calibration needs at least two points")
    counts = np.array([point[0] for point in points], dtype=float)
    temps = np.array([point[1] for point in points], dtype=float)
    if np.unique(counts).size < 2:
        raise ValidationError("degenerate calibration: all ADC counts are identical")

    slope, intercept = np.polyfit(counts, temps, 1)
    residuals = temps - (slope * counts + intercept)
    curve = CalibrationCurve(
        slope=float(slope),
        intercept=float(intercept),
        fit_range_c=(float(temps.min()), float(temps.max())),
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
    )
    logger.info(
        "Calibration over %.1f-%.1f degC: slope %.6g degC/count, residual rms %.3g degC",
        *curve.fit_range_c,
        curve.slope,
        curve.residual_rms,
    )
    return curve


def temperature_from_adc(count: float, curve: CalibrationCurve) -> TemperatureReading:
    """
    Apply the calibration. Results outside the fitted temperature range are still
    returned but flagged as extrapolated.
    """
    temp_c = curve.slope * count + curve.intercept
    low, high = curve.fit_range_c
    extrapolated = not low <= temp_c <= high
    if extrapolated:
        logger.warning("%.2f degC is outside the calibrated %.1f-%.1f degC range", temp_c, low, high)
    return TemperatureReading(temp_c=temp_c, extrapolated=extrapolated)


def moving_average(signal: Sequence[float], window_samples: int = DEFAULT_WINDOW_SAMPLES) -> np.ndarray:
    """
    Causal trailing moving average; the first window_samples - 1 outputs average the
    available prefix.

    Raises:
        ValidationError: If window_samples < 1.
    """
    return trailing_mean(np.asarray(signal, dtype=float), window_samples)


def window_from_duration(duration_s: float, sample_period_s: float) -> int:
    """
    Window length in samples for a window given in seconds, e.g. 60 s at one sample every
    5 s gives 12 samples.
    """
    require_positive("duration_s", duration_s)
    require_positive("sample_period_s", sample_period_s)
    return max(1, round_half_up(duration_s / sample_period_s))
