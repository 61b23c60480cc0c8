"""
Electrophysiology processing for the printed ECG and EMG electrodes.

The chain is: remove the amplifier gain, a 60 Hz notch, a 2nd-order Butterworth high-pass
and low-pass pair (5-55 Hz for ECG, 2-100 Hz for EMG), then either an RMS envelope (EMG) or
R-peak detection (ECG). All filtering is causal with zero initial conditions so it can run
on a live stream.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import signal
from scipy.ndimage import maximum_filter1d

from .exceptions import ValidationError
from .utilities import require_positive, trailing_mean

logger = logging.getLogger(__name__)

MAINS_HZ = 60.0
DEFAULT_NOTCH_Q = 30.0
ECG_BAND_HZ = (5.0, 55.0)
EMG_BAND_HZ = (2.0, 100.0)
EMG_ENVELOPE_WINDOWS = (50, 250)

R_PEAK_THRESHOLD_FRACTION = 0.6
R_PEAK_MAX_WINDOW_S = 2.0
R_PEAK_REFRACTORY_S = 0.2


class FilterKind(str, Enum):
    NOTCH = "notch"
    HIGHPASS = "highpass"
    LOWPASS = "lowpass"
    BANDPASS = "bandpass"


@dataclass(frozen=True, eq=False)
class SignalRecording:
    """
    A uniformly sampled recording.

    Attributes:
        samples (np.ndarray): Sample values as read from the amplifier.
        sample_rate_hz (float): Sampling rate.
        gain (float): Amplifier gain that is still applied to samples.
    """

    samples: np.ndarray = field(repr=False)
    sample_rate_hz: float = 250.0
    gain: float = 24.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValidationError(f"samples must be one dimensional, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples must all be finite")
        require_positive("sample_rate_hz", self.sample_rate_hz)
        require_positive("gain", self.gain)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    def input_referred(self) -> "SignalRecording":
        """
        The recording divided by its amplifier gain, with gain 1.
        """
        return SignalRecording(self.samples / self.gain, self.sample_rate_hz, 1.0)


@dataclass(frozen=True)
class FilterSpec:
    """
    A filter request. Highpass uses f_low_hz, lowpass uses f_high_hz, bandpass uses both
    and a notch is centred on f_low_hz (f_high_hz is set equal to it).

    Build with the classmethods rather than the constructor:

        FilterSpec.notch(60.0)
        FilterSpec.bandpass(5.0, 55.0)
    """

    kind: FilterKind
    f_low_hz: Union[float, None] = None
    f_high_hz: Union[float, None] = None
    order: int = 2
    notch_q: float = DEFAULT_NOTCH_Q

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        if self.order < 1:
            raise ValidationError(f"order must be >= 1, got {self.order}")
        require_positive("notch_q", self.notch_q)
        needs_low = self.kind in (FilterKind.NOTCH, FilterKind.HIGHPASS, FilterKind.BANDPASS)
        needs_high = self.kind in (FilterKind.LOWPASS, FilterKind.BANDPASS)
        if needs_low and self.f_low_hz is None:
            raise ValidationError(f"{self.kind.value} filter needs f_low_hz")
        if needs_high and self.f_high_hz is None:
            raise ValidationError(f"{self.kind.value} filter needs f_high_hz")
        if self.kind is FilterKind.BANDPASS and not self.f_low_hz < self.f_high_hz:
            raise ValidationError(
                f"bandpass needs f_low_hz < f_high_hz, got {self.f_low_hz}, {self.f_high_hz}"
            )

    @classmethod
    def notch(cls, f0_hz: float = MAINS_HZ, q: float = DEFAULT_NOTCH_Q) -> "FilterSpec":
        return cls(FilterKind.NOTCH, f0_hz, f0_hz, notch_q=q)

    @classmethod
    def highpass(cls, cutoff_hz: float, order: int = 2) -> "FilterSpec":
        return cls(FilterKind.HIGHPASS, f_low_hz=cutoff_hz, order=order)

    @classmethod
    def lowpass(cls, cutoff_hz: float, order: int = 2) -> "FilterSpec":
        return cls(FilterKind.LOWPASS, f_high_hz=cutoff_hz, order=order)

    @classmethod
    def bandpass(cls, f_low_hz: float, f_high_hz: float, order: int = 2) -> "FilterSpec":
        return cls(FilterKind.BANDPASS, f_low_hz, f_high_hz, order=order)

    def frequencies(self) -> Tuple[float, ...]:
        return tuple(f for f in (self.f_low_hz, self.f_high_hz) if f is not None)


@dataclass(frozen=True, eq=False)
class RmsEnvelope:
    values: np.ndarray = field(repr=False)
    window_samples: int


@dataclass(frozen=True)
class EcgFeatures:
    """
    Beat features of an ECG recording.

    Attributes:
        r_peak_indices (Tuple[int, ...]): Sample index of every detected R peak, increasing.
        rr_intervals_ms (Tuple[float, ...]): Intervals between consecutive peaks.
        heart_rate_bpm (float): 60000 / mean RR, None with fewer than two peaks.
        sufficient_beats (bool): False when fewer than two peaks were found.
    """

    r_peak_indices: Tuple[int, ...]
    rr_intervals_ms: Tuple[float, ...]
    heart_rate_bpm: Union[float, None]
    sufficient_beats: bool


def design_filter(spec: FilterSpec, sample_rate_hz: float) -> np.ndarray:
    """
    Design a digital filter as a cascade of second-order sections.

    Butterworth sections come from the analog prototype through the bilinear transform
    with the cutoff pre-warped, so the response is exactly -3.01 dB at each cutoff. A
    bandpass is the cascade of a highpass at f_low_hz and a lowpass at f_high_hz, each of
    the requested order. The notch is the standard 2nd-order IIR notch at f0 with quality
    factor notch_q.

    Args:
        spec (FilterSpec): Filter request.
        sample_rate_hz (float): Sampling rate of the signal it will be applied to.

    Returns:
        np.ndarray: Array of shape (n_sections, 6), rows [b0, b1, b2, 1, a1, a2].

    Raises:
        ValidationError: If a frequency is not strictly between 0 and Nyquist.
    """
    require_positive("sample_rate_hz", sample_rate_hz)
    nyquist = sample_rate_hz / 2
    for frequency in spec.frequencies():
        if not 0 < frequency < nyquist:
            raise ValidationError(
                f"{spec.kind.value} frequency {frequency} Hz must be in (0, {nyquist}) Hz"
            )

    if spec.kind is FilterKind.NOTCH:
        b, a = signal.iirnotch(spec.f_low_hz, spec.notch_q, fs=sample_rate_hz)
        return signal.tf2sos(b, a)
    if spec.kind is FilterKind.HIGHPASS:
        return signal.butter(spec.order, spec.f_low_hz, "highpass", fs=sample_rate_hz, output="sos")
    if spec.kind is FilterKind.LOWPASS:
        return signal.butter(spec.order, spec.f_high_hz, "lowpass", fs=sample_rate_hz, output="sos")
    return np.vstack(
        [
            design_filter(FilterSpec.highpass(spec.f_low_hz, spec.order), sample_rate_hz),
            design_filter(FilterSpec.lowpass(spec.f_high_hz, spec.order), sample_rate_hz),
        ]
    )


def is_stable(sos: np.ndarray) -> bool:
    """
    True when every section has its poles strictly inside the unit circle.
    """
    return all(np.all(np.abs(np.roots(section[3:])) < 1.0) for section in np.atleast_2d(sos))


def apply_filter(sos: np.ndarray, samples: Sequence[float]) -> np.ndarray:
    """
    Causal filtering with zero initial conditions.
    """
    return signal.sosfilt(np.atleast_2d(sos), np.asarray(samples, dtype=float))


def condition(
    recording: SignalRecording,
    band_hz: Tuple[float, float],
    notch_hz: Union[float, None] = MAINS_HZ,
) -> SignalRecording:
    """
    Standard conditioning chain: input-refer, notch out mains, then band-limit.

    Args:
        recording (SignalRecording): Raw recording.
        band_hz (Tuple[float, float]): Band edges, ECG_BAND_HZ or EMG_BAND_HZ.
        notch_hz (float, optional): Mains frequency to notch, None to skip the notch.

    Returns:
        SignalRecording: Conditioned input-referred recording.
    """
    referred = recording.input_referred()
    fs = referred.sample_rate_hz
    samples = referred.samples
    if notch_hz is not None:
        samples = apply_filter(design_filter(FilterSpec.notch(notch_hz), fs), samples)
    samples = apply_filter(design_filter(FilterSpec.bandpass(*band_hz), fs), samples)
    return SignalRecording(samples, fs, 1.0)


def rms_envelope(samples: Sequence[float], window_samples: int) -> RmsEnvelope:
    """
    Causal trailing-window RMS; the first window_samples - 1 outputs use the available
    prefix. 50 samples is used for gesture envelopes and 250 for slow trends.

    Raises:
        ValidationError: If window_samples < 1.
    """
    squared = np.square(np.asarray(samples, dtype=float))
    mean_square = trailing_mean(squared, window_samples)
    return RmsEnvelope(np.sqrt(np.maximum(mean_square, 0.0)), window_samples)


def detect_r_peaks(
    ecg: SignalRecording,
    threshold_fraction: float = R_PEAK_THRESHOLD_FRACTION,
    refractory_s: float = R_PEAK_REFRACTORY_S,
) -> EcgFeatures:
    """
    R-peak detection on a band-filtered ECG.

    A local maximum is a candidate when it reaches threshold_fraction of the largest value
    in the trailing 2 s up to and including it. Candidates are taken in time order: once a
    peak is accepted, every candidate within refractory_s after it is ignored, however tall.
    Only past samples are used, so the detector can run on a live stream.

    Args:
        ecg (SignalRecording): Band-filtered ECG, 5-55 Hz recommended.
        threshold_fraction (float): Adaptive threshold relative to the trailing 2 s maximum.
        refractory_s (float): Dead time after each accepted peak.

    Returns:
        EcgFeatures: Peaks, RR intervals and heart rate. Fewer than two peaks gives
                     sufficient_beats=False and no heart rate.
    """
    fs = ecg.sample_rate_hz
    samples = ecg.samples
    if samples.size < 3:
        return EcgFeatures((), (), None, False)

    window = max(1, int(round(R_PEAK_MAX_WINDOW_S * fs)))
    # origin (window - 1) // 2 puts the whole window at and before each sample
    trailing_max = maximum_filter1d(samples, size=window, mode="nearest", origin=(window - 1) // 2)
    candidates, _ = signal.find_peaks(samples, height=threshold_fraction * trailing_max)
    candidates = candidates[samples[candidates] > 0]
    peaks = np.asarray(_apply_refractory(candidates, refractory_s * fs), dtype=int)

    if peaks.size < 2:
        logger.warning("Only %d R peak(s) found; heart rate not computed", peaks.size)
        return EcgFeatures(tuple(int(p) for p in peaks), (), None, False)

    rr_ms = np.diff(peaks) * 1000.0 / fs
    heart_rate = 60_000.0 / float(np.mean(rr_ms))
    return EcgFeatures(
        r_peak_indices=tuple(int(p) for p in peaks),
        rr_intervals_ms=tuple(float(rr) for rr in rr_ms),
        heart_rate_bpm=heart_rate,
        sufficient_beats=True,
    )


def _apply_refractory(candidates: np.ndarray, refractory_samples: float) -> List[int]:
    accepted: List[int] = []
    for index in candidates:
        if accepted and index - accepted[-1] < refractory_samples:
            continue
        accepted.append(int(index))
    return accepted
